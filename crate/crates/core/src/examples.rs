//! Finite surrogates of two continuous-state kernels of the form
//! `P(x, .) = (1 - eps) delta_{T(x)} + eps nu`, plus block-diagonal fixtures.
//!
//! *Fat Cantor.* Cells of a uniform grid on `[0, 1]`; `T` sends cells of a set `C`
//! to the cell holding 0 and all other cells to the cell holding 1. The chain is
//! Doeblin with constant `eps`, and `Pf` is two-valued with both level sets
//! charged by the invariant law, which is the measure-theoretic content of the
//! continuous example. Empty interior and closedness of `C` have no grid analogue.
//!
//! *Two-point map.* Grid cells charged by `nu` plus a few `nu`-null atoms standing
//! in for the rationals; `T` sends the atoms to one cell and everything else to
//! another. The atoms are never entered, so the invariant law ignores them and
//! `Pf` is constant on its support. Density of the rationals is not modelled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariant::is_invariant;
use crate::kernel::{ProbMeasure, StateFunction, StateSet, StochasticKernel};
use crate::structure::class_decomposition;

pub const DEFAULT_GRID: usize = 256;

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidSpec(format!("eps = {eps} must lie in (0, 1]")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FatCantorSpec {
    grid_n: usize,
    c_cells: StateSet,
    eps: f64,
    atom0: usize,
    atom1: usize,
}

impl FatCantorSpec {
    pub fn new(grid_n: usize, c_cells: StateSet, eps: f64, atom0: usize, atom1: usize) -> Result<Self> {
        check_eps(eps)?;
        if grid_n < 3 {
            return Err(Error::InvalidSpec("fat Cantor grid needs at least 3 cells".into()));
        }
        if c_cells.universe() != grid_n {
            return Err(Error::InvalidSpec("C cells do not match the grid size".into()));
        }
        if atom0 >= grid_n || atom1 >= grid_n || atom0 == atom1 {
            return Err(Error::InvalidSpec("atoms must be two distinct grid cells".into()));
        }
        if c_cells.contains(atom0) || c_cells.contains(atom1) {
            return Err(Error::InvalidSpec("atoms must lie outside C".into()));
        }
        if c_cells.is_empty() {
            return Err(Error::InvalidSpec("C must be nonempty".into()));
        }
        Ok(Self { grid_n, c_cells, eps, atom0, atom1 })
    }

    /// Cells whose midpoints survive the Smith–Volterra–Cantor construction
    /// (remove the open middle interval of length `4^-k` from each of the `2^(k-1)`
    /// intervals at stage `k`), minus the two end cells that hold the atoms.
    pub fn smith_volterra(grid_n: usize, eps: f64) -> Result<Self> {
        let c = StateSet::from_predicate(grid_n, |i| {
            i != 0 && i + 1 != grid_n && in_smith_volterra((i as f64 + 0.5) / grid_n as f64, grid_n)
        });
        Self::new(grid_n, c, eps, 0, grid_n - 1)
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn c_cells(&self) -> &StateSet {
        &self.c_cells
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn atoms(&self) -> (usize, usize) {
        (self.atom0, self.atom1)
    }

    /// `|C| / grid_n`.
    pub fn lambda_c(&self) -> f64 {
        self.c_cells.len() as f64 / self.grid_n as f64
    }

    /// Uniform law on the cells.
    pub fn noise(&self) -> ProbMeasure {
        ProbMeasure::uniform(self.grid_n).expect("grid is nonempty")
    }

    fn target(&self, x: usize) -> usize {
        if self.c_cells.contains(x) {
            self.atom0
        } else {
            self.atom1
        }
    }
}

fn in_smith_volterra(x: f64, grid_n: usize) -> bool {
    let mut intervals = vec![(0.0f64, 1.0f64)];
    let mut removed = 0.25;
    // stop once removed gaps are narrower than a cell
    while removed * grid_n as f64 >= 1.0 {
        let mut next = Vec::with_capacity(intervals.len() * 2);
        for (lo, hi) in intervals {
            let mid = 0.5 * (lo + hi);
            let (gap_lo, gap_hi) = (mid - 0.5 * removed, mid + 0.5 * removed);
            if x > gap_lo && x < gap_hi {
                return false;
            }
            next.push((lo, gap_lo));
            next.push((gap_hi, hi));
        }
        intervals = next;
        removed *= 0.25;
    }
    true
}

/// `pi(C)` for the fat Cantor kernel, in general: the solution of
/// `p = eps * lambda_C + (1 - eps) (p 1[atom0 in C] + (1 - p) 1[atom1 in C])`.
/// With both atoms outside `C` this is `eps * lambda_C`.
pub fn fat_cantor_mass_of_c(eps: f64, lambda_c: f64, atom0_in_c: bool, atom1_in_c: bool) -> f64 {
    let i0 = if atom0_in_c { 1.0 } else { 0.0 };
    let i1 = if atom1_in_c { 1.0 } else { 0.0 };
    (eps * lambda_c + (1.0 - eps) * i1) / (1.0 - (1.0 - eps) * (i0 - i1))
}

/// The kernel `(1 - eps) delta_{T(x)} + eps nu` and its invariant law
/// `eps nu + (1 - eps)(p delta_{atom0} + (1 - p) delta_{atom1})`, `p = eps lambda_C`.
pub fn build_fat_cantor_kernel(spec: &FatCantorSpec) -> Result<(StochasticKernel, ProbMeasure)> {
    let n = spec.grid_n;
    let eps = spec.eps;
    let nu = 1.0 / n as f64;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|x| {
            let mut row = vec![eps * nu; n];
            row[spec.target(x)] += 1.0 - eps;
            row
        })
        .collect();
    let kernel = StochasticKernel::from_rows(rows)?;

    let p = fat_cantor_mass_of_c(eps, spec.lambda_c(), false, false);
    let mut weights = vec![eps * nu; n];
    weights[spec.atom0] += (1.0 - eps) * p;
    weights[spec.atom1] += (1.0 - eps) * (1.0 - p);
    let reference = ProbMeasure::from_computed(weights)?;
    if !is_invariant(&kernel, &reference, crate::tol::CONSTRUCTION)? {
        return Err(Error::CertificateViolation("closed-form fat Cantor law is not invariant".into()));
    }
    Ok((kernel, reference))
}

/// The two values of `Pf` and how much the invariant law gives each level set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevelReport {
    /// Value of `Pf` on `C`.
    pub on_c: f64,
    /// Value of `Pf` off `C`.
    pub off_c: f64,
    pub mass_on_c: f64,
    pub mass_off_c: f64,
}

/// Checks that `Pf` is constant on `C` and on its complement with distinct values,
/// and reports the invariant mass of both level sets. Requires `f(atom0) != f(atom1)`.
pub fn fat_cantor_level_sets(
    spec: &FatCantorSpec,
    kernel: &StochasticKernel,
    reference: &ProbMeasure,
    f: &StateFunction,
) -> Result<TwoLevelReport> {
    if f.len() != spec.grid_n {
        return Err(Error::DimensionMismatch { expected: spec.grid_n, found: f.len() });
    }
    if f.get(spec.atom0) == f.get(spec.atom1) {
        return Err(Error::InvalidSpec("observable must separate the two atoms".into()));
    }
    let pf = kernel.apply_right(f)?;
    let noise_mean = spec.noise().integrate(f)?;
    let on_c = (1.0 - spec.eps) * f.get(spec.atom0) + spec.eps * noise_mean;
    let off_c = (1.0 - spec.eps) * f.get(spec.atom1) + spec.eps * noise_mean;
    for x in 0..spec.grid_n {
        let expected = if spec.c_cells.contains(x) { on_c } else { off_c };
        if (pf.get(x) - expected).abs() > 1e-12 * (1.0 + expected.abs()) {
            return Err(Error::CertificateViolation(format!("Pf is not two-valued at cell {x}")));
        }
    }
    let c = &spec.c_cells;
    Ok(TwoLevelReport { on_c, off_c, mass_on_c: reference.mass(c), mass_off_c: reference.mass(&c.complement()) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointMapSpec {
    grid_n: usize,
    q_atoms: usize,
    alpha_cell: usize,
    beta_cell: usize,
    eps: f64,
}

impl TwoPointMapSpec {
    pub fn new(grid_n: usize, q_atoms: usize, alpha_cell: usize, beta_cell: usize, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        if grid_n < 2 {
            return Err(Error::InvalidSpec("two-point map needs at least 2 grid cells".into()));
        }
        if q_atoms == 0 {
            return Err(Error::InvalidSpec("need at least one null atom".into()));
        }
        if alpha_cell == beta_cell || alpha_cell >= grid_n || beta_cell >= grid_n {
            return Err(Error::InvalidSpec("alpha and beta must be distinct grid cells".into()));
        }
        Ok(Self { grid_n, q_atoms, alpha_cell, beta_cell, eps })
    }

    pub fn n_states(&self) -> usize {
        self.grid_n + self.q_atoms
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn beta_cell(&self) -> usize {
        self.beta_cell
    }

    pub fn alpha_cell(&self) -> usize {
        self.alpha_cell
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    /// The null atoms, states `grid_n..grid_n + q_atoms`.
    pub fn atoms(&self) -> StateSet {
        StateSet::from_predicate(self.n_states(), |i| i >= self.grid_n)
    }

    /// Uniform on the grid cells, zero on the atoms.
    pub fn noise(&self) -> ProbMeasure {
        ProbMeasure::uniform_on(&self.atoms().complement()).expect("grid is nonempty")
    }

    /// `(1 - eps) f(beta) + eps <nu, f>`.
    pub fn constant_value(&self, f: &StateFunction) -> Result<f64> {
        Ok((1.0 - self.eps) * f.get(self.beta_cell) + self.eps * self.noise().integrate(f)?)
    }
}

/// Builds the kernel and its invariant law `eps nu + (1 - eps) delta_beta`, and
/// verifies a single closed class, no invariant mass on the atoms, and identical
/// rows across the support of the invariant law.
pub fn build_two_point_map_kernel(spec: &TwoPointMapSpec) -> Result<(StochasticKernel, ProbMeasure)> {
    let n = spec.n_states();
    let eps = spec.eps;
    let cell = 1.0 / spec.grid_n as f64;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|x| {
            let mut row: Vec<f64> = (0..n).map(|j| if j < spec.grid_n { eps * cell } else { 0.0 }).collect();
            let target = if x >= spec.grid_n { spec.alpha_cell } else { spec.beta_cell };
            row[target] += 1.0 - eps;
            row
        })
        .collect();
    let kernel = StochasticKernel::from_rows(rows)?;

    let mut weights: Vec<f64> = (0..n).map(|j| if j < spec.grid_n { eps * cell } else { 0.0 }).collect();
    weights[spec.beta_cell] += 1.0 - eps;
    let reference = ProbMeasure::from_computed(weights)?;

    if class_decomposition(&kernel).closed_count() != 1 {
        return Err(Error::CertificateViolation("two-point map kernel has several closed classes".into()));
    }
    if !is_invariant(&kernel, &reference, crate::tol::CONSTRUCTION)? {
        return Err(Error::CertificateViolation("closed-form two-point law is not invariant".into()));
    }
    if reference.mass(&spec.atoms()) != 0.0 {
        return Err(Error::CertificateViolation("invariant law charges the null atoms".into()));
    }
    let supp = reference.support(0.0);
    let first = supp.min().expect("support is nonempty");
    for x in supp.iter() {
        if (0..n).any(|j| (kernel.get(x, j) - kernel.get(first, j)).abs() > 1e-15) {
            return Err(Error::CertificateViolation("rows differ on the invariant support".into()));
        }
    }
    Ok((kernel, reference))
}

/// Moves `mass` from the first state of block `from` uniformly onto block `to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bridge {
    pub from: usize,
    pub to: usize,
    pub mass: f64,
}

pub fn build_block_kernel(blocks: &[StochasticKernel], bridge: Option<Bridge>) -> Result<StochasticKernel> {
    if blocks.is_empty() {
        return Err(Error::InvalidSpec("need at least one block".into()));
    }
    let offsets: Vec<usize> = blocks
        .iter()
        .scan(0, |acc, b| {
            let start = *acc;
            *acc += b.n();
            Some(start)
        })
        .collect();
    let n: usize = blocks.iter().map(|b| b.n()).sum();
    let mut rows = vec![vec![0.0; n]; n];
    for (b, &off) in blocks.iter().zip(&offsets) {
        for i in 0..b.n() {
            for j in 0..b.n() {
                rows[off + i][off + j] = b.get(i, j);
            }
        }
    }
    if let Some(Bridge { from, to, mass }) = bridge {
        if from >= blocks.len() || to >= blocks.len() || from == to {
            return Err(Error::InvalidSpec("bridge must join two distinct existing blocks".into()));
        }
        if !(mass > 0.0 && mass < 1.0) {
            return Err(Error::InvalidSpec(format!("bridge mass {mass} must lie in (0, 1)")));
        }
        let row = &mut rows[offsets[from]];
        for v in row.iter_mut() {
            *v *= 1.0 - mass;
        }
        let share = mass / blocks[to].n() as f64;
        for j in 0..blocks[to].n() {
            row[offsets[to] + j] += share;
        }
    }
    StochasticKernel::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariant::{
ergodic_measures, harmonic_density, stationary_on_class, uniqueness_certificate, Verdict};
    use crate::structure::{indecomposability_certificate, Decomposability};

    fn indecomposability_verdict(p: &StochasticKernel) -> Decomposability {
        indecomposability_certificate(p).unwrap().verdict
    }

    fn first_half(grid_n: usize, eps: f64) -> FatCantorSpec {
        let c = StateSet::from_predicate(grid_n, |i| (1..=grid_n / 2).contains(&i));
        FatCantorSpec::new(grid_n, c, eps, 0, grid_n - 1).unwrap()
    }

    #[test]
    fn smith_volterra_grid() {
        let spec = FatCantorSpec::smith_volterra(DEFAULT_GRID, 0.2).unwrap();
        let lambda = spec.lambda_c();
        assert!(lambda > 0.4 && lambda < 0.6, "lambda_C = {lambda}");
        assert!(!spec.c_cells().contains(0) && !spec.c_cells().contains(255));
        // the first removed gap is (3/8, 5/8)
        assert!(!spec.c_cells().contains(128));
        assert!(spec.c_cells().contains(2));
        assert!(!spec.c_cells().contains(20));
    }

    #[test]
    fn fat_cantor_mass_examples() {
        let spec = first_half(256, 0.2);
        assert_eq!(spec.lambda_c(), 0.5);
        let (p, pi) = build_fat_cantor_kernel(&spec).unwrap();
        assert!((pi.mass(spec.c_cells()) - 0.1).abs() < 1e-12);
        let solved = stationary_on_class(&p, &StateSet::full(256)).unwrap();
        assert!(solved.l1_distance(&pi).unwrap() < 1e-10);
        assert!((solved.mass(spec.c_cells()) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn fat_cantor_general_fixed_point() {
        // check the general formula against the stationary solver with atom0 in C
        for (eps, i0, i1) in [(0.3, true, false), (0.3, false, true), (0.6, true, true)] {
            let n = 16;
            let mut c = StateSet::from_predicate(n, |i| (4..10).contains(&i));
            if i0 {
                c.insert(0);
            }
            if i1 {
                c.insert(n - 1);
            }
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|x| {
                    let mut row = vec![eps / n as f64; n];
                    row[if c.contains(x) { 0 } else { n - 1 }] += 1.0 - eps;
                    row
                })
                .collect();
            let p = StochasticKernel::from_rows(rows).unwrap();
            let pi = stationary_on_class(&p, &StateSet::full(n)).unwrap();
            let lambda = c.len() as f64 / n as f64;
            assert!((pi.mass(&c) - fat_cantor_mass_of_c(eps, lambda, i0, i1)).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_noise_is_uniform() {
        let spec = first_half(16, 1.0);
        let (p, pi) = build_fat_cantor_kernel(&spec).unwrap();
        assert!(pi.l1_distance(&spec.noise()).unwrap() < 1e-15);
        assert!(p.rows().iter().all(|r| r.iter().all(|&v| v == 1.0 / 16.0)));
    }

    #[test]
    fn fat_cantor_two_levels() {
        let spec = first_half(64, 0.2);
        let (p, pi) = build_fat_cantor_kernel(&spec).unwrap();
        let f = StateFunction::new((0..64).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let r = fat_cantor_level_sets(&spec, &p, &pi, &f).unwrap();
        assert_ne!(r.on_c, r.off_c);
        assert!((r.mass_on_c - 0.2 * 0.5).abs() < 1e-12);
        assert!(r.mass_on_c > 0.0 && r.mass_off_c > 0.0);
        let flat = StateFunction::constant(64, 1.0).unwrap();
        assert!(fat_cantor_level_sets(&spec, &p, &pi, &flat).is_err());
    }

    #[test]
    fn fat_cantor_spec_validation() {
        let c = StateSet::from_indices(8, [0, 3]).unwrap();
        assert!(FatCantorSpec::new(8, c, 0.2, 0, 7).is_err());
        let c = StateSet::from_indices(8, [3]).unwrap();
        assert!(FatCantorSpec::new(8, c.clone(), 0.0, 0, 7).is_err());
        assert!(FatCantorSpec::new(8, c.clone(), 1.5, 0, 7).is_err());
        assert!(FatCantorSpec::new(8, StateSet::empty(8), 0.2, 0, 7).is_err());
        assert!(FatCantorSpec::new(8, c, 0.2, 0, 0).is_err());
    }

    #[test]
    fn two_point_examples() {
        let spec = TwoPointMapSpec::new(10, 3, 2, 7, 0.3).unwrap();
        let (p, pi) = build_two_point_map_kernel(&spec).unwrap();
        assert_eq!(pi.mass(&spec.atoms()), 0.0);
        let solved = uniqueness_certificate(&p).unwrap();
        assert_eq!(solved.verdict(), Verdict::Unique);
        assert_eq!(solved.unique_measure().unwrap().mass(&spec.atoms()), 0.0);

        let f = StateFunction::indicator(&StateSet::from_indices(13, [7]).unwrap());
        let pf = p.apply_right(&f).unwrap();
        let expected = 0.7 + 0.3 / 10.0;
        assert!((spec.constant_value(&f).unwrap() - expected).abs() < 1e-15);
        for x in pi.support(0.0).iter() {
            assert!((pf.get(x) - expected).abs() < 1e-12);
        }
        // atoms map to alpha instead
        assert!((pf.get(11) - 0.03).abs() < 1e-15);

        let spec = TwoPointMapSpec::new(10, 3, 2, 7, 1.0).unwrap();
        let (_, pi) = build_two_point_map_kernel(&spec).unwrap();
        assert!(pi.l1_distance(&spec.noise()).unwrap() < 1e-15);
    }

    #[test]
    fn two_point_spec_validation() {
        assert!(TwoPointMapSpec::new(10, 0, 2, 7, 0.3).is_err());
        assert!(TwoPointMapSpec::new(10, 2, 7, 7, 0.3).is_err());
        assert!(TwoPointMapSpec::new(10, 2, 2, 10, 0.3).is_err());
    }

    fn cycle2() -> StochasticKernel {
        StochasticKernel::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn block_examples() {
        let one = StochasticKernel::identity(1).unwrap();
        let p = build_block_kernel(&[cycle2(), one.clone()], None).unwrap();
        assert_eq!(indecomposability_verdict(&p), Decomposability::Decomposable);
        let e = ergodic_measures(&p).unwrap();
        assert_eq!(e.len(), 2);
        harmonic_density(&p, &e[0], &e[1]).unwrap();

        let bridge = Bridge { from: 0, to: 1, mass: 0.25 };
        let p = build_block_kernel(&[cycle2(), one], Some(bridge)).unwrap();
        assert_eq!(p.row(0), vec![0.0, 0.75, 0.25]);
        assert_eq!(indecomposability_verdict(&p), Decomposability::Indecomposable);
        let c = uniqueness_certificate(&p).unwrap();
        assert_eq!(c.unique_measure().unwrap().weights(), &[0.0, 0.0, 1.0]);

        assert_eq!(build_block_kernel(&[cycle2()], None).unwrap(), cycle2());
        assert!(build_block_kernel(&[cycle2()], Some(Bridge { from: 0, to: 0, mass: 0.5 })).is_err());
        assert!(build_block_kernel(&[], None).is_err());
    }
}
