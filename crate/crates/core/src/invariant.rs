//! Invariant and ergodic measures, and the certificates built from them.
//!
//! On a finite space every ergodic invariant measure is the stationary law of a
//! closed class, and an invariant measure never charges transient states. Two
//! distinct ergodic measures are separated by the density `f = d mu / d eta`,
//! `eta = (mu + nu) / 2`, which is harmonic (`Pf = f`) on the support of `eta`
//! and takes only the values 2 and 0; the set `{f = 2}` carries `mu` and misses
//! `nu`. The uniqueness certificate either exhibits the unique (ergodic)
//! invariant measure, or turns such a separator into two disjoint absorbing sets.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::{check_dim, l1, ProbMeasure, StateFunction, StateSet, StochasticKernel};
use crate::structure::{self, class_decomposition, is_absorbing, absorbing_witness_pair, Decomposability};
use crate::tol::{self, Tolerances};

/// The stationary law of `p` restricted to the closed class `class`.
///
/// The null space of `P|_C - I` is measured from its singular values; a dimension
/// other than one means `class` is not a single communicating class. The vector
/// itself comes from GTH state reduction, which never subtracts and so keeps a
/// small relative error in every entry.
pub fn stationary_on_class(p: &StochasticKernel, class: &StateSet) -> Result<ProbMeasure> {
    stationary_on_class_with(p, class, &Tolerances::default())
}

pub fn stationary_on_class_with(p: &StochasticKernel, class: &StateSet, tol: &Tolerances) -> Result<ProbMeasure> {
    check_dim(p.n(), class.universe())?;
    if class.is_empty() || !is_absorbing(p, class) {
        return Err(Error::NotClosedClass);
    }
    let idx = class.to_vec();
    let m = idx.len();
    let restricted = DMatrix::from_fn(m, m, |a, b| p.get(idx[a], idx[b]) - if a == b { 1.0 } else { 0.0 });
    let nullity = restricted.singular_values().iter().filter(|&&s| s <= tol.rank).count();
    if nullity != 1 {
        return Err(Error::RankDeficiency(nullity));
    }
    let local = gth(DMatrix::from_fn(m, m, |a, b| p.get(idx[a], idx[b]))).ok_or(Error::RankDeficiency(nullity))?;
    let mut weights = vec![0.0; p.n()];
    for (a, &i) in idx.iter().enumerate() {
        weights[i] = local[a];
    }
    let pi = ProbMeasure::from_computed(weights)?;
    let residual = invariance_residual(p, &pi)?;
    if residual > tol::ARITHMETIC {
        return Err(Error::NotInvariant(residual));
    }
    Ok(pi)
}

/// Grassmann–Taksar–Heyman elimination for an irreducible stochastic matrix.
/// `None` when some reduced state has no mass towards the remaining ones.
fn gth(mut q: DMatrix<f64>) -> Option<Vec<f64>> {
    let m = q.nrows();
    for k in (1..m).rev() {
        let s: f64 = (0..k).map(|j| q[(k, j)]).sum();
        if !(s > 0.0) {
            return None;
        }
        for i in 0..k {
            q[(i, k)] /= s;
        }
        for i in 0..k {
            let qik = q[(i, k)];
            if qik == 0.0 {
                continue;
            }
            for j in 0..k {
                q[(i, j)] += qik * q[(k, j)];
            }
        }
    }
    let mut pi = vec![0.0; m];
    pi[0] = 1.0;
    for j in 1..m {
        pi[j] = (0..j).map(|i| pi[i] * q[(i, j)]).sum();
    }
    let total: f64 = pi.iter().sum();
    Some(pi.into_iter().map(|v| v / total).collect())
}

/// One ergodic measure per closed class, in class order.
pub fn ergodic_measures(p: &StochasticKernel) -> Result<Vec<ProbMeasure>> {
    Ok(ergodic_components(p, &Tolerances::default())?.into_iter().map(|(_, m)| m).collect())
}

fn ergodic_components(p: &StochasticKernel, tol: &Tolerances) -> Result<Vec<(StateSet, ProbMeasure)>> {
    class_decomposition(p)
        .closed_classes()
        .map(|c| Ok((c.clone(), stationary_on_class_with(p, c, tol)?)))
        .collect()
}

/// `||mu P - mu||_1`.
pub fn invariance_residual(p: &StochasticKernel, mu: &ProbMeasure) -> Result<f64> {
    check_dim(p.n(), mu.len())?;
    Ok(l1(&p.left_mul(mu.weights()), mu.weights()))
}

pub fn is_invariant(p: &StochasticKernel, mu: &ProbMeasure, tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::OutOfRange(format!("tolerance {tol} must be positive")));
    }
    Ok(invariance_residual(p, mu)? <= tol)
}

fn require_invariant(p: &StochasticKernel, mu: &ProbMeasure, tol: &Tolerances) -> Result<()> {
    let r = invariance_residual(p, mu)?;
    if r > tol.invariance {
        return Err(Error::NotInvariant(r));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub measure: ProbMeasure,
    pub class: StateSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicDecomposition {
    pub components: Vec<Component>,
    /// `||sum_i w_i pi_i - mu||_1`.
    pub residual_error: f64,
}

impl ErgodicDecomposition {
    pub fn is_ergodic(&self) -> bool {
        self.components.len() == 1
    }
}

/// Splits an invariant `mu` over the closed classes: `w_i = mu(C_i)`.
pub fn ergodic_decomposition(p: &StochasticKernel, mu: &ProbMeasure) -> Result<ErgodicDecomposition> {
    ergodic_decomposition_with(p, mu, &Tolerances::default())
}

pub fn ergodic_decomposition_with(
    p: &StochasticKernel,
    mu: &ProbMeasure,
    tol: &Tolerances,
) -> Result<ErgodicDecomposition> {
    require_invariant(p, mu, tol)?;
    let classes = class_decomposition(p);
    let transient_mass = mu.mass(classes.transient());
    if transient_mass > tol.invariance {
        return Err(Error::MassOnTransient(transient_mass));
    }
    let mut components = Vec::new();
    for class in classes.closed_classes() {
        let weight = mu.mass(class);
        if weight < tol::COMPONENT {
            continue;
        }
        let measure = stationary_on_class_with(p, class, tol)?;
        components.push(Component { weight, measure, class: class.clone() });
    }
    let total: f64 = components.iter().map(|c| c.weight).sum();
    for c in components.iter_mut() {
        c.weight /= total;
    }
    let mut reconstruction = vec![0.0; p.n()];
    for c in &components {
        for (r, m) in reconstruction.iter_mut().zip(c.measure.weights()) {
            *r += c.weight * m;
        }
    }
    let residual_error = l1(&reconstruction, mu.weights());
    Ok(ErgodicDecomposition { components, residual_error })
}

/// Evidence that two invariant measures are mutually singular.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityCertificate {
    pub mu1: ProbMeasure,
    pub mu2: ProbMeasure,
    /// `A = {f = 2}`: `mu1(A) = 1`, `mu2(A) = 0`.
    pub separator: StateSet,
    /// `f = d mu1 / d eta` on `supp eta`, reported as 0 elsewhere.
    pub density: StateFunction,
}

impl SingularityCertificate {
    /// Recomputes the density from the two measures and re-checks harmonicity,
    /// the two-level property and the separator masses.
    pub fn verify(&self, p: &StochasticKernel) -> Result<()> {
        self.verify_with(p, &Tolerances::default())
    }

    pub fn verify_with(&self, p: &StochasticKernel, tol: &Tolerances) -> Result<()> {
        require_invariant(p, &self.mu1, tol)?;
        require_invariant(p, &self.mu2, tol)?;
        let fresh = density_certificate(p, &self.mu1, &self.mu2, tol)?;
        check_dim(p.n(), self.density.len())?;
        if l1(fresh.density.values(), self.density.values()) > tol.density {
            return Err(Error::CertificateViolation("stored density differs from recomputed one".into()));
        }
        if fresh.separator != self.separator {
            return Err(Error::CertificateViolation("stored separator differs from {f = 2}".into()));
        }
        Ok(())
    }
}

/// Builds the separator for two mutually singular invariant measures, checking
/// each step of the construction along the way.
fn density_certificate(
    p: &StochasticKernel,
    mu: &ProbMeasure,
    nu: &ProbMeasure,
    tol: &Tolerances,
) -> Result<SingularityCertificate> {
    let n = p.n();
    let eta: Vec<f64> = mu.weights().iter().zip(nu.weights()).map(|(a, b)| 0.5 * (a + b)).collect();
    let supp = StateSet::from_predicate(n, |i| eta[i] > tol.support);
    let f: Vec<f64> = (0..n).map(|i| if supp.contains(i) { mu.get(i) / eta[i] } else { 0.0 }).collect();

    let pf = p.right_mul(&f);
    for i in supp.iter() {
        if (pf[i] - f[i]).abs() > tol.density {
            return Err(Error::CertificateViolation(format!(
                "density is not harmonic at state {i}: Pf = {}, f = {}",
                pf[i], f[i]
            )));
        }
        if f[i].abs().min((f[i] - 2.0).abs()) > tol.density {
            return Err(Error::DensityLevelViolation { state: i, value: f[i] });
        }
    }
    let separator = StateSet::from_predicate(n, |i| supp.contains(i) && f[i] >= 1.0);
    let (m1, m2) = (mu.mass(&separator), nu.mass(&separator));
    if m1 < 1.0 - tol.separator || m2 > tol.separator {
        return Err(Error::CertificateViolation(format!(
            "separator masses are {m1} and {m2}, expected 1 and 0"
        )));
    }
    Ok(SingularityCertificate {
        mu1: mu.clone(),
        mu2: nu.clone(),
        separator,
        density: StateFunction::with_bound(f, 2.0 + tol.density)?,
    })
}

fn require_distinct(mu: &ProbMeasure, nu: &ProbMeasure, tol: &Tolerances) -> Result<()> {
    if mu.l1_distance(nu)? <= tol.invariance {
        return Err(Error::EqualMeasures);
    }
    Ok(())
}

/// The separating density of two distinct ergodic invariant measures.
pub fn harmonic_density(p: &StochasticKernel, mu: &ProbMeasure, nu: &ProbMeasure) -> Result<SingularityCertificate> {
    harmonic_density_with(p, mu, nu, &Tolerances::default())
}

pub fn harmonic_density_with(
    p: &StochasticKernel,
    mu: &ProbMeasure,
    nu: &ProbMeasure,
    tol: &Tolerances,
) -> Result<SingularityCertificate> {
    check_dim(p.n(), mu.len())?;
    check_dim(p.n(), nu.len())?;
    require_invariant(p, mu, tol)?;
    require_invariant(p, nu, tol)?;
    require_distinct(mu, nu, tol)?;
    for m in [mu, nu] {
        if !ergodic_decomposition_with(p, m, tol)?.is_ergodic() {
            return Err(Error::NotErgodic);
        }
    }
    density_certificate(p, mu, nu, tol)
}

/// Two mutually singular invariant measures derived from any two distinct ones.
///
/// Ergodic inputs are separated directly. Otherwise a non-ergodic input is split
/// along one of its closed classes `A` into `mu(. | A)` and `mu(. | A^c)`.
pub fn singular_pair(p: &StochasticKernel, mu: &ProbMeasure, nu: &ProbMeasure) -> Result<SingularityCertificate> {
    singular_pair_with(p, mu, nu, &Tolerances::default())
}

pub fn singular_pair_with(
    p: &StochasticKernel,
    mu: &ProbMeasure,
    nu: &ProbMeasure,
    tol: &Tolerances,
) -> Result<SingularityCertificate> {
    check_dim(p.n(), mu.len())?;
    check_dim(p.n(), nu.len())?;
    require_invariant(p, mu, tol)?;
    require_invariant(p, nu, tol)?;
    require_distinct(mu, nu, tol)?;
    let dmu = ergodic_decomposition_with(p, mu, tol)?;
    let dnu = ergodic_decomposition_with(p, nu, tol)?;
    let (source, decomposition) = match (dmu.is_ergodic(), dnu.is_ergodic()) {
        (true, true) => return density_certificate(p, mu, nu, tol),
        (false, _) => (mu, dmu),
        (true, false) => (nu, dnu),
    };
    let a = decomposition.components[0].class.clone();
    let inside = source.conditional(&a)?;
    let outside = source.conditional(&a.complement())?;
    density_certificate(p, &inside, &outside, tol)
}

/// A set `A` with `P 1_A = 1_A` on `supp mu` and `0 < mu(A) < 1`, if one exists.
///
/// Candidates are the closed classes (intersected with `supp mu`); any union of
/// closed classes with fractional mass contains a single class with fractional mass.
pub fn ergodicity_witness(p: &StochasticKernel, mu: &ProbMeasure) -> Result<Option<StateSet>> {
    ergodicity_witness_with(p, mu, &Tolerances::default())
}

pub fn ergodicity_witness_with(p: &StochasticKernel, mu: &ProbMeasure, tol: &Tolerances) -> Result<Option<StateSet>> {
    require_invariant(p, mu, tol)?;
    let supp = mu.support(tol.support);
    let almost_surely_invariant = |a: &StateSet| {
        supp.iter().all(|i| {
            let target = if a.contains(i) { 1.0 } else { 0.0 };
            (p.row_mass(i, a) - target).abs() <= tol.separator
        })
    };
    for class in class_decomposition(p).closed_classes() {
        for candidate in [class.intersection(&supp), class.clone()] {
            let mass = mu.mass(&candidate);
            if mass > tol.separator && mass < 1.0 - tol.separator && almost_surely_invariant(&candidate) {
                return Ok(Some(candidate));
            }
        }
    }
    Ok(None)
}

/// True iff every `mu`-a.s. invariant set has `mu`-mass 0 or 1.
pub fn ergodicity_check(p: &StochasticKernel, mu: &ProbMeasure) -> Result<bool> {
    Ok(ergodicity_witness(p, mu)?.is_none())
}

pub fn ergodicity_check_with(p: &StochasticKernel, mu: &ProbMeasure, tol: &Tolerances) -> Result<bool> {
    Ok(ergodicity_witness_with(p, mu, tol)?.is_none())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Unique,
    Multiple,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UniquenessCertificate {
    Unique {
        measure: ProbMeasure,
        ergodic: bool,
    },
    /// Two mutually singular invariant measures and disjoint absorbing sets
    /// carrying them.
    Multiple {
        singularity: SingularityCertificate,
        b1: StateSet,
        b2: StateSet,
    },
}

impl UniquenessCertificate {
    pub fn verdict(&self) -> Verdict {
        match self {
            Self::Unique { .. } => Verdict::Unique,
            Self::Multiple { .. } => Verdict::Multiple,
        }
    }

    pub fn unique_measure(&self) -> Option<&ProbMeasure> {
        match self {
            Self::Unique { measure, .. } => Some(measure),
            Self::Multiple { .. } => None,
        }
    }

    pub fn verify(&self, p: &StochasticKernel) -> Result<()> {
        self.verify_with(p, &Tolerances::default())
    }

    pub fn verify_with(&self, p: &StochasticKernel, tol: &Tolerances) -> Result<()> {
        let fail = |msg: &str| Err(Error::CertificateViolation(msg.to_string()));
        match self {
            Self::Unique { measure, ergodic } => {
                check_dim(p.n(), measure.len())?;
                if structure::indecomposability_certificate(p)?.verdict != Decomposability::Indecomposable {
                    return fail("unique verdict on a decomposable kernel");
                }
                require_invariant(p, measure, tol)?;
                if !*ergodic || !ergodicity_check_with(p, measure, tol)? {
                    return fail("the unique invariant measure must be ergodic");
                }
            }
            Self::Multiple { singularity, b1, b2 } => {
                singularity.verify_with(p, tol)?;
                if b1.universe() != p.n() || b2.universe() != p.n() {
                    return fail("witness sets do not match the kernel size");
                }
                if b1.is_empty() || b2.is_empty() || !b1.is_disjoint(b2) {
                    return fail("B1 and B2 must be nonempty and disjoint");
                }
                if !is_absorbing(p, b1) || !is_absorbing(p, b2) {
                    return fail("B1 and B2 must be absorbing");
                }
                if singularity.mu1.mass(b1) < 1.0 - tol.separator || singularity.mu2.mass(b2) < 1.0 - tol.separator {
                    return fail("mu1(B1) and mu2(B2) must be 1");
                }
            }
        }
        Ok(())
    }
}

/// Unique (with its ergodic invariant measure) when there is one closed class;
/// otherwise separates the ergodic measures of the first two closed classes and
/// builds the absorbing hulls `B1`, `B2` of the separator and its complement.
pub fn uniqueness_certificate(p: &StochasticKernel) -> Result<UniquenessCertificate> {
    uniqueness_certificate_with(p, &Tolerances::default())
}

pub fn uniqueness_certificate_with(p: &StochasticKernel, tol: &Tolerances) -> Result<UniquenessCertificate> {
    let components = ergodic_components(p, tol)?;
    let cert = match components.as_slice() {
        [] => return Err(Error::CertificateViolation("no closed class found".into())),
        [(_, pi)] => {
            let ergodic = ergodicity_check_with(p, pi, tol)?;
            UniquenessCertificate::Unique { measure: pi.clone(), ergodic }
        }
        [(_, mu1), (_, mu2), ..] => {
            let singularity = harmonic_density_with(p, mu1, mu2, tol)?;
            let (b1, b2) = absorbing_witness_pair(p, &singularity.separator);
            UniquenessCertificate::Multiple { singularity, b1, b2 }
        }
    };
    cert.verify_with(p, tol)?;
    Ok(cert)
}
