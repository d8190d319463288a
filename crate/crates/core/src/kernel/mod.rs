//! Finite stochastic kernels and the measures and functions they act on.
//!
//! A [`StochasticKernel`] is a row-stochastic `n x n` matrix. Measures act on the
//! left (`mu P`), functions on the right (`P f`). Entries are validated once at
//! construction; anything computed afterwards (powers, resolvents) is checked
//! against the looser arithmetic tolerance.

mod measure;
mod resolvent;

pub use measure::{ProbMeasure, StateFunction, StateSet};
pub use resolvent::{Resolvent, ResolventParams, Truncation};

pub(crate) use measure::{check_dim, l1};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tol;

/// A row-stochastic transition matrix on `n >= 1` states.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticKernel {
    matrix: DMatrix<f64>,
    labels: Option<Vec<String>>,
}

/// Validates a dense matrix as a stochastic kernel without renormalizing it.
pub fn validate_kernel(raw: Vec<Vec<f64>>) -> Result<StochasticKernel> {
    StochasticKernel::from_rows(raw)
}

impl StochasticKernel {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare { row: i, len: row.len(), n });
            }
        }
        let matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::checked(matrix, tol::CONSTRUCTION)
    }

    /// Sparse input; unlisted entries are exactly zero. Duplicate coordinates are rejected.
    pub fn from_triplets(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        let mut matrix = DMatrix::zeros(n, n);
        let mut seen = vec![false; n * n];
        for &(i, j, p) in entries {
            if i >= n {
                return Err(Error::InvalidState { state: i, n });
            }
            if j >= n {
                return Err(Error::InvalidState { state: j, n });
            }
            if std::mem::replace(&mut seen[i * n + j], true) {
                return Err(Error::Parse(format!("duplicate entry ({i}, {j})")));
            }
            matrix[(i, j)] = p;
        }
        Self::checked(matrix, tol::CONSTRUCTION)
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare { row: 0, len: matrix.ncols(), n: matrix.nrows() });
        }
        if matrix.nrows() == 0 {
            return Err(Error::Empty);
        }
        Self::checked(matrix, tol::CONSTRUCTION)
    }

    /// Wraps the result of arithmetic on kernels: row sums are held to `1e-10` and
    /// negative round-off no larger than `1e-15` is clamped to zero.
    pub(crate) fn from_computed(mut matrix: DMatrix<f64>) -> Result<Self> {
        for v in matrix.iter_mut() {
            if *v < 0.0 && *v >= -tol::ROUND_OFF {
                *v = 0.0;
            }
        }
        Self::checked(matrix, tol::ARITHMETIC)
    }

    fn checked(matrix: DMatrix<f64>, row_tol: f64) -> Result<Self> {
        let n = matrix.nrows();
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                let p = matrix[(i, j)];
                if !p.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if p < 0.0 {
                    return Err(Error::NegativeEntry { row: i, col: j, value: p });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > row_tol {
                return Err(Error::RowSumViolation { row: i, sum });
            }
        }
        Ok(Self { matrix, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        check_dim(self.n(), labels.len())?;
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        Ok(Self { matrix: DMatrix::identity(n, n), labels: None })
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.matrix.row(i).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.row(i)).collect()
    }

    /// Positive entries of row `i` as `(column, probability)`.
    pub fn row_support(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.n()).filter_map(move |j| {
            let p = self.matrix[(i, j)];
            (p > 0.0).then_some((j, p))
        })
    }

    /// `P(i, A)`.
    pub fn row_mass(&self, i: usize, set: &StateSet) -> f64 {
        set.iter().map(|j| self.matrix[(i, j)]).sum()
    }

    /// `P(i, A^c)`, summed directly rather than as `1 - P(i, A)`.
    pub fn row_mass_outside(&self, i: usize, set: &StateSet) -> f64 {
        (0..self.n()).filter(|&j| !set.contains(j)).map(|j| self.matrix[(i, j)]).sum()
    }

    pub(crate) fn check_state(&self, x: usize) -> Result<()> {
        if x >= self.n() {
            return Err(Error::InvalidState { state: x, n: self.n() });
        }
        Ok(())
    }

    /// Row vector times kernel, without any normalization.
    pub fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|j| self.matrix.column(j).iter().zip(v).map(|(p, w)| p * w).sum())
            .collect()
    }

    /// Kernel times column vector.
    pub fn right_mul(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * f[j]).sum())
            .collect()
    }

    /// `mu P`.
    pub fn apply_left(&self, mu: &ProbMeasure) -> Result<ProbMeasure> {
        check_dim(self.n(), mu.len())?;
        ProbMeasure::from_computed(self.left_mul(mu.weights()))
    }

    /// `P f`. The result inherits the declared bound of `f`, which still holds
    /// because each row of `P` averages `f`.
    pub fn apply_right(&self, f: &StateFunction) -> Result<StateFunction> {
        check_dim(self.n(), f.len())?;
        let values = self.right_mul(f.values());
        match f.bound() {
            // averaging cannot exceed the bound beyond round-off
            Some(b) => StateFunction::with_bound(values, b * (1.0 + 4.0 * f64::EPSILON)),
            None => StateFunction::new(values),
        }
    }

    /// `P^m` by repeated squaring; `P^0` is the identity.
    pub fn power(&self, m: u64) -> Result<StochasticKernel> {
        let n = self.n();
        let mut result = DMatrix::<f64>::identity(n, n);
        let mut base = self.matrix.clone();
        let mut e = m;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        StochasticKernel::from_computed(result)
    }

    /// The averaged iterates `(1/n) sum_{k<n} P^k(x, .)`, accumulated row by row.
    pub fn cesaro_average(&self, x: usize, n: usize) -> Result<ProbMeasure> {
        CesaroIter::new(self, x)?
            .nth(n.checked_sub(1).ok_or_else(|| Error::OutOfRange("averaging length must be >= 1".into()))?)
            .expect("iterator is infinite")
    }

    pub fn resolvent(&self, params: &ResolventParams) -> Result<Resolvent> {
        resolvent::resolvent(self, params)
    }
}

/// Yields the averaged iterates for `n = 1, 2, ...` from a fixed start state.
pub struct CesaroIter<'a> {
    kernel: &'a StochasticKernel,
    current: Vec<f64>,
    sum: Vec<f64>,
    count: usize,
}

impl<'a> CesaroIter<'a> {
    pub fn new(kernel: &'a StochasticKernel, x: usize) -> Result<Self> {
        kernel.check_state(x)?;
        let mut current = vec![0.0; kernel.n()];
        current[x] = 1.0;
        Ok(Self { kernel, sum: vec![0.0; kernel.n()], current, count: 0 })
    }
}

impl Iterator for CesaroIter<'_> {
    type Item = Result<ProbMeasure>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.count > 0 {
            self.current = self.kernel.left_mul(&self.current);
        }
        for (s, c) in self.sum.iter_mut().zip(&self.current) {
            *s += c;
        }
        self.count += 1;
        let k = self.count as f64;
        Some(ProbMeasure::from_computed(self.sum.iter().map(|s| s / k).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(rows: &[&[f64]]) -> StochasticKernel {
        StochasticKernel::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn cycle2() -> StochasticKernel {
        k(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    #[test]
    fn validation_examples() {
        assert_eq!(validate_kernel(vec![vec![1.0]]).unwrap().n(), 1);
        assert!(validate_kernel(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).is_ok());
        match validate_kernel(vec![vec![0.5, 0.4], vec![0.5, 0.5]]) {
            Err(Error::RowSumViolation { row: 0, sum }) => assert!((sum - 0.9).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            validate_kernel(vec![vec![1.5, -0.5], vec![0.0, 1.0]]),
            Err(Error::NegativeEntry { row: 0, col: 1, .. })
        ));
        assert!(matches!(validate_kernel(vec![]), Err(Error::Empty)));
        assert!(matches!(validate_kernel(vec![vec![1.0, 0.0]]), Err(Error::NotSquare { .. })));
        // no silent renormalization, even for tiny excess
        assert!(validate_kernel(vec![vec![0.5, 0.5 + 1e-9], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn triplets_leave_unlisted_entries_zero() {
        let p = StochasticKernel::from_triplets(2, &[(0, 1, 1.0), (1, 0, 0.25), (1, 1, 0.75)]).unwrap();
        assert_eq!(p.get(0, 0), 0.0);
        assert_eq!(p.get(1, 1), 0.75);
        assert!(StochasticKernel::from_triplets(2, &[(0, 1, 0.5), (0, 1, 0.5), (1, 1, 1.0)]).is_err());
        assert!(StochasticKernel::from_triplets(2, &[(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn apply_left_examples() {
        let id = StochasticKernel::identity(2).unwrap();
        let d0 = ProbMeasure::dirac(2, 0).unwrap();
        assert_eq!(id.apply_left(&d0).unwrap().weights(), &[1.0, 0.0]);
        assert_eq!(cycle2().apply_left(&d0).unwrap().weights(), &[0.0, 1.0]);
        let p = k(&[&[0.9, 0.1], &[0.2, 0.8]]);
        let mu = p.apply_left(&ProbMeasure::new(vec![0.5, 0.5]).unwrap()).unwrap();
        assert!((mu.get(0) - 0.55).abs() < 1e-15);
        assert!((mu.get(1) - 0.45).abs() < 1e-15);
        assert!(matches!(p.apply_left(&ProbMeasure::uniform(3).unwrap()), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn apply_right_examples() {
        let p = k(&[&[0.9, 0.1], &[0.2, 0.8]]);
        let c = p.apply_right(&StateFunction::constant(2, 3.5).unwrap()).unwrap();
        for v in c.values() {
            assert!((v - 3.5).abs() < 1e-15);
        }
        let f = StateFunction::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(cycle2().apply_right(&f).unwrap().values(), &[0.0, 1.0]);
        let pf = p.apply_right(&f).unwrap();
        assert!((pf.get(0) - 0.9).abs() < 1e-15);
        assert!((pf.get(1) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn power_examples() {
        let p = k(&[&[0.5, 0.5], &[0.0, 1.0]]);
        assert_eq!(p.power(0).unwrap(), StochasticKernel::identity(2).unwrap());
        assert_eq!(cycle2().power(2).unwrap().matrix(), StochasticKernel::identity(2).unwrap().matrix());
        let p3 = p.power(3).unwrap();
        assert!((p3.get(0, 0) - 0.125).abs() < 1e-15);
        assert!((p3.get(0, 1) - 0.875).abs() < 1e-15);
        assert_eq!(p3.get(1, 0), 0.0);
        assert_eq!(p3.get(1, 1), 1.0);
    }

    #[test]
    fn cesaro_examples() {
        let p = k(&[&[0.9, 0.1], &[0.2, 0.8]]);
        assert_eq!(p.cesaro_average(1, 1).unwrap().weights(), &[0.0, 1.0]);
        assert_eq!(cycle2().cesaro_average(0, 4).unwrap().weights(), &[0.5, 0.5]);
        let nu = cycle2().cesaro_average(0, 3).unwrap();
        assert!((nu.get(0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((nu.get(1) - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(p.cesaro_average(2, 1), Err(Error::InvalidState { .. })));
        assert!(p.cesaro_average(0, 0).is_err());
    }
}
