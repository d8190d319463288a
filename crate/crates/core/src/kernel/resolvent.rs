//! The resolvent kernel `R_a = (1 - a) sum_k a^k P^k`.
//!
//! Closed form solves `R_a = (1 - a)(I - aP)^{-1}`. `I - aP` is a row diagonally
//! dominant M-matrix, so Gaussian elimination can be arranged to never subtract:
//! off-diagonal magnitudes only grow, row slacks (row sums of the Schur complement)
//! are updated additively, and pivots are rebuilt as slack plus off-diagonal mass.
//! Substitution against a nonnegative right-hand side is subtraction-free as well.
//! Every entry of the inverse therefore carries a small relative error and the
//! positivity pattern of `R_a` is exactly the reachability relation of `P`.

use nalgebra::DMatrix;

use super::StochasticKernel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    ClosedForm,
    /// Partial sum with `terms` iterates; see [`Resolvent::tail_bound`].
    Series { terms: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventParams {
    a: f64,
    truncation: Truncation,
}

impl ResolventParams {
    pub fn closed_form(a: f64) -> Result<Self> {
        Self::new(a, Truncation::ClosedForm)
    }

    pub fn series(a: f64, terms: usize) -> Result<Self> {
        Self::new(a, Truncation::Series { terms })
    }

    pub fn new(a: f64, truncation: Truncation) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::OutOfRange(format!("resolvent parameter a = {a} must lie in (0, 1)")));
        }
        if let Truncation::Series { terms: 0 } = truncation {
            return Err(Error::OutOfRange("series length must be >= 1".into()));
        }
        Ok(Self { a, truncation })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolvent {
    pub kernel: StochasticKernel,
    /// Mass of the omitted tail, `a^N` in series mode and zero in closed form.
    pub tail_bound: f64,
}

pub(super) fn resolvent(p: &StochasticKernel, params: &ResolventParams) -> Result<Resolvent> {
    match params.truncation {
        Truncation::ClosedForm => Ok(Resolvent { kernel: closed_form(p, params.a)?, tail_bound: 0.0 }),
        Truncation::Series { terms } => series(p, params.a, terms),
    }
}

fn closed_form(p: &StochasticKernel, a: f64) -> Result<StochasticKernel> {
    let n = p.n();
    let lu = MFactor::new(p, a)?;
    let mut r = DMatrix::zeros(n, n);
    for x in 0..n {
        let row = lu.solve_unit_row(x);
        for (y, v) in row.into_iter().enumerate() {
            r[(x, y)] = (1.0 - a) * v;
        }
    }
    StochasticKernel::from_computed(r)
}

/// `(1 - a) sum_{k<N} a^k P^k + a^N P^N`: the truncated series with the
/// remaining mass `a^N` placed on the last iterate so rows stay stochastic.
fn series(p: &StochasticKernel, a: f64, terms: usize) -> Result<Resolvent> {
    let n = p.n();
    let mut acc = DMatrix::<f64>::zeros(n, n);
    let mut iterate = DMatrix::<f64>::identity(n, n);
    let mut weight = 1.0 - a;
    for k in 0..terms {
        if k > 0 {
            iterate = &iterate * p.matrix();
        }
        acc += &iterate * weight;
        weight *= a;
    }
    let tail = a.powi(terms as i32);
    iterate = &iterate * p.matrix();
    acc += &iterate * tail;
    Ok(Resolvent { kernel: StochasticKernel::from_computed(acc)?, tail_bound: tail })
}

/// LU factors of `I - aP` stored by magnitude: strict upper part holds `|U_ij|`,
/// strict lower part holds `|L_ij|`, diagonal holds the pivots.
struct MFactor {
    n: usize,
    f: Vec<f64>,
}

impl MFactor {
    fn new(p: &StochasticKernel, a: f64) -> Result<Self> {
        let n = p.n();
        let mut f = vec![0.0; n * n];
        let mut slack = vec![0.0; n];
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                let pij = p.get(i, j);
                row_sum += pij;
                if i != j {
                    f[i * n + j] = a * pij;
                }
            }
            slack[i] = 1.0 - a * row_sum;
        }
        for k in 0..n {
            let pivot = slack[k] + (k + 1..n).map(|j| f[k * n + j]).sum::<f64>();
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::SingularSolve(k));
            }
            f[k * n + k] = pivot;
            for i in k + 1..n {
                let nik = f[i * n + k];
                if nik == 0.0 {
                    continue;
                }
                let l = nik / pivot;
                f[i * n + k] = l;
                for j in k + 1..n {
                    if j != i {
                        let nkj = f[k * n + j];
                        if nkj != 0.0 {
                            f[i * n + j] += l * nkj;
                        }
                    }
                }
                slack[i] += l * slack[k];
            }
        }
        Ok(Self { n, f })
    }

    /// Row `x` of `(I - aP)^{-1}`, i.e. `y` with `y (I - aP) = e_x`.
    fn solve_unit_row(&self, x: usize) -> Vec<f64> {
        let n = self.n;
        let f = &self.f;
        // U^T z = e_x
        let mut z = vec![0.0; n];
        for i in 0..n {
            let mut s = if i == x { 1.0 } else { 0.0 };
            for k in 0..i {
                s += f[k * n + i] * z[k];
            }
            z[i] = s / f[i * n + i];
        }
        // L^T y = z
        let mut y = z;
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s += f[k * n + i] * y[k];
            }
            y[i] = s;
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(rows: &[&[f64]]) -> StochasticKernel {
        StochasticKernel::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn identity_is_fixed() {
        let id = StochasticKernel::identity(3).unwrap();
        for a in [0.1, 0.5, 0.9] {
            let r = id.resolvent(&ResolventParams::closed_form(a).unwrap()).unwrap();
            assert!((r.kernel.matrix() - id.matrix()).abs().max() < 1e-15);
        }
    }

    #[test]
    fn two_cycle_closed_form() {
        let p = k(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let r = p.resolvent(&ResolventParams::closed_form(0.5).unwrap()).unwrap().kernel;
        let expected = [[2.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((r.get(i, j) - expected[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn positivity_follows_reachability() {
        let p = k(&[&[1.0, 0.0], &[0.5, 0.5]]);
        let r = p.resolvent(&ResolventParams::closed_form(0.5).unwrap()).unwrap().kernel;
        assert!(r.get(1, 0) > 0.0);
        assert_eq!(r.get(0, 1), 0.0);
    }

    #[test]
    fn long_chain_keeps_tiny_entries_positive() {
        // 0 -> 1 -> ... -> 11, reached with probability 0.1 per step
        let n = 12;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n - 1 {
            rows[i][i] = 0.9;
            rows[i][i + 1] = 0.1;
        }
        rows[n - 1][n - 1] = 1.0;
        let p = StochasticKernel::from_rows(rows).unwrap();
        let r = p.resolvent(&ResolventParams::closed_form(0.1).unwrap()).unwrap().kernel;
        for x in 0..n {
            for y in 0..n {
                assert_eq!(r.get(x, y) > 0.0, y >= x, "({x},{y}) = {}", r.get(x, y));
            }
        }
        assert!(r.get(0, n - 2) < 1e-15);
    }

    #[test]
    fn series_agrees_with_closed_form() {
        let p = k(&[&[0.2, 0.3, 0.5], &[0.0, 0.4, 0.6], &[0.7, 0.0, 0.3]]);
        let closed = p.resolvent(&ResolventParams::closed_form(0.5).unwrap()).unwrap();
        let s = p.resolvent(&ResolventParams::series(0.5, 60).unwrap()).unwrap();
        assert!(s.tail_bound <= 0.5f64.powi(60));
        assert!((closed.kernel.matrix() - s.kernel.matrix()).abs().max() < 2.0 * s.tail_bound + 1e-14);
    }

    #[test]
    fn parameter_validation() {
        assert!(ResolventParams::closed_form(0.0).is_err());
        assert!(ResolventParams::closed_form(1.0).is_err());
        assert!(ResolventParams::closed_form(f64::NAN).is_err());
        assert!(ResolventParams::series(0.5, 0).is_err());
    }
}
