//! Seeded random kernels for fuzzing and property tests.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel::StochasticKernel;

pub const MIN_DENSITY: f64 = 0.15;
pub const MAX_DENSITY: f64 = 0.9;

fn normalized_row<R: Rng + ?Sized>(rng: &mut R, n: usize, support: &[usize]) -> Vec<f64> {
    let mut row = vec![0.0; n];
    // weights bounded away from zero so supports are unambiguous
    for &j in support {
        row[j] = 0.05 + rng.random::<f64>();
    }
    let total: f64 = row.iter().sum();
    for v in &mut row {
        *v /= total;
    }
    row
}

/// Each entry is present with probability `density`; every row gets at least one
/// entry. Weights are uniform on the support before normalization.
pub fn random_kernel<R: Rng + ?Sized>(rng: &mut R, n: usize, density: f64) -> Result<StochasticKernel> {
    if n == 0 {
        return Err(Error::Empty);
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::OutOfRange(format!("density {density} must lie in (0, 1]")));
    }
    let rows = (0..n)
        .map(|_| {
            let mut support: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < density).collect();
            if support.is_empty() {
                support.push(rng.random_range(0..n));
            }
            normalized_row(rng, n, &support)
        })
        .collect();
    StochasticKernel::from_rows(rows)
}

/// Size drawn from `[2, n_max]` and density from `[MIN_DENSITY, MAX_DENSITY]`.
pub fn random_sparse_kernel<R: Rng + ?Sized>(rng: &mut R, n_max: usize) -> Result<StochasticKernel> {
    if n_max < 2 {
        return Err(Error::OutOfRange(format!("n_max = {n_max} must be at least 2")));
    }
    let n = rng.random_range(2..=n_max);
    let density = rng.random_range(MIN_DENSITY..=MAX_DENSITY);
    random_kernel(rng, n, density)
}

/// A kernel on `n` states with exactly one closed class. The class is a random
/// cycle plus extra internal edges; every other state has an edge into it.
pub fn random_unichain_kernel<R: Rng + ?Sized>(rng: &mut R, n: usize, density: f64) -> Result<StochasticKernel> {
    if n == 0 {
        return Err(Error::Empty);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let r = rng.random_range(1..=n);
    let (recurrent, _) = order.split_at(r);
    let in_class = |j: usize| recurrent.contains(&j);

    let rows = (0..n)
        .map(|i| {
            let mut support: Vec<usize>;
            if let Some(pos) = recurrent.iter().position(|&s| s == i) {
                support = recurrent.iter().copied().filter(|_| rng.random::<f64>() < density).collect();
                let next = recurrent[(pos + 1) % r];
                if !support.contains(&next) {
                    support.push(next);
                }
            } else {
                support = (0..n).filter(|_| rng.random::<f64>() < density).collect();
                if !support.iter().any(|&j| in_class(j)) {
                    support.push(recurrent[rng.random_range(0..r)]);
                }
            }
            normalized_row(rng, n, &support)
        })
        .collect();
    StochasticKernel::from_rows(rows)
}
