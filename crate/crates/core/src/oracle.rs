//! Brute-force reference routines.
//!
//! Nothing here calls into [`crate::structure`] or [`crate::invariant`]; these
//! functions exist to cross-check them. Subset enumeration is exponential and
//! limited to `n <= MAX_ENUMERATION`.

use nalgebra::DMatrix;

use crate::kernel::{ProbMeasure, StateSet, StochasticKernel};

pub const MAX_ENUMERATION: usize = 20;

fn successor_masks(p: &StochasticKernel) -> Vec<u64> {
    let n = p.n();
    assert!(n <= MAX_ENUMERATION, "subset enumeration limited to {MAX_ENUMERATION} states");
    (0..n)
        .map(|i| (0..n).filter(|&j| p.get(i, j) > 0.0).fold(0u64, |m, j| m | 1 << j))
        .collect()
}

fn absorbing_masks(p: &StochasticKernel) -> Vec<u64> {
    let succ = successor_masks(p);
    let n = p.n();
    (1u64..1 << n)
        .filter(|&a| (0..n).filter(|i| a >> i & 1 == 1).all(|i| succ[i] & !a == 0))
        .collect()
}

/// Every nonempty set `A` with `P(x, A) = 1` exactly for all `x` in `A`.
pub fn absorbing_subsets(p: &StochasticKernel) -> Vec<StateSet> {
    absorbing_masks(p).into_iter().map(|m| StateSet::from_mask(p.n(), m)).collect()
}

/// Some pair of disjoint nonempty absorbing sets, found by exhaustive search.
pub fn disjoint_absorbing_pair(p: &StochasticKernel) -> Option<(StateSet, StateSet)> {
    let masks = absorbing_masks(p);
    for (k, &a) in masks.iter().enumerate() {
        if let Some(&b) = masks[k + 1..].iter().find(|&&b| a & b == 0) {
            return Some((StateSet::from_mask(p.n(), a), StateSet::from_mask(p.n(), b)));
        }
    }
    None
}

/// Union of all absorbing subsets of `a` (itself absorbing).
pub fn largest_absorbing_subset(p: &StochasticKernel, a: &StateSet) -> StateSet {
    let a_mask = a.iter().fold(0u64, |m, i| m | 1 << i);
    let union = absorbing_masks(p).into_iter().filter(|&s| s & !a_mask == 0).fold(0, |u, s| u | s);
    StateSet::from_mask(p.n(), union)
}

/// Dimension of the null space of `P - I`, counting singular values `<= threshold`.
pub fn null_space_dim(p: &StochasticKernel, threshold: f64) -> usize {
    let n = p.n();
    let m = p.matrix() - DMatrix::<f64>::identity(n, n);
    m.svd(false, false).singular_values.iter().filter(|&&s| s <= threshold).count()
}

/// `closure[x]` is the set of states reachable from `x` in zero or more steps
/// (Warshall's algorithm).
pub fn reachability(p: &StochasticKernel) -> Vec<StateSet> {
    let n = p.n();
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
        for (j, cell) in row.iter_mut().enumerate() {
            if p.get(i, j) > 0.0 {
                *cell = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r.into_iter().map(|row| StateSet::from_predicate(n, |j| row[j])).collect()
}

/// Exhaustive search for a set `A` with `P 1_A = 1_A` on `supp mu` and
/// `tol < mu(A) < 1 - tol`. `None` means `mu` is ergodic.
pub fn fractional_invariant_set(p: &StochasticKernel, mu: &ProbMeasure, support: f64, tol: f64) -> Option<StateSet> {
    let n = p.n();
    assert!(n <= MAX_ENUMERATION, "subset enumeration limited to {MAX_ENUMERATION} states");
    let supp: Vec<usize> = (0..n).filter(|&i| mu.get(i) > support).collect();
    (1u64..(1 << n) - 1).map(|m| StateSet::from_mask(n, m)).find(|a| {
        let mass = mu.mass(a);
        mass > tol
            && mass < 1.0 - tol
            && supp.iter().all(|&i| {
                let inside: f64 = a.iter().map(|j| p.get(i, j)).sum();
                let target = if a.contains(i) { 1.0 } else { 0.0 };
                (inside - target).abs() <= tol
            })
    })
}
