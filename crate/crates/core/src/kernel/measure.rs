use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tol;

/// A probability vector on `{0, .., n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbMeasure {
    weights: Vec<f64>,
}

impl ProbMeasure {
    /// Validates user-supplied weights: nonnegative, finite, summing to 1 within `1e-12`.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("empty weight vector".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::InvalidMeasure(format!("weight {i} is not finite")));
            }
            if w < 0.0 {
                return Err(Error::InvalidMeasure(format!("weight {i} is negative: {w}")));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > tol::CONSTRUCTION {
            return Err(Error::InvalidMeasure(format!("weights sum to {sum}")));
        }
        Ok(Self { weights })
    }

    /// Wraps the output of floating-point arithmetic.
    ///
    /// Negative round-off is clamped to zero and the vector renormalized, provided the
    /// total deviation (clamped mass plus distance of the sum from 1) stays within
    /// `1e-10`. Anything larger is reported as an error.
    pub fn from_computed(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("empty weight vector".into()));
        }
        let mut clamped = 0.0;
        for w in weights.iter_mut() {
            if !w.is_finite() {
                return Err(Error::InvalidMeasure("non-finite weight".into()));
            }
            if *w < 0.0 {
                clamped += -*w;
                *w = 0.0;
            }
        }
        let sum: f64 = weights.iter().sum();
        let deviation = clamped + (sum - 1.0).abs();
        if deviation > tol::ARITHMETIC {
            return Err(Error::InvalidMeasure(format!(
                "computed weights deviate from a probability vector by {deviation:e}"
            )));
        }
        if sum != 1.0 {
            for w in weights.iter_mut() {
                *w /= sum;
            }
        }
        Ok(Self { weights })
    }

    pub fn dirac(n: usize, state: usize) -> Result<Self> {
        if state >= n {
            return Err(Error::InvalidState { state, n });
        }
        let mut weights = vec![0.0; n];
        weights[state] = 1.0;
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMeasure("empty weight vector".into()));
        }
        Ok(Self { weights: vec![1.0 / n as f64; n] })
    }

    /// Uniform measure on the members of `set`.
    pub fn uniform_on(set: &StateSet) -> Result<Self> {
        let k = set.len();
        if k == 0 {
            return Err(Error::InvalidMeasure("uniform measure on empty set".into()));
        }
        let mut weights = vec![0.0; set.universe()];
        for i in set.iter() {
            weights[i] = 1.0 / k as f64;
        }
        Ok(Self { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// `mu(A)`.
    pub fn mass(&self, set: &StateSet) -> f64 {
        set.iter().map(|i| self.weights[i]).sum()
    }

    /// States carrying more than `threshold` mass.
    pub fn support(&self, threshold: f64) -> StateSet {
        StateSet::from_predicate(self.len(), |i| self.weights[i] > threshold)
    }

    pub fn l1_distance(&self, other: &ProbMeasure) -> Result<f64> {
        check_dim(self.len(), other.len())?;
        Ok(l1(&self.weights, &other.weights))
    }

    /// `<mu, f>`.
    pub fn integrate(&self, f: &StateFunction) -> Result<f64> {
        check_dim(self.len(), f.len())?;
        Ok(self.weights.iter().zip(f.values()).map(|(w, v)| w * v).sum())
    }

    /// Restriction to `set`, renormalized. Fails when `mu(set) == 0`.
    pub fn conditional(&self, set: &StateSet) -> Result<ProbMeasure> {
        check_dim(self.len(), set.universe())?;
        let m = self.mass(set);
        if m <= 0.0 {
            return Err(Error::InvalidMeasure("conditioning on a null set".into()));
        }
        let weights = (0..self.len())
            .map(|i| if set.contains(i) { self.weights[i] / m } else { 0.0 })
            .collect();
        ProbMeasure::from_computed(weights)
    }

    /// Convex combination `t * self + (1 - t) * other`.
    pub fn mix(&self, other: &ProbMeasure, t: f64) -> Result<ProbMeasure> {
        check_dim(self.len(), other.len())?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange(format!("mixing weight {t}")));
        }
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| t * a + (1.0 - t) * b)
            .collect();
        ProbMeasure::from_computed(weights)
    }
}

/// A bounded real function on the states, optionally with a declared sup-norm bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateFunction {
    values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<f64>,
}

impl StateFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction(format!("value {i} is not finite")));
        }
        Ok(Self { values, bound: None })
    }

    pub fn with_bound(values: Vec<f64>, bound: f64) -> Result<Self> {
        let f = Self::new(values)?;
        if !(bound >= 0.0) {
            return Err(Error::InvalidFunction(format!("bound {bound} is not a valid norm")));
        }
        let sup = f.sup_norm();
        if sup > bound {
            return Err(Error::InvalidFunction(format!("sup norm {sup} exceeds declared bound {bound}")));
        }
        Ok(Self { bound: Some(bound), ..f })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn indicator(set: &StateSet) -> Self {
        Self {
            values: (0..set.universe()).map(|i| if set.contains(i) { 1.0 } else { 0.0 }).collect(),
            bound: Some(1.0),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A subset of `{0, .., n-1}` stored as a bitmask.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StateSet {
    bits: FixedBitSet,
}

impl StateSet {
    pub fn empty(n: usize) -> Self {
        Self { bits: FixedBitSet::with_capacity(n) }
    }

    pub fn full(n: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(n);
        bits.insert_range(..);
        Self { bits }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(n: usize, indices: I) -> Result<Self> {
        let mut set = Self::empty(n);
        for i in indices {
            if i >= n {
                return Err(Error::InvalidState { state: i, n });
            }
            set.bits.insert(i);
        }
        Ok(set)
    }

    pub fn from_predicate(n: usize, mut pred: impl FnMut(usize) -> bool) -> Self {
        let mut set = Self::empty(n);
        for i in 0..n {
            if pred(i) {
                set.bits.insert(i);
            }
        }
        set
    }

    /// Bit `i` of `mask` selects state `i`. Used by subset enumeration.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        debug_assert!(n <= 64);
        Self::from_predicate(n, |i| mask >> i & 1 == 1)
    }

    /// Size of the ambient state space.
    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits.contains(i)
    }

    pub fn insert(&mut self, i: usize) {
        self.bits.insert(i);
    }

    pub fn remove(&mut self, i: usize) {
        self.bits.set(i, false);
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn min(&self) -> Option<usize> {
        self.bits.minimum()
    }

    pub fn complement(&self) -> Self {
        let mut bits = self.bits.clone();
        bits.toggle_range(..);
        Self { bits }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        Self { bits }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut bits = self.bits.clone();
        bits.intersect_with(&other.bits);
        Self { bits }
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.bits.is_disjoint(&other.bits)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.bits.is_subset(&other.bits)
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for StateSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}
