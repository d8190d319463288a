//! Seeded trajectories and total-variation diagnostics.
//!
//! Randomness comes from ChaCha8, a counter-based generator: the uniform used for
//! transition `k` of stream `s` under seed `seed` sits at a fixed word position,
//! so it can be recomputed in isolation with [`uniform_at`]. Batches run on
//! distinct streams and are merged in batch order, making results independent of
//! thread scheduling.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariant::{uniqueness_certificate, UniquenessCertificate};
use crate::kernel::{check_dim, l1, CesaroIter, ProbMeasure, StateFunction, StochasticKernel};
use crate::tol;

/// Words of generator output consumed per `f64` draw.
const WORDS_PER_DRAW: u128 = 2;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The uniform in `[0, 1)` driving transition `k` on `stream`.
pub fn uniform_at(seed: u64, stream: u64, k: u64) -> f64 {
    let mut rng = stream_rng(seed, stream);
    rng.set_word_pos(WORDS_PER_DRAW * k as u128);
    rng.random()
}

/// Inverse-CDF sampler over the positive entries of each row.
#[derive(Debug, Clone)]
pub struct StepSampler {
    rows: Vec<(Vec<usize>, Vec<f64>)>,
}

impl StepSampler {
    pub fn new(p: &StochasticKernel) -> Self {
        let rows = (0..p.n())
            .map(|i| {
                let mut cols = Vec::new();
                let mut cums = Vec::new();
                let mut acc = 0.0;
                for (j, pij) in p.row_support(i) {
                    acc += pij;
                    cols.push(j);
                    cums.push(acc);
                }
                (cols, cums)
            })
            .collect();
        Self { rows }
    }

    /// Next state from `i` given `u` in `[0, 1)`. Never returns a state outside
    /// the support of row `i`.
    pub fn step(&self, i: usize, u: f64) -> usize {
        let (cols, cums) = &self.rows[i];
        let target = u * cums[cums.len() - 1];
        let k = cums.partition_point(|&c| c <= target).min(cols.len() - 1);
        cols[k]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub seed: u64,
    pub start: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Streams `X_0 = x, X_1, ...` without storing them.
pub struct Path<'a> {
    sampler: &'a StepSampler,
    rng: ChaCha8Rng,
    state: usize,
    started: bool,
}

impl<'a> Path<'a> {
    pub fn new(sampler: &'a StepSampler, x: usize, seed: u64, stream: u64) -> Self {
        Self { sampler, rng: stream_rng(seed, stream), state: x, started: false }
    }
}

impl Iterator for Path<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.started {
            self.state = self.sampler.step(self.state, self.rng.random());
        }
        self.started = true;
        Some(self.state)
    }
}

/// A path of `n` states starting at `x`, on stream 0 of `seed`.
pub fn sample_path(p: &StochasticKernel, x: usize, n: usize, seed: u64) -> Result<Trajectory> {
    sample_path_on_stream(p, x, n, seed, 0)
}

pub fn sample_path_on_stream(p: &StochasticKernel, x: usize, n: usize, seed: u64, stream: u64) -> Result<Trajectory> {
    p.check_state(x)?;
    if n == 0 {
        return Err(Error::OutOfRange("path length must be >= 1".into()));
    }
    let sampler = StepSampler::new(p);
    let states = Path::new(&sampler, x, seed, stream).take(n).collect();
    Ok(Trajectory { states, seed, start: x })
}

/// `batches` independent paths, batch `b` drawn from stream `b`.
pub fn sample_batch(p: &StochasticKernel, x: usize, n: usize, seed: u64, batches: u64) -> Result<Vec<Trajectory>> {
    (0..batches).into_par_iter().map(|b| sample_path_on_stream(p, x, n, seed, b)).collect()
}

pub fn occupation_measure(t: &Trajectory, n_states: usize) -> Result<ProbMeasure> {
    ProbMeasure::from_computed(occupation(&t.states, n_states)?)
}

fn occupation(states: &[usize], n_states: usize) -> Result<Vec<f64>> {
    if states.is_empty() {
        return Err(Error::OutOfRange("empty trajectory".into()));
    }
    let mut counts = vec![0u64; n_states];
    for &s in states {
        if s >= n_states {
            return Err(Error::InvalidState { state: s, n: n_states });
        }
        counts[s] += 1;
    }
    let len = states.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / len).collect())
}

/// `(1/2) ||mu - nu||_1`.
pub fn tv_distance(mu: &ProbMeasure, nu: &ProbMeasure) -> Result<f64> {
    Ok(0.5 * mu.l1_distance(nu)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub observable: StateFunction,
    pub time_average: f64,
    pub target: f64,
    pub abs_error: f64,
    pub n: usize,
    pub seed: u64,
}

fn unique_measure(p: &StochasticKernel) -> Result<ProbMeasure> {
    match uniqueness_certificate(p)? {
        UniquenessCertificate::Unique { measure, .. } => Ok(measure),
        UniquenessCertificate::Multiple { .. } => Err(Error::NotUnique),
    }
}

/// Time average of `f` along one path of length `n` against `<pi, f>`.
pub fn duflo_check(p: &StochasticKernel, f: &StateFunction, x: usize, n: usize, seed: u64) -> Result<StabilityReport> {
    let pi = unique_measure(p)?;
    duflo_against(p, &pi, f, x, n, seed)
}

/// [`duflo_check`] for several seeds in parallel; reports come back in seed order.
pub fn duflo_batch(
    p: &StochasticKernel,
    f: &StateFunction,
    x: usize,
    n: usize,
    seeds: &[u64],
) -> Result<Vec<StabilityReport>> {
    let pi = unique_measure(p)?;
    seeds.par_iter().map(|&s| duflo_against(p, &pi, f, x, n, s)).collect()
}

fn duflo_against(
    p: &StochasticKernel,
    pi: &ProbMeasure,
    f: &StateFunction,
    x: usize,
    n: usize,
    seed: u64,
) -> Result<StabilityReport> {
    check_dim(p.n(), f.len())?;
    p.check_state(x)?;
    if n == 0 {
        return Err(Error::OutOfRange("path length must be >= 1".into()));
    }
    let sampler = StepSampler::new(p);
    let mut counts = vec![0u64; p.n()];
    for s in Path::new(&sampler, x, seed, 0).take(n) {
        counts[s] += 1;
    }
    let time_average = counts.iter().zip(f.values()).map(|(&c, v)| (c as f64 / n as f64) * v).sum();
    let target = pi.integrate(f)?;
    Ok(StabilityReport {
        observable: f.clone(),
        time_average,
        target,
        abs_error: (time_average - target).abs(),
        n,
        seed,
    })
}

/// `(n, TV(nu_n^x, pi))` for `n = 1..=n_max`, computed exactly.
pub fn cesaro_tv_curve(p: &StochasticKernel, x: usize, n_max: usize) -> Result<Vec<(usize, f64)>> {
    let pi = unique_measure(p)?;
    CesaroIter::new(p, x)?
        .take(n_max)
        .enumerate()
        .map(|(k, nu)| Ok((k + 1, tv_distance(&nu?, &pi)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoeblinPoint {
    pub n: usize,
    pub tv: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoeblinReport {
    pub eps: f64,
    pub points: Vec<DoeblinPoint>,
    /// `tv <= bound + 1e-9` at every point.
    pub passed: bool,
}

pub const DOEBLIN_SLACK: f64 = 1e-9;

/// Checks `P >= eps * nu_ref` row-wise, then compares
/// `max_x TV(P^n(x, .), pi)` with `(1 - eps)^n` for `n = 1..=n_max`.
pub fn doeblin_rate_check(p: &StochasticKernel, eps: f64, nu_ref: &ProbMeasure, n_max: usize) -> Result<DoeblinReport> {
    check_dim(p.n(), nu_ref.len())?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::OutOfRange(format!("minorization constant {eps} must lie in (0, 1]")));
    }
    let n = p.n();
    for i in 0..n {
        for j in 0..n {
            if p.get(i, j) < eps * nu_ref.get(j) - tol::CONSTRUCTION {
                return Err(Error::MinorizationViolated { row: i, col: j });
            }
        }
    }
    let pi = unique_measure(p)?;
    let mut points = Vec::with_capacity(n_max);
    let mut iterate: DMatrix<f64> = p.matrix().clone();
    for step in 1..=n_max {
        if step > 1 {
            iterate = &iterate * p.matrix();
        }
        let tv = (0..n)
            .map(|x| {
                let row: Vec<f64> = iterate.row(x).iter().copied().collect();
                0.5 * l1(&row, pi.weights())
            })
            .fold(0.0, f64::max);
        points.push(DoeblinPoint { n: step, tv, bound: (1.0 - eps).powi(step as i32) });
    }
    let passed = points.iter().all(|pt| pt.tv <= pt.bound + DOEBLIN_SLACK);
    Ok(DoeblinReport { eps, points, passed })
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
    fn path_examples() {
        let id = StochasticKernel::identity(3).unwrap();
        assert_eq!(sample_path(&id, 2, 5, 9).unwrap().states, vec![2; 5]);
        assert_eq!(sample_path(&cycle2(), 0, 4, 1).unwrap().states, vec![0, 1, 0, 1]);
        assert!(matches!(sample_path(&id, 3, 5, 0), Err(Error::InvalidState { .. })));
        assert!(sample_path(&id, 0, 0, 0).is_err());
    }

    #[test]
    fn sequential_draws_match_keyed_draws() {
        let p = k(&[&[0.2, 0.3, 0.5], &[0.6, 0.0, 0.4], &[0.1, 0.8, 0.1]]);
        let sampler = StepSampler::new(&p);
        let t = sample_path_on_stream(&p, 0, 50, 42, 3).unwrap();
        for kk in 0..49 {
            let u = uniform_at(42, 3, kk as u64);
            assert_eq!(sampler.step(t.states[kk], u), t.states[kk + 1]);
        }
    }

    #[test]
    fn sampler_stays_in_support() {
        let p = k(&[&[0.0, 0.3, 0.0, 0.7], &[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0], &[0.5, 0.0, 0.0, 0.5]]);
        let s = StepSampler::new(&p);
        for i in [0, 1, 3] {
            for u in [0.0, 0.3, 0.2999999999, 0.5, 0.9999999999999999] {
                assert!(p.get(i, s.step(i, u)) > 0.0);
            }
        }
        assert_eq!(s.step(0, 0.0), 1);
        assert_eq!(s.step(0, 0.9999999999999999), 3);
    }

    #[test]
    fn occupation_examples() {
        let t = |states: Vec<usize>| Trajectory { states, seed: 0, start: 0 };
        assert_eq!(occupation_measure(&t(vec![0; 5]), 2).unwrap().weights(), &[1.0, 0.0]);
        assert_eq!(occupation_measure(&t(vec![0, 1, 0, 1]), 2).unwrap().weights(), &[0.5, 0.5]);
        let o = occupation_measure(&t(vec![0, 1, 1]), 2).unwrap();
        assert_eq!(o.weights(), &[1.0 / 3.0, 2.0 / 3.0]);
        assert!(occupation_measure(&t(vec![]), 2).is_err());
    }

    #[test]
    fn tv_examples() {
        let m = |w: &[f64]| ProbMeasure::new(w.to_vec()).unwrap();
        assert_eq!(tv_distance(&m(&[0.3, 0.7]), &m(&[0.3, 0.7])).unwrap(), 0.0);
        assert_eq!(tv_distance(&m(&[1.0, 0.0]), &m(&[0.0, 1.0])).unwrap(), 1.0);
        assert_eq!(tv_distance(&m(&[0.5, 0.5]), &m(&[0.75, 0.25])).unwrap(), 0.25);
        assert!(tv_distance(&m(&[1.0]), &m(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn duflo_examples() {
        let p = k(&[&[1.0, 0.0], &[0.5, 0.5]]);
        let f = StateFunction::new(vec![0.3, -7.0]).unwrap();
        let r = duflo_check(&p, &f, 0, 1000, 5).unwrap();
        assert_eq!(r.time_average, 0.3);
        assert_eq!(r.target, 0.3);
        assert_eq!(r.abs_error, 0.0);

        let f = StateFunction::new(vec![1.0, 0.0]).unwrap();
        let r = duflo_check(&cycle2(), &f, 0, 1000, 5).unwrap();
        assert_eq!(r.time_average, 0.5);
        assert_eq!(r.target, 0.5);
        assert_eq!(r.abs_error, 0.0);

        let id = StochasticKernel::identity(2).unwrap();
        assert_eq!(duflo_check(&id, &f, 0, 10, 0), Err(Error::NotUnique));
    }

    #[test]
    fn cesaro_curve_on_two_cycle() {
        let curve = cesaro_tv_curve(&cycle2(), 0, 50).unwrap();
        for (n, tv) in curve {
            let expected = if n % 2 == 0 { 0.0 } else { 0.5 / n as f64 };
            assert!((tv - expected).abs() <= 1e-12, "n = {n}");
        }
        let single = StochasticKernel::identity(1).unwrap();
        assert!(cesaro_tv_curve(&single, 0, 10).unwrap().iter().all(|&(_, tv)| tv == 0.0));
    }

    #[test]
    fn cesaro_curve_on_two_state_chain() {
        let p = k(&[&[0.9, 0.1], &[0.2, 0.8]]);
        let curve = cesaro_tv_curve(&p, 0, 1000).unwrap();
        assert!(curve.last().unwrap().1 <= 1e-2);
    }

    #[test]
    fn doeblin_examples() {
        let nu = ProbMeasure::new(vec![0.2, 0.3, 0.5]).unwrap();
        let rows = vec![nu.weights().to_vec(); 3];
        let p = StochasticKernel::from_rows(rows).unwrap();
        let r = doeblin_rate_check(&p, 1.0, &nu, 5).unwrap();
        assert!(r.passed);
        assert!(r.points.iter().all(|pt| pt.tv <= 1e-15));

        // 0.8 * (deterministic cycle) + 0.2 * nu
        let q = [1, 2, 0];
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| 0.2 * nu.get(j) + if q[i] == j { 0.8 } else { 0.0 }).collect())
            .collect();
        let p = StochasticKernel::from_rows(rows).unwrap();
        let r = doeblin_rate_check(&p, 0.2, &nu, 60).unwrap();
        assert!(r.passed);
        assert_eq!(doeblin_rate_check(&p, 0.5, &nu, 10), Err(Error::MinorizationViolated { row: 0, col: 0 }));
    }
}
