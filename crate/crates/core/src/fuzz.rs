//! Randomized property suite: every analysis routine is cross-checked against
//! the brute-force routines in [`crate::oracle`] on random sparse kernels.
//!
//! Kernel `i` of a run is drawn from the ChaCha stream `(seed, i)`, so results do
//! not depend on the number of threads and any failure can be replayed alone.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariant::{
    ergodic_measures, ergodicity_check, harmonic_density, stationary_on_class, uniqueness_certificate, Verdict,
};
use crate::io::KernelDoc;
use crate::kernel::{ProbMeasure, ResolventParams, StateSet, StochasticKernel};
use crate::oracle;
use crate::random::random_sparse_kernel;
use crate::simulate::stream_rng;
use crate::structure::{
    class_decomposition, indecomposability_certificate, is_absorbing, largest_absorbing_subset, absorbing_witness_pair,
    Decomposability,
};
use crate::tol;

pub const RESOLVENT_PARAMETERS: [f64; 3] = [0.1, 0.5, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Equivalence,
    BruteForce,
    Density,
    WitnessPair,
    Ergodicity,
    Resolvent,
}

impl Check {
    pub const ALL: [Check; 6] =
        [Check::Equivalence, Check::BruteForce, Check::Density, Check::WitnessPair, Check::Ergodicity, Check::Resolvent];

    pub fn run(self, p: &StochasticKernel, rng: &mut impl Rng) -> std::result::Result<(), String> {
        match self {
            Check::Equivalence => check_equivalence(p),
            Check::BruteForce => check_brute_force(p, rng),
            Check::Density => check_density(p),
            Check::WitnessPair => check_witness_pair(p),
            Check::Ergodicity => check_ergodicity(p),
            Check::Resolvent => check_resolvent(p),
        }
    }
}

type CheckResult = std::result::Result<(), String>;

fn fail<T>(msg: impl Into<String>) -> std::result::Result<T, String> {
    Err(msg.into())
}

fn lift<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// indecomposable <=> one closed class <=> `dim ker(P - I) = 1` <=> unique.
pub fn check_equivalence(p: &StochasticKernel) -> CheckResult {
    let cert = lift(indecomposability_certificate(p))?;
    let indecomposable = cert.verdict == Decomposability::Indecomposable;
    let one_class = class_decomposition(p).closed_count() == 1;
    let nullity = oracle::null_space_dim(p, tol::RANK);
    let unique = lift(uniqueness_certificate(p))?.verdict() == Verdict::Unique;
    if indecomposable == one_class && one_class == (nullity == 1) && (nullity == 1) == unique {
        Ok(())
    } else {
        fail(format!("indecomposable={indecomposable} one_class={one_class} nullity={nullity} unique={unique}"))
    }
}

/// Verdict and largest absorbing subsets agree with subset enumeration.
pub fn check_brute_force(p: &StochasticKernel, rng: &mut impl Rng) -> CheckResult {
    let cert = lift(indecomposability_certificate(p))?;
    let decomposable = oracle::disjoint_absorbing_pair(p).is_some();
    if decomposable != (cert.verdict == Decomposability::Decomposable) {
        return fail(format!("verdict {:?} but enumeration found a disjoint pair: {decomposable}", cert.verdict));
    }
    let n = p.n();
    let mut probes = vec![StateSet::full(n), StateSet::empty(n)];
    probes.extend((0..4).map(|_| StateSet::from_predicate(n, |_| rng.random::<bool>())));
    probes.extend(cert.closed_classes.iter().map(|c| c.complement()));
    for a in &probes {
        let fast = largest_absorbing_subset(p, a);
        let slow = oracle::largest_absorbing_subset(p, a);
        if fast != slow {
            return fail(format!("largest absorbing subset of {a:?}: {fast:?} vs enumeration {slow:?}"));
        }
    }
    Ok(())
}

fn first_two_ergodic(p: &StochasticKernel) -> std::result::Result<Option<(ProbMeasure, ProbMeasure)>, String> {
    let e = lift(ergodic_measures(p))?;
    Ok(match e.as_slice() {
        [a, b, ..] => Some((a.clone(), b.clone())),
        _ => None,
    })
}

/// For decomposable kernels, the density certificate on the first two ergodic
/// measures validates and their supports are disjoint.
pub fn check_density(p: &StochasticKernel) -> CheckResult {
    let Some((mu, nu)) = first_two_ergodic(p)? else { return Ok(()) };
    if !mu.support(0.0).is_disjoint(&nu.support(0.0)) {
        return fail("ergodic supports overlap");
    }
    let cert = lift(harmonic_density(p, &mu, &nu))?;
    lift(cert.verify(p))?;
    let a = &cert.separator;
    if mu.mass(a) < 1.0 - tol::SEPARATOR || nu.mass(a) > tol::SEPARATOR {
        return fail(format!("separator masses mu={} nu={}", mu.mass(a), nu.mass(a)));
    }
    Ok(())
}

/// For decomposable kernels, the absorbing hulls of the separator and its
/// complement are disjoint, nonempty, absorbing and carry the two measures.
pub fn check_witness_pair(p: &StochasticKernel) -> CheckResult {
    let Some((mu, nu)) = first_two_ergodic(p)? else { return Ok(()) };
    let cert = lift(harmonic_density(p, &mu, &nu))?;
    let (b1, b2) = absorbing_witness_pair(p, &cert.separator);
    if b1.is_empty() || b2.is_empty() || !b1.is_disjoint(&b2) {
        return fail(format!("witness pair {b1:?}, {b2:?} not disjoint and nonempty"));
    }
    if !is_absorbing(p, &b1) || !is_absorbing(p, &b2) {
        return fail("witness pair not absorbing");
    }
    if mu.mass(&b1) < 1.0 - tol::SEPARATOR || nu.mass(&b2) < 1.0 - tol::SEPARATOR {
        return fail(format!("witness masses {} and {}", mu.mass(&b1), nu.mass(&b2)));
    }
    Ok(())
}

/// Unique kernels: the invariant measure is ergodic, by both the library and
/// exhaustive search. Multiple kernels: the even mixture of two ergodic
/// measures is not ergodic.
pub fn check_ergodicity(p: &StochasticKernel) -> CheckResult {
    let measure = match lift(uniqueness_certificate(p))?.unique_measure() {
        Some(m) => m.clone(),
        None => {
            let (mu, nu) = first_two_ergodic(p)?.ok_or("multiple verdict with fewer than two ergodic measures")?;
            let mix = lift(mu.mix(&nu, 0.5))?;
            if lift(ergodicity_check(p, &mix))? {
                return fail("strict mixture reported ergodic");
            }
            if p.n() <= oracle::MAX_ENUMERATION
                && oracle::fractional_invariant_set(p, &mix, tol::SUPPORT, tol::DENSITY).is_none()
            {
                return fail("enumeration finds no invariant set splitting the mixture");
            }
            return Ok(());
        }
    };
    if !lift(ergodicity_check(p, &measure))? {
        return fail("unique invariant measure reported non-ergodic");
    }
    if p.n() <= oracle::MAX_ENUMERATION {
        if let Some(a) = oracle::fractional_invariant_set(p, &measure, tol::SUPPORT, tol::DENSITY) {
            return fail(format!("enumeration splits the unique measure with {a:?}"));
        }
    }
    Ok(())
}

/// For each `a` in [`RESOLVENT_PARAMETERS`]: same verdict, same invariant
/// measure within `1e-8`, and `R_a(x, y) > 0` exactly when `y` is reachable from `x`.
pub fn check_resolvent(p: &StochasticKernel) -> CheckResult {
    let verdict = lift(uniqueness_certificate(p))?;
    let reach = oracle::reachability(p);
    for a in RESOLVENT_PARAMETERS {
        let r = lift(p.resolvent(&lift(ResolventParams::closed_form(a))?))?.kernel;
        let rv = lift(uniqueness_certificate(&r))?;
        if rv.verdict() != verdict.verdict() {
            return fail(format!("a={a}: verdict {:?} vs {:?}", rv.verdict(), verdict.verdict()));
        }
        if let (Some(m), Some(mr)) = (verdict.unique_measure(), rv.unique_measure()) {
            let d = lift(m.l1_distance(mr))?;
            if d > 1e-8 {
                return fail(format!("a={a}: invariant measures differ by {d}"));
            }
        }
        for x in 0..p.n() {
            let positive = StateSet::from_predicate(p.n(), |y| r.get(x, y) > 0.0);
            if positive != reach[x] {
                return fail(format!("a={a}: row {x} positive on {positive:?}, reachable {:?}", reach[x]));
            }
        }
        // each ergodic measure of P is invariant for R_a
        for class in class_decomposition(p).closed_classes() {
            let pi = lift(stationary_on_class(p, class))?;
            let res = lift(crate::invariant::invariance_residual(&r, &pi))?;
            if res > tol::INVARIANCE {
                return fail(format!("a={a}: ergodic measure has residual {res} under R_a"));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub index: u64,
    pub check: Check,
    pub detail: String,
    pub kernel: KernelDoc,
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzSummary {
    pub count: u64,
    pub seed: u64,
    pub n_max: usize,
    pub decomposable: u64,
    pub violations: usize,
    pub failures: Vec<Violation>,
}

/// Draws kernel `index` and runs every check on it.
pub fn run_index(seed: u64, index: u64, n_max: usize) -> Result<(StochasticKernel, Vec<Violation>)> {
    let mut rng = stream_rng(seed, index);
    let p = random_sparse_kernel(&mut rng, n_max)?;
    let failures = Check::ALL
        .iter()
        .filter_map(|&check| {
            check.run(&p, &mut rng).err().map(|detail| Violation { index, check, detail, kernel: KernelDoc::dense(&p) })
        })
        .collect();
    Ok((p, failures))
}

/// Runs `count` kernels of size at most `n_max` (capped at the enumeration
/// limit), using at most `threads` workers when given.
pub fn run(count: u64, seed: u64, n_max: usize, threads: Option<usize>) -> Result<FuzzSummary> {
    if n_max > oracle::MAX_ENUMERATION {
        return Err(Error::OutOfRange(format!("n_max = {n_max} exceeds the enumeration limit {}", oracle::MAX_ENUMERATION)));
    }
    let work = || -> Result<Vec<(bool, Vec<Violation>)>> {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let (p, v) = run_index(seed, i, n_max)?;
                Ok((class_decomposition(&p).closed_count() > 1, v))
            })
            .collect()
    };
    let results = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::OutOfRange(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let decomposable = results.iter().filter(|(d, _)| *d).count() as u64;
    let failures: Vec<Violation> = results.into_iter().flat_map(|(_, v)| v).collect();
    Ok(FuzzSummary { count, seed, n_max, decomposable, violations: failures.len(), failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_is_clean() {
        let s = run(60, 7, 8, None).unwrap();
        assert_eq!(s.violations, 0, "{:?}", s.failures);
        assert!(s.decomposable > 0);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let a = serde_json::to_string(&run(20, 3, 6, Some(1)).unwrap()).unwrap();
        let b = serde_json::to_string(&run(20, 3, 6, Some(4)).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_large_n() {
        assert!(run(1, 0, 21, None).is_err());
    }
}
