use ergokit::invariant::{
    ergodic_decomposition, ergodic_measures, invariance_residual, singular_pair, stationary_on_class,
    uniqueness_certificate, Verdict,
};
use ergokit::io::{load_structure_certificate, load_uniqueness_certificate};
use ergokit::oracle;
use ergokit::simulate::{cesaro_tv_curve, doeblin_rate_check, sample_batch, sample_path};
use ergokit::structure::{
    class_decomposition, indecomposability_certificate, is_absorbing, largest_absorbing_subset, absorbing_witness_pair,
};
use ergokit::{ProbMeasure, ResolventParams, StateFunction, StateSet, StochasticKernel};
use proptest::prelude::*;

/// Rows with random supports and weights in `[0.05, 1.05)`; an empty row falls
/// back to a self-loop.
fn kernel(max_n: usize) -> impl Strategy<Value = StochasticKernel> {
    (1..=max_n)
        .prop_flat_map(|n| prop::collection::vec(prop::collection::vec(prop::option::weighted(0.35, 0.05..1.05f64), n), n))
        .prop_map(|raw| {
            let n = raw.len();
            let rows = raw
                .into_iter()
                .enumerate()
                .map(|(i, row)| {
                    let mut row: Vec<f64> = row.into_iter().map(|w| w.unwrap_or(0.0)).collect();
                    if row.iter().all(|&w| w == 0.0) {
                        row[i] = 1.0;
                    }
                    let total: f64 = row.iter().sum();
                    row.into_iter().map(|w| w / total).collect()
                })
                .collect::<Vec<Vec<f64>>>();
            assert_eq!(rows.len(), n);
            StochasticKernel::from_rows(rows).unwrap()
        })
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, n).prop_map(|mut w| {
        w[0] += 1e-3;
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect()
    })
}

fn with_measure(max_n: usize) -> impl Strategy<Value = (StochasticKernel, ProbMeasure)> {
    kernel(max_n).prop_flat_map(|p| {
        let n = p.n();
        (Just(p), weights(n).prop_map(|w| ProbMeasure::new(w).unwrap()))
    })
}

fn with_set(max_n: usize) -> impl Strategy<Value = (StochasticKernel, StateSet)> {
    kernel(max_n).prop_flat_map(|p| {
        let n = p.n();
        (Just(p), prop::collection::vec(any::<bool>(), n).prop_map(move |m| StateSet::from_predicate(n, |i| m[i])))
    })
}

/// An invariant measure mixing all ergodic measures with the given positive weights.
fn invariant_mixture(p: &StochasticKernel, mix: &[f64]) -> ProbMeasure {
    let e = ergodic_measures(p).unwrap();
    let total: f64 = (0..e.len()).map(|i| mix[i % mix.len()]).sum();
    let mut w = vec![0.0; p.n()];
    for (i, m) in e.iter().enumerate() {
        for (acc, v) in w.iter_mut().zip(m.weights()) {
            *acc += mix[i % mix.len()] / total * v;
        }
    }
    ProbMeasure::new(w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn left_action_stays_a_probability((p, mu) in with_measure(20)) {
        let out = p.apply_left(&mu).unwrap();
        let total: f64 = out.weights().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(out.weights().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn powers_add(p in kernel(20), m in 0u64..=64, k in 0u64..=64) {
        let lhs = p.power(m + k).unwrap();
        let rhs = p.power(m).unwrap().matrix() * p.power(k).unwrap().matrix();
        prop_assert!((lhs.matrix() - rhs).abs().max() <= 1e-9);
    }

    #[test]
    fn cesaro_telescoping(p in kernel(12), x_seed in any::<usize>(), n in 1usize..200, f in prop::collection::vec(-5.0..5.0f64, 12)) {
        let x = x_seed % p.n();
        let f = StateFunction::new(f[..p.n()].to_vec()).unwrap();
        let nu = p.cesaro_average(x, n).unwrap();
        let pf = p.apply_right(&f).unwrap();
        let gap = (nu.integrate(&pf).unwrap() - nu.integrate(&f).unwrap()).abs();
        prop_assert!(gap <= 2.0 * f.sup_norm() / n as f64 + 1e-12);
    }

    #[test]
    fn resolvent_fixed_points((p, mu) in with_measure(12), a_idx in 0usize..3, mix in prop::collection::vec(0.1..1.0f64, 1..4)) {
        let a = [0.1, 0.5, 0.9][a_idx];
        let r = p.resolvent(&ResolventParams::closed_form(a).unwrap()).unwrap().kernel;
        // P-invariant => R-invariant
        let inv = invariant_mixture(&p, &mix);
        prop_assert!(invariance_residual(&r, &inv).unwrap() <= 1e-9);
        // R-invariant => P-invariant
        for class in class_decomposition(&r).closed_classes() {
            let pi = stationary_on_class(&r, class).unwrap();
            prop_assert!(invariance_residual(&p, &pi).unwrap() <= 1e-9);
        }
        // an arbitrary measure is invariant for both or for neither
        let for_p = invariance_residual(&p, &mu).unwrap() <= 1e-9;
        let for_r = invariance_residual(&r, &mu).unwrap() <= 1e-9;
        prop_assert_eq!(for_p, for_r);
    }

    #[test]
    fn resolvent_positivity_is_reachability(p in kernel(12), a_idx in 0usize..3) {
        let a = [0.1, 0.5, 0.9][a_idx];
        let r = p.resolvent(&ResolventParams::closed_form(a).unwrap()).unwrap().kernel;
        let reach = oracle::reachability(&p);
        for x in 0..p.n() {
            prop_assert_eq!(&StateSet::from_predicate(p.n(), |y| r.get(x, y) > 0.0), &reach[x]);
        }
    }

    #[test]
    fn resolvent_keeps_closed_classes(p in kernel(12), a_idx in 0usize..3) {
        let a = [0.1, 0.5, 0.9][a_idx];
        let r = p.resolvent(&ResolventParams::closed_form(a).unwrap()).unwrap().kernel;
        let before: Vec<StateSet> = class_decomposition(&p).closed_classes().cloned().collect();
        let after: Vec<StateSet> = class_decomposition(&r).closed_classes().cloned().collect();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn largest_absorbing_subset_dominates((p, a) in with_set(12)) {
        let las = largest_absorbing_subset(&p, &a);
        prop_assert!(las.is_subset(&a));
        prop_assert!(is_absorbing(&p, &las));
        for s in oracle::absorbing_subsets(&p) {
            if s.is_subset(&a) {
                prop_assert!(s.is_subset(&las));
            }
        }
    }

    #[test]
    fn witness_pair_is_split((p, a) in with_set(12)) {
        let (b1, b2) = absorbing_witness_pair(&p, &a);
        prop_assert!(b1.is_disjoint(&b2));
        prop_assert!(b1.is_subset(&a));
        prop_assert!(b2.is_subset(&a.complement()));
    }

    #[test]
    fn certificate_matches_enumeration(p in kernel(12)) {
        let cert = indecomposability_certificate(&p).unwrap();
        let decomposable = oracle::disjoint_absorbing_pair(&p).is_some();
        prop_assert_eq!(decomposable, cert.closed_classes.len() >= 2);
        for c in &cert.closed_classes {
            prop_assert!(is_absorbing(&p, c));
        }
    }

    #[test]
    fn invariant_measures_avoid_transients(p in kernel(12), mix in prop::collection::vec(0.1..1.0f64, 1..4)) {
        let mu = invariant_mixture(&p, &mix);
        prop_assert!(mu.mass(class_decomposition(&p).transient()) <= 1e-9);
        let d = ergodic_decomposition(&p, &mu).unwrap();
        prop_assert!(d.residual_error <= 1e-9);
    }

    #[test]
    fn singular_pair_separates(p in kernel(12), mix in prop::collection::vec(0.1..1.0f64, 2..4)) {
        let e = ergodic_measures(&p).unwrap();
        prop_assume!(e.len() >= 2);
        let mu = invariant_mixture(&p, &mix);
        let nu = e[1].clone();
        prop_assume!(mu.l1_distance(&nu).unwrap() > 1e-6);
        let cert = singular_pair(&p, &mu, &nu).unwrap();
        prop_assert!(cert.mu1.mass(&cert.separator) >= 1.0 - 1e-10);
        prop_assert!(cert.mu2.mass(&cert.separator) <= 1e-10);
        cert.verify(&p).unwrap();
    }

    #[test]
    fn certificates_survive_json(p in kernel(12)) {
        let s = indecomposability_certificate(&p).unwrap();
        let json = ergokit::io::structure_certificate_to_json(&s).unwrap();
        prop_assert_eq!(load_structure_certificate(&json, &p).unwrap(), s);
        let u = uniqueness_certificate(&p).unwrap();
        let json = ergokit::io::uniqueness_certificate_to_json(&u).unwrap();
        let back = load_uniqueness_certificate(&json, &p).unwrap();
        prop_assert_eq!(ergokit::io::uniqueness_certificate_to_json(&back).unwrap(), json);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trajectories_are_reproducible(p in kernel(10), seed in any::<u64>()) {
        let a = sample_path(&p, 0, 500, seed).unwrap();
        let b = sample_path(&p, 0, 500, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let x = one.install(|| sample_batch(&p, 0, 200, seed, 6).unwrap());
        let y = many.install(|| sample_batch(&p, 0, 200, seed, 6).unwrap());
        prop_assert_eq!(x, y);
    }

    #[test]
    fn cesaro_curve_is_deterministic(p in kernel(8)) {
        prop_assume!(uniqueness_certificate(&p).unwrap().verdict() == Verdict::Unique);
        let a = cesaro_tv_curve(&p, 0, 50).unwrap();
        let b = cesaro_tv_curve(&p, 0, 50).unwrap();
        prop_assert!(a.iter().zip(&b).all(|(u, v)| u.0 == v.0 && u.1.to_bits() == v.1.to_bits()));
    }

    #[test]
    fn doeblin_bound_holds(targets in prop::collection::vec(0usize..12, 2..=12), eps_idx in 0usize..3, nu in weights(12)) {
        let n = targets.len();
        let eps = [0.1, 0.2, 0.5][eps_idx];
        let nu = ProbMeasure::from_computed({
            let w = &nu[..n];
            let t: f64 = w.iter().sum();
            w.iter().map(|v| v / t).collect()
        }).unwrap();
        let rows = (0..n)
            .map(|i| {
                let mut row: Vec<f64> = nu.weights().iter().map(|v| eps * v).collect();
                row[targets[i] % n] += 1.0 - eps;
                row
            })
            .collect();
        let p = StochasticKernel::from_rows(rows).unwrap();
        let report = doeblin_rate_check(&p, eps, &nu, 200).unwrap();
        prop_assert!(report.passed);
    }
}
