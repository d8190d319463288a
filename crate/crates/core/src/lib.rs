//! Uniqueness of invariant measures for finite Markov kernels, made executable.
//!
//! The crate decides whether a kernel is *indecomposable* (no two disjoint
//! nonempty absorbing sets), enumerates its ergodic invariant measures, and emits
//! certificates that can be re-checked independently:
//!
//! * [`structure`]: support digraph, closed classes, largest absorbing subsets and
//!   the indecomposability certificate.
//! * [`invariant`]: stationary measures per closed class, ergodic decompositions,
//!   the density construction separating two ergodic measures, and the
//!   uniqueness certificate.
//! * [`simulate`]: seeded trajectories, occupation measures, Cesàro and Doeblin
//!   total-variation curves.
//! * [`examples`]: finite surrogates of two classical counterexamples and block
//!   fixtures.
//! * [`fuzz`]: a randomized property suite cross-checking everything above
//!   against the brute-force routines in [`oracle`].
//!
//! ```
//! use ergokit::{StochasticKernel, invariant::{uniqueness_certificate, Verdict}};
//!
//! let p = StochasticKernel::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
//! let cert = uniqueness_certificate(&p).unwrap();
//! assert_eq!(cert.verdict(), Verdict::Unique);
//! ```

pub mod error;
pub mod examples;
pub mod fuzz;
pub mod invariant;
pub mod io;
pub mod kernel;
pub mod oracle;
pub mod random;
pub mod simulate;
pub mod structure;

pub use error::{Error, Result};
pub use kernel::{
    validate_kernel, CesaroIter, ProbMeasure, Resolvent, ResolventParams, StateFunction, StateSet,
    StochasticKernel, Truncation,
};

/// The tolerance ladder. Each stage absorbs the float error of the one before it.
pub mod tol {
    /// Row sums and measure totals of user input.
    pub const CONSTRUCTION: f64 = 1e-12;
    /// Row sums and measure totals after arithmetic.
    pub const ARITHMETIC: f64 = 1e-10;
    /// Negative entries this small are treated as round-off and clamped.
    pub const ROUND_OFF: f64 = 1e-15;
    /// Mass a set may leak and still count as absorbing.
    pub const ABSORBING: f64 = 1e-12;
    /// `||mu P - mu||_1` for invariance.
    pub const INVARIANCE: f64 = 1e-9;
    /// Harmonicity and level checks of the separating density.
    pub const DENSITY: f64 = 1e-8;
    /// Masses of separators and absorbing witnesses.
    pub const SEPARATOR: f64 = 1e-10;
    /// A state is in the support of a measure when it carries more than this.
    pub const SUPPORT: f64 = 1e-12;
    /// Singular values at or below this count toward the null space.
    pub const RANK: f64 = 1e-8;
    /// Decomposition components lighter than this are dropped.
    pub const COMPONENT: f64 = 1e-12;

    /// Overridable copy of the thresholds used by the invariant-measure pipeline.
    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct Tolerances {
        pub invariance: f64,
        pub density: f64,
        pub separator: f64,
        pub support: f64,
        pub rank: f64,
    }

    impl Default for Tolerances {
        fn default() -> Self {
            Self { invariance: INVARIANCE, density: DENSITY, separator: SEPARATOR, support: SUPPORT, rank: RANK }
        }
    }
}
