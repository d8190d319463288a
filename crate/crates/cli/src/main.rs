//! `ergokit`: analyze finite Markov kernels from the command line.
//!
//! Exit codes: 0 success, 1 malformed input, 2 certificate or bound violated,
//! 3 fuzz counterexample found. Errors are reported on stderr as one JSON object.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ergokit::tol::Tolerances;

#[derive(Debug, Parser)]
#[command(name = "ergokit", version, about = "Invariant measures and uniqueness certificates for finite Markov kernels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Seed for stochastic commands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(flatten)]
    pub tolerances: ToleranceArgs,
}

#[derive(Debug, Args)]
pub struct ToleranceArgs {
    #[arg(long, global = true)]
    pub tol_invariance: Option<f64>,
    #[arg(long, global = true)]
    pub tol_density: Option<f64>,
    #[arg(long, global = true)]
    pub tol_separator: Option<f64>,
    #[arg(long, global = true)]
    pub tol_support: Option<f64>,
    #[arg(long, global = true)]
    pub tol_rank: Option<f64>,
}

impl ToleranceArgs {
    pub fn resolve(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            invariance: self.tol_invariance.unwrap_or(d.invariance),
            density: self.tol_density.unwrap_or(d.density),
            separator: self.tol_separator.unwrap_or(d.separator),
            support: self.tol_support.unwrap_or(d.support),
            rank: self.tol_rank.unwrap_or(d.rank),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed classes, transient states and the indecomposability certificate.
    Analyze {
        #[arg(long)]
        input: PathBuf,
    },
    /// Ergodic measures per closed class, and the decomposition of `--measure` if given.
    Invariants {
        #[arg(long)]
        input: PathBuf,
        /// JSON array of weights to decompose.
        #[arg(long)]
        measure: Option<PathBuf>,
    },
    /// Uniqueness certificate.
    Certify {
        #[arg(long)]
        input: PathBuf,
    },
    /// Resolvent kernel and its positivity pattern.
    Resolvent {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        a: f64,
        /// Truncate the series after this many terms instead of solving exactly.
        #[arg(long)]
        terms: Option<usize>,
    },
    /// Time average of an observable along one sampled path.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        x: usize,
        #[arg(long)]
        steps: usize,
        /// JSON array of values; defaults to the indicator of the start state.
        #[arg(long)]
        observable: Option<PathBuf>,
    },
    /// Exact total-variation curve of the averaged iterates.
    Cesaro {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        x: usize,
        #[arg(long)]
        n_max: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Geometric convergence check under a minorization `P >= eps * nu`.
    Doeblin {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        eps: f64,
        /// JSON array of weights; uniform when omitted.
        #[arg(long)]
        nu: Option<PathBuf>,
        #[arg(long)]
        n_max: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Build an example kernel from a JSON spec.
    Example {
        #[arg(long)]
        input: PathBuf,
    },
    /// Randomized property suite; parallelism is capped by ERGOKIT_THREADS.
    Fuzz {
        #[arg(long, default_value_t = 1000)]
        count: u64,
        #[arg(long, default_value_t = 12)]
        n_max: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let report = serde_json::json!({ "error": "usage", "message": e.to_string().trim_end() });
            eprintln!("{report}");
            return ExitCode::from(1);
        }
    };
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            let (code, kind) = commands::classify(&e);
            let report = serde_json::json!({ "error": kind, "message": format!("{e:#}") });
            eprintln!("{report}");
            ExitCode::from(code)
        }
    }
}
