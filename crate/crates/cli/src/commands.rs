use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use ergokit::invariant::{ergodic_decomposition_with, stationary_on_class_with, uniqueness_certificate_with};
use ergokit::io::{self, CurveFormat, KernelDoc, StructureDoc, UniquenessDoc};
use ergokit::oracle::reachability;
use ergokit::simulate::{cesaro_tv_curve, doeblin_rate_check, duflo_check};
use ergokit::structure::{class_decomposition, indecomposability_certificate};
use ergokit::{ProbMeasure, ResolventParams, StateFunction, StateSet, StochasticKernel, Truncation};
use serde::Serialize;
use serde_json::json;

use crate::{Cli, Command, Format};

/// A computed artifact failed its own consistency check.
#[derive(Debug)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for Violation {}

#[derive(Debug)]
pub struct Counterexample(pub usize);

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fuzz found {} violation(s)", self.0)
    }
}

impl std::error::Error for Counterexample {}

/// Exit code and error kind for the stderr report.
pub fn classify(e: &anyhow::Error) -> (u8, &'static str) {
    use ergokit::Error as E;
    if e.downcast_ref::<Counterexample>().is_some() {
        return (3, "counterexample");
    }
    if e.downcast_ref::<Violation>().is_some() {
        return (2, "violation");
    }
    match e.downcast_ref::<E>() {
        Some(
            E::CertificateViolation(_) | E::DensityLevelViolation { .. } | E::SingularSolve(_) | E::RankDeficiency(_),
        ) => (2, "violation"),
        _ => (1, "input"),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_kernel(path: &Path) -> Result<StochasticKernel> {
    Ok(io::parse_kernel(&read(path)?)?)
}

fn emit(cli: &Cli, bytes: &[u8]) -> Result<()> {
    match &cli.output {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(cli: &Cli, value: &T) -> Result<()> {
    let mut text = serde_json::to_string(value)?;
    text.push('\n');
    emit(cli, text.as_bytes())
}

fn curve_format(f: Format) -> CurveFormat {
    match f {
        Format::Csv => CurveFormat::Csv,
        Format::Jsonl => CurveFormat::JsonLines,
    }
}

fn sets(sets: impl IntoIterator<Item = StateSet>) -> Vec<Vec<usize>> {
    sets.into_iter().map(|s| s.to_vec()).collect()
}

pub fn run(cli: &Cli) -> Result<ExitCode> {
    let tol = cli.tolerances.resolve();
    match &cli.command {
        Command::Analyze { input } => {
            let p = load_kernel(input)?;
            let classes = class_decomposition(&p);
            let cert = indecomposability_certificate(&p)?;
            let doc = StructureDoc::from(&cert);
            io::load_structure_certificate(&serde_json::to_string(&doc)?, &p)
                .map_err(|e| Violation(format!("emitted certificate does not re-validate: {e}")))?;
            emit_json(
                cli,
                &json!({
                    "classes": sets(classes.classes().iter().cloned()),
                    "closed": classes.closed_flags(),
                    "transient": classes.transient().to_vec(),
                    "certificate": doc,
                }),
            )?;
        }
        Command::Invariants { input, measure } => {
            let p = load_kernel(input)?;
            let mut ergodic = Vec::new();
            for class in class_decomposition(&p).closed_classes() {
                let pi = stationary_on_class_with(&p, class, &tol)?;
                ergodic.push(json!({ "class": class.to_vec(), "measure": pi.weights() }));
            }
            let decomposition = match measure {
                Some(path) => {
                    let mu = io::parse_measure(&read(path)?)?;
                    let d = ergodic_decomposition_with(&p, &mu, &tol)?;
                    let components: Vec<_> = d
                        .components
                        .iter()
                        .map(|c| json!({ "weight": c.weight, "class": c.class.to_vec(), "measure": c.measure.weights() }))
                        .collect();
                    json!({ "components": components, "residual_error": d.residual_error, "ergodic": d.is_ergodic() })
                }
                None => serde_json::Value::Null,
            };
            emit_json(cli, &json!({ "ergodic_measures": ergodic, "decomposition": decomposition }))?;
        }
        Command::Certify { input } => {
            let p = load_kernel(input)?;
            let cert = uniqueness_certificate_with(&p, &tol)?;
            let text = serde_json::to_string(&UniquenessDoc::from(&cert))?;
            io::load_uniqueness_certificate(&text, &p)
                .map_err(|e| Violation(format!("emitted certificate does not re-validate: {e}")))?;
            emit(cli, format!("{text}\n").as_bytes())?;
        }
        Command::Resolvent { input, a, terms } => {
            let p = load_kernel(input)?;
            let truncation = match terms {
                Some(t) => Truncation::Series { terms: *t },
                None => Truncation::ClosedForm,
            };
            let r = p.resolvent(&ResolventParams::new(*a, truncation)?)?;
            let reach = reachability(&p);
            let n = p.n();
            let positive = (0..n).map(|x| (0..n).filter(|&y| r.kernel.get(x, y) > 0.0).count()).sum::<usize>();
            let matches = (0..n).all(|x| StateSet::from_predicate(n, |y| r.kernel.get(x, y) > 0.0) == reach[x]);
            if terms.is_none() && !matches {
                return Err(Violation("resolvent positivity differs from reachability".into()).into());
            }
            emit_json(
                cli,
                &json!({
                    "a": a,
                    "terms": terms,
                    "tail_bound": r.tail_bound,
                    "kernel": KernelDoc::dense(&r.kernel),
                    "positivity": { "positive_entries": positive, "matches_reachability": matches },
                }),
            )?;
        }
        Command::Simulate { input, x, steps, observable } => {
            let p = load_kernel(input)?;
            let f = match observable {
                Some(path) => io::parse_function(&read(path)?)?,
                None => StateFunction::indicator(&StateSet::from_indices(p.n(), [*x])?),
            };
            emit_json(cli, &duflo_check(&p, &f, *x, *steps, cli.seed)?)?;
        }
        Command::Cesaro { input, x, n_max, format } => {
            let p = load_kernel(input)?;
            let curve = cesaro_tv_curve(&p, *x, *n_max)?;
            let mut buf = Vec::new();
            io::write_cesaro_curve(&mut buf, &curve, curve_format(*format))?;
            emit(cli, &buf)?;
        }
        Command::Doeblin { input, eps, nu, n_max, format } => {
            let p = load_kernel(input)?;
            let nu = match nu {
                Some(path) => io::parse_measure(&read(path)?)?,
                None => ProbMeasure::uniform(p.n())?,
            };
            let report = doeblin_rate_check(&p, *eps, &nu, *n_max)?;
            let mut buf = Vec::new();
            io::write_doeblin_curve(&mut buf, &report.points, curve_format(*format))?;
            emit(cli, &buf)?;
            eprintln!("{}", json!({ "eps": eps, "n_max": n_max, "passed": report.passed }));
            if !report.passed {
                return Err(Violation("total variation exceeded the geometric bound".into()).into());
            }
        }
        Command::Example { input } => {
            let spec = io::parse_example_spec(&read(input)?)?;
            let (p, reference) = io::build_example(&spec)?;
            emit(cli, format!("{}\n", io::example_to_json(&p, reference.as_ref())?).as_bytes())?;
        }
        Command::Fuzz { count, n_max } => {
            let threads = match std::env::var("ERGOKIT_THREADS") {
                Ok(v) => Some(v.parse::<usize>().context("ERGOKIT_THREADS must be a positive integer")?),
                Err(_) => None,
            };
            let summary = ergokit::fuzz::run(*count, cli.seed, *n_max, threads)?;
            let digest = json!({
                "count": summary.count,
                "seed": summary.seed,
                "n_max": summary.n_max,
                "decomposable": summary.decomposable,
                "violations": summary.violations,
            });
            println!("{digest}");
            if summary.violations > 0 {
                if let Some(path) = &cli.output {
                    fs::write(path, serde_json::to_string(&summary.failures)?)
                        .with_context(|| format!("writing {}", path.display()))?;
                }
                return Err(Counterexample(summary.violations).into());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
