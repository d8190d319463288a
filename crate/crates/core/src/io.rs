//! JSON and CSV formats: kernels, certificates, example specs and curves.
//!
//! Floats are written in shortest round-trip form, so emitted artifacts parse
//! back to the same bits and repeated runs are byte-identical.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::examples::{
    build_block_kernel, build_fat_cantor_kernel, build_two_point_map_kernel, Bridge, FatCantorSpec, TwoPointMapSpec,
    DEFAULT_GRID,
};
use crate::invariant::{uniqueness_certificate, SingularityCertificate, UniquenessCertificate};
use crate::kernel::{ProbMeasure, StateFunction, StateSet, StochasticKernel};
use crate::simulate::DoeblinPoint;
use crate::structure::{Decomposability, IndecomposabilityCertificate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFormat {
    Dense,
    Triplets,
}

/// `{"n", "format": "dense"|"triplets", "rows" | "entries": [[i, j, p], ...], "labels"?}`.
/// Triplets not listed are exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDoc {
    pub n: usize,
    pub format: KernelFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<(usize, usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl KernelDoc {
    pub fn dense(p: &StochasticKernel) -> Self {
        Self {
            n: p.n(),
            format: KernelFormat::Dense,
            rows: Some(p.rows()),
            entries: None,
            labels: p.labels().map(<[String]>::to_vec),
        }
    }

    pub fn into_kernel(self) -> Result<StochasticKernel> {
        let kernel = match self.format {
            KernelFormat::Dense => {
                let rows = self.rows.ok_or_else(|| Error::Parse("dense format requires \"rows\"".into()))?;
                if self.entries.is_some() {
                    return Err(Error::Parse("dense format does not take \"entries\"".into()));
                }
                if rows.len() != self.n {
                    return Err(Error::DimensionMismatch { expected: self.n, found: rows.len() });
                }
                StochasticKernel::from_rows(rows)?
            }
            KernelFormat::Triplets => {
                let entries = self.entries.ok_or_else(|| Error::Parse("triplets format requires \"entries\"".into()))?;
                if self.rows.is_some() {
                    return Err(Error::Parse("triplets format does not take \"rows\"".into()));
                }
                StochasticKernel::from_triplets(self.n, &entries)?
            }
        };
        match self.labels {
            Some(labels) => kernel.with_labels(labels),
            None => Ok(kernel),
        }
    }
}

pub fn parse_kernel(json: &str) -> Result<StochasticKernel> {
    serde_json::from_str::<KernelDoc>(json)?.into_kernel()
}

pub fn kernel_to_json(p: &StochasticKernel) -> Result<String> {
    Ok(serde_json::to_string(&KernelDoc::dense(p))?)
}

/// A bare JSON array of weights, validated as a probability measure.
pub fn parse_measure(json: &str) -> Result<ProbMeasure> {
    ProbMeasure::new(serde_json::from_str(json)?)
}

/// A bare JSON array of values.
pub fn parse_function(json: &str) -> Result<StateFunction> {
    StateFunction::new(serde_json::from_str(json)?)
}

fn to_set(n: usize, indices: &[usize]) -> Result<StateSet> {
    StateSet::from_indices(n, indices.iter().copied())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetPair {
    #[serde(rename = "A")]
    pub a: Vec<usize>,
    #[serde(rename = "B")]
    pub b: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureDoc {
    pub verdict: Decomposability,
    pub witness: Option<SetPair>,
    pub closed_classes: Vec<Vec<usize>>,
    pub transient: Vec<usize>,
}

impl From<&IndecomposabilityCertificate> for StructureDoc {
    fn from(c: &IndecomposabilityCertificate) -> Self {
        Self {
            verdict: c.verdict,
            witness: c.witness.as_ref().map(|(a, b)| SetPair { a: a.to_vec(), b: b.to_vec() }),
            closed_classes: c.closed_classes.iter().map(StateSet::to_vec).collect(),
            transient: c.transient.to_vec(),
        }
    }
}

impl StructureDoc {
    pub fn into_certificate(self, n: usize) -> Result<IndecomposabilityCertificate> {
        let witness = match self.witness {
            Some(SetPair { a, b }) => Some((to_set(n, &a)?, to_set(n, &b)?)),
            None => None,
        };
        Ok(IndecomposabilityCertificate {
            verdict: self.verdict,
            witness,
            closed_classes: self.closed_classes.iter().map(|c| to_set(n, c)).collect::<Result<_>>()?,
            transient: to_set(n, &self.transient)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictDoc {
    Unique,
    Multiple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultipleWitness {
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
    pub separator: Vec<usize>,
    pub density: Vec<f64>,
    #[serde(rename = "B1")]
    pub b1: Vec<usize>,
    #[serde(rename = "B2")]
    pub b2: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessDoc {
    pub verdict: VerdictDoc,
    pub measure: Option<Vec<f64>>,
    pub ergodic: Option<bool>,
    pub witness: Option<MultipleWitness>,
}

impl From<&UniquenessCertificate> for UniquenessDoc {
    fn from(c: &UniquenessCertificate) -> Self {
        match c {
            UniquenessCertificate::Unique { measure, ergodic } => Self {
                verdict: VerdictDoc::Unique,
                measure: Some(measure.weights().to_vec()),
                ergodic: Some(*ergodic),
                witness: None,
            },
            UniquenessCertificate::Multiple { singularity, b1, b2 } => Self {
                verdict: VerdictDoc::Multiple,
                measure: None,
                ergodic: None,
                witness: Some(MultipleWitness {
                    mu1: singularity.mu1.weights().to_vec(),
                    mu2: singularity.mu2.weights().to_vec(),
                    separator: singularity.separator.to_vec(),
                    density: singularity.density.values().to_vec(),
                    b1: b1.to_vec(),
                    b2: b2.to_vec(),
                }),
            },
        }
    }
}

impl UniquenessDoc {
    pub fn into_certificate(self, n: usize) -> Result<UniquenessCertificate> {
        let bad = |msg: &str| Error::Parse(msg.to_string());
        match self.verdict {
            VerdictDoc::Unique => {
                if self.witness.is_some() {
                    return Err(bad("a unique verdict carries no witness"));
                }
                let measure = ProbMeasure::new(self.measure.ok_or_else(|| bad("unique verdict without a measure"))?)?;
                let ergodic = self.ergodic.ok_or_else(|| bad("unique verdict without \"ergodic\""))?;
                Ok(UniquenessCertificate::Unique { measure, ergodic })
            }
            VerdictDoc::Multiple => {
                if self.measure.is_some() || self.ergodic.is_some() {
                    return Err(bad("a multiple verdict carries no measure"));
                }
                let w = self.witness.ok_or_else(|| bad("multiple verdict without a witness"))?;
                Ok(UniquenessCertificate::Multiple {
                    singularity: SingularityCertificate {
                        mu1: ProbMeasure::new(w.mu1)?,
                        mu2: ProbMeasure::new(w.mu2)?,
                        separator: to_set(n, &w.separator)?,
                        density: StateFunction::new(w.density)?,
                    },
                    b1: to_set(n, &w.b1)?,
                    b2: to_set(n, &w.b2)?,
                })
            }
        }
    }
}

pub fn structure_certificate_to_json(c: &IndecomposabilityCertificate) -> Result<String> {
    Ok(serde_json::to_string(&StructureDoc::from(c))?)
}

/// Parses a structure certificate and re-verifies it against `p`.
pub fn load_structure_certificate(json: &str, p: &StochasticKernel) -> Result<IndecomposabilityCertificate> {
    let cert = serde_json::from_str::<StructureDoc>(json)?.into_certificate(p.n())?;
    cert.verify(p)?;
    Ok(cert)
}

pub fn uniqueness_certificate_to_json(c: &UniquenessCertificate) -> Result<String> {
    Ok(serde_json::to_string(&UniquenessDoc::from(c))?)
}

/// Parses a uniqueness certificate and re-verifies it against `p`.
pub fn load_uniqueness_certificate(json: &str, p: &StochasticKernel) -> Result<UniquenessCertificate> {
    let cert = serde_json::from_str::<UniquenessDoc>(json)?.into_certificate(p.n())?;
    cert.verify(p)?;
    Ok(cert)
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

/// `{"example": "fat_cantor" | "two_point_map" | "blocks", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "example", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExampleSpec {
    /// `c_cells` defaults to the Smith–Volterra–Cantor cells, atoms to the end cells.
    FatCantor {
        #[serde(default = "default_grid")]
        grid_n: usize,
        eps: f64,
        #[serde(default)]
        c_cells: Option<Vec<usize>>,
        #[serde(default)]
        atom0: Option<usize>,
        #[serde(default)]
        atom1: Option<usize>,
    },
    TwoPointMap { grid_n: usize, q_atoms: usize, alpha_cell: usize, beta_cell: usize, eps: f64 },
    Blocks {
        blocks: Vec<KernelDoc>,
        #[serde(default)]
        bridge: Option<Bridge>,
    },
}

/// A generated kernel with its closed-form reference measure (for blocks: the
/// unique invariant measure, or none when there are several).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleOutput {
    pub kernel: KernelDoc,
    pub reference: Option<Vec<f64>>,
}

pub fn build_example(spec: &ExampleSpec) -> Result<(StochasticKernel, Option<ProbMeasure>)> {
    match spec {
        ExampleSpec::FatCantor { grid_n, eps, c_cells, atom0, atom1 } => {
            let spec = match c_cells {
                None if atom0.is_none() && atom1.is_none() => FatCantorSpec::smith_volterra(*grid_n, *eps)?,
                _ => {
                    let last = grid_n.checked_sub(1).ok_or_else(|| Error::InvalidSpec("grid_n must be positive".into()))?;
                    let (a0, a1) = (atom0.unwrap_or(0), atom1.unwrap_or(last));
                    let c = match c_cells {
                        Some(cells) => to_set(*grid_n, cells)?,
                        None => FatCantorSpec::smith_volterra(*grid_n, *eps)?.c_cells().clone(),
                    };
                    FatCantorSpec::new(*grid_n, c, *eps, a0, a1)?
                }
            };
            let (p, pi) = build_fat_cantor_kernel(&spec)?;
            Ok((p, Some(pi)))
        }
        ExampleSpec::TwoPointMap { grid_n, q_atoms, alpha_cell, beta_cell, eps } => {
            let spec = TwoPointMapSpec::new(*grid_n, *q_atoms, *alpha_cell, *beta_cell, *eps)?;
            let (p, pi) = build_two_point_map_kernel(&spec)?;
            Ok((p, Some(pi)))
        }
        ExampleSpec::Blocks { blocks, bridge } => {
            let blocks: Vec<StochasticKernel> = blocks.iter().cloned().map(KernelDoc::into_kernel).collect::<Result<_>>()?;
            let p = build_block_kernel(&blocks, *bridge)?;
            let reference = uniqueness_certificate(&p)?.unique_measure().cloned();
            Ok((p, reference))
        }
    }
}

pub fn parse_example_spec(json: &str) -> Result<ExampleSpec> {
    Ok(serde_json::from_str(json)?)
}

pub fn example_to_json(p: &StochasticKernel, reference: Option<&ProbMeasure>) -> Result<String> {
    let out = ExampleOutput { kernel: KernelDoc::dense(p), reference: reference.map(|m| m.weights().to_vec()) };
    Ok(serde_json::to_string(&out)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveFormat {
    Csv,
    JsonLines,
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}

fn io_error(e: std::io::Error) -> Error {
    Error::Parse(format!("io: {e}"))
}

#[derive(Serialize)]
struct CesaroRecord {
    n: usize,
    tv: f64,
}

/// Header `n,tv` in CSV; `{"n", "tv"}` per line otherwise.
pub fn write_cesaro_curve<W: Write>(out: W, curve: &[(usize, f64)], format: CurveFormat) -> Result<()> {
    write_records(out, curve.iter().map(|&(n, tv)| CesaroRecord { n, tv }), format)
}

/// Header `n,tv,bound` in CSV; `{"n", "tv", "bound"}` per line otherwise.
pub fn write_doeblin_curve<W: Write>(out: W, points: &[DoeblinPoint], format: CurveFormat) -> Result<()> {
    write_records(out, points.iter(), format)
}

fn write_records<W: Write, T: Serialize>(mut out: W, records: impl Iterator<Item = T>, format: CurveFormat) -> Result<()> {
    match format {
        CurveFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in records {
                w.serialize(r).map_err(csv_error)?;
            }
            w.flush().map_err(io_error)?;
        }
        CurveFormat::JsonLines => {
            for r in records {
                serde_json::to_writer(&mut out, &r)?;
                out.write_all(b"\n").map_err(io_error)?;
            }
            out.flush().map_err(io_error)?;
        }
    }
    Ok(())
}
