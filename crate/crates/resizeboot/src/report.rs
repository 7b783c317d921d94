//! Serializable records written by the commands. Every top-level record
//! carries `schema_version`.

use std::collections::BTreeMap;

use resizeboot_core::evalcov::ColumnReport;
use resizeboot_core::{CoverageReport, DesignSpec, Family, FitStatus, IntervalSet, Method};
use serde::Serialize;

use crate::io::SCHEMA_VERSION;
use crate::separation::SeparationCheck;

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub intercept: bool,
    pub names: Vec<String>,
    pub status: FitStatus,
    pub iterations: usize,
    pub grad_norm: f64,
    pub objective: f64,
    pub beta_hat: Vec<f64>,
    /// Classical (inverse-Hessian) standard errors; absent unless converged.
    pub std_errors: Option<Vec<f64>>,
    /// Binary families only, when the fit did not converge or on request.
    pub separation: Option<SeparationCheck>,
}

#[derive(Debug, Serialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub grad_norm: f64,
    pub objective: f64,
}

#[derive(Debug, Serialize)]
pub struct CurveDiagnostics {
    pub grid: usize,
    pub reps: usize,
    pub n_failed: usize,
    pub dropped_knots: usize,
}

#[derive(Debug, Serialize)]
pub struct BaselineSummary {
    pub method: Method,
    pub alpha_hat: f64,
    pub sigma_hat: Vec<f64>,
    pub n_failed: usize,
}

#[derive(Debug, Serialize)]
pub struct Truth {
    pub beta: Vec<f64>,
    pub gamma: f64,
}

#[derive(Debug, Serialize)]
pub struct InferSummary {
    pub schema_version: u32,
    pub seed: u64,
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub intercept: bool,
    pub names: Vec<String>,
    #[serde(rename = "B")]
    pub b: usize,
    pub n_failed: usize,
    /// `"estimated"` or `"known"`.
    pub gamma_source: &'static str,
    pub gamma_hat: f64,
    pub eta_tilde: f64,
    pub scale_s: f64,
    pub alpha_hat: f64,
    pub beta_hat: Vec<f64>,
    pub beta_star: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    pub fit: FitDiagnostics,
    pub curve: Option<CurveDiagnostics>,
    pub baselines: Vec<BaselineSummary>,
    /// Present when the data were drawn from a named design.
    pub truth: Option<Truth>,
}

#[derive(Debug, Serialize)]
pub struct IntervalRecord<'a> {
    pub method: Method,
    pub level: f64,
    pub names: &'a [String],
    pub estimate: &'a [f64],
    pub lo: &'a [f64],
    pub hi: &'a [f64],
}

#[derive(Debug, Serialize)]
pub struct IntervalsFile<'a> {
    pub schema_version: u32,
    pub intervals: Vec<IntervalRecord<'a>>,
}

impl<'a> IntervalsFile<'a> {
    pub fn new(sets: &'a [IntervalSet], names: &'a [String], estimate: &'a [f64]) -> Self {
        IntervalsFile {
            schema_version: SCHEMA_VERSION,
            intervals: sets
                .iter()
                .map(|s| IntervalRecord { method: s.method, level: s.level, names, estimate, lo: &s.lo, hi: &s.hi })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TruthFile<'a> {
    pub schema_version: u32,
    pub seed: u64,
    pub rep: u64,
    pub design: &'a DesignSpec,
    pub names: &'a [String],
    pub beta: &'a [f64],
    pub gamma: f64,
}

#[derive(Debug, Serialize)]
pub struct CoverageColumn<'a> {
    pub method: Method,
    pub gamma_source: Option<&'static str>,
    pub level: f64,
    pub qbar: f64,
    pub qbar_se: f64,
    pub null_q: Option<f64>,
    pub nonnull_q: Option<f64>,
    pub q_j: &'a [f64],
    pub q_j_se: &'a [f64],
}

impl<'a> From<&'a ColumnReport> for CoverageColumn<'a> {
    fn from(c: &'a ColumnReport) -> Self {
        CoverageColumn {
            method: c.column.method,
            gamma_source: c.column.gamma.map(|g| g.name()),
            level: c.column.level,
            qbar: c.qbar,
            qbar_se: c.qbar_se,
            null_q: c.null_q,
            nonnull_q: c.nonnull_q,
            q_j: &c.q_j,
            q_j_se: &c.q_j_se,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CoverageFile<'a> {
    pub schema_version: u32,
    pub seed: u64,
    pub design: &'a DesignSpec,
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(rename = "B_t")]
    pub b_t: usize,
    pub reps_ok: usize,
    pub reps_attempted: usize,
    pub failures: BTreeMap<&'a str, usize>,
    pub beta: &'a [f64],
    pub columns: Vec<CoverageColumn<'a>>,
}

impl<'a> CoverageFile<'a> {
    pub fn new(report: &'a CoverageReport, design: &'a DesignSpec, seed: u64, b: usize, b_t: usize) -> Self {
        CoverageFile {
            schema_version: SCHEMA_VERSION,
            seed,
            design,
            b,
            b_t,
            reps_ok: report.reps_ok,
            reps_attempted: report.reps_attempted,
            failures: report.failures.iter().map(|(k, n)| (k.as_str(), *n)).collect(),
            beta: &report.beta,
            columns: report.columns.iter().map(CoverageColumn::from).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub kind: &'static str,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub schema_version: u32,
    pub error: ErrorBody,
}
