//! Machine-readable run reports.
//!
//! Reports contain no wall-clock data unless timing is requested, so the
//! same command and seed produce byte-identical output.

use momentflow_core::bracket::{AlgebraInvariants, ComplexInvariants};
use momentflow_core::flow::FlowConfig;
use momentflow_core::orbit::{ClosedOrbitReport, FlowSummary, NilsolitonData, RealComplexReport, RealFormsReport};
use momentflow_core::{CriticalCertificate, GroupTag};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::document::BracketDocument;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ConfigEcho,
    pub inputs: Vec<InputRecord>,
    pub results: Vec<RunResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub group: String,
    pub complexify: bool,
    pub kempf_ness: bool,
    pub perturb_seed: Option<u64>,
    pub seed: u64,
    pub allow_non_lie: bool,
    pub trajectory: bool,
    pub flow: FlowConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub source: String,
    pub name: Option<String>,
    /// SHA-256 of the input bytes.
    pub sha256: String,
}

impl InputRecord {
    pub fn new(source: impl Into<String>, name: Option<String>, bytes: &[u8]) -> Self {
        Self {
            source: source.into(),
            name,
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

/// Outcome for one input (two for a real-forms comparison).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub input: String,
    pub status: ResultStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultStatus {
    Ok,
    /// Zero bracket in a batch: nothing to flow.
    Skipped,
    NotConverged,
    InputError,
    InternalError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Flow(Box<FlowOutcome>),
    KempfNess(Box<KempfNessOutcome>),
    Check(Box<CheckOutcome>),
    RealComplex(Box<RealComplexReport>),
    RealForms(Box<RealFormsReport>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowOutcome {
    pub group: GroupTag,
    pub verdict: String,
    pub certificate: Option<CriticalCertificate>,
    /// Complex model only: `||μ*||²`-convention critical value `4F`.
    pub mu_star_value: Option<f64>,
    pub start_invariants: Option<AlgebraInvariants>,
    pub limit_invariants: Option<AlgebraInvariants>,
    /// Limit invariants equal the start's: consistent with the limit lying
    /// in the starting orbit, not a proof of it.
    pub invariants_consistent: Option<bool>,
    pub nilsoliton: Option<NilsolitonRecord>,
    pub summary: FlowSummary,
    pub limit: BracketDocument,
    pub trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KempfNessOutcome {
    pub report: ClosedOrbitReport,
    pub limit: BracketDocument,
    pub trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub f: Vec<f64>,
    pub gradnorm: Vec<f64>,
    pub norm_sq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub group: GroupTag,
    pub jacobi_defect: f64,
    pub lie: bool,
    /// Omitted for non-Lie tensors and complex input.
    pub invariants: Option<AlgebraInvariants>,
    pub complex_invariants: Option<ComplexInvariants>,
    pub moment: Vec<Vec<f64>>,
    pub certificate: CriticalCertificate,
    pub critical: bool,
    /// `|m̃_sl(v)|/|v|²` for real input.
    pub sl_moment_ratio: Option<f64>,
    /// The SL moment vanishes: `v` is a minimal vector of its `SL_n` orbit.
    pub sl_minimal: Option<bool>,
    pub stabilizer_dim: usize,
    pub orbit_dim: usize,
    pub nilsoliton: Option<NilsolitonRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NilsolitonRecord {
    pub soliton_constant: f64,
    pub derivation: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub eigenvalue_type: Option<Vec<u64>>,
    pub derivation_defect: f64,
}

impl From<NilsolitonData> for NilsolitonRecord {
    fn from(d: NilsolitonData) -> Self {
        Self {
            soliton_constant: d.soliton_constant,
            derivation: rows(&d.derivation),
            eigenvalues: d.eigenvalues,
            eigenvalue_type: d.eigenvalue_type,
            derivation_defect: d.derivation_defect,
        }
    }
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Worst status over all results; `Ok` when there are none.
    pub fn worst_status(&self) -> ResultStatus {
        self.results
            .iter()
            .map(|r| r.status)
            .filter(|s| *s != ResultStatus::Skipped)
            .max()
            .unwrap_or(ResultStatus::Ok)
    }

    /// One flat row per result.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in &self.results {
            w.write_record(csv_row(r)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is UTF-8")
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "input", "status", "kind", "verdict", "f_value", "lambda", "residual", "spectrum", "error",
];

fn num(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite float")
    } else {
        String::new()
    }
}

fn spectrum(s: &[f64]) -> String {
    s.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ")
}

fn csv_row(r: &RunResult) -> Vec<String> {
    let status = serde_json::to_value(r.status)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    let (kind, verdict, f, lambda, residual, spectra) = match &r.outcome {
        None => (
            "",
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ),
        Some(Outcome::Flow(o)) => {
            let c = o.certificate.as_ref();
            (
                "flow",
                o.verdict.clone(),
                c.map_or(String::new(), |c| num(c.f_value)),
                c.map_or(String::new(), |c| num(c.lambda)),
                c.map_or(String::new(), |c| num(c.residual)),
                c.map_or(String::new(), |c| spectrum(&c.spectrum)),
            )
        }
        Some(Outcome::KempfNess(o)) => (
            "kempf_ness",
            format!("{:?}", o.report.verdict),
            String::new(),
            String::new(),
            num(o.report.moment_ratio_end),
            String::new(),
        ),
        Some(Outcome::Check(o)) => (
            "check",
            if o.critical { "Critical" } else { "NotCritical" }.to_string(),
            num(o.certificate.f_value),
            num(o.certificate.lambda),
            num(o.certificate.residual),
            spectrum(&o.certificate.spectrum),
        ),
        Some(Outcome::RealComplex(o)) => (
            "real_complex",
            format!("{:?}", o.real_verdict),
            num(o.real_f_limit),
            String::new(),
            String::new(),
            String::new(),
        ),
        Some(Outcome::RealForms(o)) => (
            "real_forms",
            format!("{}/{}", o.verdicts.0, o.verdicts.1),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ),
    };
    vec![
        r.input.clone(),
        status,
        kind.to_string(),
        verdict,
        f,
        lambda,
        residual,
        spectra,
        r.error.clone().unwrap_or_default(),
    ]
}
