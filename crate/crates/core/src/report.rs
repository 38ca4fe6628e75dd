//! Machine-readable reports and the exit codes derived from them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::critical::CriticalPoleEstimate;
use crate::error::Error;
use crate::idta::{stable_region, Diagnostic};
use crate::model::TWO_PI;
use crate::pipeline::Analysis;
use crate::trajectory::{Form, Interpolation};

pub mod exit {
    pub const STABLE: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const SWEEP_OR_TABLE: i32 = 3;
    pub const NON_ADJACENT: i32 = 4;
    pub const CONSISTENCY: i32 = 5;
    pub const NOT_MONOTONE: i32 = 6;
    pub const BATCH_FAILED: i32 = 7;
    pub const UNSTABLE: i32 = 10;
    pub const MARGINAL: i32 = 11;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Stable => exit::STABLE,
            Verdict::Unstable => exit::UNSTABLE,
            Verdict::Marginal => exit::MARGINAL,
        }
    }
}

/// `1/|sigma|` in seconds, written as the string `"inf"` when unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeConstant {
    Seconds(f64),
    Unbounded(InfTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InfTag {
    #[serde(rename = "inf")]
    Inf,
}

impl From<Option<f64>> for TimeConstant {
    fn from(t: Option<f64>) -> Self {
        t.map_or(TimeConstant::Unbounded(InfTag::Inf), TimeConstant::Seconds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoleReport {
    pub sigma_o: f64,
    pub omega_o_rad_s: f64,
    pub omega_o_hz: f64,
    pub tau_s: TimeConstant,
    pub a: f64,
    pub b: f64,
    pub omega_star_rad_s: f64,
    pub omega_star_hz: f64,
    pub method: Interpolation,
    pub refinement_step_hz: Option<f64>,
}

impl From<&CriticalPoleEstimate> for CriticalPoleReport {
    fn from(e: &CriticalPoleEstimate) -> Self {
        CriticalPoleReport {
            sigma_o: e.sigma_o,
            omega_o_rad_s: e.omega_o,
            omega_o_hz: e.omega_o_hz(),
            tau_s: e.tau.into(),
            a: e.a,
            b: e.b,
            omega_star_rad_s: e.omega_star,
            omega_star_hz: e.omega_star / TWO_PI,
            method: e.method,
            refinement_step_hz: e.step.map(|s| s / TWO_PI),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub verdict: Verdict,
    pub winding: i64,
    pub form: Form,
    pub points: usize,
    pub crossings: usize,
    pub stable_region: Option<(i64, i64)>,
    pub last_coordinate: Option<i64>,
    /// `None` when the trajectory has no critical zero.
    pub critical_pole: Option<CriticalPoleReport>,
    pub diagnostics: Vec<Diagnostic>,
}

impl StabilityReport {
    pub fn from_analysis(a: &Analysis) -> Self {
        let v = &a.verdict;
        let verdict = if v.marginal {
            Verdict::Marginal
        } else if v.stable {
            Verdict::Stable
        } else {
            Verdict::Unstable
        };
        StabilityReport {
            verdict,
            winding: v.winding,
            form: a.trajectory.form,
            points: a.trajectory.len(),
            crossings: a.curve.points.len(),
            stable_region: a.curve.first_kind().map(stable_region),
            last_coordinate: v.last_coordinate,
            critical_pole: a.critical.as_ref().map(CriticalPoleReport::from),
            diagnostics: v.diagnostics.clone(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code()
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "verdict: {:?}\nwinding: {}\npoints: {}\ncrossings: {}\n",
            self.verdict, self.winding, self.points, self.crossings
        )
        .to_lowercase();
        match &self.critical_pole {
            Some(c) => {
                let tau = match c.tau_s {
                    TimeConstant::Seconds(t) => format!("{t:.4} s"),
                    TimeConstant::Unbounded(_) => "inf".into(),
                };
                s += &format!(
                    "critical pole: sigma_o = {:.6} 1/s, omega_o = {:.4} rad/s ({:.4} Hz), tau = {tau}\n\
                     slope: a = {:.6e}, b = {:.6e} at omega* = {:.4} rad/s ({:.4} Hz)\n",
                    c.sigma_o, c.omega_o_rad_s, c.omega_o_hz, c.a, c.b, c.omega_star_rad_s, c.omega_star_hz
                );
            }
            None => s += "critical pole: no critical zero\n",
        }
        for d in &self.diagnostics {
            s += &format!(
                "diagnostic: {}\n",
                serde_json::to_string(d).unwrap_or_default()
            );
        }
        s
    }
}

/// Exit code for a failed command step.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => exit::CONFIG,
        Error::NonAdjacentSequence { .. } | Error::InconsistentCurve { .. } => exit::NON_ADJACENT,
        Error::ConsistencyViolation(_) => exit::CONSISTENCY,
        _ => exit::SWEEP_OR_TABLE,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub rhp_zero_count: usize,
    pub rhp_zeros: Vec<Complex64>,
    pub critical_zero: Option<Complex64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub points: usize,
    pub apsam_s: f64,
    pub gnc_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySummary {
    pub applicable: bool,
    pub agree: bool,
    pub impedance_verdict: Option<Verdict>,
    pub impedance_winding: Option<i64>,
    pub dropped_points: usize,
    pub mismatches: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationSummary {
    pub full_stable: bool,
    pub truncated_stable: bool,
    pub oracle_full: usize,
    pub oracle_truncated: usize,
    /// Dropping the off-diagonal terms flips the verdict.
    pub misjudgment: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRecord {
    pub name: String,
    pub apsam_verdict: Verdict,
    pub apsam_winding: i64,
    pub gnc_winding: i64,
    pub gnc_undersampled: bool,
    pub oracle_count: usize,
    pub oracle: OracleSummary,
    pub critical_pole: Option<CriticalPoleReport>,
    pub consistency: ConsistencySummary,
    pub truncation: TruncationSummary,
    pub timings: Timings,
    pub agreement: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub records: Vec<VerifyRecord>,
    pub agreement: bool,
}

impl VerifyReport {
    pub fn exit_code(&self) -> i32 {
        if self.agreement {
            exit::STABLE
        } else {
            exit::CONSISTENCY
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub step_hz: f64,
    pub points: usize,
    pub verdict: Verdict,
    /// `None`: no critical zero at this step.
    pub sigma_o: Option<f64>,
    pub omega_o_rad_s: Option<f64>,
    pub sigma_error: Option<f64>,
    pub omega_error_rad_s: Option<f64>,
    /// Estimate from the raw samples without refinement.
    pub unrefined_sigma_o: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub reference_zero: Option<Complex64>,
    pub rows: Vec<IntervalRow>,
    /// `None` when fewer than two comparable rows exist.
    pub monotone: Option<bool>,
}

impl IntervalReport {
    pub fn exit_code(&self) -> i32 {
        if self.monotone == Some(false) {
            exit::NOT_MONOTONE
        } else {
            exit::STABLE
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub name: String,
    pub verdict: Option<Verdict>,
    pub winding: Option<i64>,
    pub critical_pole: Option<CriticalPoleReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub rows: Vec<BatchRow>,
    /// Scenario names with a critical pole, largest `sigma_o` first.
    pub worst_first: Vec<String>,
}

impl BatchReport {
    pub fn new(rows: Vec<BatchRow>) -> Self {
        let mut ranked: Vec<(f64, String)> = rows
            .iter()
            .filter_map(|r| {
                r.critical_pole
                    .as_ref()
                    .map(|c| (c.sigma_o, r.name.clone()))
            })
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
        BatchReport {
            worst_first: ranked.into_iter().map(|(_, n)| n).collect(),
            rows,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if !self.rows.is_empty() && self.rows.iter().all(|r| r.error.is_some()) {
            exit::BATCH_FAILED
        } else {
            exit::STABLE
        }
    }
}
