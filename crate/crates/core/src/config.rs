//! TOML analysis configuration.
//!
//! ```toml
//! schema_version = 1
//!
//! [grid]
//! rs = 0.05
//! l_total = 0.002
//! f1_hz = 50.0
//!
//! [plan]
//! f_max_hz = 1000.0
//! step_hz = 1.0
//!
//! [device]
//! kind = "builtin"
//! name = "interval-study"
//! ```
//!
//! Complex numbers are written as `[re, im]`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::critical::SlopeOptions;
use crate::error::{Error, Result};
use crate::model::{GridParams, RationalFunction, RationalMatrix2, TWO_PI};
use crate::pipeline::AnalysisOptions;
use crate::poly::Poly;
use crate::sweep::{Band, FrequencyPlan, SweepOptions};
use crate::synth::{self, FactoredDevice};
use crate::trajectory::Interpolation;
use crate::verify::PoleTolerance;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub rs: f64,
    pub l_total: f64,
    #[serde(default = "default_f1")]
    pub f1_hz: f64,
    #[serde(default)]
    pub cs: Option<f64>,
}

fn default_f1() -> f64 {
    50.0
}

impl GridSection {
    pub fn params(&self) -> GridParams {
        GridParams {
            rs: self.rs,
            l_total: self.l_total,
            omega1: TWO_PI * self.f1_hz,
            cs: self.cs,
        }
    }
}

/// Either explicit bands or a symmetric uniform sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    #[serde(default = "default_f_max")]
    pub f_max_hz: f64,
    #[serde(default = "default_step")]
    pub step_hz: f64,
    #[serde(default)]
    pub bands: Vec<Band>,
}

fn default_f_max() -> f64 {
    1000.0
}

fn default_step() -> f64 {
    1.0
}

impl Default for PlanSection {
    fn default() -> Self {
        PlanSection {
            f_max_hz: default_f_max(),
            step_hz: default_step(),
            bands: Vec::new(),
        }
    }
}

impl PlanSection {
    pub fn plan(&self, f1: f64) -> FrequencyPlan {
        if self.bands.is_empty() {
            self.with_step(self.step_hz, f1)
        } else {
            FrequencyPlan {
                bands: self.bands.clone(),
                f1,
            }
        }
    }

    /// Uniform plan over the same range at another step.
    pub fn with_step(&self, step_hz: f64, f1: f64) -> FrequencyPlan {
        FrequencyPlan::uniform(-self.f_max_hz, self.f_max_hz, step_hz, f1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default = "default_method")]
    pub method: Interpolation,
    #[serde(default = "default_refine")]
    pub step_hz: f64,
    #[serde(default = "default_true")]
    pub close_contour: bool,
}

fn default_method() -> Interpolation {
    Interpolation::PiecewiseLinear
}

fn default_refine() -> f64 {
    0.1
}

fn default_true() -> bool {
    true
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            method: default_method(),
            step_hz: default_refine(),
            close_contour: true,
        }
    }
}

impl AnalysisSection {
    pub fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            slope: SlopeOptions {
                method: self.method,
                step: self.step_hz * TWO_PI,
            },
            close_contour: self.close_contour,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalsSection {
    #[serde(default = "default_steps")]
    pub steps_hz: Vec<f64>,
    /// Slack allowed when checking that the error does not grow, in 1/s.
    #[serde(default = "default_monotone_tol")]
    pub monotone_tol: f64,
}

fn default_steps() -> Vec<f64> {
    vec![2.0, 1.0, 0.5]
}

fn default_monotone_tol() -> f64 {
    1e-6
}

impl Default for IntervalsSection {
    fn default() -> Self {
        IntervalsSection {
            steps_hz: default_steps(),
            monotone_tol: default_monotone_tol(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Plan step for the admittance/impedance comparison.
    #[serde(default = "default_consistency_step")]
    pub consistency_step_hz: f64,
    #[serde(default = "default_timing_repeats")]
    pub timing_repeats: usize,
}

fn default_consistency_step() -> f64 {
    0.1
}

fn default_timing_repeats() -> usize {
    3
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            consistency_step_hz: default_consistency_step(),
            timing_repeats: default_timing_repeats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalSpec {
    /// Ascending coefficients.
    pub num: Vec<Complex64>,
    pub den: Vec<Complex64>,
}

impl RationalSpec {
    fn build(&self) -> Result<RationalFunction> {
        RationalFunction::new(Poly::new(self.num.clone()), Poly::new(self.den.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeviceSpec {
    /// Named synthetic device shipped with the library.
    Builtin {
        name: String,
    },
    Factored(FactoredDevice),
    Rational {
        e11: RationalSpec,
        e12: RationalSpec,
        e21: RationalSpec,
        e22: RationalSpec,
    },
    /// Measured response table; no closed form.
    Table {
        path: PathBuf,
    },
}

pub const BUILTIN_DEVICES: [&str; 12] = [
    "interval-study",
    "interval-study-stable",
    "off-diagonal-misjudgment",
    "far-from-critical",
    "cs-1000uF",
    "cs-800uF",
    "cs-700uF",
    "ws-12ms",
    "ws-10ms",
    "ws-8ms",
    "ws-6ms",
    "ws-4ms",
];

fn builtin(name: &str) -> Option<FactoredDevice> {
    let named = |list: Vec<(String, FactoredDevice)>, key: &str| {
        list.into_iter().find(|(n, _)| n == key).map(|(_, d)| d)
    };
    match name {
        "interval-study" => Some(synth::interval_study(0.26)),
        "interval-study-stable" => Some(synth::interval_study_stable()),
        "off-diagonal-misjudgment" => Some(synth::off_diagonal_misjudgment()),
        "far-from-critical" => Some(synth::far_from_critical()),
        n if n.starts_with("cs-") => named(synth::experiment_trio(), n),
        n if n.starts_with("ws-") => named(synth::wind_speed_batch(), &n[3..]),
        _ => None,
    }
}

/// Closed-form model or measured table behind a device spec.
#[derive(Debug, Clone)]
pub enum DeviceSource {
    Closed(RationalMatrix2),
    Table(PathBuf),
}

impl DeviceSpec {
    pub fn resolve(&self, grid: &GridParams) -> Result<DeviceSource> {
        match self {
            DeviceSpec::Builtin { name } => {
                let d = builtin(name)
                    .ok_or_else(|| Error::Config(format!("unknown builtin device {name:?}")))?;
                d.admittance(grid).map(DeviceSource::Closed)
            }
            DeviceSpec::Factored(d) => d.admittance(grid).map(DeviceSource::Closed),
            DeviceSpec::Rational { e11, e12, e21, e22 } => Ok(DeviceSource::Closed(
                RationalMatrix2::new(e11.build()?, e12.build()?, e21.build()?, e22.build()?),
            )),
            DeviceSpec::Table { path } => Ok(DeviceSource::Table(path.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub device: DeviceSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSection {
    pub count: usize,
    #[serde(default = "default_suite_seed")]
    pub seed: u64,
}

fn default_suite_seed() -> u64 {
    synth::SUITE_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub schema_version: u32,
    pub grid: GridSection,
    #[serde(default)]
    pub plan: PlanSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub tolerance: PoleTolerance,
    #[serde(default)]
    pub intervals: IntervalsSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub device: Option<DeviceSpec>,
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
    /// Appends generated closed-form systems to the scenario list.
    #[serde(default)]
    pub suite: Option<SuiteSection>,
}

fn cfg_err(m: impl Into<String>) -> Error {
    Error::Config(m.into())
}

impl AnalysisConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: AnalysisConfig = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        Ok(cfg)
    }

    /// Parse, make table paths relative to the file's directory and validate.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |d: &mut DeviceSpec| {
            if let DeviceSpec::Table { path } = d {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        if let Some(d) = self.device.as_mut() {
            fix(d);
        }
        for s in &mut self.scenarios {
            fix(&mut s.device);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(cfg_err(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.grid_params()
            .validate()
            .map_err(|e| cfg_err(e.to_string()))?;
        self.frequency_plan()
            .validate()
            .map_err(|e| cfg_err(e.to_string()))?;
        let t = &self.tolerance;
        if !(t.sigma_rel > 0.0 && t.sigma_abs > 0.0 && t.omega_abs > 0.0) {
            return Err(cfg_err("tolerances must be positive"));
        }
        let a = &self.analysis;
        if !(a.step_hz > 0.0 && a.step_hz.is_finite()) {
            return Err(cfg_err("analysis.step_hz must be positive"));
        }
        if !(self.sweep.noise >= 0.0 && self.sweep.noise.is_finite()) {
            return Err(cfg_err("sweep.noise must be >= 0"));
        }
        if self
            .intervals
            .steps_hz
            .iter()
            .any(|&h| !(h > 0.0 && h.is_finite()))
        {
            return Err(cfg_err("intervals.steps_hz must be positive"));
        }
        if !(self.verify.consistency_step_hz > 0.0) {
            return Err(cfg_err("verify.consistency_step_hz must be positive"));
        }
        let mut names = HashSet::new();
        for s in &self.scenarios {
            if !names.insert(s.name.as_str()) {
                return Err(cfg_err(format!("duplicate scenario name {:?}", s.name)));
            }
        }
        let devices = self
            .device
            .iter()
            .chain(self.scenarios.iter().map(|s| &s.device));
        for d in devices {
            match d {
                DeviceSpec::Table { path } if !path.exists() => {
                    return Err(cfg_err(format!("table {} does not exist", path.display())));
                }
                DeviceSpec::Builtin { name } if builtin(name).is_none() => {
                    return Err(cfg_err(format!("unknown builtin device {name:?}")));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn grid_params(&self) -> GridParams {
        self.grid.params()
    }

    pub fn frequency_plan(&self) -> FrequencyPlan {
        self.plan.plan(self.grid.f1_hz)
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            noise: self.sweep.noise,
            seed: self.sweep.seed,
            ..Default::default()
        }
    }

    /// Scenario list with the generated suite appended.
    pub fn all_scenarios(&self) -> Vec<Scenario> {
        let mut out = self.scenarios.clone();
        if let Some(s) = self.suite {
            out.extend(
                synth::suite(s.count, s.seed)
                    .into_iter()
                    .map(|sys| Scenario {
                        name: sys.id,
                        device: DeviceSpec::Factored(sys.device),
                    }),
            );
        }
        out
    }

    /// The `[device]` entry, or the named scenario.
    pub fn pick_device(&self, scenario: Option<&str>) -> Result<DeviceSpec> {
        match scenario {
            Some(name) => self
                .all_scenarios()
                .into_iter()
                .find(|s| s.name == name)
                .map(|s| s.device)
                .ok_or_else(|| cfg_err(format!("no scenario named {name:?}"))),
            None => self
                .device
                .clone()
                .ok_or_else(|| cfg_err("config has no [device]")),
        }
    }
}
