//! Frequency-sweep identification of a black-box 2x2 admittance.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_self_stable, eval_rational_matrix, ComplexMat2, RationalMatrix2, TWO_PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub f_start: f64,
    pub f_end: f64,
    pub step: f64,
}

impl Band {
    pub fn new(f_start: f64, f_end: f64, step: f64) -> Self {
        Band {
            f_start,
            f_end,
            step,
        }
    }

    fn grid(&self) -> Vec<f64> {
        let span = (self.f_end - self.f_start) / self.step;
        let exact = (span - span.round()).abs() < 1e-9;
        let n = if exact { span.round() } else { span.floor() } as usize;
        (0..=n)
            .map(|k| {
                if exact && k == n {
                    self.f_end
                } else {
                    self.f_start + k as f64 * self.step
                }
            })
            .collect()
    }
}

/// Sweep bands in Hz plus the fundamental.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPlan {
    pub bands: Vec<Band>,
    /// Hz
    pub f1: f64,
}

impl FrequencyPlan {
    /// +-1000 Hz, 1 Hz inside +-100 Hz and 5 Hz elsewhere.
    pub fn standard(f1: f64) -> Self {
        FrequencyPlan {
            bands: vec![
                Band::new(-1000.0, -100.0, 5.0),
                Band::new(-100.0, 100.0, 1.0),
                Band::new(100.0, 1000.0, 5.0),
            ],
            f1,
        }
    }

    pub fn uniform(f_lo: f64, f_hi: f64, step: f64, f1: f64) -> Self {
        FrequencyPlan {
            bands: vec![Band::new(f_lo, f_hi, step)],
            f1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidPlan(m));
        if !(self.f1.is_finite() && self.f1 > 0.0) {
            return bad(format!("fundamental must be > 0, got {}", self.f1));
        }
        for (k, b) in self.bands.iter().enumerate() {
            if !(b.f_start.is_finite() && b.f_end.is_finite() && b.step.is_finite()) {
                return bad(format!("band {k} has a non-finite bound"));
            }
            if !(b.step > 0.0) {
                return bad(format!("band {k} has non-positive step {}", b.step));
            }
            if b.f_end < b.f_start {
                return bad(format!("band {k} ends before it starts"));
            }
            if k > 0 && b.f_start < self.bands[k - 1].f_end {
                return bad(format!("band {k} overlaps or precedes band {}", k - 1));
            }
        }
        Ok(())
    }

    pub fn max_step(&self) -> f64 {
        self.bands.iter().map(|b| b.step).fold(0.0, f64::max)
    }
}

/// Planned grid in Hz, sorted and deduplicated.
pub fn plan_frequencies_hz(plan: &FrequencyPlan) -> Result<Vec<f64>> {
    plan.validate()?;
    let mut out: Vec<f64> = Vec::new();
    let mut any = false;
    for b in &plan.bands {
        let g = b.grid();
        any |= g.len() >= 2;
        for f in g {
            match out.last() {
                Some(&last) if (f - last).abs() <= 1e-9 * b.step => {}
                _ => out.push(f),
            }
        }
    }
    if !any {
        return Err(Error::EmptyPlan);
    }
    Ok(out)
}

/// Planned grid in rad/s.
pub fn plan_frequencies(plan: &FrequencyPlan) -> Result<Vec<f64>> {
    Ok(plan_frequencies_hz(plan)?
        .into_iter()
        .map(|f| TWO_PI * f)
        .collect())
}

/// Two perturb-and-measure experiments at one frequency. Columns of `u` are
/// the applied voltage vectors, columns of `i` the measured currents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub f_p: f64,
    pub f1: f64,
    pub u: ComplexMat2,
    pub i: ComplexMat2,
}

/// 2-norm condition number of a 2x2 matrix.
pub fn condition_number(m: &ComplexMat2) -> f64 {
    let fro2 = m.norm().powi(2);
    let det = m.det().norm();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let smax2 = 0.5 * (fro2 + disc);
    let smin2 = 0.5 * (fro2 - disc);
    if smin2 <= 0.0 || det == 0.0 {
        return f64::INFINITY;
    }
    // smin from det avoids cancellation in fro2 - disc
    let smax = smax2.sqrt();
    smax / (det / smax)
}

pub fn perturb_and_measure<R: Rng + ?Sized>(
    device: &RationalMatrix2,
    f_p: f64,
    f1: f64,
    perturbations: [[Complex64; 2]; 2],
    noise: f64,
    rng: &mut R,
) -> Result<MeasurementSet> {
    let u = ComplexMat2::from_columns(perturbations[0], perturbations[1]);
    let cond = condition_number(&u);
    if !(cond <= 1e12) {
        return Err(Error::DegeneratePerturbations { cond });
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidPlan(format!(
            "noise level must be >= 0, got {noise}"
        )));
    }
    let y = eval_rational_matrix(device, TWO_PI * f_p)?;
    let mut i = y * u;
    if noise > 0.0 {
        let std_normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid normal");
        let mut add = |x: &mut Complex64| {
            let sd = noise * x.norm();
            let n = Complex64::new(std_normal.sample(rng), std_normal.sample(rng)) * sd;
            *x += n;
        };
        add(&mut i.e11);
        add(&mut i.e12);
        add(&mut i.e21);
        add(&mut i.e22);
    }
    Ok(MeasurementSet { f_p, f1, u, i })
}

/// `Y = i u^-1`
pub fn estimate_admittance(m: &MeasurementSet) -> Result<ComplexMat2> {
    let floor = 1e-12 * m.u.norm().powi(2);
    let inv =
        m.u.inverse(floor)
            .ok_or(Error::SingularMeasurement { f_hz: m.f_p })?;
    Ok(m.i * inv)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub f_hz: f64,
    pub y: ComplexMat2,
}

impl TableRow {
    pub fn omega(&self) -> f64 {
        TWO_PI * self.f_hz
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    #[serde(default)]
    pub device_id: Option<String>,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub plan: Option<FrequencyPlan>,
}

/// Sampled 2x2 admittance, keyed by frequency in Hz so serialization is
/// bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponseTable {
    rows: Vec<TableRow>,
    pub meta: TableMeta,
}

impl FrequencyResponseTable {
    pub fn new(rows: Vec<TableRow>, meta: TableMeta) -> Result<Self> {
        for (k, r) in rows.iter().enumerate() {
            if !r.f_hz.is_finite() || !r.y.is_finite() {
                return Err(Error::MalformedTable(format!(
                    "row {k} has a non-finite value"
                )));
            }
            if k > 0 && !(r.f_hz > rows[k - 1].f_hz) {
                return Err(Error::MalformedTable(format!(
                    "frequencies not strictly increasing at row {k} ({} Hz)",
                    r.f_hz
                )));
            }
        }
        Ok(FrequencyResponseTable { rows, meta })
    }

    pub fn rows(&self) -> &[TableRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.rows.iter().map(TableRow::omega).collect()
    }

    /// Device with the coupling entries zeroed.
    pub fn diagonal_truncation(&self) -> Self {
        FrequencyResponseTable {
            rows: self
                .rows
                .iter()
                .map(|r| TableRow {
                    f_hz: r.f_hz,
                    y: r.y.diagonal_part(),
                })
                .collect(),
            meta: self.meta.clone(),
        }
    }

    /// A closed contour needs samples on both sides of zero frequency.
    pub fn check_spans_axis(&self) -> Result<()> {
        if self.rows.len() < 2 {
            return Err(Error::MalformedTable(format!(
                "need at least 2 rows, got {}",
                self.rows.len()
            )));
        }
        let lo = self.rows[0].f_hz;
        let hi = self.rows[self.rows.len() - 1].f_hz;
        if !(lo < 0.0 && hi > 0.0) {
            return Err(Error::MalformedTable(format!(
                "table covers [{lo}, {hi}] Hz; both negative and positive frequencies are required"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Relative noise standard deviation.
    pub noise: f64,
    pub seed: u64,
    pub operating_voltage: f64,
    /// Fraction of the operating voltage used as disturbance.
    pub disturbance: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            noise: 0.0,
            seed: 0,
            operating_voltage: 1.0,
            disturbance: 0.05,
        }
    }
}

/// Sweep `device` over `plan`. Noise for frequency index `k` comes from its
/// own ChaCha stream, so results do not depend on evaluation order.
pub fn sweep(
    device: &RationalMatrix2,
    plan: &FrequencyPlan,
    opts: &SweepOptions,
) -> Result<FrequencyResponseTable> {
    let verdict = check_self_stable(device)?;
    if !verdict.stable {
        return Err(Error::NotSelfStable {
            count: verdict.offending_poles.len(),
        });
    }
    let freqs = plan_frequencies_hz(plan)?;
    let amp = Complex64::new(opts.disturbance * opts.operating_voltage, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let pert = [[amp, zero], [zero, amp]];
    let mut rows = Vec::with_capacity(freqs.len());
    for (k, &f) in freqs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(k as u64);
        let m = perturb_and_measure(device, f, plan.f1, pert, opts.noise, &mut rng)?;
        rows.push(TableRow {
            f_hz: f,
            y: estimate_admittance(&m)?,
        });
    }
    FrequencyResponseTable::new(
        rows,
        TableMeta {
            device_id: None,
            noise: opts.noise,
            seed: Some(opts.seed),
            plan: Some(plan.clone()),
        },
    )
}
