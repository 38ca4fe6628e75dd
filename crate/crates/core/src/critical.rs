//! Critical-pole estimation from the local slope of `D(jw)` near the
//! imaginary-part zero crossing closest to the origin.
//!
//! Near a simple zero `z_o`, `D(s) ~ (s - z_o)(a + jb)`, so along the axis
//! `dD/dw = j(a + jb) = -b + ja`. Any nearby sample then gives
//! `z_o = jw - D(jw) / (a + jb)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TWO_PI;
use crate::trajectory::{CubicFit, DeterminantTrajectory, Interpolation, TrajectorySample};

pub const FLAT_SLOPE_LIMIT: f64 = 1e-18;

/// Imaginary-part zero crossing chosen as the critical frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub omega_star: f64,
    /// Left sample of the bracketing interval.
    pub index: usize,
    /// Interpolated `D` at `omega_star`.
    pub d_star: Complex64,
}

/// Among all imaginary-part zero crossings, the one where `|D|` is smallest.
/// `None` means there is no critical zero to estimate.
pub fn find_candidate_frequency(t: &DeterminantTrajectory) -> Option<Candidate> {
    let s = t.samples();
    let mut best: Option<(f64, Candidate)> = None;
    for i in 0..s.len().saturating_sub(1) {
        let (a, b) = (s[i], s[i + 1]);
        if a.d.im == b.d.im || a.d.im * b.d.im > 0.0 || (a.d.im == 0.0 && i > 0) {
            continue;
        }
        let u = a.d.im / (a.d.im - b.d.im);
        let omega_star = a.omega + u * (b.omega - a.omega);
        let d_star = a.d + (b.d - a.d) * u;
        let norm = d_star.norm();
        if best.as_ref().is_none_or(|(n, _)| norm < *n) {
            best = Some((
                norm,
                Candidate {
                    omega_star,
                    index: i,
                    d_star,
                },
            ));
        }
    }
    best.map(|(_, c)| c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slope {
    pub a: f64,
    pub b: f64,
    /// Refined samples the slope was taken over, rad/s.
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeOptions {
    pub method: Interpolation,
    /// Refinement step, rad/s.
    pub step: f64,
}

impl Default for SlopeOptions {
    fn default() -> Self {
        SlopeOptions {
            method: Interpolation::PiecewiseLinear,
            step: 0.1 * TWO_PI,
        }
    }
}

fn slope_from_pair(p: TrajectorySample, q: TrajectorySample) -> Result<Slope> {
    let dw = q.omega - p.omega;
    let a = (q.d.im - p.d.im) / dw;
    let b = -(q.d.re - p.d.re) / dw;
    let norm_sq = a * a + b * b;
    if !(norm_sq >= FLAT_SLOPE_LIMIT) {
        return Err(Error::FlatSlope { norm_sq });
    }
    Ok(Slope {
        a,
        b,
        bracket: (p.omega, q.omega),
    })
}

/// Local interpolant used by the slope and estimate steps.
enum Local<'a> {
    Linear(&'a DeterminantTrajectory),
    Cubic(CubicFit),
    Lagrange(Vec<TrajectorySample>),
}

impl Local<'_> {
    fn eval(&self, w: f64) -> Option<Complex64> {
        match self {
            Local::Linear(t) => t.value_at(w),
            Local::Cubic(f) => Some(f.eval(w)),
            Local::Lagrange(nodes) => Some(crate::trajectory::lagrange_eval(nodes, w)),
        }
    }
}

/// Four samples around `omega_star`, two on each side where possible.
fn nodes_around(t: &DeterminantTrajectory, omega_star: f64) -> Result<Vec<TrajectorySample>> {
    let s = t.samples();
    if s.len() < 4 {
        return Err(Error::InsufficientSamples {
            needed: 4,
            got: s.len(),
        });
    }
    let j = s.partition_point(|p| p.omega <= omega_star);
    let start = j.saturating_sub(2).min(s.len() - 4);
    Ok(s[start..start + 4].to_vec())
}

fn local<'a>(
    t: &'a DeterminantTrajectory,
    omega_star: f64,
    method: Interpolation,
) -> Result<Local<'a>> {
    Ok(match method {
        Interpolation::PiecewiseLinear => Local::Linear(t),
        Interpolation::CubicFit => Local::Cubic(CubicFit::new(&nodes_around(t, omega_star)?)?),
        Interpolation::Lagrange => Local::Lagrange(nodes_around(t, omega_star)?),
    })
}

/// Refined-grid point pair bracketing `omega_star`. The grid is anchored on
/// the raw sample just below `omega_star`.
fn refined_bracket(t: &DeterminantTrajectory, omega_star: f64, step: f64) -> Result<(f64, f64)> {
    if !(step > 0.0) {
        return Err(Error::InvalidTrajectory(format!(
            "refinement step must be > 0, got {step}"
        )));
    }
    let s = t.samples();
    if s.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: s.len(),
        });
    }
    let j = s
        .partition_point(|p| p.omega <= omega_star)
        .clamp(1, s.len() - 1);
    let (lo, hi) = (s[j - 1].omega, s[j].omega);
    let k = ((omega_star - lo) / step).floor().max(0.0);
    let w0 = (lo + k * step).min(hi);
    let w1 = (w0 + step).min(hi);
    if w1 > w0 {
        Ok((w0, w1))
    } else {
        Ok(((hi - step).max(lo), hi))
    }
}

pub fn local_slope(
    t: &DeterminantTrajectory,
    omega_star: f64,
    opts: &SlopeOptions,
) -> Result<Slope> {
    let (w0, w1) = refined_bracket(t, omega_star, opts.step)?;
    let f = local(t, omega_star, opts.method)?;
    let p = TrajectorySample {
        omega: w0,
        d: f.eval(w0)
            .ok_or(Error::InsufficientSamples { needed: 2, got: 1 })?,
    };
    let q = TrajectorySample {
        omega: w1,
        d: f.eval(w1)
            .ok_or(Error::InsufficientSamples { needed: 2, got: 1 })?,
    };
    slope_from_pair(p, q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoleEstimate {
    pub sigma_o: f64,
    /// rad/s
    pub omega_o: f64,
    pub a: f64,
    pub b: f64,
    /// rad/s
    pub omega_star: f64,
    /// `D(j omega_star)` used by the estimate.
    pub d_star: Complex64,
    /// `1 / |sigma_o|` in seconds; `None` when effectively infinite.
    pub tau: Option<f64>,
    pub method: Interpolation,
    /// Refinement step in rad/s, `None` for the unrefined baseline.
    pub step: Option<f64>,
    pub bracket: (f64, f64),
}

impl CriticalPoleEstimate {
    pub fn zero(&self) -> Complex64 {
        Complex64::new(self.sigma_o, self.omega_o)
    }

    pub fn omega_o_hz(&self) -> f64 {
        self.omega_o / TWO_PI
    }
}

pub fn time_constant(sigma: f64) -> Option<f64> {
    (sigma.abs() >= 1e-12).then(|| 1.0 / sigma.abs())
}

/// `z_o = j omega_star - d_star / (a + jb)`
pub fn pole_from_local_model(
    omega_star: f64,
    d_star: Complex64,
    a: f64,
    b: f64,
) -> Result<Complex64> {
    let norm_sq = a * a + b * b;
    if !(norm_sq >= FLAT_SLOPE_LIMIT) {
        return Err(Error::FlatSlope { norm_sq });
    }
    Ok(Complex64::new(0.0, omega_star) - d_star / Complex64::new(a, b))
}

/// Damping from the real part of `D` at an exact imaginary-part zero.
pub fn sigma_from_crossing(re_d: f64, a: f64, b: f64) -> f64 {
    -re_d * a / (a * a + b * b)
}

/// Resonance from the real part of `D` at an exact imaginary-part zero.
pub fn omega_from_crossing(omega: f64, re_d: f64, a: f64, b: f64) -> f64 {
    omega + re_d * b / (a * a + b * b)
}

pub fn estimate_critical_pole(
    t: &DeterminantTrajectory,
    omega_star: f64,
    slope: &Slope,
) -> Result<CriticalPoleEstimate> {
    let d_star = t.value_at(omega_star).ok_or_else(|| {
        Error::InvalidTrajectory(format!("omega_star {omega_star} outside the trajectory"))
    })?;
    build(
        omega_star,
        d_star,
        slope,
        Interpolation::PiecewiseLinear,
        None,
    )
}

fn build(
    omega_star: f64,
    d_star: Complex64,
    slope: &Slope,
    method: Interpolation,
    step: Option<f64>,
) -> Result<CriticalPoleEstimate> {
    let z = pole_from_local_model(omega_star, d_star, slope.a, slope.b)?;
    Ok(CriticalPoleEstimate {
        sigma_o: z.re,
        omega_o: z.im,
        a: slope.a,
        b: slope.b,
        omega_star,
        d_star,
        tau: time_constant(z.re),
        method,
        step,
        bracket: slope.bracket,
    })
}

/// Candidate search, refined local slope and estimate in one step.
pub fn estimate(
    t: &DeterminantTrajectory,
    opts: &SlopeOptions,
) -> Result<Option<CriticalPoleEstimate>> {
    let Some(c) = find_candidate_frequency(t) else {
        return Ok(None);
    };
    estimate_at(t, c.omega_star, opts).map(Some)
}

pub fn estimate_at(
    t: &DeterminantTrajectory,
    omega_star: f64,
    opts: &SlopeOptions,
) -> Result<CriticalPoleEstimate> {
    let slope = local_slope(t, omega_star, opts)?;
    let f = local(t, omega_star, opts.method)?;
    let d_star = f.eval(omega_star).ok_or_else(|| {
        Error::InvalidTrajectory(format!("omega_star {omega_star} outside the trajectory"))
    })?;
    build(omega_star, d_star, &slope, opts.method, Some(opts.step))
}

/// Baseline without refinement: the raw sample nearest the crossing is
/// taken as if it were the crossing, with the raw forward difference as
/// slope.
pub fn estimate_unrefined(t: &DeterminantTrajectory) -> Result<Option<CriticalPoleEstimate>> {
    let Some(c) = find_candidate_frequency(t) else {
        return Ok(None);
    };
    let s = t.samples();
    let (l, r) = (s[c.index], s[c.index + 1]);
    let k = if (c.omega_star - l.omega) <= (r.omega - c.omega_star) {
        c.index
    } else {
        c.index + 1
    };
    let k = k.min(s.len() - 2);
    let slope = slope_from_pair(s[k], s[k + 1])?;
    let p = s[k];
    let sigma = sigma_from_crossing(p.d.re, slope.a, slope.b);
    let omega = omega_from_crossing(p.omega, p.d.re, slope.a, slope.b);
    Ok(Some(CriticalPoleEstimate {
        sigma_o: sigma,
        omega_o: omega,
        a: slope.a,
        b: slope.b,
        omega_star: p.omega,
        d_star: p.d,
        tau: time_constant(sigma),
        method: Interpolation::PiecewiseLinear,
        step: None,
        bracket: slope.bracket,
    }))
}
