//! Return-difference determinant trajectory `D(jw)` and its axis crossings.

use std::fmt;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{grid_impedance, ComplexMat2, GridParams};
use crate::sweep::FrequencyResponseTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    Admittance,
    Impedance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub omega: f64,
    pub d: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminantTrajectory {
    samples: Vec<TrajectorySample>,
    pub form: Form,
    /// Frequencies (rad/s) dropped because an inversion failed there.
    pub dropped: Vec<f64>,
}

impl DeterminantTrajectory {
    pub fn new(samples: Vec<TrajectorySample>, form: Form) -> Result<Self> {
        for (k, s) in samples.iter().enumerate() {
            if !(s.omega.is_finite() && s.d.re.is_finite() && s.d.im.is_finite()) {
                return Err(Error::InvalidTrajectory(format!(
                    "sample {k} is not finite"
                )));
            }
            if k > 0 && !(s.omega > samples[k - 1].omega) {
                return Err(Error::InvalidTrajectory(format!(
                    "omega not strictly increasing at sample {k}"
                )));
            }
        }
        Ok(DeterminantTrajectory {
            samples,
            form,
            dropped: Vec::new(),
        })
    }

    pub fn from_fn(omegas: &[f64], form: Form, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        DeterminantTrajectory::new(
            omegas
                .iter()
                .map(|&w| TrajectorySample { omega: w, d: f(w) })
                .collect(),
            form,
        )
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|s| s.d.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, k: f64) -> Self {
        let mut t = self.clone();
        t.samples.iter_mut().for_each(|s| s.d *= k);
        t
    }

    /// The same curve traversed backwards: `D'(w) = D(-w)`.
    pub fn reversed(&self) -> Self {
        let mut t = self.clone();
        t.samples = self
            .samples
            .iter()
            .rev()
            .map(|s| TrajectorySample {
                omega: -s.omega,
                d: s.d,
            })
            .collect();
        t
    }

    /// Samples with `lo <= omega <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> &[TrajectorySample] {
        let a = self.samples.partition_point(|s| s.omega < lo);
        let b = self.samples.partition_point(|s| s.omega <= hi);
        &self.samples[a..b]
    }

    /// Piecewise-linear value at `omega` inside the sampled range.
    pub fn value_at(&self, omega: f64) -> Option<Complex64> {
        let n = self.samples.len();
        if n == 0 || omega < self.samples[0].omega || omega > self.samples[n - 1].omega {
            return None;
        }
        let j = self.samples.partition_point(|s| s.omega < omega);
        if j < n && self.samples[j].omega == omega {
            return Some(self.samples[j].d);
        }
        let (a, b) = (self.samples[j - 1], self.samples[j]);
        let t = (omega - a.omega) / (b.omega - a.omega);
        Some(a.d + (b.d - a.d) * t)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "omega_rad_s,re,im")?;
        for s in &self.samples {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", s.omega, s.d.re, s.d.im)?;
        }
        Ok(())
    }
}

fn return_difference(z: &ComplexMat2, y: &ComplexMat2) -> Complex64 {
    crate::kernels::return_difference(&z.entries(), &y.entries())
}

/// `D = det(I + Z_grid Y)` at every table frequency.
pub fn return_difference_determinant(
    grid: &GridParams,
    table: &FrequencyResponseTable,
) -> Result<DeterminantTrajectory> {
    if table.is_empty() {
        return Err(Error::InvalidTrajectory("response table is empty".into()));
    }
    let mut samples = Vec::with_capacity(table.len());
    for r in table.rows() {
        let w = r.omega();
        let z = grid_impedance(w, grid)?;
        samples.push(TrajectorySample {
            omega: w,
            d: return_difference(&z, &r.y),
        });
    }
    DeterminantTrajectory::new(samples, Form::Admittance)
}

/// `D = det(I + Z_dev Y_grid)` with `Z_dev = Y^-1`, `Y_grid = Z_grid^-1`.
/// Frequencies where either inversion fails are dropped and listed.
pub fn determinant_impedance_form(
    grid: &GridParams,
    table: &FrequencyResponseTable,
) -> Result<DeterminantTrajectory> {
    let mut samples = Vec::with_capacity(table.len());
    let mut dropped = Vec::new();
    for r in table.rows() {
        let w = r.omega();
        let z_dev = r.y.inverse(1e-12 * r.y.norm().powi(2).max(1e-300));
        let y_grid = grid_impedance(w, grid)
            .ok()
            .and_then(|z| z.inverse(1e-12 * z.norm().powi(2).max(1e-300)));
        match (z_dev, y_grid) {
            (Some(zd), Some(yg)) => samples.push(TrajectorySample {
                omega: w,
                d: return_difference(&zd, &yg),
            }),
            _ => dropped.push(w),
        }
    }
    if samples.is_empty() {
        return Err(Error::SingularInversion {
            dropped: dropped.len(),
        });
    }
    let mut t = DeterminantTrajectory::new(samples, Form::Impedance)?;
    t.dropped = dropped;
    Ok(t)
}

/// Axis half crossed, labelled 1..4 in clockwise order starting from the
/// positive real axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingKind {
    PosReal,
    NegImag,
    NegReal,
    PosImag,
}

impl CrossingKind {
    pub const ALL: [CrossingKind; 4] = [
        CrossingKind::PosReal,
        CrossingKind::NegImag,
        CrossingKind::NegReal,
        CrossingKind::PosImag,
    ];

    pub fn label(self) -> i64 {
        match self {
            CrossingKind::PosReal => 1,
            CrossingKind::NegImag => 2,
            CrossingKind::NegReal => 3,
            CrossingKind::PosImag => 4,
        }
    }

    /// Kind whose label is congruent to `c` mod 4.
    pub fn from_coordinate(c: i64) -> Self {
        CrossingKind::ALL[((c - 1).rem_euclid(4)) as usize]
    }

    pub fn symbol(self) -> char {
        ['\u{2460}', '\u{2461}', '\u{2462}', '\u{2463}'][(self.label() - 1) as usize]
    }
}

impl fmt::Display for CrossingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            CrossingKind::PosReal => "PosReal",
            CrossingKind::NegImag => "NegImag",
            CrossingKind::NegReal => "NegReal",
            CrossingKind::PosImag => "PosImag",
        };
        write!(f, "{}({name})", self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Left sample of the bracketing interval.
    pub index: usize,
    pub omega_cross: f64,
    pub kind: CrossingKind,
    /// The nonzero coordinate at the crossing.
    pub on_axis_value: f64,
    /// Found on the chord that closes the contour from the last sample back
    /// to the first.
    #[serde(default)]
    pub closure: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginPass {
    pub index: usize,
    pub omega: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossingScan {
    pub crossings: Vec<Crossing>,
    pub origin_passes: Vec<OriginPass>,
    /// Intervals in which both coordinates changed sign.
    pub ambiguous: Vec<usize>,
    pub low_resolution: bool,
}

pub const ORIGIN_REL_TOL: f64 = 1e-9;

#[derive(Clone, Copy)]
struct Chord {
    index: usize,
    w0: f64,
    w1: f64,
    d0: Complex64,
    d1: Complex64,
    /// Exact zeros at the left endpoint belong to the previous interval.
    skip_left_zero: bool,
    /// Exact zeros at the right endpoint are already counted elsewhere.
    skip_right_zero: bool,
    closure: bool,
}

fn sign_change(a: f64, b: f64, skip_left: bool, skip_right: bool) -> bool {
    if a == 0.0 && b == 0.0 {
        return false;
    }
    if a == 0.0 && skip_left {
        return false;
    }
    if b == 0.0 && skip_right {
        return false;
    }
    a * b <= 0.0
}

fn scan_chord(c: &Chord, tol: f64, out: &mut CrossingScan) {
    // (parameter along chord, crossing)
    let mut found: Vec<(f64, Option<Crossing>)> = Vec::new();
    let at = |t: f64| c.d0 + (c.d1 - c.d0) * t;
    let omega_at = |t: f64| {
        if c.closure {
            c.w0
        } else {
            c.w0 + (c.w1 - c.w0) * t
        }
    };

    if sign_change(c.d0.im, c.d1.im, c.skip_left_zero, c.skip_right_zero) {
        let t = c.d0.im / (c.d0.im - c.d1.im);
        let re = at(t).re;
        let kind = if re > 0.0 {
            CrossingKind::PosReal
        } else {
            CrossingKind::NegReal
        };
        let x = (re.abs() > tol).then_some(Crossing {
            index: c.index,
            omega_cross: omega_at(t),
            kind,
            on_axis_value: re,
            closure: c.closure,
        });
        found.push((t, x));
    }
    if sign_change(c.d0.re, c.d1.re, c.skip_left_zero, c.skip_right_zero) {
        let t = c.d0.re / (c.d0.re - c.d1.re);
        let im = at(t).im;
        let kind = if im < 0.0 {
            CrossingKind::NegImag
        } else {
            CrossingKind::PosImag
        };
        let x = (im.abs() > tol).then_some(Crossing {
            index: c.index,
            omega_cross: omega_at(t),
            kind,
            on_axis_value: im,
            closure: c.closure,
        });
        found.push((t, x));
    }

    if found.iter().any(|(_, x)| x.is_none()) {
        out.origin_passes.push(OriginPass {
            index: c.index,
            omega: omega_at(found[0].0),
        });
        return;
    }
    if found.len() == 2 {
        // Refining a chord piecewise-linearly reproduces the chord, so the
        // crossing order along it is already the refined order.
        out.ambiguous.push(c.index);
        out.low_resolution = true;
        found.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out.crossings
        .extend(found.into_iter().filter_map(|(_, x)| x));
}

/// Axis crossings in frequency order, without contour closure.
pub fn detect_crossings(t: &DeterminantTrajectory) -> Result<CrossingScan> {
    scan(t, false)
}

/// Axis crossings including those on the closing chord from the highest
/// back to the lowest frequency, which stands in for the arc through
/// `w = +-inf`.
pub fn detect_crossings_closed(t: &DeterminantTrajectory) -> Result<CrossingScan> {
    scan(t, true)
}

fn scan(t: &DeterminantTrajectory, close: bool) -> Result<CrossingScan> {
    let s = t.samples();
    if s.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: s.len(),
        });
    }
    let tol = ORIGIN_REL_TOL * t.max_abs();
    let mut out = CrossingScan::default();
    for i in 0..s.len() - 1 {
        let chord = Chord {
            index: i,
            w0: s[i].omega,
            w1: s[i + 1].omega,
            d0: s[i].d,
            d1: s[i + 1].d,
            skip_left_zero: i > 0,
            skip_right_zero: false,
            closure: false,
        };
        scan_chord(&chord, tol, &mut out);
    }
    if close {
        let n = s.len() - 1;
        let chord = Chord {
            index: n,
            w0: s[n].omega,
            w1: s[0].omega,
            d0: s[n].d,
            d1: s[0].d,
            skip_left_zero: true,
            skip_right_zero: true,
            closure: true,
        };
        scan_chord(&chord, tol, &mut out);
    }
    Ok(out)
}

/// Relative gap between the trajectory ends. A closed contour assumes `D`
/// has settled to its limit at both sweep boundaries, where the two ends
/// should nearly coincide.
pub fn boundary_gap(t: &DeterminantTrajectory) -> f64 {
    let s = t.samples();
    if s.len() < 2 {
        return 0.0;
    }
    let m = t.max_abs();
    if m == 0.0 {
        return 0.0;
    }
    (s[s.len() - 1].d - s[0].d).norm() / m
}

pub const BOUNDARY_GAP_WARN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    PiecewiseLinear,
    CubicFit,
    Lagrange,
}

impl fmt::Display for Interpolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interpolation::PiecewiseLinear => "piecewise-linear",
            Interpolation::CubicFit => "cubic-polynomial-fit",
            Interpolation::Lagrange => "lagrange",
        })
    }
}

fn regular_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

/// Resample `t` on the regular grid `lo, lo + step, ..` within `window`.
pub fn interpolate(
    t: &DeterminantTrajectory,
    method: Interpolation,
    step: f64,
    window: (f64, f64),
) -> Result<DeterminantTrajectory> {
    let (lo, hi) = window;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidTrajectory(format!(
            "refinement step must be > 0, got {step}"
        )));
    }
    let s = t.samples();
    if s.is_empty() || !(lo <= hi) || lo < s[0].omega || hi > s[s.len() - 1].omega {
        return Err(Error::InvalidTrajectory(
            "interpolation window outside the sampled range".into(),
        ));
    }
    let grid = regular_grid(lo, hi, step);
    let values: Vec<Complex64> = match method {
        Interpolation::PiecewiseLinear => {
            if s.len() < 2 {
                return Err(Error::InsufficientSamples {
                    needed: 2,
                    got: s.len(),
                });
            }
            grid.iter()
                .map(|&w| t.value_at(w).expect("grid inside range"))
                .collect()
        }
        Interpolation::CubicFit => {
            let nodes = t.window(lo, hi);
            let fit = CubicFit::new(nodes)?;
            grid.iter().map(|&w| fit.eval(w)).collect()
        }
        Interpolation::Lagrange => {
            let nodes = t.window(lo, hi);
            if nodes.len() < 4 {
                return Err(Error::InsufficientSamples {
                    needed: 4,
                    got: nodes.len(),
                });
            }
            grid.iter().map(|&w| lagrange_eval(nodes, w)).collect()
        }
    };
    let mut out = DeterminantTrajectory::new(
        grid.into_iter()
            .zip(values)
            .map(|(omega, d)| TrajectorySample { omega, d })
            .collect(),
        t.form,
    )?;
    out.dropped = t.dropped.clone();
    Ok(out)
}

/// Barycentric Lagrange interpolation through all `nodes`.
pub fn lagrange_eval(nodes: &[TrajectorySample], w: f64) -> Complex64 {
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for (j, nj) in nodes.iter().enumerate() {
        let dx = w - nj.omega;
        if dx == 0.0 {
            return nj.d;
        }
        let mut wj = 1.0;
        for (k, nk) in nodes.iter().enumerate() {
            if k != j {
                wj /= nj.omega - nk.omega;
            }
        }
        let c = wj / dx;
        num += nj.d * c;
        den += c;
    }
    num / den
}

/// Least-squares cubic in a centred, scaled variable, fitted to re and im
/// separately.
pub struct CubicFit {
    centre: f64,
    half: f64,
    re: Vector4<f64>,
    im: Vector4<f64>,
}

pub const FIT_COND_LIMIT: f64 = 1e12;

impl CubicFit {
    pub fn new(nodes: &[TrajectorySample]) -> Result<Self> {
        if nodes.len() < 4 {
            return Err(Error::InsufficientSamples {
                needed: 4,
                got: nodes.len(),
            });
        }
        let lo = nodes[0].omega;
        let hi = nodes[nodes.len() - 1].omega;
        let centre = 0.5 * (lo + hi);
        let half = (0.5 * (hi - lo)).max(f64::MIN_POSITIVE);
        let mut ata = Matrix4::<f64>::zeros();
        let mut bre = Vector4::<f64>::zeros();
        let mut bim = Vector4::<f64>::zeros();
        for n in nodes {
            let x = (n.omega - centre) / half;
            let row = Vector4::new(1.0, x, x * x, x * x * x);
            ata += row * row.transpose();
            bre += row * n.d.re;
            bim += row * n.d.im;
        }
        let sv = ata.singular_values();
        let cond = sv.max() / sv.min();
        if !(cond <= FIT_COND_LIMIT) {
            return Err(Error::IllConditionedFit { cond });
        }
        let lu = ata.lu();
        let re = lu.solve(&bre).ok_or(Error::IllConditionedFit { cond })?;
        let im = lu.solve(&bim).ok_or(Error::IllConditionedFit { cond })?;
        Ok(CubicFit {
            centre,
            half,
            re,
            im,
        })
    }

    pub fn eval(&self, w: f64) -> Complex64 {
        let x = (w - self.centre) / self.half;
        let p = |c: &Vector4<f64>| c[0] + x * (c[1] + x * (c[2] + x * c[3]));
        Complex64::new(p(&self.re), p(&self.im))
    }

    /// `dD/dw` of the fitted cubic.
    pub fn derivative(&self, w: f64) -> Complex64 {
        let x = (w - self.centre) / self.half;
        let p = |c: &Vector4<f64>| (c[1] + x * (2.0 * c[2] + x * 3.0 * c[3])) / self.half;
        Complex64::new(p(&self.re), p(&self.im))
    }
}
