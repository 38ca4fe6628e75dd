//! Frequencies, 2x2 complex matrices, the white-box grid and closed-form
//! rational device models.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Default absolute floor under which a denominator counts as a pole hit.
pub const POLE_FLOOR: f64 = 1e-12;

/// Real-part tolerance for "on the imaginary axis".
pub const AXIS_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Signed angular frequency in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngularFrequency(pub f64);

impl AngularFrequency {
    pub fn from_hz(f: f64) -> Self {
        AngularFrequency(TWO_PI * f)
    }

    pub fn rad_s(self) -> f64 {
        self.0
    }

    pub fn hz(self) -> f64 {
        self.0 / TWO_PI
    }

    /// `s = j omega`
    pub fn s(self) -> Complex64 {
        Complex64::new(0.0, self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexMat2 {
    pub e11: Complex64,
    pub e12: Complex64,
    pub e21: Complex64,
    pub e22: Complex64,
}

impl ComplexMat2 {
    pub const fn new(e11: Complex64, e12: Complex64, e21: Complex64, e22: Complex64) -> Self {
        ComplexMat2 { e11, e12, e21, e22 }
    }

    pub const fn zeros() -> Self {
        ComplexMat2::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn identity() -> Self {
        ComplexMat2::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn diag(a: Complex64, b: Complex64) -> Self {
        ComplexMat2::new(a, ZERO, ZERO, b)
    }

    /// Matrix whose columns are `c1` and `c2`.
    pub fn from_columns(c1: [Complex64; 2], c2: [Complex64; 2]) -> Self {
        ComplexMat2::new(c1[0], c2[0], c1[1], c2[1])
    }

    pub fn column(&self, j: usize) -> [Complex64; 2] {
        match j {
            0 => [self.e11, self.e21],
            _ => [self.e12, self.e22],
        }
    }

    pub fn det(&self) -> Complex64 {
        self.e11 * self.e22 - self.e12 * self.e21
    }

    pub fn trace(&self) -> Complex64 {
        self.e11 + self.e22
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.e11.norm_sqr() + self.e12.norm_sqr() + self.e21.norm_sqr() + self.e22.norm_sqr())
            .sqrt()
    }

    pub fn scale(&self, k: Complex64) -> Self {
        ComplexMat2::new(self.e11 * k, self.e12 * k, self.e21 * k, self.e22 * k)
    }

    /// Inverse, or `None` when `|det| <= floor`.
    pub fn inverse(&self, floor: f64) -> Option<Self> {
        let d = self.det();
        if !(d.norm() > floor) {
            return None;
        }
        Some(ComplexMat2::new(
            self.e22 / d,
            -self.e12 / d,
            -self.e21 / d,
            self.e11 / d,
        ))
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.e11 * v[0] + self.e12 * v[1],
            self.e21 * v[0] + self.e22 * v[1],
        ]
    }

    pub fn is_finite(&self) -> bool {
        [self.e11, self.e12, self.e21, self.e22]
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.e11, self.e12, self.e21, self.e22]
    }

    /// Off-diagonal entries zeroed.
    pub fn diagonal_part(&self) -> Self {
        ComplexMat2::diag(self.e11, self.e22)
    }
}

impl Mul for ComplexMat2 {
    type Output = ComplexMat2;
    fn mul(self, r: ComplexMat2) -> ComplexMat2 {
        ComplexMat2::new(
            self.e11 * r.e11 + self.e12 * r.e21,
            self.e11 * r.e12 + self.e12 * r.e22,
            self.e21 * r.e11 + self.e22 * r.e21,
            self.e21 * r.e12 + self.e22 * r.e22,
        )
    }
}

impl Add for ComplexMat2 {
    type Output = ComplexMat2;
    fn add(self, r: ComplexMat2) -> ComplexMat2 {
        ComplexMat2::new(
            self.e11 + r.e11,
            self.e12 + r.e12,
            self.e21 + r.e21,
            self.e22 + r.e22,
        )
    }
}

impl Sub for ComplexMat2 {
    type Output = ComplexMat2;
    fn sub(self, r: ComplexMat2) -> ComplexMat2 {
        ComplexMat2::new(
            self.e11 - r.e11,
            self.e12 - r.e12,
            self.e21 - r.e21,
            self.e22 - r.e22,
        )
    }
}

/// Series R-L(-C) grid seen from the device terminals, physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    /// Ohm
    pub rs: f64,
    /// H, `L_s + L_T`
    pub l_total: f64,
    /// rad/s
    pub omega1: f64,
    /// F; `None` means no series capacitor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cs: Option<f64>,
}

impl GridParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidModel(m.to_string()));
        if !(self.rs.is_finite() && self.rs >= 0.0) {
            return bad("grid Rs must be finite and >= 0");
        }
        if !(self.l_total.is_finite() && self.l_total >= 0.0) {
            return bad("grid L_total must be finite and >= 0");
        }
        if !(self.omega1.is_finite() && self.omega1 > 0.0) {
            return bad("grid omega1 must be finite and > 0");
        }
        if let Some(c) = self.cs {
            if !(c.is_finite() && c > 0.0) {
                return bad("grid Cs must be finite and > 0 when present");
            }
        }
        Ok(())
    }

    /// Grid impedance channel as `num / den` in s, for exact composition.
    /// Index 0 is the direct channel, 1 the coupled channel at `s - j2w1`.
    pub fn impedance_polys(&self, channel: usize) -> (Poly, Poly) {
        let shift = if channel == 0 {
            ZERO
        } else {
            Complex64::new(0.0, 2.0 * self.omega1)
        };
        let x = Poly::linear(shift);
        let rl = &Poly::constant(Complex64::new(self.rs, 0.0))
            + &x.scale(Complex64::new(self.l_total, 0.0));
        match self.cs {
            None => (rl, Poly::one()),
            Some(c) => {
                let cx = x.scale(Complex64::new(c, 0.0));
                (&(&rl * &cx) + &Poly::one(), cx)
            }
        }
    }
}

/// Evaluate `Rs + x L [+ 1/(x Cs)]` for a single channel variable `x`.
fn channel_impedance(x: Complex64, p: &GridParams, omega: f64) -> Result<Complex64> {
    let mut z = Complex64::new(p.rs, 0.0) + x * p.l_total;
    if let Some(c) = p.cs {
        if x.norm() == 0.0 {
            return Err(Error::SingularFrequency { omega });
        }
        z += (x * c).inv();
    }
    Ok(z)
}

/// Diagonal grid impedance: direct channel at `s = j omega`, coupled
/// channel at `s2 = s - j2 omega1`.
pub fn grid_impedance(omega: f64, p: &GridParams) -> Result<ComplexMat2> {
    let s = Complex64::new(0.0, omega);
    let s2 = Complex64::new(0.0, omega - 2.0 * p.omega1);
    Ok(ComplexMat2::diag(
        channel_impedance(s, p, omega)?,
        channel_impedance(s2, p, omega)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntryPos {
    E11,
    E12,
    E21,
    E22,
}

impl fmt::Display for EntryPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EntryPos::E11 => "e11",
            EntryPos::E12 => "e12",
            EntryPos::E21 => "e21",
            EntryPos::E22 => "e22",
        };
        f.write_str(s)
    }
}

/// Proper rational function `num(s) / den(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalFunction {
    num: Poly,
    den: Poly,
}

impl RationalFunction {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidModel(
                "denominator is identically zero".into(),
            ));
        }
        if !num.is_finite() || !den.is_finite() {
            return Err(Error::InvalidModel("non-finite coefficient".into()));
        }
        if !num.is_zero() && num.degree() > den.degree() {
            return Err(Error::InvalidModel(format!(
                "improper rational function: numerator degree {} > denominator degree {}",
                num.degree(),
                den.degree()
            )));
        }
        Ok(RationalFunction { num, den })
    }

    pub fn constant(c: Complex64) -> Self {
        RationalFunction {
            num: Poly::constant(c),
            den: Poly::one(),
        }
    }

    pub fn zero() -> Self {
        RationalFunction::constant(ZERO)
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn eval_with_floor(&self, s: Complex64, floor: f64) -> Result<Complex64> {
        let d = self.den.eval(s);
        if !(d.norm() >= floor) {
            return Err(Error::PoleHit { s });
        }
        Ok(self.num.eval(s) / d)
    }

    /// Numerator and denominator scaled by the same nonzero constant.
    pub fn rescaled(&self, k: Complex64) -> Self {
        RationalFunction {
            num: self.num.scale(k),
            den: self.den.scale(k),
        }
    }
}

pub fn eval_rational(f: &RationalFunction, s: Complex64) -> Result<Complex64> {
    f.eval_with_floor(s, POLE_FLOOR)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalMatrix2 {
    pub e11: RationalFunction,
    pub e12: RationalFunction,
    pub e21: RationalFunction,
    pub e22: RationalFunction,
}

impl RationalMatrix2 {
    pub fn new(
        e11: RationalFunction,
        e12: RationalFunction,
        e21: RationalFunction,
        e22: RationalFunction,
    ) -> Self {
        RationalMatrix2 { e11, e12, e21, e22 }
    }

    pub fn identity() -> Self {
        RationalMatrix2::new(
            RationalFunction::constant(ONE),
            RationalFunction::zero(),
            RationalFunction::zero(),
            RationalFunction::constant(ONE),
        )
    }

    pub fn zeros() -> Self {
        RationalMatrix2::new(
            RationalFunction::zero(),
            RationalFunction::zero(),
            RationalFunction::zero(),
            RationalFunction::zero(),
        )
    }

    pub fn entries(&self) -> [(EntryPos, &RationalFunction); 4] {
        [
            (EntryPos::E11, &self.e11),
            (EntryPos::E12, &self.e12),
            (EntryPos::E21, &self.e21),
            (EntryPos::E22, &self.e22),
        ]
    }

    /// Same device with the coupling admittances removed.
    pub fn diagonal_truncation(&self) -> Self {
        RationalMatrix2::new(
            self.e11.clone(),
            RationalFunction::zero(),
            RationalFunction::zero(),
            self.e22.clone(),
        )
    }
}

pub fn eval_rational_matrix(m: &RationalMatrix2, omega: f64) -> Result<ComplexMat2> {
    let s = Complex64::new(0.0, omega);
    let ev = |pos: EntryPos, f: &RationalFunction| {
        eval_rational(f, s).map_err(|_| Error::EntryPoleHit { entry: pos, omega })
    };
    Ok(ComplexMat2::new(
        ev(EntryPos::E11, &m.e11)?,
        ev(EntryPos::E12, &m.e12)?,
        ev(EntryPos::E21, &m.e21)?,
        ev(EntryPos::E22, &m.e22)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfStability {
    pub stable: bool,
    pub offending_poles: Vec<Complex64>,
    /// Only filled when zeros were requested.
    pub offending_zeros: Vec<Complex64>,
}

/// Every denominator root (and, with `check_zeros`, numerator root) must
/// satisfy `Re < -tol`.
pub fn check_self_stable_with(
    m: &RationalMatrix2,
    check_zeros: bool,
    tol: f64,
) -> Result<SelfStability> {
    let mut poles = Vec::new();
    let mut zeros = Vec::new();
    for (_, f) in m.entries() {
        poles.extend(f.den().roots()?.into_iter().filter(|r| r.re >= -tol));
        if check_zeros && !f.num().is_zero() {
            zeros.extend(f.num().roots()?.into_iter().filter(|r| r.re >= -tol));
        }
    }
    Ok(SelfStability {
        stable: poles.is_empty() && zeros.is_empty(),
        offending_poles: poles,
        offending_zeros: zeros,
    })
}

pub fn check_self_stable(m: &RationalMatrix2) -> Result<SelfStability> {
    check_self_stable_with(m, false, AXIS_TOL)
}
