//! Dense polynomials with complex coefficients in ascending-power order.
//!
//! The frequency-coupled channel is evaluated at `s - j2w1`, so coefficients
//! are complex in general and conjugate symmetry cannot be assumed.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `coeffs[k]` multiplies `s^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == ZERO {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(ZERO);
        }
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn constant(c: Complex64) -> Self {
        Poly::new(vec![c])
    }

    pub fn zero() -> Self {
        Poly::constant(ZERO)
    }

    pub fn one() -> Self {
        Poly::constant(ONE)
    }

    /// `s - root`
    pub fn linear(root: Complex64) -> Self {
        Poly::new(vec![-root, ONE])
    }

    /// `gain * prod (s - r_k)`
    pub fn from_roots(gain: Complex64, roots: &[Complex64]) -> Self {
        roots
            .iter()
            .fold(Poly::constant(gain), |acc, &r| &acc * &Poly::linear(r))
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Drops leading terms that stay below `tol` times the largest term for
    /// every `|s| <= radius`. Exact degree drops computed in floating point
    /// leave such residue behind, and it shows up as huge spurious roots.
    pub fn trim_negligible(&self, radius: f64, tol: f64) -> Poly {
        let mut c = self.coeffs.clone();
        let term = |k: usize, x: Complex64| x.norm() * radius.powi(k as i32);
        let peak = c
            .iter()
            .enumerate()
            .map(|(k, &x)| term(k, x))
            .fold(0.0, f64::max);
        while c.len() > 1 && term(c.len() - 1, c[c.len() - 1]) <= tol * peak {
            c.pop();
        }
        Poly::new(c)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == ZERO
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs[self.coeffs.len() - 1]
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * s + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, k: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * k).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Roots by eigenvalues of the companion matrix, followed by a guarded
    /// Newton polish on the original coefficients.
    ///
    /// The variable is rescaled by a Fujiwara-type root bound first so the
    /// companion entries stay O(1) when the roots span several decades.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let n = self.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = self.leading();
        if n == 1 {
            return Ok(vec![-self.coeffs[0] / lead]);
        }

        let kappa = (0..n)
            .map(|k| (self.coeffs[k] / lead).norm().powf(1.0 / (n - k) as f64))
            .fold(0.0_f64, f64::max);
        let kappa = if kappa > 0.0 && kappa.is_finite() {
            kappa
        } else {
            1.0
        };

        // monic in t = s / kappa: t^n + sum c_k kappa^(k-n) t^k
        let mut companion = DMatrix::<Complex64>::zeros(n, n);
        for i in 1..n {
            companion[(i, i - 1)] = ONE;
        }
        for k in 0..n {
            let c = self.coeffs[k] / lead * kappa.powi(k as i32 - n as i32);
            companion[(k, n - 1)] = -c;
        }

        let schur = nalgebra::linalg::Schur::try_new(companion, f64::EPSILON, 10_000 + 200 * n)
            .ok_or(Error::RootFindingFailure { degree: n })?;
        let eig = schur
            .eigenvalues()
            .ok_or(Error::RootFindingFailure { degree: n })?;

        let deriv = self.derivative();
        Ok(eig
            .iter()
            .map(|&t| self.polish(&deriv, t * kappa))
            .collect())
    }

    fn polish(&self, deriv: &Poly, mut z: Complex64) -> Complex64 {
        let mut residual = self.eval(z).norm();
        for _ in 0..4 {
            let d = deriv.eval(z);
            if d == ZERO || residual == 0.0 {
                break;
            }
            let candidate = z - self.eval(z) / d;
            let r = self.eval(candidate).norm();
            if !(r < residual) {
                break;
            }
            z = candidate;
            residual = r;
        }
        z
    }
}

impl Default for Poly {
    fn default() -> Self {
        Poly::zero()
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(ZERO)
                        + rhs.coeffs.get(k).copied().unwrap_or(ZERO)
                })
                .collect(),
        )
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = vec![ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}
