//! Synthetic closed-form devices with planted determinant zeros.
//!
//! A device is built from two first-order factors `f_i = k_i (s - z_i)/(s - p_i)`
//! and a constant coupling matrix `P`:
//!
//! `M = P diag(f1, f2) P^-1`, `Y = Z_grid^-1 (M - I)`
//!
//! so `I + Z_grid Y = M` and `D = det M = f1 f2` exactly. The zeros of `D`
//! are `z1`, `z2`, independent of the coupling, while the diagonal truncation
//! gives `D = M11 M22`, which depends on it.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GridParams, RationalFunction, RationalMatrix2, TWO_PI};
use crate::poly::Poly;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub k: Complex64,
    pub zero: Complex64,
    pub pole: Complex64,
}

impl Factor {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.k * (s - self.zero) / (s - self.pole)
    }

    fn num(&self) -> Poly {
        Poly::linear(self.zero).scale(self.k)
    }

    fn den(&self) -> Poly {
        Poly::linear(self.pole)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactoredDevice {
    pub f1: Factor,
    pub f2: Factor,
    /// Row-major coupling matrix `P`.
    pub coupling: [Complex64; 4],
}

impl FactoredDevice {
    pub fn planted_zeros(&self) -> [Complex64; 2] {
        [self.f1.zero, self.f2.zero]
    }

    pub fn planted_rhp(&self) -> usize {
        self.planted_zeros().iter().filter(|z| z.re > 0.0).count()
    }

    /// Planted zero closest to the imaginary axis.
    pub fn critical_zero(&self) -> Complex64 {
        let [a, b] = self.planted_zeros();
        if a.re.abs() <= b.re.abs() {
            a
        } else {
            b
        }
    }

    /// Exact rational admittance against `grid`. Entries in one row share
    /// one denominator polynomial.
    pub fn admittance(&self, grid: &GridParams) -> Result<RationalMatrix2> {
        let [p11, p12, p21, p22] = self.coupling;
        let det = p11 * p22 - p12 * p21;
        if det.norm() < 1e-12 {
            return Err(Error::InvalidModel("coupling matrix is singular".into()));
        }
        // M_ij = (alpha_ij f1 + beta_ij f2)
        let alpha = [p11 * p22, -p11 * p12, p21 * p22, -p21 * p12].map(|x| x / det);
        let beta = [-p12 * p21, p12 * p11, -p22 * p21, p22 * p11].map(|x| x / det);
        let a = &self.f1.num() * &self.f2.den();
        let b = &self.f2.num() * &self.f1.den();
        let q = &self.f1.den() * &self.f2.den();

        let mut entries = Vec::with_capacity(4);
        for row in 0..2 {
            let (zn, zd) = grid.impedance_polys(row);
            let den = &q * &zn;
            for col in 0..2 {
                let k = 2 * row + col;
                let mut m = &a.scale(alpha[k]) + &b.scale(beta[k]);
                if row == col {
                    m = &m - &q;
                }
                entries.push(RationalFunction::new(&m * &zd, den.clone())?);
            }
        }
        let mut it = entries.into_iter();
        let mut next = || it.next().expect("four entries");
        Ok(RationalMatrix2::new(next(), next(), next(), next()))
    }
}

/// Grid used by every synthetic fixture: 0.05 Ohm, 2 mH, 50 Hz, no capacitor.
pub fn standard_grid() -> GridParams {
    GridParams {
        rs: 0.05,
        l_total: 0.002,
        omega1: 100.0 * PI,
        cs: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSystem {
    pub id: String,
    pub device: FactoredDevice,
    pub planted_rhp: usize,
}

/// Gain that makes `f'(z)` about `-slope e^{-j phi}` while keeping the
/// zero of `f - 1` at `z - e^{j phi} / slope`, in the left half-plane.
fn gain_for_slope(zero: Complex64, pole: Complex64, slope: f64, phi: f64) -> Complex64 {
    c(1.0, 0.0) - (zero - pole) * slope / Complex64::from_polar(1.0, phi)
}

/// Smallest angle between the real axis and the direction in which `D`
/// passes the critical zero. The estimate extrapolates from where `D` meets
/// the real axis, which drifts away from the zero as this angle closes.
pub fn crossing_angle(dev: &FactoredDevice) -> f64 {
    let z = dev.f1.zero;
    let velocity = c(0.0, 1.0) * dev.f1.k / (z - dev.f1.pole) * dev.f2.eval(z);
    let a = velocity.arg().abs();
    a.min(PI - a)
}

/// Suite systems cross the real axis at least this steeply (about 27 deg).
pub const MIN_CROSSING_ANGLE: f64 = 0.47;

/// One random system with `n_rhp` (0, 1 or 2) zeros of `D` in the RHP.
///
/// The critical zero has `|sigma|` log-uniform in [0.1, 5] at 1..900 Hz with
/// a slope of `0.02 / max(|sigma|, 0.2)`, so `|D|` at the crossing stays near
/// 0.02 whatever the damping. Draws where `D` meets the real axis at less
/// than [`MIN_CROSSING_ANGLE`] are redrawn. The second zero sits at least 1500 rad/s away
/// with `|sigma|` in [20, 60]. Poles lie 400..1200 1/s into the left half-plane
/// and coupling entries are 0.02..0.1 in magnitude.
pub fn random_system<R: Rng + ?Sized>(rng: &mut R, n_rhp: usize) -> FactoredDevice {
    loop {
        let dev = draw(rng, n_rhp);
        if crossing_angle(&dev) >= MIN_CROSSING_ANGLE {
            return dev;
        }
    }
}

fn draw<R: Rng + ?Sized>(rng: &mut R, n_rhp: usize) -> FactoredDevice {
    let wo = rng.random_range(1.0..900.0) * TWO_PI;
    let mag = (rng.random_range(0.1f64.ln()..5.0f64.ln())).exp();
    let sigma = if n_rhp > 0 { mag } else { -mag };
    let z1 = c(sigma, wo);
    let p1 = c(
        -rng.random_range(400.0..1200.0),
        wo + rng.random_range(-300.0..300.0),
    );
    let phi1 = rng.random_range(-0.5..0.5);

    let s2 = rng.random_range(20.0..60.0) * if n_rhp == 2 { 1.0 } else { -1.0 };
    let w2 = loop {
        let w = rng.random_range(-900.0..900.0) * TWO_PI;
        if (w - wo).abs() > 1500.0 {
            break w;
        }
    };
    let z2 = c(s2, w2);
    let p2 = c(
        -rng.random_range(400.0..1200.0),
        w2 + rng.random_range(-300.0..300.0),
    );
    let f2 = Factor {
        k: gain_for_slope(
            z2,
            p2,
            1.0 / rng.random_range(80.0..150.0),
            rng.random_range(-0.5..0.5),
        ),
        zero: z2,
        pole: p2,
    };
    let k1 = gain_for_slope(z1, p1, 0.02 / sigma.abs().max(0.2), phi1);

    let mut coupling =
        || Complex64::from_polar(rng.random_range(0.02..0.1), rng.random_range(0.0..TWO_PI));
    let (c12, c21) = (coupling(), coupling());
    FactoredDevice {
        f1: Factor {
            k: k1,
            zero: z1,
            pole: p1,
        },
        f2,
        coupling: [c(1.0, 0.0), c12, c21, c(1.0, 0.0)],
    }
}

/// `n` systems cycling through 0, 1 and 2 RHP zeros.
pub fn suite(n: usize, seed: u64) -> Vec<SuiteSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let n_rhp = k % 3;
            SuiteSystem {
                id: format!("suite-{k:03}"),
                device: random_system(&mut rng, n_rhp),
                planted_rhp: n_rhp,
            }
        })
        .collect()
}

pub const SUITE_SEED: u64 = 20_240_611;

fn far_factor() -> Factor {
    let z = c(-40.0, -2400.0);
    let p = c(-600.0, -2500.0);
    Factor {
        k: gain_for_slope(z, p, 0.01, 0.2),
        zero: z,
        pole: p,
    }
}

fn weak_coupling() -> [Complex64; 4] {
    [
        c(1.0, 0.0),
        Complex64::from_polar(0.05, 0.9),
        Complex64::from_polar(0.04, -2.1),
        c(1.0, 0.0),
    ]
}

/// Critical zero `sigma + j omega` with the design slope rule and a far
/// second factor.
pub fn single_mode(sigma: f64, omega: f64) -> FactoredDevice {
    let z1 = c(sigma, omega);
    let p1 = c(-700.0, omega + 120.0);
    let f2 = far_factor();
    FactoredDevice {
        f1: Factor {
            k: gain_for_slope(z1, p1, 0.02 / sigma.abs().max(0.2), 0.1),
            zero: z1,
            pole: p1,
        },
        f2,
        coupling: weak_coupling(),
    }
}

/// Near-critical mode at 55.2 Hz with a pole 90 1/s directly to its left.
/// The pole bends the trajectory enough that a 2 Hz sweep misplaces the
/// critical zero across the imaginary axis.
pub fn interval_study(sigma: f64) -> FactoredDevice {
    let z1 = c(sigma, 55.2 * TWO_PI);
    FactoredDevice {
        f1: Factor {
            k: c(1.0, 0.0),
            zero: z1,
            pole: z1 - 90.0,
        },
        f2: Factor {
            k: c(1.0, 0.0),
            zero: c(-40.0, -3000.0),
            pole: c(-800.0, -3000.0),
        },
        coupling: weak_coupling(),
    }
}

/// Stable counterpart of [`interval_study`] whose bending comes from a
/// zero, so the coarse sweep errs towards instability.
pub fn interval_study_stable() -> FactoredDevice {
    let z1 = c(-0.17, 55.2 * TWO_PI);
    FactoredDevice {
        f1: Factor {
            k: c(1.0, 0.0),
            zero: z1,
            pole: c(-700.0, z1.im),
        },
        f2: Factor {
            k: c(1.0, 0.0),
            zero: z1 - 90.0,
            pole: c(-900.0, z1.im),
        },
        coupling: weak_coupling(),
    }
}

/// Unstable with the full coupling matrix, stable once the off-diagonal
/// admittances are dropped. The product `alpha beta` of the asymmetric
/// coupling moves the zero of `M11` near `z1` to `Re = -0.3`.
pub fn off_diagonal_misjudgment() -> FactoredDevice {
    let z1 = c(1.0, 55.0 * TWO_PI);
    let p1 = c(-700.0, 400.0);
    let z2 = c(-40.0, 2400.0);
    let p2 = c(-500.0, 2500.0);
    let f2 = Factor {
        k: gain_for_slope(z2, p2, 0.01, 0.0),
        zero: z2,
        pole: p2,
    };
    let f1 = Factor {
        k: gain_for_slope(z1, p1, 0.02, 0.0),
        zero: z1,
        pole: p1,
    };
    let f1_slope = f1.k / (z1 - p1);
    let gamma = -(z1.re + 0.3) * f1_slope / f2.eval(z1);
    let alpha = Complex64::from_polar(0.2, 0.7);
    FactoredDevice {
        f1,
        f2,
        coupling: [c(1.0, 0.0), alpha, gamma / alpha, c(1.0, 0.0)],
    }
}

/// Trajectory never crosses the real axis: `D` stays in the upper half-plane.
pub fn far_from_critical() -> FactoredDevice {
    FactoredDevice {
        f1: Factor {
            k: c(0.0, 5.0),
            zero: c(-300.0, 0.0),
            pole: c(-200.0, 0.0),
        },
        f2: Factor {
            k: c(1.0, 0.0),
            zero: c(-350.0, 0.0),
            pole: c(-250.0, 0.0),
        },
        coupling: weak_coupling(),
    }
}

/// Low-frequency trio with damping -0.26, 1.46 and 2.75 at about 4.6 Hz.
pub fn experiment_trio() -> Vec<(String, FactoredDevice)> {
    [("cs-1000uF", -0.26), ("cs-800uF", 1.46), ("cs-700uF", 2.75)]
        .iter()
        .map(|&(name, sigma)| (name.to_string(), single_mode(sigma, 4.6 * TWO_PI)))
        .collect()
}

/// Five operating points, three stable and two unstable.
pub fn wind_speed_batch() -> Vec<(String, FactoredDevice)> {
    [
        ("12ms", -1.2, 31.0),
        ("10ms", -0.7, 34.0),
        ("8ms", -0.3, 37.0),
        ("6ms", 0.4, 41.0),
        ("4ms", 1.1, 46.0),
    ]
    .iter()
    .map(|&(name, sigma, f_hz)| (name.to_string(), single_mode(sigma, f_hz * TWO_PI)))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_self_stable, eval_rational_matrix, grid_impedance};
    use crate::verify::oracle_rhp_zeros;

    fn det_at(dev: &FactoredDevice, grid: &GridParams, w: f64) -> Complex64 {
        let y = eval_rational_matrix(&dev.admittance(grid).unwrap(), w).unwrap();
        let z = grid_impedance(w, grid).unwrap();
        crate::kernels::return_difference(&z.entries(), &y.entries())
    }

    #[test]
    fn determinant_is_product_of_factors() {
        let g = standard_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 0..3 {
            let dev = random_system(&mut rng, n);
            for w in [-3000.0, -10.0, 345.0, 5000.0] {
                let s = c(0.0, w);
                let want = dev.f1.eval(s) * dev.f2.eval(s);
                assert!((det_at(&dev, &g, w) - want).norm() < 1e-9 * want.norm());
            }
        }
    }

    #[test]
    fn suite_devices_are_self_stable() {
        let g = standard_grid();
        for s in suite(30, 5) {
            assert!(
                check_self_stable(&s.device.admittance(&g).unwrap())
                    .unwrap()
                    .stable,
                "{}",
                s.id
            );
        }
    }

    #[test]
    fn oracle_sees_planted_zeros() {
        let g = standard_grid();
        for s in suite(12, 9) {
            let r = oracle_rhp_zeros(&s.device.admittance(&g).unwrap(), &g).unwrap();
            assert_eq!(r.rhp_zero_count, s.planted_rhp, "{}", s.id);
            let crit = r.critical_zero.unwrap();
            assert!((crit - s.device.critical_zero()).norm() < 1e-6 * (1.0 + crit.norm()));
        }
    }

    #[test]
    fn misjudgment_fixture_truncation_is_stable() {
        let g = standard_grid();
        let y = off_diagonal_misjudgment().admittance(&g).unwrap();
        assert_eq!(oracle_rhp_zeros(&y, &g).unwrap().rhp_zero_count, 1);
        assert_eq!(
            oracle_rhp_zeros(&y.diagonal_truncation(), &g)
                .unwrap()
                .rhp_zero_count,
            0
        );
    }

    #[test]
    fn far_device_stays_in_upper_half_plane() {
        let g = standard_grid();
        let dev = far_from_critical();
        for k in -1000..=1000 {
            assert!(det_at(&dev, &g, TWO_PI * k as f64).im > 0.0);
        }
    }

    #[test]
    fn unit_gain_factors_make_impedance_form_improper() {
        use crate::verify::{det_y_rhp_zeros, impedance_form_is_proper};
        let g = standard_grid();
        for sys in suite(9, SUITE_SEED) {
            let y = sys.device.admittance(&g).unwrap();
            assert!(impedance_form_is_proper(&y, &g).unwrap(), "{}", sys.id);
            assert!(det_y_rhp_zeros(&y).unwrap().is_empty(), "{}", sys.id);
        }
        let y = interval_study(0.26).admittance(&g).unwrap();
        assert!(!impedance_form_is_proper(&y, &g).unwrap());
        // f - 1 has no finite zero, and round-off must not invent one
        assert!(det_y_rhp_zeros(&y).unwrap().is_empty());
    }
}
