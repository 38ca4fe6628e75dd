//! Independent references: generalized Nyquist over eigenvalue loci, an
//! exact polynomial oracle for closed-form systems, and the
//! admittance/impedance consistency check.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::critical::CriticalPoleEstimate;
use crate::error::{Error, Result};
use crate::idta::StabilityVerdict;
use crate::kernels;
use crate::model::{grid_impedance, GridParams, RationalMatrix2, AXIS_TOL};
use crate::pipeline::{analyze_table, AnalysisOptions};
use crate::poly::Poly;
use crate::sweep::{sweep, FrequencyPlan, FrequencyResponseTable, SweepOptions};
use crate::trajectory::{self, Form};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenLoci {
    pub omegas: Vec<f64>,
    pub traces: [Vec<Complex64>; 2],
}

fn pair_cost(a: [Complex64; 2], b: [Complex64; 2]) -> f64 {
    (a[0] - b[0]).norm() + (a[1] - b[1]).norm()
}

/// Orders `next` to continue `prev` with the least total jump.
fn continue_pair(prev: [Complex64; 2], next: (Complex64, Complex64)) -> [Complex64; 2] {
    let keep = [next.0, next.1];
    let swap = [next.1, next.0];
    if pair_cost(prev, swap) < pair_cost(prev, keep) {
        swap
    } else {
        keep
    }
}

/// Loci of the eigenvalues of `G = Z_grid Y`, paired for continuity.
pub fn eigen_loci(grid: &GridParams, table: &FrequencyResponseTable) -> Result<EigenLoci> {
    let mut omegas = Vec::with_capacity(table.len());
    let mut raw = Vec::with_capacity(table.len());
    for r in table.rows() {
        let w = r.omega();
        let z = grid_impedance(w, grid)?;
        omegas.push(w);
        raw.push(kernels::eigenvalues(&z.entries(), &r.y.entries()));
    }
    Ok(pair_eigenvalues(omegas, &raw))
}

pub fn pair_eigenvalues(omegas: Vec<f64>, raw: &[(Complex64, Complex64)]) -> EigenLoci {
    let mut t1 = Vec::with_capacity(raw.len());
    let mut t2 = Vec::with_capacity(raw.len());
    let mut prev: Option<[Complex64; 2]> = None;
    for &e in raw {
        let p = match prev {
            None => [e.0, e.1],
            Some(pr) => continue_pair(pr, e),
        };
        t1.push(p[0]);
        t2.push(p[1]);
        prev = Some(p);
    }
    EigenLoci {
        omegas,
        traces: [t1, t2],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GncResult {
    /// Net clockwise encirclements of (-1, 0) by both loci.
    pub winding: i64,
    pub stable: bool,
    /// Accumulated angle in turns, counter-clockwise positive.
    pub turns: f64,
    /// Clockwise crossings of the ray `(-inf, -1)` minus counter-clockwise ones.
    pub ray_winding: i64,
    pub undersampled: bool,
}

pub const CRITICAL_POINT_TOL: f64 = 1e-9;

/// Winding of both loci around `-1`, each closed from its last sample back
/// to the first (ends re-paired by distance).
pub fn gnc_verdict(loci: &EigenLoci) -> Result<GncResult> {
    let n = loci.omegas.len();
    if n == 0 {
        return Err(Error::InvalidTrajectory("eigenvalue loci are empty".into()));
    }
    let one = Complex64::new(1.0, 0.0);
    for (k, &w) in loci.omegas.iter().enumerate() {
        for tr in &loci.traces {
            if (tr[k] + one).norm() < CRITICAL_POINT_TOL {
                return Err(Error::PassThroughCriticalPoint { omega: w });
            }
        }
    }
    let mut total = 0.0;
    let mut ray = 0i64;
    let mut step = |a: Complex64, b: Complex64| {
        let (u, v) = (a + one, b + one);
        total += (v / u).arg();
        if (u.im < 0.0) != (v.im < 0.0) {
            let t = u.im / (u.im - v.im);
            if u.re + t * (v.re - u.re) < 0.0 {
                // moving from below to above the negative axis is clockwise
                ray += if v.im > u.im { 1 } else { -1 };
            }
        }
    };
    for tr in &loci.traces {
        for k in 0..n - 1 {
            step(tr[k], tr[k + 1]);
        }
    }
    let ends = [loci.traces[0][n - 1], loci.traces[1][n - 1]];
    let starts = continue_pair(ends, (loci.traces[0][0], loci.traces[1][0]));
    step(ends[0], starts[0]);
    step(ends[1], starts[1]);

    let turns = total / (2.0 * PI);
    let winding = (-turns).round() as i64;
    Ok(GncResult {
        winding,
        stable: winding == 0,
        turns,
        ray_winding: ray,
        undersampled: (ray as f64 + turns).abs() > 0.5,
    })
}

pub fn gnc_from_table(grid: &GridParams, table: &FrequencyResponseTable) -> Result<GncResult> {
    gnc_verdict(&eigen_loci(grid, table)?)
}

/// `num / den` of the determinant of a 2x2 matrix of rational entries
/// `n[k] / d[k]`, row-major. Uses the shared denominator when the diagonal
/// and off-diagonal products coincide exactly.
pub fn det_polys(n: &[Poly; 4], d: &[Poly; 4]) -> (Poly, Poly) {
    let diag_num = &n[0] * &n[3];
    let diag_den = &d[0] * &d[3];
    if n[1].is_zero() || n[2].is_zero() {
        return (diag_num, diag_den);
    }
    let off_num = &n[1] * &n[2];
    let off_den = &d[1] * &d[2];
    if diag_den == off_den {
        return (&diag_num - &off_num, diag_den);
    }
    (
        &(&diag_num * &off_den) - &(&off_num * &diag_den),
        &diag_den * &off_den,
    )
}

/// `det(I + Z_grid(s) Y(s))` as an exact polynomial ratio.
pub fn determinant_polys(device: &RationalMatrix2, grid: &GridParams) -> (Poly, Poly) {
    let z = [grid.impedance_polys(0), grid.impedance_polys(1)];
    let ys = [&device.e11, &device.e12, &device.e21, &device.e22];
    let mut n: [Poly; 4] = Default::default();
    let mut d: [Poly; 4] = Default::default();
    for k in 0..4 {
        let (zn, zd) = &z[k / 2];
        let gn = zn * ys[k].num();
        let gd = zd * ys[k].den();
        n[k] = if k == 0 || k == 3 { &gd + &gn } else { gn };
        d[k] = gd;
    }
    det_polys(&n, &d)
}

pub const CANCEL_REL_TOL: f64 = 1e-6;
pub const CONDITIONING_DEGREE: usize = 40;

/// Numerator roots that are not cancelled by a denominator root, plus the
/// number cancelled.
pub fn genuine_zeros(num: &Poly, den: &Poly) -> Result<(Vec<Complex64>, usize)> {
    let poles = den.roots()?;
    let radius = 10.0 * poles.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let mut zeros = num.trim_negligible(radius, 1e-12).roots()?;
    let mut cancelled = 0;
    for p in poles {
        let best = zeros
            .iter()
            .enumerate()
            .map(|(k, z)| (k, (z - p).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((k, dist)) = best {
            if dist <= CANCEL_REL_TOL * (1.0 + p.norm()) {
                zeros.swap_remove(k);
                cancelled += 1;
            }
        }
    }
    Ok((zeros, cancelled))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub rhp_zero_count: usize,
    /// Zeros with `Re > 0`.
    pub zeros: Vec<Complex64>,
    /// Every zero of `D` after pole-zero cancellation.
    pub all_zeros: Vec<Complex64>,
    pub numerator_degree: usize,
    pub cancelled: usize,
    /// Zero closest to the imaginary axis.
    pub critical_zero: Option<Complex64>,
    pub warnings: Vec<String>,
}

pub fn oracle_rhp_zeros(device: &RationalMatrix2, grid: &GridParams) -> Result<OracleReport> {
    let (num, den) = determinant_polys(device, grid);
    if num.is_zero() {
        return Err(Error::DegenerateNumerator);
    }
    let mut warnings = Vec::new();
    if num.degree() > CONDITIONING_DEGREE {
        warnings.push(format!(
            "numerator degree {} > {CONDITIONING_DEGREE}; roots may be ill-conditioned",
            num.degree()
        ));
    }
    let (all, cancelled) = genuine_zeros(&num, &den)?;
    let zeros: Vec<Complex64> = all.iter().copied().filter(|z| z.re > AXIS_TOL).collect();
    let critical_zero = all
        .iter()
        .copied()
        .min_by(|a, b| a.re.abs().total_cmp(&b.re.abs()));
    Ok(OracleReport {
        rhp_zero_count: zeros.len(),
        zeros,
        all_zeros: all,
        numerator_degree: num.degree(),
        cancelled,
        critical_zero,
        warnings,
    })
}

/// RHP zeros of `det Y`. The impedance form divides by `det Y`, so such
/// zeros turn into RHP poles and the zero-pole balance no longer holds.
pub fn det_y_rhp_zeros(device: &RationalMatrix2) -> Result<Vec<Complex64>> {
    let ys = [&device.e11, &device.e12, &device.e21, &device.e22];
    let n = ys.map(|f| f.num().clone());
    let d = ys.map(|f| f.den().clone());
    let (num, den) = det_polys(&n, &d);
    if num.is_zero() {
        return Err(Error::DegenerateNumerator);
    }
    let (z, _) = genuine_zeros(&num, &den)?;
    Ok(z.into_iter().filter(|z| z.re > AXIS_TOL).collect())
}

/// `deg num - deg den` once round-off residue in the leading terms is gone.
fn excess_degree(num: &Poly, den: &Poly) -> Result<i64> {
    let radius = 10.0 * den.roots()?.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let deg = |p: &Poly| p.trim_negligible(radius, 1e-12).degree() as i64;
    Ok(deg(num) - deg(den))
}

/// Whether `det(I + Y^-1 Z_grid^-1) = D / (det Y det Z_grid)` stays bounded
/// as `|s|` grows. When it does not, the finite sweep misses the part of its
/// contour at infinity and the impedance-form winding is meaningless.
pub fn impedance_form_is_proper(device: &RationalMatrix2, grid: &GridParams) -> Result<bool> {
    let (dn, dd) = determinant_polys(device, grid);
    let ys = [&device.e11, &device.e12, &device.e21, &device.e22];
    let (yn, yd) = det_polys(&ys.map(|f| f.num().clone()), &ys.map(|f| f.den().clone()));
    if yn.is_zero() || dn.is_zero() {
        return Err(Error::DegenerateNumerator);
    }
    let mut z = 0;
    for ch in 0..2 {
        let (zn, zd) = grid.impedance_polys(ch);
        z += excess_degree(&zn, &zd)?;
    }
    Ok(excess_degree(&dn, &dd)? - excess_degree(&yn, &yd)? - z <= 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleTolerance {
    pub sigma_rel: f64,
    pub sigma_abs: f64,
    /// rad/s
    pub omega_abs: f64,
}

impl Default for PoleTolerance {
    fn default() -> Self {
        PoleTolerance {
            sigma_rel: 0.05,
            sigma_abs: 0.01,
            omega_abs: 0.5,
        }
    }
}

impl PoleTolerance {
    pub fn accepts(&self, reference: Complex64, other: Complex64) -> bool {
        (other.re - reference.re).abs() <= self.sigma_rel * reference.re.abs() + self.sigma_abs
            && (other.im - reference.im).abs() <= self.omega_abs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormSummary {
    pub verdict: StabilityVerdict,
    pub critical: Option<CriticalPoleEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub admittance: FormSummary,
    pub impedance: FormSummary,
    /// Frequencies dropped from the impedance form, rad/s.
    pub dropped: Vec<f64>,
    /// `det Y` has RHP zeros, so the impedance form is not expected to agree.
    pub det_y_rhp_zeros: Vec<Complex64>,
    pub impedance_proper: bool,
    pub agree: bool,
    pub mismatches: Vec<String>,
}

pub fn compare_forms(a: &FormSummary, b: &FormSummary, tol: &PoleTolerance) -> Vec<String> {
    let mut m = Vec::new();
    if a.verdict.stable != b.verdict.stable {
        m.push(format!(
            "verdict: admittance stable={} impedance stable={}",
            a.verdict.stable, b.verdict.stable
        ));
    }
    if a.verdict.winding != b.verdict.winding {
        m.push(format!(
            "winding: admittance {} impedance {}",
            a.verdict.winding, b.verdict.winding
        ));
    }
    match (&a.critical, &b.critical) {
        (Some(x), Some(y)) if !tol.accepts(x.zero(), y.zero()) => {
            m.push(format!(
                "critical pole: admittance {} impedance {}",
                x.zero(),
                y.zero()
            ));
        }
        (Some(_), None) | (None, Some(_)) => m.push("critical pole found by only one form".into()),
        _ => {}
    }
    m
}

/// Noiseless sweep of `device` over `plan`, then APSAM in both forms.
pub fn consistency_check(
    device: &RationalMatrix2,
    grid: &GridParams,
    plan: &FrequencyPlan,
    opts: &AnalysisOptions,
    tol: &PoleTolerance,
) -> Result<ConsistencyReport> {
    let table = sweep(device, plan, &SweepOptions::default())?;
    let a = analyze_table(grid, &table, Form::Admittance, opts)?;
    let z = analyze_table(grid, &table, Form::Impedance, opts)?;
    let admittance = FormSummary {
        verdict: a.verdict,
        critical: a.critical,
    };
    let impedance = FormSummary {
        verdict: z.verdict,
        critical: z.critical,
    };
    let mismatches = compare_forms(&admittance, &impedance, tol);
    Ok(ConsistencyReport {
        agree: mismatches.is_empty(),
        mismatches,
        dropped: z.trajectory.dropped,
        det_y_rhp_zeros: det_y_rhp_zeros(device)?,
        impedance_proper: impedance_form_is_proper(device, grid)?,
        admittance,
        impedance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub points: usize,
    pub apsam_s: f64,
    pub gnc_s: f64,
    pub apsam_winding: i64,
    pub gnc_winding: i64,
}

/// Best-of-`repeats` wall clock for trajectory + IDTA against loci + GNC
/// winding on the same table.
pub fn compare_timing(
    grid: &GridParams,
    table: &FrequencyResponseTable,
    repeats: usize,
) -> Result<TimingReport> {
    let mut best_a = Duration::MAX;
    let mut best_g = Duration::MAX;
    let mut wa = 0;
    let mut wg = 0;
    for _ in 0..repeats.max(1) {
        let t0 = Instant::now();
        let t = trajectory::return_difference_determinant(grid, table)?;
        let sc = trajectory::detect_crossings_closed(&t)?;
        let v = crate::idta::assess(&crate::idta::build_idta(&sc.crossings)?)?;
        best_a = best_a.min(t0.elapsed());
        wa = v.winding;

        let t0 = Instant::now();
        let g = gnc_from_table(grid, table)?;
        best_g = best_g.min(t0.elapsed());
        wg = g.winding;
    }
    Ok(TimingReport {
        points: table.len(),
        apsam_s: best_a.as_secs_f64(),
        gnc_s: best_g.as_secs_f64(),
        apsam_winding: wa,
        gnc_winding: wg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ComplexMat2, RationalFunction, TWO_PI};
    use crate::sweep::{TableMeta, TableRow};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn loci_from(omegas: &[f64], g: impl Fn(f64) -> ComplexMat2) -> EigenLoci {
        let ident = ComplexMat2::identity().entries();
        let raw: Vec<_> = omegas
            .iter()
            .map(|&w| kernels::eigenvalues(&ident, &g(w).entries()))
            .collect();
        pair_eigenvalues(omegas.to_vec(), &raw)
    }

    #[test]
    fn diagonal_loci_are_entries() {
        let w: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let l = loci_from(&w, |w| ComplexMat2::diag(c(w, 1.0), c(-3.0, w * w)));
        for (k, &wk) in w.iter().enumerate() {
            let set = [l.traces[0][k], l.traces[1][k]];
            assert!(
                set.contains(&c(wk, 1.0)) || set.iter().any(|x| (x - c(wk, 1.0)).norm() < 1e-12)
            );
            assert!(set.iter().any(|x| (x - c(-3.0, wk * wk)).norm() < 1e-12));
        }
    }

    #[test]
    fn swap_matrix_eigenvalues() {
        let g = ComplexMat2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
        let l = loci_from(&[0.0, 1.0], |_| g);
        let mut v = [l.traces[0][0].re, l.traces[1][0].re];
        v.sort_by(f64::total_cmp);
        assert_eq!(v, [-1.0, 1.0]);
    }

    #[test]
    fn constant_zero_loci_stable() {
        let l = loci_from(&[0.0, 1.0, 2.0], |_| ComplexMat2::zeros());
        let r = gnc_verdict(&l).unwrap();
        assert!(r.stable);
        assert_eq!(r.winding, 0);
    }

    #[test]
    fn circle_around_critical_point() {
        let w: Vec<f64> = (0..200).map(|k| k as f64 / 200.0).collect();
        let l = loci_from(&w, |w| {
            let p = c(-1.0, 0.0) + Complex64::from_polar(0.5, -TWO_PI * w);
            ComplexMat2::diag(p, c(0.0, 0.0))
        });
        let r = gnc_verdict(&l).unwrap();
        assert_eq!(r.winding, 1);
        assert!(!r.stable);
        assert_eq!(r.ray_winding, 1);
        assert!(!r.undersampled);
    }

    #[test]
    fn critical_point_hit() {
        let l = loci_from(&[0.0, 1.0], |_| {
            ComplexMat2::diag(c(-1.0, 0.0), c(0.0, 0.0))
        });
        assert!(matches!(
            gnc_verdict(&l),
            Err(Error::PassThroughCriticalPoint { .. })
        ));
    }

    #[test]
    fn oracle_open_circuit() {
        let g = GridParams {
            rs: 0.05,
            l_total: 0.002,
            omega1: 100.0 * PI,
            cs: None,
        };
        let r = oracle_rhp_zeros(&RationalMatrix2::zeros(), &g).unwrap();
        assert_eq!(r.rhp_zero_count, 0);
        assert!(r.all_zeros.is_empty());
    }

    #[test]
    fn oracle_planted_root() {
        // resistive unit grid, Y11 = (s-1)(s+2)/(s+3)^2 - 1 gives D = (s-1)(s+2)/(s+3)^2
        let g = GridParams {
            rs: 1.0,
            l_total: 0.0,
            omega1: 100.0 * PI,
            cs: None,
        };
        let den = Poly::from_roots(c(1.0, 0.0), &[c(-3.0, 0.0), c(-3.0, 0.0)]);
        let target = Poly::from_roots(c(1.0, 0.0), &[c(1.0, 0.0), c(-2.0, 0.0)]);
        let y11 = RationalFunction::new(&target - &den, den).unwrap();
        let dev = RationalMatrix2::new(
            y11,
            RationalFunction::zero(),
            RationalFunction::zero(),
            RationalFunction::zero(),
        );
        let r = oracle_rhp_zeros(&dev, &g).unwrap();
        assert_eq!(r.rhp_zero_count, 1);
        assert!((r.zeros[0] - c(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn determinant_polys_match_pointwise() {
        let g = GridParams {
            rs: 0.05,
            l_total: 0.002,
            omega1: 100.0 * PI,
            cs: Some(2e-3),
        };
        let rf = |n: &[f64], d: &[f64]| {
            RationalFunction::new(Poly::from_real(n), Poly::from_real(d)).unwrap()
        };
        let dev = RationalMatrix2::new(
            rf(&[2.0, 0.01], &[300.0, 1.0]),
            rf(&[0.5], &[400.0, 1.0]),
            rf(&[-0.3], &[250.0, 1.0]),
            rf(&[1.0, 0.02], &[500.0, 1.0]),
        );
        let (n, d) = determinant_polys(&dev, &g);
        let rows = (1..40)
            .map(|k| TableRow {
                f_hz: -500.0 + 25.3 * k as f64,
                y: crate::model::eval_rational_matrix(&dev, TWO_PI * (-500.0 + 25.3 * k as f64))
                    .unwrap(),
            })
            .collect();
        let table = FrequencyResponseTable::new(rows, TableMeta::default()).unwrap();
        let t = trajectory::return_difference_determinant(&g, &table).unwrap();
        for s in t.samples() {
            let want = n.eval(c(0.0, s.omega)) / d.eval(c(0.0, s.omega));
            assert!(
                (s.d - want).norm() <= 1e-10 * want.norm(),
                "{} vs {}",
                s.d,
                want
            );
        }
    }
}
