//! APSAM: determinant trajectory, IDTA verdict and critical pole.

use serde::{Deserialize, Serialize};

use crate::critical::{self, CriticalPoleEstimate, SlopeOptions};
use crate::error::{Error, Result};
use crate::idta::{self, Diagnostic, IdtaCurve, StabilityVerdict};
use crate::model::GridParams;
use crate::sweep::FrequencyResponseTable;
use crate::trajectory::{
    self, boundary_gap, determinant_impedance_form, return_difference_determinant, CrossingScan,
    DeterminantTrajectory, Form, TrajectorySample, BOUNDARY_GAP_WARN,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub slope: SlopeOptions,
    /// Scan the chord from the last sample back to the first.
    pub close_contour: bool,
    /// Sub-intervals per raw interval when retrying an under-sampled stretch.
    pub retry_factor: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            slope: SlopeOptions::default(),
            close_contour: true,
            retry_factor: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub verdict: StabilityVerdict,
    pub curve: IdtaCurve,
    pub scan: CrossingScan,
    pub critical: Option<CriticalPoleEstimate>,
    pub trajectory: DeterminantTrajectory,
}

pub fn analyze_table(
    grid: &GridParams,
    table: &FrequencyResponseTable,
    form: Form,
    opts: &AnalysisOptions,
) -> Result<Analysis> {
    grid.validate()?;
    let t = match form {
        Form::Admittance => return_difference_determinant(grid, table)?,
        Form::Impedance => determinant_impedance_form(grid, table)?,
    };
    let mut a = analyze_trajectory(t, opts)?;
    if grid.cs.is_some() {
        a.verdict.diagnostics.push(Diagnostic::SeriesCapacitor);
    }
    Ok(a)
}

fn scan(t: &DeterminantTrajectory, opts: &AnalysisOptions) -> Result<CrossingScan> {
    if opts.close_contour {
        trajectory::detect_crossings_closed(t)
    } else {
        trajectory::detect_crossings(t)
    }
}

pub fn analyze_trajectory(t: DeterminantTrajectory, opts: &AnalysisOptions) -> Result<Analysis> {
    let mut t = t;
    let mut diagnostics = Vec::new();
    let mut sc = scan(&t, opts)?;
    let curve = match idta::build_idta(&sc.crossings) {
        Ok(c) => c,
        Err(err @ Error::NonAdjacentSequence { position, .. }) => {
            let (p, q) = (sc.crossings[position - 1], sc.crossings[position]);
            if p.closure || q.closure {
                return Err(err);
            }
            t = refine_intervals(&t, p.index, q.index, opts.retry_factor)?;
            diagnostics.push(Diagnostic::RefinedInterval { index: p.index });
            sc = scan(&t, opts)?;
            idta::build_idta(&sc.crossings)?
        }
        Err(e) => return Err(e),
    };
    let mut verdict = idta::assess(&curve)?;

    for o in &sc.origin_passes {
        verdict.marginal = true;
        diagnostics.push(Diagnostic::OriginPass {
            omega_rad_s: o.omega,
        });
    }
    diagnostics.extend(
        sc.ambiguous
            .iter()
            .map(|&index| Diagnostic::AmbiguousInterval { index }),
    );
    if sc.low_resolution {
        diagnostics.push(Diagnostic::LowResolution);
    }
    let closing = sc.crossings.iter().filter(|c| c.closure).count();
    if closing > 0 {
        diagnostics.push(Diagnostic::ClosureCrossings { count: closing });
    }
    let gap = boundary_gap(&t);
    if gap > BOUNDARY_GAP_WARN {
        diagnostics.push(Diagnostic::BoundarySettlement { relative_gap: gap });
    }
    if !t.dropped.is_empty() {
        diagnostics.push(Diagnostic::DroppedPoints {
            count: t.dropped.len(),
        });
    }

    let critical = critical::estimate(&t, &opts.slope)?;
    if critical.is_none() {
        diagnostics.push(Diagnostic::NoCriticalZero);
    }
    verdict.diagnostics.extend(diagnostics);
    Ok(Analysis {
        verdict,
        curve,
        scan: sc,
        critical,
        trajectory: t,
    })
}

/// Resample raw intervals `lo..=hi` at `factor` times the density using a
/// local cubic through the four surrounding samples. A straight chord cannot
/// resolve which way the curve went round, a cubic through the neighbours
/// can.
fn refine_intervals(
    t: &DeterminantTrajectory,
    lo: usize,
    hi: usize,
    factor: usize,
) -> Result<DeterminantTrajectory> {
    let s = t.samples();
    if s.len() < 4 || factor < 2 {
        return Ok(t.clone());
    }
    let mut out: Vec<TrajectorySample> = Vec::with_capacity(s.len() + (hi - lo + 1) * factor);
    for (k, p) in s.iter().enumerate() {
        out.push(*p);
        if k >= lo && k <= hi && k + 1 < s.len() {
            let start = k.saturating_sub(1).min(s.len() - 4);
            let nodes = &s[start..start + 4];
            let w0 = p.omega;
            let dw = (s[k + 1].omega - w0) / factor as f64;
            for j in 1..factor {
                let w = w0 + j as f64 * dw;
                out.push(TrajectorySample {
                    omega: w,
                    d: trajectory::lagrange_eval(nodes, w),
                });
            }
        }
    }
    let mut r = DeterminantTrajectory::new(out, t.form)?;
    r.dropped = t.dropped.clone();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::CrossingKind;
    use num_complex::Complex64;

    fn circle(centre: Complex64, radius: f64, n: usize, turns: f64) -> DeterminantTrajectory {
        // clockwise for positive turns
        let omegas: Vec<f64> = (0..n).map(|k| -1.0 + 2.0 * k as f64 / n as f64).collect();
        DeterminantTrajectory::from_fn(&omegas, Form::Admittance, |w| {
            let th = -std::f64::consts::PI * turns * (w + 1.0);
            centre + Complex64::from_polar(radius, th)
        })
        .unwrap()
    }

    #[test]
    fn clockwise_circle_around_origin() {
        let a = analyze_trajectory(
            circle(Complex64::new(0.2, 0.1), 1.0, 400, 1.0),
            &AnalysisOptions::default(),
        )
        .unwrap();
        assert_eq!(a.verdict.winding, 1);
        assert!(!a.verdict.stable);
        let b = analyze_trajectory(
            circle(Complex64::new(0.2, 0.1), 1.0, 400, 2.0),
            &AnalysisOptions::default(),
        )
        .unwrap();
        assert_eq!(b.verdict.winding, 2);
    }

    #[test]
    fn circle_not_enclosing_origin() {
        let a = analyze_trajectory(
            circle(Complex64::new(3.0, 0.0), 1.0, 400, 1.0),
            &AnalysisOptions::default(),
        )
        .unwrap();
        assert!(a.verdict.stable);
        assert_eq!(a.verdict.winding, 0);
    }

    #[test]
    fn reversed_negates() {
        let t = circle(Complex64::new(0.1, -0.2), 1.0, 300, 1.0);
        let a = analyze_trajectory(t.reversed(), &AnalysisOptions::default()).unwrap();
        assert_eq!(a.verdict.winding, -1);
    }

    #[test]
    fn dropped_origin_pass_triggers_retry() {
        // the chord through the origin is excluded, leaving PosReal next to NegReal;
        // the cubic through the neighbours passes just above it
        let pts = [
            (1.0, -1.0),
            (1.0, 1.0),
            (-1.0, -1.0),
            (-1.0, 0.5),
            (0.5, 1.0),
            (1.0, -0.5),
        ];
        let omegas: Vec<f64> = (0..pts.len()).map(|k| k as f64).collect();
        let t = DeterminantTrajectory::from_fn(&omegas, Form::Admittance, |w| {
            let (re, im) = pts[w as usize];
            Complex64::new(re, im)
        })
        .unwrap();
        let opts = AnalysisOptions {
            close_contour: false,
            ..Default::default()
        };
        let sc = trajectory::detect_crossings(&t).unwrap();
        assert_eq!(sc.origin_passes.len(), 1);
        assert!(matches!(
            idta::build_idta(&sc.crossings),
            Err(Error::NonAdjacentSequence { .. })
        ));
        let a = analyze_trajectory(t, &opts).unwrap();
        assert!(a
            .verdict
            .diagnostics
            .iter()
            .any(|d| matches!(d, Diagnostic::RefinedInterval { index: 0 })));
        let kinds: Vec<_> = a.curve.points.iter().map(|p| p.kind).collect();
        assert_eq!(kinds.first(), Some(&CrossingKind::PosReal));
        assert_eq!(kinds[1], CrossingKind::PosImag);
        assert_eq!(kinds.last(), Some(&CrossingKind::PosReal));
        assert_eq!(a.verdict.winding, 0);
    }
}
