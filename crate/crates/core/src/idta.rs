//! IDTA curve: axis crossings unrolled onto integer coordinates so that
//! every net step of +4 is one clockwise loop around the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{Crossing, CrossingKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdtaPoint {
    pub seq: usize,
    pub kind: CrossingKind,
    pub coordinate: i64,
    pub omega_cross: f64,
    #[serde(default)]
    pub closure: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdtaCurve {
    pub points: Vec<IdtaPoint>,
}

impl IdtaCurve {
    pub fn first_kind(&self) -> Option<CrossingKind> {
        self.points.first().map(|p| p.kind)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "seq,kind,extended_coordinate,omega_cross_rad_s,omega_cross_hz,closure"
        )?;
        for p in &self.points {
            writeln!(
                w,
                "{},{},{},{:.16e},{:.16e},{}",
                p.seq,
                p.kind.label(),
                p.coordinate,
                p.omega_cross,
                p.omega_cross / crate::model::TWO_PI,
                p.closure
            )?;
        }
        Ok(())
    }
}

pub fn build_idta(crossings: &[Crossing]) -> Result<IdtaCurve> {
    let mut points: Vec<IdtaPoint> = Vec::with_capacity(crossings.len());
    for (seq, x) in crossings.iter().enumerate() {
        let coordinate = match points.last() {
            None => x.kind.label(),
            Some(prev) => (prev.coordinate - 1..=prev.coordinate + 1)
                .find(|&c| CrossingKind::from_coordinate(c) == x.kind)
                .ok_or(Error::NonAdjacentSequence {
                    position: seq,
                    from: prev.kind,
                    to: x.kind,
                })?,
        };
        points.push(IdtaPoint {
            seq,
            kind: x.kind,
            coordinate,
            omega_cross: x.omega_cross,
            closure: x.closure,
        });
    }
    Ok(IdtaCurve { points })
}

/// Inclusive coordinate bounds of the stable region for a curve starting at `first`.
pub fn stable_region(first: CrossingKind) -> (i64, i64) {
    (first.label() - 1, first.label() + 1)
}

pub fn in_stable_region(first: CrossingKind, c: i64) -> bool {
    let (lo, hi) = stable_region(first);
    (lo..=hi).contains(&c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum Diagnostic {
    NoCrossings,
    OriginPass { omega_rad_s: f64 },
    AmbiguousInterval { index: usize },
    LowResolution,
    ClosureCrossings { count: usize },
    BoundarySettlement { relative_gap: f64 },
    DroppedPoints { count: usize },
    SeriesCapacitor,
    RefinedInterval { index: usize },
    NoCriticalZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    /// Net clockwise loops, the estimated number of RHP zeros.
    pub winding: i64,
    pub first_coordinate: Option<i64>,
    pub last_coordinate: Option<i64>,
    /// Trajectory passed through the origin somewhere.
    #[serde(default)]
    pub marginal: bool,
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
}

pub fn assess(curve: &IdtaCurve) -> Result<StabilityVerdict> {
    let (first, last) = match (curve.points.first(), curve.points.last()) {
        (Some(f), Some(l)) => (f.coordinate, l.coordinate),
        _ => {
            return Ok(StabilityVerdict {
                stable: true,
                winding: 0,
                first_coordinate: None,
                last_coordinate: None,
                marginal: false,
                diagnostics: vec![Diagnostic::NoCrossings],
            })
        }
    };
    let delta = last - first;
    let winding = (delta as f64 / 4.0).round() as i64;
    let residual = delta - 4 * winding;
    if residual.abs() > 1 {
        return Err(Error::InconsistentCurve { residual });
    }
    Ok(StabilityVerdict {
        stable: winding == 0,
        winding,
        first_coordinate: Some(first),
        last_coordinate: Some(last),
        marginal: false,
        diagnostics: Vec::new(),
    })
}
