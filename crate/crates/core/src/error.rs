use num_complex::Complex64;
use thiserror::Error;

use crate::model::EntryPos;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid impedance is singular at omega = {omega} rad/s (series-capacitor pole)")]
    SingularFrequency { omega: f64 },

    #[error("rational function evaluated at a pole: s = {s}")]
    PoleHit { s: Complex64 },

    #[error("entry {entry} has a pole at omega = {omega} rad/s")]
    EntryPoleHit { entry: EntryPos, omega: f64 },

    #[error("companion-matrix eigensolve did not converge (degree {degree})")]
    RootFindingFailure { degree: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error(
        "device is not self-stable: {count} denominator root(s) outside the open left half-plane"
    )]
    NotSelfStable { count: usize },

    #[error("invalid frequency plan: {0}")]
    InvalidPlan(String),

    #[error("frequency plan yields no band with at least two points")]
    EmptyPlan,

    #[error("perturbation vectors are degenerate (condition number {cond:e})")]
    DegeneratePerturbations { cond: f64 },

    #[error("measurement matrix is singular at f = {f_hz} Hz")]
    SingularMeasurement { f_hz: f64 },

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("matrix inversion failed at every frequency ({dropped} point(s) dropped)")]
    SingularInversion { dropped: usize },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("least-squares fit is ill-conditioned (condition number {cond:e})")]
    IllConditionedFit { cond: f64 },

    #[error("crossings {from} -> {to} at sequence position {position} are cyclically opposite; trajectory is under-sampled")]
    NonAdjacentSequence {
        position: usize,
        from: crate::trajectory::CrossingKind,
        to: crate::trajectory::CrossingKind,
    },

    #[error("IDTA curve residual {residual} is not an adjacency residual")]
    InconsistentCurve { residual: i64 },

    #[error("local determinant slope is degenerate (a^2 + b^2 = {norm_sq:e})")]
    FlatSlope { norm_sq: f64 },

    #[error("eigenvalue locus passes through the critical point (-1, 0) at omega = {omega} rad/s")]
    PassThroughCriticalPoint { omega: f64 },

    #[error("determinant numerator is identically zero")]
    DegenerateNumerator,

    #[error("admittance-form and impedance-form analyses disagree: {0}")]
    ConsistencyViolation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed response table: {0}")]
    MalformedTable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
