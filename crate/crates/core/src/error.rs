//! Crate error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty polynomial")]
    EmptyPolynomial,

    #[error("no sides")]
    NoSides,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("use quasihomogeneous_chart")]
    UseQuasiHomogeneousChart,

    #[error("peripherally degenerate")]
    PeripherallyDegenerate,

    #[error("factorization depth exceeded")]
    FactorizationDepthExceeded,

    #[error("incompatible charts: {0}")]
    IncompatibleCharts(String),

    #[error("incompatible parts: {0}")]
    IncompatibleParts(String),

    #[error("sign rule violated: {0}")]
    SignRuleViolated(String),

    #[error("heights do not convexify: {0}")]
    NotConvexifying(String),

    #[error("degree exceeds requested homogenization degree")]
    DegreeTooLarge,

    #[error("point on a coordinate axis")]
    AxisPoint,

    #[error("resolution too small (need at least 8)")]
    ResolutionTooSmall,

    #[error("collinear point set")]
    CollinearPoints,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
