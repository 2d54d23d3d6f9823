use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("field has {got} values, grid expects {expected}")]
    FieldLength { expected: usize, got: usize },

    #[error("field is not band-limited to |xi| <= {mu}: relative tail mass {tail:e}")]
    NotBandLimited { mu: f64, tail: f64 },

    #[error("tube offset |y| = {norm} is not strictly inside the half-width {half_width}")]
    OffsetOutsideTube { norm: f64, half_width: f64 },

    #[error("thickness radius {radius} is below the resolution limit {min}")]
    RadiusBelowResolution { radius: f64, min: f64 },

    #[error("observation set is empty")]
    EmptySet,

    #[error("thickness has not been verified for this set")]
    ThicknessUnverified,

    #[error("metric is not positive definite at node {node}")]
    MetricNotPositive { node: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("basis is not orthonormal: Gram defect {defect:e}")]
    NotOrthonormal { defect: f64 },

    #[error("projector has rank zero")]
    RankZero,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("multiplier e^{{{exponent}}} overflows; use a smaller s0")]
    MultiplierOverflow { exponent: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("point {0} outside the domain")]
    OutsideDomain(String),

    #[error("singular evaluation: {0}")]
    Singular(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
