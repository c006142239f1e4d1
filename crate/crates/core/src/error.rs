use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong inside the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {0:?} lies outside the window")]
    PointOutsideWindow(Vec<i64>),

    #[error("dimension {0} has no tabulated ball eigenvalue")]
    UnsupportedDimension(usize),

    #[error("active set is empty")]
    EmptyActiveSet,

    #[error("active site {0} is an obstacle")]
    ActiveSiteIsObstacle(usize),

    #[error("power iteration stopped after {} iterations (residual {:.3e})", .0.iterations, .0.residual)]
    NoConvergence(Box<BestIterate>),

    #[error("series diverges: lambda {lambda} does not exceed the principal eigenvalue of the interior set")]
    DivergentSeries { lambda: f64 },

    #[error("linear solver broke down (relative residual {residual:.3e})")]
    SolverBreakdown { residual: f64 },

    #[error("no path survives")]
    ZeroSurvival,

    #[error("insufficient samples: need {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("box half-side floor(iota * rho_n) is zero")]
    BoxSizeZero,

    #[error("empty set: {0}")]
    EmptySet(&'static str),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Last iterate of a power iteration that failed to meet its tolerance.
#[derive(Debug, Clone)]
pub struct BestIterate {
    pub iterations: usize,
    pub residual: f64,
    pub lambda: f64,
    pub vector: Vec<f64>,
}

impl Error {
    /// Stable short name, used as the error-kind column in tabular output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::PointOutsideWindow(_) => "point-outside-window",
            Error::UnsupportedDimension(_) => "unsupported-dimension",
            Error::EmptyActiveSet => "empty-active-set",
            Error::ActiveSiteIsObstacle(_) => "active-site-is-obstacle",
            Error::NoConvergence(_) => "no-convergence",
            Error::DivergentSeries { .. } => "divergent-series",
            Error::SolverBreakdown { .. } => "solver-breakdown",
            Error::ZeroSurvival => "zero-survival",
            Error::InsufficientSamples { .. } => "insufficient-samples",
            Error::BoxSizeZero => "box-size-zero",
            Error::EmptySet(_) => "empty-set",
            Error::Snapshot(_) => "snapshot-format",
            Error::Io(_) => "io",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
