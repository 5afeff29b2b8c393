use thiserror::Error;

/// Errors raised by the numerical machinery.
///
/// Solver failures carry enough context (best residual, offending pair,
/// last iterate) for the caller to decide whether the configuration is
/// malformed or merely non-simple.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("unbounded unit ball: facet covectors span only {rank} of {dim} dimensions")]
    UnboundedBall { rank: usize, dim: usize },

    #[error("unsupported dimension {0} (supported: 1..=4)")]
    UnsupportedDimension(usize),

    #[error("john ellipsoid did not converge after {iterations} iterations (gap {gap:.3e})")]
    Convergence {
        iterations: usize,
        gap: f64,
        /// Shape matrix of the last iterate, row-major.
        last_shape: Vec<f64>,
    },

    #[error("degenerate tangent: basis has rank {rank} < {expected}")]
    DegenerateTangent { rank: usize, expected: usize },

    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("metric evaluation left the interpolation collar at {0:?}")]
    Collar(Vec<f64>),

    #[error("metric tensor is not positive definite at {point:?} (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { point: Vec<f64>, min_eig: f64 },

    #[error("shooting did not converge between {from:?} and {to:?} (best residual {residual:.3e})")]
    NonConvergence {
        from: Vec<f64>,
        to: Vec<f64>,
        residual: f64,
    },

    #[error("point {0:?} is outside the Poincare chart")]
    Chart(Vec<f64>),

    #[error("hyperbolic projection diverged: iterate {0:?} escaped the chart collar")]
    Divergence(Vec<f64>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of an iterative solver (as opposed to bad input).
    pub fn is_solver(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. }
                | Error::NonConvergence { .. }
                | Error::Divergence(_)
                | Error::Collar(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
