use std::io;

use thiserror::Error;

use crate::semilinear::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("homogeneous dimension {n_gamma} must exceed 2 for critical exponents")]
    DegenerateDimension { n_gamma: f64 },
    #[error("point is too close to the origin (d = {distance:e})")]
    OriginSingularity { distance: f64 },
    #[error("stencil leaves the smoothness region of the function")]
    OutsideSmoothRegion,

    #[error("axis {axis} has {nodes} nodes, at least 3 are required")]
    GridTooSmall { axis: usize, nodes: usize },
    #[error("field and operator live on different grids")]
    GridMismatch,
    #[error("iterative solver stopped after {iterations} iterations at relative residual {residual:e}")]
    MaxIterationsExceeded { iterations: usize, residual: f64 },

    #[error("Newton iteration diverged after {} steps (last residual {:e})", history.len(), history.last().copied().unwrap_or(f64::NAN))]
    NewtonDiverged { history: Vec<f64>, p: f64 },
    #[error("Newton converged to the trivial solution (sup u = {:e})", .0.sup_value)]
    TrivialCollapse(Box<SolveReport>),

    #[error("reflection plane {lambda} lies outside the grid")]
    PlaneOutsideGrid { lambda: f64 },
    #[error("decay fit needs at least {needed} tail nodes, found {found}")]
    InsufficientTail { found: usize, needed: usize },
    #[error("maximum {sup:e} is too small to rescale")]
    DegenerateMaximum { sup: f64 },
    #[error("stretch coefficient must be positive, got {0}")]
    NonpositiveCoefficient(f64),

    #[error("bad magic, expected GRSH1")]
    BadMagic,
    #[error("header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("payload has {found} bytes, expected {expected}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },
    #[error("missing required config key `{0}`")]
    MissingKey(String),

    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error stems from user input rather than a numerical failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::ConfigParse { .. } | Error::MissingKey(_) | Error::InvalidParams(_)
        )
    }
}
