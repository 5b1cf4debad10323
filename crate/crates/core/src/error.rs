use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("unstable quadratic form: normal-mode eigenvalue {eigenvalue} is not positive")]
    UnstableQuadraticForm { eigenvalue: f64 },

    #[error("no instanton: L = {l} is at or beyond the critical length {limit}")]
    NoInstanton { l: f64, limit: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("no four-well structure: {0}")]
    NoFourWellStructure(String),

    #[error("solver failed after {iterations} iterations (gradient residual {residual:e})")]
    SolverFailed { iterations: usize, residual: f64 },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("propagator calibration failed: {0}")]
    CalibrationFailed(String),

    #[error("integration failed for term {term}: estimated error {error:e} after {evaluations} evaluations")]
    IntegrationFailed {
        term: String,
        error: f64,
        evaluations: usize,
    },

    #[error("invalid rates: {0}")]
    InvalidRates(String),

    #[error("grid resolution insufficient: change {change:e} exceeds {tolerance:e} at {points} points")]
    ResolutionInsufficient {
        points: usize,
        change: f64,
        tolerance: f64,
    },

    #[error("eigensolver did not converge: {0}")]
    EigenSolver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SolverFailed { .. }
                | Error::Overflow(_)
                | Error::CalibrationFailed(_)
                | Error::IntegrationFailed { .. }
                | Error::ResolutionInsufficient { .. }
                | Error::EigenSolver(_)
                | Error::UnstableQuadraticForm { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
