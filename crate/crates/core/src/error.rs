use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FinslerError {
    #[error("fundamental tensor not positive definite at x={x:?}, y={y:?} (min eigenvalue {min_eigenvalue:e})")]
    NonPositiveDefinite {
        x: Vec<f64>,
        y: Vec<f64>,
        min_eigenvalue: f64,
    },

    #[error("point {x:?} lies outside the chart domain")]
    DomainViolation { x: Vec<f64> },

    #[error("{what}: no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("singular metric at x={x:?}")]
    SingularMetric { x: Vec<f64> },

    #[error("{what}: value {value:e} below noise floor {noise:e}")]
    NoiseFloorExceeded {
        what: &'static str,
        value: f64,
        noise: f64,
    },

    #[error("geodesic left the chart domain at arc length {arc_length}")]
    DomainExit { arc_length: f64 },

    #[error("step size underflow at arc length {arc_length}")]
    StepFailure { arc_length: f64 },

    #[error("target {q:?} not reached by shooting from {p:?}")]
    NotReached { p: Vec<f64>, q: Vec<f64> },

    #[error("quadrature diverged: F vanishes in direction {direction:?}")]
    QuadratureDivergence { direction: Vec<f64> },

    #[error("{what}: routes disagree ({a} vs {b}, tolerance {tol:e})")]
    CrossCheckFailure {
        what: &'static str,
        a: f64,
        b: f64,
        tol: f64,
    },

    #[error("least-squares fit ill-conditioned (condition estimate {condition:e})")]
    FitIllConditioned { condition: f64 },

    #[error("radius grid unusable: {reason}")]
    GridTooCoarse { reason: String },

    #[error("r = {r} at or beyond the conjugate radius {pole}")]
    PoleAtConjugate { r: f64, pole: f64 },

    #[error("finite-difference stencil of half-width {h} leaves the domain at {x:?}")]
    StencilOutOfDomain { x: Vec<f64>, h: f64 },

    #[error("need at least {needed} directions, got {got}")]
    InsufficientDirections { needed: usize, got: usize },

    #[error("tail of the mean curvature does not settle (slope {slope:e})")]
    NotConverging { slope: f64 },

    #[error("profile at {p:?} is not harmonic (spread {spread:e})")]
    NotHarmonic { p: Vec<f64>, spread: f64 },

    #[error("beta profile reaches length {sup} >= 1")]
    BetaTooLong { sup: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

impl FinslerError {
    /// True for errors that stem from bad user input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            FinslerError::InvalidInput(_)
                | FinslerError::Parse { .. }
                | FinslerError::BetaTooLong { .. }
                | FinslerError::InsufficientDirections { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, FinslerError>;
