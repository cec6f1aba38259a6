use thiserror::Error;

/// Failures raised anywhere in the construction or verification pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry produced by {0}")]
    NonFinite(&'static str),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("spectra overlap: eigenvalue separation {separation:.3e} <= gate {gate:.3e}")]
    SpectraOverlap { separation: f64, gate: f64 },

    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is near-singular (condition estimate {condition:.3e})")]
    NearSingular { condition: f64 },

    #[error("operator identity violated: residual {residual:.3e} > tolerance {tolerance:.3e}")]
    IdentityViolated { residual: f64, tolerance: f64 },

    #[error("constructor constraint violated: {0}")]
    ConstraintViolated(String),

    #[error("matrix is not real skew-symmetric (deviation {deviation:.3e})")]
    NotSkewSymmetric { deviation: f64 },

    #[error("supplied lower-triangular entry ({row},{col}) = {given} contradicts forced value {forced}")]
    InconsistentLowerPart {
        row: usize,
        col: usize,
        given: f64,
        forced: f64,
    },

    #[error("adaptive quadrature did not converge on [{a}, {b}]")]
    QuadratureNonConvergence { a: f64, b: f64 },

    #[error("step size underflow at x = {x}")]
    StepSizeUnderflow { x: f64 },

    #[error("identity drift {drift:.3e} exceeds limit {limit:.3e} at x = {x}")]
    IdentityDriftExceeded { drift: f64, limit: f64, x: f64 },

    #[error("x = {x} outside trajectory coverage [{lo}, {hi}]")]
    OutOfCoverage { x: f64, lo: f64, hi: f64 },

    #[error("stencil around ({x}, {y}) leaves the sampler domain")]
    StencilOutOfDomain { x: f64, y: f64 },

    #[error("residuals at noise floor (min {min:.3e}); slope is meaningless")]
    ResidualAtNoiseFloor { min: f64 },

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("at x = {x}: {source}")]
    AtPoint { x: f64, source: Box<Error> },
}

impl Error {
    pub(crate) fn at(self, x: f64) -> Error {
        match self {
            e @ Error::AtPoint { .. } => e,
            other => Error::AtPoint {
                x,
                source: Box::new(other),
            },
        }
    }

    /// Strips any `AtPoint` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
