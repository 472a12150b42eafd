use thiserror::Error;

/// Errors raised across the simulator.
///
/// Every variant carries a stable machine-readable code (see [`Error::code`])
/// which the command-line front end prints on failure.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error(
        "two-photon coupling g = {g} is at or above the spectral-collapse bound omega/2 = {bound}"
    )]
    CollapseRegime { g: f64, bound: f64 },

    #[error("phase point outside the atomic disk: q1^2 + p1^2 = {radius_sq} exceeds 4j = {limit}")]
    Domain { radius_sq: f64, limit: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("integration failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("diagonalization failed: {0}")]
    DiagonalizationFailure(String),

    #[error("correspondence score undefined: every grid point carries the same chaos label")]
    DegenerateLabels,

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("configuration key `{key}` expects {expected}, got `{value}`")]
    Type {
        key: String,
        expected: &'static str,
        value: String,
    },

    #[error("configuration constraint violated: {0}")]
    Constraint(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable identifier used in machine-readable error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::CollapseRegime { .. } => "CollapseRegime",
            Error::Domain { .. } => "DomainError",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::StepFailure { .. } => "StepFailure",
            Error::DiagonalizationFailure(_) => "DiagonalizationFailure",
            Error::DegenerateLabels => "DegenerateLabels",
            Error::UnknownKey(_) => "UnknownKey",
            Error::Type { .. } => "TypeError",
            Error::Constraint(_) => "ConstraintError",
            Error::Usage(_) => "UsageError",
            Error::Io(_) => "IoError",
        }
    }

    /// Process exit status associated with the error class.
    pub fn exit_status(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::UnknownKey(_) | Error::Type { .. } => 2,
            Error::Constraint(_) | Error::InvalidParams(_) | Error::CollapseRegime { .. } => 3,
            Error::Io(_) => 4,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Non-fatal conditions collected alongside results.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Warning {
    /// Fock-space truncation carries more weight than the allowed budget.
    Cutoff { context: String, weight: f64 },
    /// A single sweep point failed; the sweep continued.
    PointFailure { context: String, message: String },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::Cutoff { context, weight } => {
                write!(f, "CutoffWarning ({context}): truncated weight {weight:e}")
            }
            Warning::PointFailure { context, message } => {
                write!(f, "PointFailure ({context}): {message}")
            }
        }
    }
}
