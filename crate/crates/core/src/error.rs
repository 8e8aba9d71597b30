//! Crate-wide error type.
//!
//! Variants are grouped by what went wrong rather than where: callers (notably
//! the CLI) map [`Error::is_numerical`] onto exit codes without matching every
//! variant.

/// Everything fallible in this crate returns this.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Model geometry/material/support validation failed.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A bar id that does not exist in the model.
    #[error("unknown bar id {0}")]
    UnknownBar(u32),

    /// Damage fraction outside the representable range.
    #[error("damage fraction {value} for bar {bar} is outside [0, 0.95]")]
    DamageOutOfRange { bar: u32, value: f64 },

    /// The restrained stiffness matrix is singular: the structure can move
    /// without strain, so it has no meaningful vibration modes.
    #[error("structural mechanism: stiffness matrix is singular (eigenvalue ratio {ratio:.3e})")]
    Mechanism { ratio: f64 },

    /// Mass matrix failed its Cholesky factorization.
    #[error("mass matrix is not positive definite")]
    MassNotPositiveDefinite,

    /// Jacobi iteration hit its sweep cap before the off-diagonal norm fell
    /// below tolerance.
    #[error("eigensolver did not converge within {sweeps} sweeps (off-diagonal ratio {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },

    /// Mismatched shapes between signatures, weights, or search bounds.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A candidate natural frequency of zero cannot be used in the frequency
    /// ratio term of the objective.
    #[error("candidate frequency {index} is zero")]
    ZeroCandidateFrequency { index: usize },

    /// Scenario percent not on the database grid, too many damaged bars, etc.
    #[error("scenario not on grid: {0}")]
    OffGrid(String),

    /// Bad search or experiment parameters.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Database file version we do not understand.
    #[error("database format version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    /// Database was built against a different model.
    #[error("model fingerprint mismatch: database has {db}, model is {model}")]
    FingerprintMismatch { db: String, model: String },

    /// Database content fails a structural or numerical check.
    #[error("database verification failed: {0}")]
    CorruptDatabase(String),

    /// JSON parse failure, with the position of the offending byte.
    #[error("parse error at byte {offset} (line {line}, column {column}): {message}")]
    Parse {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics (mechanisms, non-convergence,
    /// indefinite mass, zero frequencies) as opposed to bad input data.
    #[must_use]
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Mechanism { .. }
                | Error::MassNotPositiveDefinite
                | Error::NoConvergence { .. }
                | Error::ZeroCandidateFrequency { .. }
        )
    }

    /// Build a [`Error::Parse`] from a serde_json error plus the input it was
    /// parsing, recovering the byte offset from the line/column report.
    pub(crate) fn from_json(err: &serde_json::Error, input: &str) -> Self {
        let (line, column) = (err.line(), err.column());
        // serde_json reports 1-based lines; column is 1-based within the line.
        let offset = input
            .split_inclusive('\n')
            .take(line.saturating_sub(1))
            .map(str::len)
            .sum::<usize>()
            + column.saturating_sub(1);
        Error::Parse {
            offset,
            line,
            column,
            message: err.to_string(),
        }
    }
}

/// Shorthand used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
