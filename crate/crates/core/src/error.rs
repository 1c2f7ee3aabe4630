use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionError { expected: usize, found: usize },

    #[error("operator must be square with dim >= 1 (got {rows} rows, {cols} columns)")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    #[error("state vector is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("operator `{label}` is not idempotent (max deviation {deviation:e})")]
    NotIdempotent { label: String, deviation: f64 },

    #[error("operator `{label}` is not hermitian (max deviation {deviation:e})")]
    NotHermitian { label: String, deviation: f64 },

    #[error("operator is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("direction is not a unit vector (norm = {norm})")]
    NonUnitDirection { norm: f64 },

    #[error("a decomposition of the identity needs at least one projector")]
    EmptyPdi,

    #[error("projectors do not sum to the identity (max deviation {deviation:e})")]
    IncompletePdi { deviation: f64 },

    #[error("projectors `{first}` and `{second}` are not orthogonal (max deviation {deviation:e})")]
    NonOrthogonal {
        first: String,
        second: String,
        deviation: f64,
    },

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("decompositions do not commute: `{first}` vs `{second}` (max deviation {deviation:e})")]
    IncompatiblePdis {
        first: String,
        second: String,
        deviation: f64,
    },

    #[error("time grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("framework `{framework}` is inconsistent (worst off-diagonal |D| = {worst:e})")]
    InconsistentFramework { framework: String, worst: f64 },

    #[error("invalid probability table: {0}")]
    InvalidTable(String),

    #[error("conditioning event has probability {probability:e}")]
    ZeroConditionProbability { probability: f64 },

    #[error("unknown event: {0}")]
    UnknownEvent(String),

    #[error("events refer to the same variable `{0}`")]
    SameVariable(String),

    #[error("temporal order violated: {0}")]
    TemporalOrderError(String),

    #[error("table has no source framework; cross-table reasoning requires one")]
    MissingProvenance,

    #[error("single framework rule violated: `{first}` and `{second}` are incompatible")]
    SingleFrameworkViolation { first: String, second: String },

    #[error("both settings belong to {0}")]
    SameOwner(String),

    #[error("setting owner mismatch: {0}")]
    OwnerMismatch(String),

    #[error("a common cause for outcomes needs equal settings (got {alice} and {bob})")]
    SettingsMismatch { alice: String, bob: String },

    #[error("unknown setting `{0}`")]
    UnknownSetting(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("{location}: {message}")]
    Parse { location: String, message: String },
}

impl Error {
    /// Process exit status for the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::UnknownSetting(_) => 2,
            Error::InconsistentFramework { .. }
            | Error::SingleFrameworkViolation { .. }
            | Error::SettingsMismatch { .. }
            | Error::IncompatiblePdis { .. }
            | Error::ZeroConditionProbability { .. } => 3,
            _ => 4,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
