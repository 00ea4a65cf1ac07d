use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config invalid at {pointer}: {message}")]
    ConfigInvalid { pointer: String, message: String },
    #[error("gates failed: {}", .0.join(", "))]
    GateFailed(Vec<String>),
    #[error("curve file does not match the curve schema: {0}")]
    SchemaMismatch(String),
    #[error(transparent)]
    Compute(#[from] ergolab::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

pub type LabResult<T> = std::result::Result<T, LabError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_GATE_FAILED: i32 = 2;
pub const EXIT_CONFIG_INVALID: i32 = 3;

impl LabError {
    pub fn invalid(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Self::ConfigInvalid {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::ConfigInvalid { .. } => EXIT_CONFIG_INVALID,
            Self::GateFailed(_) => EXIT_GATE_FAILED,
            _ => EXIT_FAILURE,
        }
    }
}
