use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A boundary or position fell outside the active chunk.
    #[error("boundary {position} outside valid range {min}..={max}")]
    BoundaryDomain {
        position: usize,
        min: usize,
        max: usize,
    },

    /// Input to a numeric routine violated its domain (non-positive score, shape mismatch, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("degenerate regression design: {0}")]
    DegenerateDesign(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Training { epoch: usize, loss: f64 },

    #[error("decoder state error: {0}")]
    DecoderState(String),

    #[error("trace mismatch: {0}")]
    TraceMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    /// Coarse classification used by the CLI to pick an exit code.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Configuration(_)
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::InsufficientData(_)
        )
    }
}
