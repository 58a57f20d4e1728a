//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("compression ratio {0} outside [0, 1]")]
    InvalidRatio(f64),

    #[error("ratio {0} is not on the 0.1..0.9 grid")]
    OffGridRatio(f64),

    #[error("unknown task tag `{0}`")]
    UnknownTask(String),

    #[error("priority table: {0}")]
    Table(String),

    #[error("input is unparsable and strict parsing was requested")]
    Unparsable,

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("dataset row {row}: {field}: {message}")]
    DatasetRow {
        row: usize,
        field: String,
        message: String,
    },

    #[error("batch compression failed for {} item(s): {}", .0.len(), format_batch(.0))]
    Batch(Vec<(usize, Box<Error>)>),

    #[error("model: {0}")]
    Model(String),

    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),

    #[error("training diverged: loss {loss} exceeded 10x initial loss {initial}")]
    Diverged { loss: f64, initial: f64 },

    #[error("loss is not finite at step {step}: {diagnostic}")]
    NonFiniteLoss { step: usize, diagnostic: String },

    #[error("language model: {0}")]
    Lm(String),

    #[error("knowledge base index: {0}")]
    Index(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_batch(items: &[(usize, Box<Error>)]) -> String {
    items
        .iter()
        .take(3)
        .map(|(i, e)| format!("[{i}] {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}
