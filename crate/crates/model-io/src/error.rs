use std::path::PathBuf;
use thiserror::Error;

/// Errors from parsing model artifacts.
#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("corrupt safetensors header at byte offset {offset}: {reason}")]
    CorruptHeader { offset: u64, reason: String },

    #[error("safetensors header is not valid JSON: {0}")]
    HeaderJson(#[from] serde_json::Error),

    #[error("tensor {name}: unsupported dtype {dtype}")]
    UnsupportedDtype { name: String, dtype: String },

    #[error("tensor {name}: data offsets [{begin}, {end}) out of bounds or inconsistent")]
    BadOffsets {
        name: String,
        begin: usize,
        end: usize,
    },

    #[error("missing tensor {name}")]
    MissingTensor { name: String },

    #[error("tensor {name}: expected shape {expected:?}, got {got:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("tensor {name} contains a non-finite value")]
    NonFiniteWeight { name: String },

    #[error("invalid model config: {reason}")]
    ConfigInvalid { reason: String },

    #[error("invalid vocab table: {reason}")]
    VocabInvalid { reason: String },

    #[error("invalid merges table at line {line}: {reason}")]
    MergesInvalid { line: usize, reason: String },

    #[error("token string {token:?} not in vocabulary")]
    UnknownToken { token: String },

    #[error("token id {id} out of vocabulary range {vocab}")]
    UnknownId { id: u32, vocab: usize },
}
