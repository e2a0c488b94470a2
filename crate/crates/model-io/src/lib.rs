//! Model artifact loading: configuration, safetensors weights, and the
//! byte-level BPE tokenizer tables, assembled into a validated [`ModelBundle`].

mod bundle;
mod config;
mod error;
pub mod safetensors;
pub mod synthetic;
mod tokenizer;

pub use bundle::{load_bundle, LayerParams, ModelBundle};
pub use config::ModelConfig;
pub use error::ModelIoError;
pub use tokenizer::Tokenizer;

pub type Result<T> = std::result::Result<T, ModelIoError>;
