//! Traced forward pass for GPT-2-class Pre-LN decoders.
//!
//! One call to [`run_forward`] produces next-token logits together with a
//! [`ForwardTrace`] capturing every intermediate the attribution math needs
//! (residual streams, per-head attention matrices, layer-norm statistics,
//! MLP key activations), so downstream analyses never re-run the model.

mod error;
mod forward;
mod trace;

pub use error::ForwardError;
pub use forward::{next_token_logit, run_forward};
pub use trace::{ForwardTrace, LayerTrace, LnStats, PredictionHead};

pub type Result<T> = std::result::Result<T, ForwardError>;
