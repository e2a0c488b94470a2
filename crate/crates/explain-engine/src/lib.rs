//! Attribution engine: turns forward traces and attention decompositions
//! into per-input-token explanations of a next-token logit (or a logit
//! difference between a target and a foil).
//!
//! Three methods are provided:
//! - `logit`: per-layer attention updates summed per residual stream,
//!   assuming streams keep their token identity,
//! - `alti-logit`: the same updates redistributed to model input tokens
//!   through the contextual-mixing rollout before summing,
//! - `erasure`: re-run the model with one token deleted and measure the
//!   prediction change.
//!
//! Logit updates pass through the final layer norm linearized at the query
//! position's realized statistics, so the per-token scores plus the MLP,
//! input-embedding, and bias buckets reconstruct the model's actual logit.

mod engine;
mod erasure;
mod error;
mod explanation;
mod mlp;
mod updates;

pub use engine::{
    alti_logit_explanation, alti_logit_explanation_with, contrastive, contrastive_explanation,
    logit_explanation, logit_explanation_with, redistribute_layer, ExplainOptions,
};
pub use erasure::{contrastive_erasure, ErasureMeasure};
pub use error::ExplainError;
pub use explanation::{Buckets, Explanation, Method};
pub use mlp::{mlp_value_updates, MlpSubUpdates};
pub use updates::{final_ln_affine, head_logit_update, layer_logit_update};

pub type Result<T> = std::result::Result<T, ExplainError>;
