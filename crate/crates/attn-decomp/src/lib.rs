//! Decomposition of attention blocks into per-source-token affine updates.
//!
//! A Pre-LN attention block's write into the residual stream at query
//! position `t` is an exact sum of one affine image per visible source
//! position plus the output bias:
//!
//! ```text
//! attn_out_t = sum_j T_{t,j}(x_j) + b_o
//! T_{t,j}(x_j) = sum_h ( x_j L W_v_h A_h[t,j] W_o_h + A_h[t,j] theta_h )
//! theta_h = (beta W_v_h + b_v_h) W_o_h
//! ```
//!
//! where `L` is the layer norm frozen at the realized per-token standard
//! deviation. The per-`j` theta shares (weighted by the attention) are
//! attributed to `j`; only `b_o` stays in the bias bucket, so the
//! reconstruction is exact rather than approximate.

pub mod cross;
mod decompose;
mod error;
mod ln;

pub use cross::{cross_transformed_vectors, CrossAttnParams};
pub use decompose::{transformed_vectors, LayerDecomposer, TransformedVectors};
pub use error::DecompError;
pub use ln::{linearize_ln, LnAffine};

pub type Result<T> = std::result::Result<T, DecompError>;
