use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecompError {
    #[error("layer {layer} out of range for trace with {n_layers} layers")]
    LayerOutOfRange { layer: usize, n_layers: usize },

    #[error("query position {position} out of range for sequence length {len}")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("attention row covers {row_len} sources but there are {expected}")]
    AttentionRowMismatch { row_len: usize, expected: usize },

    #[error(transparent)]
    Tensor(#[from] tensor_core::TensorError),
}
