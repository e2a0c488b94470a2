use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForwardError {
    #[error("sequence of {len} tokens exceeds the model maximum {max}")]
    SequenceTooLong { len: usize, max: usize },

    #[error("empty token sequence")]
    EmptySequence,

    #[error("token id {id} out of vocabulary range {vocab}")]
    TokenOutOfRange { id: u32, vocab: usize },

    #[error(transparent)]
    Tensor(#[from] tensor_core::TensorError),
}
