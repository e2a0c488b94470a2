use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("token id {id} out of vocabulary range {vocab}")]
    TokenOutOfRange { id: u32, vocab: usize },

    #[error("cannot combine explanations: {reason}")]
    Incompatible { reason: String },

    #[error("sequence of length {len} is too short to erase from")]
    SequenceTooShort { len: usize },

    #[error("mix matrices cover {mix} positions but the trace has {trace}")]
    MixTraceMismatch { mix: usize, trace: usize },

    #[error(transparent)]
    Forward(#[from] forward_trace::ForwardError),

    #[error(transparent)]
    Decomp(#[from] attn_decomp::DecompError),

    #[error(transparent)]
    Mix(#[from] alti_mix::MixError),

    #[error(transparent)]
    Tensor(#[from] tensor_core::TensorError),

    #[error(transparent)]
    ModelIo(#[from] model_io::ModelIoError),
}
