use thiserror::Error;

/// Errors emitted by matrix and vector constructors and kernels.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TensorError {
    #[error("dimension mismatch in {op}: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    DimMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("data length {got} does not match shape {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, got: usize },

    #[error("vector length mismatch in {op}: {left} vs {right}")]
    LenMismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("index {index} out of range for length {len}")]
    OutOfRange { index: usize, len: usize },
}
