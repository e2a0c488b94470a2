use tensor_core::{Matrix, Vector};

/// Layer-norm statistics for one position, frozen at trace time.
#[derive(Debug, Clone, Copy)]
pub struct LnStats<T> {
    pub mean: T,
    pub std: T,
}

/// Everything captured from one decoder layer.
///
/// `x_in` is the residual stream entering the layer (the paper-level
/// `x^{l-1}`); `attn_out` is the attention block's write into the stream
/// and `mlp_out` the MLP's, so `x_out == x_in + attn_out + mlp_out` holds
/// exactly as computed.
#[derive(Debug, Clone)]
pub struct LayerTrace<T> {
    /// Residual stream entering the layer, `t x d`.
    pub x_in: Matrix<T>,
    /// First layer-norm statistics per position.
    pub ln1: Vec<LnStats<T>>,
    /// Per-head causal attention matrices, each `t x t`.
    pub attn: Vec<Matrix<T>>,
    /// Attention block output written to the stream, `t x d`.
    pub attn_out: Matrix<T>,
    /// Residual stream after the attention write, `t x d`.
    pub mid: Matrix<T>,
    /// Second layer-norm statistics per position.
    pub ln2: Vec<LnStats<T>>,
    /// Post-activation MLP key coefficients, `t x d_mlp`.
    pub mlp_keys: Matrix<T>,
    /// MLP block output written to the stream, `t x d`.
    pub mlp_out: Matrix<T>,
}

/// Full capture of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace<T> {
    /// Input ids the pass ran on.
    pub ids: Vec<u32>,
    /// Embedding-plus-position input states, `t x d`.
    pub x0: Matrix<T>,
    pub layers: Vec<LayerTrace<T>>,
    /// Final residual stream `x^L`, `t x d`.
    pub x_final: Matrix<T>,
    /// Final layer-norm statistics per position.
    pub lnf: Vec<LnStats<T>>,
}

impl<T: tensor_core::Scalar> ForwardTrace<T> {
    pub fn seq_len(&self) -> usize {
        self.ids.len()
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }
}

/// Next-token readout at the last position.
#[derive(Debug, Clone)]
pub struct PredictionHead<T> {
    /// Logits over the vocabulary.
    pub logits: Vector<T>,
    /// Softmax of the logits.
    pub probs: Vector<T>,
}

impl<T: tensor_core::Scalar> PredictionHead<T> {
    pub fn argmax(&self) -> u32 {
        let mut best = 0usize;
        let s = self.logits.as_slice();
        for (i, &v) in s.iter().enumerate() {
            if v > s[best] {
                best = i;
            }
        }
        best as u32
    }
}
