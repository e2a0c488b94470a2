use serde::{Deserialize, Serialize};

/// Which attribution method produced an explanation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Logit,
    AltiLogit,
    Erasure,
}

/// Score mass not attributed to any input token: per-layer attention
/// output biases, per-layer MLP writes, the query's own embedding state,
/// and the final layer-norm beta path.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Buckets {
    pub attn_bias: Vec<f64>,
    pub mlp: Vec<f64>,
    pub x0: f64,
    pub final_ln_beta: f64,
}

impl Buckets {
    pub fn total(&self) -> f64 {
        self.attn_bias.iter().sum::<f64>()
            + self.mlp.iter().sum::<f64>()
            + self.x0
            + self.final_ln_beta
    }
}

/// Per-input-token saliency for one (target, foil) query, with the
/// per-layer breakdown and the unattributed buckets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub method: Method,
    pub target: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub foil: Option<u32>,
    /// Input token strings; filled in by callers that hold a tokenizer.
    #[serde(default)]
    pub tokens: Vec<String>,
    /// Final per-input-token scores (length = context length).
    pub scores: Vec<f64>,
    /// Per-layer score matrix, `n_layer x context length`. Empty for
    /// methods without a layer decomposition (erasure).
    pub per_layer: Vec<Vec<f64>>,
    pub buckets: Buckets,
}

impl Explanation {
    pub fn seq_len(&self) -> usize {
        self.scores.len()
    }

    /// Everything the method attributes anywhere: token scores plus
    /// buckets. For logit methods this reconstructs the (difference of)
    /// logits through the linearized final layer norm.
    pub fn total_attribution(&self) -> f64 {
        self.scores.iter().sum::<f64>() + self.buckets.total()
    }

    /// Index of the highest-scoring input token.
    pub fn argmax_token(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.scores.iter().enumerate() {
            if v > self.scores[best] {
                best = i;
            }
        }
        best
    }
}
