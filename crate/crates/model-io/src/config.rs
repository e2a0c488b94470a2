use crate::{ModelIoError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Architecture hyperparameters of a GPT-2-class Pre-LN decoder.
///
/// Deserialized from the standard config JSON (`n_layer`, `n_head`,
/// `n_embd`, `n_positions`, `vocab_size`, `layer_norm_epsilon`). The MLP
/// width is not part of that file; it defaults to `4 * n_embd` and is
/// re-validated against the checkpoint when weights are loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_layer: usize,
    pub n_head: usize,
    #[serde(rename = "n_embd")]
    pub d_model: usize,
    #[serde(default)]
    pub d_mlp: usize,
    pub vocab_size: usize,
    pub n_positions: usize,
    pub layer_norm_epsilon: f64,
}

impl ModelConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ModelIoError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        if cfg.d_mlp == 0 {
            cfg.d_mlp = 4 * cfg.d_model;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(ModelIoError::ConfigInvalid { reason });
        if self.n_layer == 0 || self.n_head == 0 || self.d_model == 0 || self.vocab_size == 0 {
            return bad("all counts must be >= 1".into());
        }
        if self.d_model % self.n_head != 0 {
            return bad(format!(
                "n_embd {} not divisible by n_head {}",
                self.d_model, self.n_head
            ));
        }
        if self.layer_norm_epsilon <= 0.0 {
            return bad("layer_norm_epsilon must be positive".into());
        }
        Ok(())
    }

    /// Per-head dimension `d_model / n_head`.
    pub fn d_head(&self) -> usize {
        self.d_model / self.n_head
    }
}
