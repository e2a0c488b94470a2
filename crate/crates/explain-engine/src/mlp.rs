use crate::updates::{final_ln_affine, readout};
use crate::{ExplainError, Result};
use forward_trace::ForwardTrace;
use model_io::ModelBundle;
use tensor_core::{Scalar, Vector};

/// Key-value decomposition of one MLP block's update to a logit
/// difference: dimension `i` contributes `k_i * (v_i through the
/// linearized final LN) . (U_w - U_f)`, where `v_i` is row `i` of the
/// second MLP matrix. The projection bias's share is kept separately so
/// the sub-updates plus bias reproduce the block's full update.
#[derive(Debug, Clone)]
pub struct MlpSubUpdates {
    pub layer: usize,
    pub target: u32,
    pub foil: u32,
    /// One update per MLP dimension (length `d_mlp`).
    pub updates: Vec<f64>,
    /// Share of the MLP projection bias.
    pub bias_update: f64,
}

impl MlpSubUpdates {
    pub fn total(&self) -> f64 {
        self.updates.iter().sum::<f64>() + self.bias_update
    }

    /// Dimensions sorted by descending update.
    pub fn top_dimensions(&self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.updates.len()).collect();
        idx.sort_by(|&a, &b| self.updates[b].partial_cmp(&self.updates[a]).unwrap());
        idx.truncate(n);
        idx
    }
}

/// Per-dimension MLP sub-updates at the final query position.
pub fn mlp_value_updates<T: Scalar>(
    bundle: &ModelBundle<T>,
    trace: &ForwardTrace<T>,
    layer: usize,
    target: u32,
    foil: u32,
) -> Result<MlpSubUpdates> {
    if layer >= trace.n_layers() {
        return Err(ExplainError::Decomp(
            attn_decomp::DecompError::LayerOutOfRange {
                layer,
                n_layers: trace.n_layers(),
            },
        ));
    }
    let query = trace.seq_len() - 1;
    let lnf = final_ln_affine(bundle, trace, query);
    let u_w = bundle.unembed_col(target)?;
    let u_f = bundle.unembed_col(foil)?;
    let du = Vector::from_vec(
        u_w.as_slice()
            .iter()
            .zip(u_f.as_slice())
            .map(|(&a, &b)| a - b)
            .collect(),
    )?;
    let params = &bundle.layers[layer];
    let keys = trace.layers[layer].mlp_keys.row(query);
    let mut updates = Vec::with_capacity(bundle.config.d_mlp);
    for i in 0..bundle.config.d_mlp {
        let v_i = params.w_proj.row(i);
        let ro = readout(v_i, &du, Some(&lnf));
        updates.push(keys[i].to_f64().unwrap() * ro);
    }
    let bias_update = readout(params.b_proj.as_slice(), &du, Some(&lnf));
    Ok(MlpSubUpdates {
        layer,
        target,
        foil,
        updates,
        bias_update,
    })
}
