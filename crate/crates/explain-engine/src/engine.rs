use crate::explanation::{Buckets, Explanation, Method};
use crate::updates::{final_ln_affine, layer_logit_update, readout};
use crate::{ExplainError, Result};
use alti_mix::MixMatrices;
use attn_decomp::{LayerDecomposer, TransformedVectors};
use forward_trace::ForwardTrace;
use model_io::ModelBundle;
use tensor_core::{Scalar, Vector};

/// Engine switches. `apply_final_ln` is on by default; turning it off
/// reads updates out against the raw unembedding (ablation only — the
/// reconstruction invariant no longer holds without the final layer norm).
#[derive(Debug, Clone, Copy)]
pub struct ExplainOptions {
    pub apply_final_ln: bool,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        Self {
            apply_final_ln: true,
        }
    }
}

fn check_token<T: Scalar>(bundle: &ModelBundle<T>, id: u32) -> Result<()> {
    if (id as usize) >= bundle.config.vocab_size {
        return Err(ExplainError::TokenOutOfRange {
            id,
            vocab: bundle.config.vocab_size,
        });
    }
    Ok(())
}

/// Decomposes the attention block of every layer at the final query
/// position.
fn decompose_last<T: Scalar>(
    bundle: &ModelBundle<T>,
    trace: &ForwardTrace<T>,
) -> Result<Vec<TransformedVectors<T>>> {
    let query = trace.seq_len() - 1;
    (0..trace.n_layers())
        .map(|l| Ok(LayerDecomposer::new(bundle, trace, l)?.query(query, false)?))
        .collect()
}

/// Redistributes one layer's per-stream updates to model input tokens:
/// `score_s = sum_j update_j * M[j, s]`, with `M` the mixing state entering
/// the layer (column `s` holds input token `s`'s share of each stream).
pub fn redistribute_layer<T: Scalar>(updates: &[f64], entering: &tensor_core::Matrix<T>) -> Vec<f64> {
    let t = entering.cols();
    let mut out = vec![0.0f64; t];
    for (j, &u) in updates.iter().enumerate() {
        for (s, slot) in out.iter_mut().enumerate() {
            *slot += u * entering.get(j, s).to_f64().unwrap();
        }
    }
    out
}

struct Assembled {
    per_layer: Vec<Vec<f64>>,
    buckets: Buckets,
}

/// Shared score assembly. `mix` of `None` keeps stream identity (the Logit
/// explanation); otherwise per-layer updates are redistributed to input
/// tokens through `M^{l-1}` before summing.
fn assemble<T: Scalar>(
    bundle: &ModelBundle<T>,
    trace: &ForwardTrace<T>,
    tvs: &[TransformedVectors<T>],
    mix: Option<&MixMatrices<T>>,
    u_col: &Vector<T>,
    options: ExplainOptions,
) -> Result<Assembled> {
    let t = trace.seq_len();
    let query = t - 1;
    let lnf = final_ln_affine(bundle, trace, query);
    let lnf_opt = options.apply_final_ln.then_some(&lnf);

    if let Some(m) = mix {
        let n = m.rollout[0].rows();
        if n != t {
            return Err(ExplainError::MixTraceMismatch { mix: n, trace: t });
        }
    }

    let mut per_layer = Vec::with_capacity(trace.n_layers());
    let mut attn_bias = Vec::with_capacity(trace.n_layers());
    let mut mlp = Vec::with_capacity(trace.n_layers());
    for (l, tv) in tvs.iter().enumerate() {
        let (updates, bias) = match lnf_opt {
            Some(aff) => layer_logit_update(tv, u_col, aff)?,
            None => {
                let ups = (0..tv.summed.rows())
                    .map(|j| readout(tv.summed.row(j), u_col, None))
                    .collect();
                (ups, readout(tv.bias.as_slice(), u_col, None))
            }
        };
        let row = match mix {
            None => updates,
            Some(m) => redistribute_layer(&updates, m.entering(l)),
        };
        per_layer.push(row);
        attn_bias.push(bias);
        mlp.push(readout(trace.layers[l].mlp_out.row(query), u_col, lnf_opt));
    }

    let x0 = readout(trace.x0.row(query), u_col, lnf_opt);
    let final_ln_beta = if options.apply_final_ln {
        readout(bundle.lnf_beta.as_slice(), u_col, None)
    } else {
        0.0
    };

    Ok(Assembled {
        per_layer,
        buckets: Buckets {
            attn_bias,
            mlp,
            x0,
            final_ln_beta,
        },
    })
}

fn finish(method: Method, target: u32, assembled: Assembled, t: usize) -> Explanation {
    let mut scores = vec![0.0f64; t];
    for row in &assembled.per_layer {
        for (s, &v) in scores.iter_mut().zip(row) {
            *s += v;
        }
    }
    Explanation {
        method,
        target,
        foil: None,
        tokens: Vec::new(),
        scores,
        per_layer: assembled.per_layer,
        buckets: assembled.buckets,
    }
}

/// Logit explanation: per-layer attention updates credited to the stream
/// they came from, summed over layers (identity mixing).
pub fn logit_explanation<T: Scalar>(
    bundle: &ModelBundle<T>,
    trace: &ForwardTrace<T>,
    target: u32,
) -> Result<Explanation> {
    logit_explanation_with(bundle, trace, target, ExplainOptions::default())
}

pub fn logit_explanation_with<T: Scalar>(
    bundle: &ModelBundle<T>,
    trace: &ForwardTrace<T>,
    target: u32,
    options: ExplainOptions,
) -> Result<Explanation> {
    check_token(bundle, target)?;
    let tvs = decompose_last(bundle, trace)?;
    let u_col = bundle.unembed_col(target)?;
    let assembled = assemble(bundle, trace, &tvs, None, &u_col, options)?;
    Ok(finish(Method::Logit, target, assembled, trace.seq_len()))
}

/// ALTI-Logit explanation: per-layer updates redistributed to the model
/// input tokens through the mixing rollout, then summed over layers.
pub fn alti_logit_explanation<T: Scalar>(
    bundle: &ModelBundle<T>,
    trace: &ForwardTrace<T>,
    mix: &MixMatrices<T>,
    target: u32,
) -> Result<Explanation> {
    alti_logit_explanation_with(bundle, trace, mix, target, ExplainOptions::default())
}

pub fn alti_logit_explanation_with<T: Scalar>(
    bundle: &ModelBundle<T>,
    trace: &ForwardTrace<T>,
    mix: &MixMatrices<T>,
    target: u32,
    options: ExplainOptions,
) -> Result<Explanation> {
    check_token(bundle, target)?;
    let tvs = decompose_last(bundle, trace)?;
    let u_col = bundle.unembed_col(target)?;
    let assembled = assemble(bundle, trace, &tvs, Some(mix), &u_col, options)?;
    Ok(finish(Method::AltiLogit, target, assembled, trace.seq_len()))
}

/// Element-wise difference of two explanations of the same method over the
/// same context: the update to the logit difference target-minus-foil.
pub fn contrastive(target: &Explanation, foil: &Explanation) -> Result<Explanation> {
    if target.method != foil.method {
        return Err(ExplainError::Incompatible {
            reason: format!("method {:?} vs {:?}", target.method, foil.method),
        });
    }
    if target.seq_len() != foil.seq_len() || target.per_layer.len() != foil.per_layer.len() {
        return Err(ExplainError::Incompatible {
            reason: "explanations cover different shapes".into(),
        });
    }
    let scores = target
        .scores
        .iter()
        .zip(&foil.scores)
        .map(|(a, b)| a - b)
        .collect();
    let per_layer = target
        .per_layer
        .iter()
        .zip(&foil.per_layer)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| a - b).collect())
        .collect();
    let buckets = Buckets {
        attn_bias: target
            .buckets
            .attn_bias
            .iter()
            .zip(&foil.buckets.attn_bias)
            .map(|(a, b)| a - b)
            .collect(),
        mlp: target
            .buckets
            .mlp
            .iter()
            .zip(&foil.buckets.mlp)
            .map(|(a, b)| a - b)
            .collect(),
        x0: target.buckets.x0 - foil.buckets.x0,
        final_ln_beta: target.buckets.final_ln_beta - foil.buckets.final_ln_beta,
    };
    Ok(Explanation {
        method: target.method,
        target: target.target,
        foil: Some(foil.target),
        tokens: target.tokens.clone(),
        scores,
        per_layer,
        buckets,
    })
}

/// One-call contrastive explanation for a (target, foil) pair, sharing the
/// decomposition and mixing work between the two readouts.
pub fn contrastive_explanation<T: Scalar>(
    bundle: &ModelBundle<T>,
    trace: &ForwardTrace<T>,
    method: Method,
    target: u32,
    foil: u32,
    options: ExplainOptions,
) -> Result<Explanation> {
    check_token(bundle, target)?;
    check_token(bundle, foil)?;
    let mix_storage;
    let mix = match method {
        Method::AltiLogit => {
            mix_storage = alti_mix::mix_matrices(bundle, trace)?;
            Some(&mix_storage)
        }
        Method::Logit => None,
        Method::Erasure => {
            return Err(ExplainError::Incompatible {
                reason: "erasure runs through contrastive_erasure, not the logit engine".into(),
            })
        }
    };
    let tvs = decompose_last(bundle, trace)?;
    let t = trace.seq_len();
    let u_w = bundle.unembed_col(target)?;
    let u_f = bundle.unembed_col(foil)?;
    let a_w = assemble(bundle, trace, &tvs, mix, &u_w, options)?;
    let a_f = assemble(bundle, trace, &tvs, mix, &u_f, options)?;
    let e_w = finish(method, target, a_w, t);
    let e_f = finish(method, foil, a_f, t);
    contrastive(&e_w, &e_f)
}
