use crate::Result;
use attn_decomp::{LnAffine, TransformedVectors};
use forward_trace::ForwardTrace;
use model_io::ModelBundle;
use tensor_core::{Scalar, Vector};

/// Final layer norm linearized at the query position's traced statistics.
pub fn final_ln_affine<T: Scalar>(
    bundle: &ModelBundle<T>,
    trace: &ForwardTrace<T>,
    query: usize,
) -> LnAffine<T> {
    LnAffine::from_sigma(trace.lnf[query].std, &bundle.lnf_gamma, &bundle.lnf_beta)
}

/// Maps an update vector through the linearized final layer norm (or not)
/// and reads out its logit contribution to the `u_col` direction.
pub(crate) fn readout<T: Scalar>(
    v: &[T],
    u_col: &Vector<T>,
    lnf: Option<&LnAffine<T>>,
) -> f64 {
    let u = u_col.as_slice();
    let mut acc = 0.0f64;
    match lnf {
        Some(aff) => {
            let mapped = aff.apply_linear_slice(v);
            for (a, b) in mapped.iter().zip(u) {
                acc += a.to_f64().unwrap() * b.to_f64().unwrap();
            }
        }
        None => {
            for (a, b) in v.iter().zip(u) {
                acc += a.to_f64().unwrap() * b.to_f64().unwrap();
            }
        }
    }
    acc
}

/// Per-source logit updates of one attention block: source `j`'s share is
/// its transformed vector mapped through the linearized final layer norm
/// and projected on the unembedding column. Returns the per-source updates
/// and the bias bucket's update.
pub fn layer_logit_update<T: Scalar>(
    tv: &TransformedVectors<T>,
    u_col: &Vector<T>,
    lnf: &LnAffine<T>,
) -> Result<(Vec<f64>, f64)> {
    let mut updates = Vec::with_capacity(tv.summed.rows());
    for j in 0..tv.summed.rows() {
        updates.push(readout(tv.summed.row(j), u_col, Some(lnf)));
    }
    let bias = readout(tv.bias.as_slice(), u_col, Some(lnf));
    Ok((updates, bias))
}

/// Head-level logit updates: one row of per-source updates per head.
/// Requires the decomposition to have kept per-head vectors.
pub fn head_logit_update<T: Scalar>(
    tv: &TransformedVectors<T>,
    u_col: &Vector<T>,
    lnf: &LnAffine<T>,
) -> Result<Vec<Vec<f64>>> {
    let heads = tv.per_head.as_ref().ok_or_else(|| {
        crate::ExplainError::Incompatible {
            reason: "transformed vectors were built without per-head shares".into(),
        }
    })?;
    Ok(heads
        .iter()
        .map(|m| {
            (0..m.rows())
                .map(|j| readout(m.row(j), u_col, Some(lnf)))
                .collect()
        })
        .collect())
}
