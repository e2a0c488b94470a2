use crate::{ForwardError, ForwardTrace, LayerTrace, LnStats, PredictionHead, Result};
use model_io::ModelBundle;
use tensor_core::{cast, gelu, layer_norm_stats, softmax_in_place, Matrix, Scalar, Vector};

/// Applies layer norm row-wise, returning the normalized matrix and the
/// per-row statistics used.
fn layer_norm_rows<T: Scalar>(
    x: &Matrix<T>,
    gamma: &Vector<T>,
    beta: &Vector<T>,
    eps: T,
) -> (Matrix<T>, Vec<LnStats<T>>) {
    let mut out = Matrix::zeros(x.rows(), x.cols());
    let mut stats = Vec::with_capacity(x.rows());
    let g = gamma.as_slice();
    let b = beta.as_slice();
    for i in 0..x.rows() {
        let row = x.row(i);
        let (mean, std) = layer_norm_stats(row, eps);
        stats.push(LnStats { mean, std });
        let orow = out.row_mut(i);
        for j in 0..row.len() {
            orow[j] = (row[j] - mean) / std * g[j] + b[j];
        }
    }
    (out, stats)
}

fn add_bias_rows<T: Scalar>(m: &mut Matrix<T>, bias: &Vector<T>) {
    let b = bias.as_slice();
    for i in 0..m.rows() {
        let row = m.row_mut(i);
        for j in 0..b.len() {
            row[j] += b[j];
        }
    }
}

/// Runs the Pre-LN decoder over `ids`, capturing a full trace and the
/// next-token prediction at the last position.
///
/// Block order per layer: ln1 -> attention -> residual add -> ln2 -> MLP ->
/// residual add; then the final layer norm and the unembedding.
pub fn run_forward<T: Scalar>(
    bundle: &ModelBundle<T>,
    ids: &[u32],
) -> Result<(ForwardTrace<T>, PredictionHead<T>)> {
    let cfg = &bundle.config;
    if ids.is_empty() {
        return Err(ForwardError::EmptySequence);
    }
    if ids.len() > cfg.n_positions {
        return Err(ForwardError::SequenceTooLong {
            len: ids.len(),
            max: cfg.n_positions,
        });
    }
    for &id in ids {
        if id as usize >= cfg.vocab_size {
            return Err(ForwardError::TokenOutOfRange {
                id,
                vocab: cfg.vocab_size,
            });
        }
    }
    let t = ids.len();
    let d = cfg.d_model;
    let h = cfg.n_head;
    let dh = cfg.d_head();
    let eps = cast::<T>(cfg.layer_norm_epsilon);
    let scale = T::one() / cast::<T>(dh as f64).sqrt();

    // x0 = token embedding + position embedding
    let mut x = Matrix::zeros(t, d);
    for (pos, &id) in ids.iter().enumerate() {
        let te = bundle.token_embedding.row(id as usize);
        let pe = bundle.position_embedding.row(pos);
        let row = x.row_mut(pos);
        for j in 0..d {
            row[j] = te[j] + pe[j];
        }
    }
    let x0 = x.clone();

    let mut layers = Vec::with_capacity(cfg.n_layer);
    for layer in &bundle.layers {
        let x_in = x.clone();
        let (xn, ln1) = layer_norm_rows(&x, &layer.ln1_gamma, &layer.ln1_beta, eps);

        let mut q = xn.matmul(&layer.w_q)?;
        add_bias_rows(&mut q, &layer.b_q);
        let mut k = xn.matmul(&layer.w_k)?;
        add_bias_rows(&mut k, &layer.b_k);
        let mut v = xn.matmul(&layer.w_v)?;
        add_bias_rows(&mut v, &layer.b_v);

        // causal attention per head
        let mut attn = Vec::with_capacity(h);
        let mut ctx = Matrix::zeros(t, d);
        for head in 0..h {
            let lo = head * dh;
            let mut a = Matrix::zeros(t, t);
            for i in 0..t {
                let qi = &q.row(i)[lo..lo + dh];
                let mut scores = vec![T::zero(); i + 1];
                for (j, s) in scores.iter_mut().enumerate() {
                    let kj = &k.row(j)[lo..lo + dh];
                    let mut acc = 0.0f64;
                    for x in 0..dh {
                        acc += qi[x].to_f64().unwrap() * kj[x].to_f64().unwrap();
                    }
                    *s = T::from_f64(acc).unwrap() * scale;
                }
                softmax_in_place(&mut scores);
                let arow = a.row_mut(i);
                arow[..=i].copy_from_slice(&scores);
                // context = A v, accumulated over sources in f64
                let mut acc = vec![0.0f64; dh];
                for (j, &w) in scores.iter().enumerate() {
                    let w = w.to_f64().unwrap();
                    let vj = &v.row(j)[lo..lo + dh];
                    for x in 0..dh {
                        acc[x] += w * vj[x].to_f64().unwrap();
                    }
                }
                let crow = ctx.row_mut(i);
                for x in 0..dh {
                    crow[lo + x] = T::from_f64(acc[x]).unwrap();
                }
            }
            attn.push(a);
        }
        let mut attn_out = ctx.matmul(&layer.w_o)?;
        add_bias_rows(&mut attn_out, &layer.b_o);

        let mid = x.add(&attn_out)?;
        let (xn2, ln2) = layer_norm_rows(&mid, &layer.ln2_gamma, &layer.ln2_beta, eps);
        let mut pre_act = xn2.matmul(&layer.w_fc)?;
        add_bias_rows(&mut pre_act, &layer.b_fc);
        let mut mlp_keys = Matrix::zeros(t, cfg.d_mlp);
        for i in 0..t {
            let keys = gelu(&Vector::from_vec(pre_act.row(i).to_vec())?);
            mlp_keys.row_mut(i).copy_from_slice(keys.as_slice());
        }
        let mut mlp_out = mlp_keys.matmul(&layer.w_proj)?;
        add_bias_rows(&mut mlp_out, &layer.b_proj);

        x = mid.add(&mlp_out)?;
        layers.push(LayerTrace {
            x_in,
            ln1,
            attn,
            attn_out,
            mid,
            ln2,
            mlp_keys,
            mlp_out,
        });
    }

    let x_final = x;
    let (xn, lnf) = layer_norm_rows(&x_final, &bundle.lnf_gamma, &bundle.lnf_beta, eps);
    let last = Vector::from_vec(xn.row(t - 1).to_vec())?;
    let logits = last.matmul(&bundle.unembedding)?;
    let mut probs: Vec<T> = logits.as_slice().to_vec();
    softmax_in_place(&mut probs);

    Ok((
        ForwardTrace {
            ids: ids.to_vec(),
            x0,
            layers,
            x_final,
            lnf,
        },
        PredictionHead {
            logits,
            probs: Vector::from_vec(probs)?,
        },
    ))
}

/// Logit of one candidate next token (through the final layer norm, exactly
/// as computed by [`run_forward`]).
pub fn next_token_logit<T: Scalar>(head: &PredictionHead<T>, token_id: u32) -> Result<T> {
    head.logits
        .get(token_id as usize)
        .map_err(ForwardError::Tensor)
}
