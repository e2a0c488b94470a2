//! Cross-attention decomposition for encoder-decoder models.
//!
//! Keys and values come from encoder states, which are consumed as given
//! (a Pre-LN decoder does not re-normalize them), so the affine share of
//! encoder position `i` is `sum_h (e_i W_v_h A_h[i] W_o_h + A_h[i] theta_h)`
//! with `theta_h = b_v_h W_o_h`.

use crate::decompose::TransformedVectors;
use crate::{DecompError, Result};
use tensor_core::{cast, softmax_in_place, Matrix, Scalar, Vector};

/// Cross-attention weights of one decoder layer.
#[derive(Debug, Clone)]
pub struct CrossAttnParams<T> {
    pub n_head: usize,
    /// `d x d` value projection, per-head sliced by columns.
    pub w_v: Matrix<T>,
    pub b_v: Vector<T>,
    /// `d x d` output projection, per-head sliced by rows.
    pub w_o: Matrix<T>,
    pub b_o: Vector<T>,
}

/// Decomposes a cross-attention output into per-encoder-position shares.
///
/// `attn_rows` holds one attention row per head (the query position's row),
/// each covering every encoder position.
pub fn cross_transformed_vectors<T: Scalar>(
    params: &CrossAttnParams<T>,
    encoder_states: &Matrix<T>,
    attn_rows: &[Vector<T>],
    keep_heads: bool,
) -> Result<TransformedVectors<T>> {
    let n_enc = encoder_states.rows();
    let d = encoder_states.cols();
    let dh = d / params.n_head;
    for row in attn_rows {
        if row.len() != n_enc {
            return Err(DecompError::AttentionRowMismatch {
                row_len: row.len(),
                expected: n_enc,
            });
        }
    }

    let mut summed = Matrix::zeros(n_enc, d);
    let mut per_head = keep_heads.then(|| vec![Matrix::<T>::zeros(n_enc, d); params.n_head]);
    for h in 0..params.n_head {
        let w_v_h = params.w_v.col_slice(h * dh, (h + 1) * dh)?;
        let w_o_h = params.w_o.row_slice(h * dh, (h + 1) * dh)?;
        let b_v_h =
            Vector::from_vec(params.b_v.as_slice()[h * dh..(h + 1) * dh].to_vec())?;
        let proj = encoder_states.matmul(&w_v_h)?.matmul(&w_o_h)?;
        let theta = b_v_h.matmul(&w_o_h)?;
        let a = attn_rows[h].as_slice();
        let th = theta.as_slice();
        for i in 0..n_enc {
            let w = a[i];
            let p = proj.row(i);
            if let Some(heads) = per_head.as_mut() {
                let hrow = heads[h].row_mut(i);
                for x in 0..d {
                    hrow[x] = w * (p[x] + th[x]);
                }
            }
            let out = summed.row_mut(i);
            for x in 0..d {
                out[x] += w * (p[x] + th[x]);
            }
        }
    }
    Ok(TransformedVectors {
        layer: 0,
        query: 0,
        summed,
        per_head,
        bias: params.b_o.clone(),
    })
}

/// One runnable cross-attention block (adds query/key projections on top
/// of the decomposable parameters) for synthetic encoder-decoder tests and
/// demos.
#[derive(Debug, Clone)]
pub struct CrossAttnStep<T> {
    pub params: CrossAttnParams<T>,
    pub w_q: Matrix<T>,
    pub b_q: Vector<T>,
    pub w_k: Matrix<T>,
    pub b_k: Vector<T>,
}

impl<T: Scalar> CrossAttnStep<T> {
    /// Runs the block directly: per-head softmax attention over encoder
    /// states, concatenated context, output projection. Returns the
    /// attention rows and the block output for one decoder state.
    pub fn run(
        &self,
        decoder_state: &Vector<T>,
        encoder_states: &Matrix<T>,
    ) -> Result<(Vec<Vector<T>>, Vector<T>)> {
        let d = decoder_state.len();
        let nh = self.params.n_head;
        let dh = d / nh;
        let n_enc = encoder_states.rows();
        let scale = T::one() / cast::<T>(dh as f64).sqrt();

        let q = decoder_state.matmul(&self.w_q)?.add(&self.b_q)?;
        let mut keys = encoder_states.matmul(&self.w_k)?;
        for i in 0..n_enc {
            let row = keys.row_mut(i);
            for (x, b) in row.iter_mut().zip(self.b_k.as_slice()) {
                *x += *b;
            }
        }
        let mut values = encoder_states.matmul(&self.params.w_v)?;
        for i in 0..n_enc {
            let row = values.row_mut(i);
            for (x, b) in row.iter_mut().zip(self.params.b_v.as_slice()) {
                *x += *b;
            }
        }

        let mut attn_rows = Vec::with_capacity(nh);
        let mut ctx = vec![T::zero(); d];
        for h in 0..nh {
            let lo = h * dh;
            let mut scores = vec![T::zero(); n_enc];
            for (i, s) in scores.iter_mut().enumerate() {
                let mut acc = T::zero();
                for x in 0..dh {
                    acc += q.as_slice()[lo + x] * keys.row(i)[lo + x];
                }
                *s = acc * scale;
            }
            softmax_in_place(&mut scores);
            for (i, &w) in scores.iter().enumerate() {
                for x in 0..dh {
                    ctx[lo + x] += w * values.row(i)[lo + x];
                }
            }
            attn_rows.push(Vector::from_vec(scores)?);
        }
        let out = Vector::from_vec(ctx)?
            .matmul(&self.params.w_o)?
            .add(&self.params.b_o)?;
        Ok((attn_rows, out))
    }
}

/// Deterministic random cross-attention block for tests and the CLI demo.
pub fn synthetic_step<T: Scalar>(d: usize, n_head: usize, seed: u64) -> CrossAttnStep<T> {
    let mut rng = model_io::synthetic::SplitMix64(seed);
    let scale = 0.4 / (d as f64).sqrt();
    let mut mat = |r: usize, c: usize| {
        let data = (0..r * c)
            .map(|_| cast::<T>(rng.uniform(-scale, scale)))
            .collect();
        Matrix::from_vec(r, c, data).expect("finite")
    };
    let w_q = mat(d, d);
    let w_k = mat(d, d);
    let w_v = mat(d, d);
    let w_o = mat(d, d);
    let mut vec_ = |n: usize| {
        let data = (0..n).map(|_| cast::<T>(rng.uniform(-0.05, 0.05))).collect();
        Vector::from_vec(data).expect("finite")
    };
    CrossAttnStep {
        params: CrossAttnParams {
            n_head,
            w_v,
            b_v: vec_(d),
            w_o,
            b_o: vec_(d),
        },
        w_q,
        b_q: vec_(d),
        w_k,
        b_k: vec_(d),
    }
}
