use crate::ln::LnAffine;
use crate::{DecompError, Result};
use forward_trace::ForwardTrace;
use model_io::ModelBundle;
use tensor_core::{Matrix, Scalar, Vector};

/// The per-source affine shares of one attention block output.
///
/// Row `j` of `summed` is `T_{t,j}(x_j)` with its attention-weighted theta
/// share folded in; `bias` is the block's output bias `b_o`. Their sum
/// reproduces the traced block output at the query position.
#[derive(Debug, Clone)]
pub struct TransformedVectors<T> {
    pub layer: usize,
    pub query: usize,
    /// `(query+1) x d`; row `j` is the share of source position `j`.
    pub summed: Matrix<T>,
    /// Per-head shares, each `(query+1) x d`, when requested.
    pub per_head: Option<Vec<Matrix<T>>>,
    /// Output bias bucket `b_o`.
    pub bias: Vector<T>,
}

impl<T: Scalar> TransformedVectors<T> {
    /// `sum_j T_{t,j} + b_o` — should equal the traced block output.
    pub fn reconstruct(&self) -> Vector<T> {
        let d = self.summed.cols();
        let mut acc = self.bias.as_slice().to_vec();
        for j in 0..self.summed.rows() {
            let row = self.summed.row(j);
            for (a, &v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        Vector::from_vec(acc).unwrap_or_else(|_| Vector::zeros(d))
    }
}

/// Per-layer precomputation shared by every query position.
///
/// For each head, every source `j` costs one `d_head`-wide projection; a
/// query then only scales precomputed rows by its attention weights, so
/// decomposing all `t` query positions stays `O(t * d^2)` per layer
/// instead of `O(t^2 * d^2)`.
pub struct LayerDecomposer<T> {
    layer: usize,
    seq_len: usize,
    d_model: usize,
    /// Per head: `t x d` rows `(x_j L) W_v_h W_o_h`.
    proj: Vec<Matrix<T>>,
    /// Per head: theta = `(beta W_v_h + b_v_h) W_o_h`.
    theta: Vec<Vector<T>>,
    /// Per head: `t x t` attention.
    attn: Vec<Matrix<T>>,
    bias: Vector<T>,
}

impl<T: Scalar> LayerDecomposer<T> {
    pub fn new(bundle: &ModelBundle<T>, trace: &ForwardTrace<T>, layer: usize) -> Result<Self> {
        if layer >= trace.n_layers() {
            return Err(DecompError::LayerOutOfRange {
                layer,
                n_layers: trace.n_layers(),
            });
        }
        let cfg = &bundle.config;
        let params = &bundle.layers[layer];
        let lt = &trace.layers[layer];
        let t = trace.seq_len();
        let dh = cfg.d_head();

        // linear LN part of each source state, frozen at traced sigmas
        let mut lx = Matrix::zeros(t, cfg.d_model);
        for j in 0..t {
            let aff = LnAffine::from_sigma(lt.ln1[j].std, &params.ln1_gamma, &params.ln1_beta);
            let row = aff.apply_linear_slice(lt.x_in.row(j));
            lx.row_mut(j).copy_from_slice(&row);
        }

        let mut proj = Vec::with_capacity(cfg.n_head);
        let mut theta = Vec::with_capacity(cfg.n_head);
        for h in 0..cfg.n_head {
            let w_v_h = params.value_head(h, dh);
            let w_o_h = params.output_head(h, dh);
            proj.push(lx.matmul(&w_v_h)?.matmul(&w_o_h)?);
            let beta_v = params.ln1_beta.matmul(&w_v_h)?;
            let theta_h = beta_v.add(&params.value_bias_head(h, dh))?.matmul(&w_o_h)?;
            theta.push(theta_h);
        }
        Ok(Self {
            layer,
            seq_len: t,
            d_model: cfg.d_model,
            proj,
            theta,
            attn: lt.attn.clone(),
            bias: params.b_o.clone(),
        })
    }

    /// Transformed vectors for one query position.
    pub fn query(&self, position: usize, keep_heads: bool) -> Result<TransformedVectors<T>> {
        if position >= self.seq_len {
            return Err(DecompError::PositionOutOfRange {
                position,
                len: self.seq_len,
            });
        }
        let d = self.d_model;
        let mut summed = Matrix::zeros(position + 1, d);
        let mut per_head = keep_heads.then(|| {
            vec![Matrix::<T>::zeros(position + 1, d); self.proj.len()]
        });
        for (h, (proj_h, theta_h)) in self.proj.iter().zip(&self.theta).enumerate() {
            let a_row = self.attn[h].row(position);
            let th = theta_h.as_slice();
            for j in 0..=position {
                let w = a_row[j];
                let p = proj_h.row(j);
                let out = summed.row_mut(j);
                if let Some(heads) = per_head.as_mut() {
                    let hrow = heads[h].row_mut(j);
                    for x in 0..d {
                        let share = w * (p[x] + th[x]);
                        hrow[x] = share;
                    }
                }
                for x in 0..d {
                    out[x] += w * (p[x] + th[x]);
                }
            }
        }
        Ok(TransformedVectors {
            layer: self.layer,
            query: position,
            summed,
            per_head,
            bias: self.bias.clone(),
        })
    }
}

/// One-shot decomposition of layer `layer` at query position `query`.
pub fn transformed_vectors<T: Scalar>(
    bundle: &ModelBundle<T>,
    trace: &ForwardTrace<T>,
    layer: usize,
    query: usize,
    keep_heads: bool,
) -> Result<TransformedVectors<T>> {
    LayerDecomposer::new(bundle, trace, layer)?.query(query, keep_heads)
}
