//! Contextual-mixing tracking: per-layer contribution matrices and their
//! cumulative rollout.
//!
//! Each intermediate representation is modeled as a non-negative, normalized
//! linear combination of the previous layer's representations,
//! `x^l_i = sum_j c^l_{i,j} x^{l-1}_j`. Coefficients come from an
//! L1-affinity score between the layer's per-source affine shares and the
//! realized output, with the residual path folded into the diagonal
//! candidate:
//!
//! ```text
//! v_{i,j} = T^l_{i,j}(x_j)            (j < i)
//! v_{i,i} = T^l_{i,i}(x_i) + x_i      (residual)
//! r_i     = sum_j v_{i,j} + b_o
//! s_{i,j} = max(0, ||r_i||_1 - ||r_i - v_{i,j}||_1)
//! c_{i,j} = s_{i,j} / sum_j s_{i,j}   (uniform over j <= i if all zero)
//! ```
//!
//! Multiplying the per-layer matrices rolls contributions back to the model
//! inputs: `M^0 = I`, `M^l = C^l M^{l-1}`. Only the attention sublayer
//! mixes positions, so one matrix per layer suffices.

use attn_decomp::{LayerDecomposer, TransformedVectors};
use forward_trace::ForwardTrace;
use model_io::ModelBundle;
use tensor_core::{cast, l1_norm, Matrix, Scalar};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MixError {
    #[error("expected transformed vectors for every query position 0..{expected}, got {got}")]
    IncompleteQuerySet { expected: usize, got: usize },

    #[error("transformed vectors at index {index} are for layer {got}, expected {expected}")]
    WrongLayer {
        index: usize,
        got: usize,
        expected: usize,
    },

    #[error("coefficient matrix {index} is {rows}x{cols}, expected {n}x{n}")]
    NotSquare {
        index: usize,
        rows: usize,
        cols: usize,
        n: usize,
    },

    #[error("coefficient matrix {index} row {row} is not stochastic (sum {sum})")]
    NotStochastic { index: usize, row: usize, sum: f64 },

    #[error(transparent)]
    Decomp(#[from] attn_decomp::DecompError),

    #[error(transparent)]
    Tensor(#[from] tensor_core::TensorError),
}

pub type Result<T> = std::result::Result<T, MixError>;

/// Per-layer coefficients `C^l` and cumulative products `M^l`.
///
/// `rollout[0]` is the identity (`M^0`); `rollout[l]` maps layer-`l` output
/// streams back to model input tokens.
#[derive(Debug, Clone)]
pub struct MixMatrices<T> {
    pub coefficients: Vec<Matrix<T>>,
    pub rollout: Vec<Matrix<T>>,
}

impl<T: Scalar> MixMatrices<T> {
    /// `M^{l-1}` for 0-indexed layer `l`: the mixing state entering it.
    pub fn entering(&self, layer: usize) -> &Matrix<T> {
        &self.rollout[layer]
    }

    /// Replaces every product with the identity (no mixing assumption).
    pub fn forced_identity(&self) -> Self {
        let n = self.rollout[0].rows();
        Self {
            coefficients: self.coefficients.iter().map(|_| Matrix::identity(n)).collect(),
            rollout: self.rollout.iter().map(|_| Matrix::identity(n)).collect(),
        }
    }
}

/// Row-normalized contribution coefficients of one layer, from the
/// decomposition of every query position.
pub fn layer_coefficients<T: Scalar>(
    tvs: &[TransformedVectors<T>],
    trace: &ForwardTrace<T>,
    layer: usize,
) -> Result<Matrix<T>> {
    let t = trace.seq_len();
    if tvs.len() != t {
        return Err(MixError::IncompleteQuerySet {
            expected: t,
            got: tvs.len(),
        });
    }
    let x_in = &trace.layers[layer].x_in;
    let mut c = Matrix::zeros(t, t);
    for (i, tv) in tvs.iter().enumerate() {
        if tv.layer != layer || tv.query != i {
            return Err(MixError::WrongLayer {
                index: i,
                got: tv.layer,
                expected: layer,
            });
        }
        let d = tv.summed.cols();
        let mut reference = tv.bias.as_slice().to_vec();
        let mut candidates: Vec<Vec<T>> = Vec::with_capacity(i + 1);
        for j in 0..=i {
            let mut v = tv.summed.row(j).to_vec();
            if j == i {
                for (a, &b) in v.iter_mut().zip(x_in.row(i)) {
                    *a = *a + b;
                }
            }
            for (r, &a) in reference.iter_mut().zip(&v) {
                *r = *r + a;
            }
            candidates.push(v);
        }
        let r_norm = l1_norm(&reference);
        let mut scores = Vec::with_capacity(i + 1);
        let mut total = T::zero();
        let mut diff = vec![T::zero(); d];
        for v in &candidates {
            for ((dst, &r), &a) in diff.iter_mut().zip(&reference).zip(v) {
                *dst = r - a;
            }
            let s = (r_norm - l1_norm(&diff)).max(T::zero());
            total += s;
            scores.push(s);
        }
        let row = c.row_mut(i);
        if total > T::zero() {
            for (j, s) in scores.into_iter().enumerate() {
                row[j] = s / total;
            }
        } else {
            let u = T::one() / cast::<T>((i + 1) as f64);
            for slot in row.iter_mut().take(i + 1) {
                *slot = u;
            }
        }
    }
    Ok(c)
}

/// Cumulative products `M^0 = I`, `M^l = C^l M^{l-1}`.
///
/// Every input matrix must be row-stochastic; the products then stay
/// row-stochastic, non-negative, and lower-triangular.
pub fn rollout<T: Scalar>(coefficients: &[Matrix<T>]) -> Result<Vec<Matrix<T>>> {
    let n = coefficients.first().map_or(0, Matrix::rows);
    let tol = 1e-6;
    for (index, c) in coefficients.iter().enumerate() {
        if c.rows() != n || c.cols() != n {
            return Err(MixError::NotSquare {
                index,
                rows: c.rows(),
                cols: c.cols(),
                n,
            });
        }
        for row in 0..n {
            let mut sum = 0.0f64;
            for j in 0..n {
                let v = num_traits::ToPrimitive::to_f64(&c.get(row, j)).unwrap();
                if v < -tol {
                    return Err(MixError::NotStochastic { index, row, sum: v });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > tol {
                return Err(MixError::NotStochastic { index, row, sum });
            }
        }
    }
    let mut out = Vec::with_capacity(coefficients.len() + 1);
    out.push(Matrix::identity(n));
    for c in coefficients {
        let prev = out.last().unwrap();
        out.push(c.matmul(prev)?);
    }
    Ok(out)
}

/// Convenience: decomposes every layer at every query position and rolls
/// the coefficients up in one call.
pub fn mix_matrices<T: Scalar>(
    bundle: &ModelBundle<T>,
    trace: &ForwardTrace<T>,
) -> Result<MixMatrices<T>> {
    let mut coefficients = Vec::with_capacity(trace.n_layers());
    for layer in 0..trace.n_layers() {
        let dec = LayerDecomposer::new(bundle, trace, layer)?;
        let tvs: Vec<TransformedVectors<T>> = (0..trace.seq_len())
            .map(|i| dec.query(i, false))
            .collect::<std::result::Result<_, _>>()?;
        coefficients.push(layer_coefficients(&tvs, trace, layer)?);
    }
    let rollout = rollout(&coefficients)?;
    Ok(MixMatrices {
        coefficients,
        rollout,
    })
}
