use tensor_core::{layer_norm_stats, Matrix, Scalar, Vector};

/// Layer norm frozen at a realized standard deviation, split into its
/// linear part (centering, `1/sigma` scaling, gamma) and the beta offset.
///
/// Stored factored — the dense `d x d` map is never materialized. Applying
/// the full affine to the vector it was linearized at reproduces the true
/// layer norm output.
#[derive(Debug, Clone)]
pub struct LnAffine<T> {
    pub sigma: T,
    pub gamma: Vector<T>,
    pub beta: Vector<T>,
}

/// Freezes layer norm at `x`: sigma is computed from `x` with the model
/// epsilon, after which the map is a constant affine transformation.
pub fn linearize_ln<T: Scalar>(
    gamma: &Vector<T>,
    beta: &Vector<T>,
    x: &Vector<T>,
    eps: T,
) -> LnAffine<T> {
    let (_, sigma) = layer_norm_stats(x.as_slice(), eps);
    LnAffine {
        sigma,
        gamma: gamma.clone(),
        beta: beta.clone(),
    }
}

impl<T: Scalar> LnAffine<T> {
    /// Builds the affine directly from a trace-recorded sigma.
    pub fn from_sigma(sigma: T, gamma: &Vector<T>, beta: &Vector<T>) -> Self {
        Self {
            sigma,
            gamma: gamma.clone(),
            beta: beta.clone(),
        }
    }

    /// The linear part: `((v - mean(v)) / sigma) * gamma`.
    pub fn apply_linear_slice(&self, v: &[T]) -> Vec<T> {
                let mut mean = 0.0f64;
        for &x in v {
            mean += x.to_f64().unwrap();
        }
        let mean = tensor_core::cast::<T>(mean / v.len() as f64);
        let g = self.gamma.as_slice();
        v.iter()
            .enumerate()
            .map(|(j, &x)| (x - mean) / self.sigma * g[j])
            .collect()
    }

    pub fn apply_linear(&self, v: &Vector<T>) -> Vector<T> {
        Vector::from_vec(self.apply_linear_slice(v.as_slice())).expect("finite")
    }

    /// Linear part applied to every row.
    pub fn apply_linear_rows(&self, m: &Matrix<T>) -> Matrix<T> {
        let mut out = Matrix::zeros(m.rows(), m.cols());
        for i in 0..m.rows() {
            let row = self.apply_linear_slice(m.row(i));
            out.row_mut(i).copy_from_slice(&row);
        }
        out
    }

    /// Full affine: linear part plus beta. Equals true layer norm at the
    /// linearization point.
    pub fn apply(&self, v: &Vector<T>) -> Vector<T> {
        let lin = self.apply_linear_slice(v.as_slice());
        let b = self.beta.as_slice();
        Vector::from_vec(lin.iter().zip(b).map(|(&l, &b)| l + b).collect()).expect("finite")
    }
}
