//! Deterministic synthetic model generation for tests and demos.

use crate::{LayerParams, ModelBundle, ModelConfig};
use tensor_core::{cast, Matrix, Scalar, Vector};

/// Splitmix64: tiny, portable, and deterministic across platforms.
pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [lo, hi), with 53-bit resolution.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + u * (hi - lo)
    }
}

fn rand_matrix<T: Scalar>(rng: &mut SplitMix64, rows: usize, cols: usize, scale: f64) -> Matrix<T> {
    let data = (0..rows * cols)
        .map(|_| cast::<T>(rng.uniform(-scale, scale)))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("synthetic weights finite")
}

fn rand_vector<T: Scalar>(rng: &mut SplitMix64, len: usize, scale: f64) -> Vector<T> {
    let data = (0..len)
        .map(|_| cast::<T>(rng.uniform(-scale, scale)))
        .collect();
    Vector::from_vec(data).expect("synthetic weights finite")
}

fn gamma_vector<T: Scalar>(rng: &mut SplitMix64, len: usize) -> Vector<T> {
    let data = (0..len)
        .map(|_| cast::<T>(rng.uniform(0.9, 1.1)))
        .collect();
    Vector::from_vec(data).expect("synthetic weights finite")
}

/// A small deterministic random bundle. Weight scales are kept moderate so
/// activations stay well inside f32 range.
pub fn synthetic_bundle<T: Scalar>(config: &ModelConfig, seed: u64) -> ModelBundle<T> {
    let mut rng = SplitMix64(seed);
    let d = config.d_model;
    let proj = 0.35 / (d as f64).sqrt();
    let layers = (0..config.n_layer)
        .map(|_| LayerParams {
            ln1_gamma: gamma_vector(&mut rng, d),
            ln1_beta: rand_vector(&mut rng, d, 0.05),
            w_q: rand_matrix(&mut rng, d, d, proj),
            b_q: rand_vector(&mut rng, d, 0.02),
            w_k: rand_matrix(&mut rng, d, d, proj),
            b_k: rand_vector(&mut rng, d, 0.02),
            w_v: rand_matrix(&mut rng, d, d, proj),
            b_v: rand_vector(&mut rng, d, 0.02),
            w_o: rand_matrix(&mut rng, d, d, proj),
            b_o: rand_vector(&mut rng, d, 0.02),
            ln2_gamma: gamma_vector(&mut rng, d),
            ln2_beta: rand_vector(&mut rng, d, 0.05),
            w_fc: rand_matrix(&mut rng, d, config.d_mlp, proj),
            b_fc: rand_vector(&mut rng, config.d_mlp, 0.02),
            w_proj: rand_matrix(&mut rng, config.d_mlp, d, proj),
            b_proj: rand_vector(&mut rng, d, 0.02),
        })
        .collect();
    let token_embedding = rand_matrix(&mut rng, config.vocab_size, d, 0.4);
    let unembedding = token_embedding.transpose();
    ModelBundle {
        config: config.clone(),
        position_embedding: rand_matrix(&mut rng, config.n_positions, d, 0.1),
        layers,
        lnf_gamma: gamma_vector(&mut rng, d),
        lnf_beta: rand_vector(&mut rng, d, 0.05),
        token_embedding,
        unembedding,
        tied_unembedding: true,
    }
}

/// A small config suitable for fast synthetic tests.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        n_layer: 2,
        n_head: 2,
        d_model: 16,
        d_mlp: 32,
        vocab_size: 50,
        n_positions: 32,
        layer_norm_epsilon: 1e-5,
    }
}

/// Flattens a bundle into named f32 tensors in the HF GPT-2 checkpoint
/// layout (fused `c_attn`, Conv1D orientation), for writing test fixtures.
pub fn to_checkpoint_tensors(bundle: &ModelBundle<f32>) -> Vec<(String, Vec<usize>, Vec<f32>)> {
    let d = bundle.config.d_model;
    let mut out: Vec<(String, Vec<usize>, Vec<f32>)> = Vec::new();
    let mat = |m: &Matrix<f32>| (vec![m.rows(), m.cols()], m.data().to_vec());
    let vec_ = |v: &Vector<f32>| (vec![v.len()], v.as_slice().to_vec());

    let (s, v) = mat(&bundle.token_embedding);
    out.push(("wte.weight".into(), s, v));
    let (s, v) = mat(&bundle.position_embedding);
    out.push(("wpe.weight".into(), s, v));
    for (l, layer) in bundle.layers.iter().enumerate() {
        let p = format!("h.{l}.");
        let mut qkv = Matrix::<f32>::zeros(d, 3 * d);
        for i in 0..d {
            for j in 0..d {
                qkv.set(i, j, layer.w_q.get(i, j));
                qkv.set(i, d + j, layer.w_k.get(i, j));
                qkv.set(i, 2 * d + j, layer.w_v.get(i, j));
            }
        }
        let mut qkv_b = layer.b_q.as_slice().to_vec();
        qkv_b.extend_from_slice(layer.b_k.as_slice());
        qkv_b.extend_from_slice(layer.b_v.as_slice());
        let (s, v) = mat(&qkv);
        out.push((format!("{p}attn.c_attn.weight"), s, v));
        out.push((format!("{p}attn.c_attn.bias"), vec![3 * d], qkv_b));
        let (s, v) = mat(&layer.w_o);
        out.push((format!("{p}attn.c_proj.weight"), s, v));
        let (s, v) = vec_(&layer.b_o);
        out.push((format!("{p}attn.c_proj.bias"), s, v));
        let (s, v) = vec_(&layer.ln1_gamma);
        out.push((format!("{p}ln_1.weight"), s, v));
        let (s, v) = vec_(&layer.ln1_beta);
        out.push((format!("{p}ln_1.bias"), s, v));
        let (s, v) = vec_(&layer.ln2_gamma);
        out.push((format!("{p}ln_2.weight"), s, v));
        let (s, v) = vec_(&layer.ln2_beta);
        out.push((format!("{p}ln_2.bias"), s, v));
        let (s, v) = mat(&layer.w_fc);
        out.push((format!("{p}mlp.c_fc.weight"), s, v));
        let (s, v) = vec_(&layer.b_fc);
        out.push((format!("{p}mlp.c_fc.bias"), s, v));
        let (s, v) = mat(&layer.w_proj);
        out.push((format!("{p}mlp.c_proj.weight"), s, v));
        let (s, v) = vec_(&layer.b_proj);
        out.push((format!("{p}mlp.c_proj.bias"), s, v));
    }
    let (s, v) = vec_(&bundle.lnf_gamma);
    out.push(("ln_f.weight".into(), s, v));
    let (s, v) = vec_(&bundle.lnf_beta);
    out.push(("ln_f.bias".into(), s, v));
    out
}
