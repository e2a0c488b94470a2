//! Randomized checks of every kernel against independent 64-bit
//! straight-line re-computations.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensor_core::{gelu, l1_norm, layer_norm_stats, softmax_row, Matrix, Vector};

/// Naive triple-loop product in f64, independent of the library path.
fn matmul_oracle(a: &Matrix<f32>, b: &Matrix<f32>) -> Vec<f64> {
    let (n, k, m) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0f64; n * m];
    for i in 0..n {
        for j in 0..m {
            let mut acc = 0.0f64;
            for p in 0..k {
                acc += a.get(i, p) as f64 * b.get(p, j) as f64;
            }
            out[i * m + j] = acc;
        }
    }
    out
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<f32> {
    let data = (0..rows * cols).map(|_| rng.gen_range(-2.0..2.0)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

#[test]
fn matmul_matches_f64_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let a = random_matrix(&mut rng, 5, 4);
        let b = random_matrix(&mut rng, 4, 3);
        let c = a.matmul(&b).unwrap();
        let oracle = matmul_oracle(&a, &b);
        for (got, want) in c.data().iter().zip(&oracle) {
            assert!((*got as f64 - want).abs() <= 1e-5, "{got} vs {want}");
        }
    }
}

#[test]
fn transpose_of_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let a = random_matrix(&mut rng, 6, 6);
        let b = random_matrix(&mut rng, 6, 6);
        let left = a.matmul(&b).unwrap().transpose();
        let right = b.transpose().matmul(&a.transpose()).unwrap();
        for (x, y) in left.data().iter().zip(right.data()) {
            assert!((x - y).abs() <= 1e-5);
        }
    }
}

#[test]
fn stats_match_f64_oracle_len16() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let eps = 1e-5;
    for _ in 0..50 {
        let x: Vec<f32> = (0..16).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let (mean, std) = layer_norm_stats(&x, eps as f32);
        let mean64: f64 = x.iter().map(|&v| v as f64).sum::<f64>() / 16.0;
        let var64: f64 = x.iter().map(|&v| (v as f64 - mean64).powi(2)).sum::<f64>() / 16.0;
        let std64 = (var64 + eps).sqrt();
        assert!((mean as f64 - mean64).abs() <= 1e-6);
        assert!((std as f64 - std64).abs() <= 1e-6);
    }
}

proptest! {
    #[test]
    fn softmax_rows_sum_to_one(raw in prop::collection::vec(-1.0e4f32..1.0e4, 1..32)) {
        let v = Vector::from_vec(raw).unwrap();
        let s = softmax_row(&v);
        let sum: f32 = s.as_slice().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-6);
        prop_assert!(s.as_slice().iter().all(|p| p.is_finite() && *p >= 0.0));
    }

    #[test]
    fn identity_product_roundtrip(raw in prop::collection::vec(-5.0f32..5.0, 36)) {
        let a = Matrix::from_vec(6, 6, raw).unwrap();
        let prod = a.matmul(&Matrix::identity(6)).unwrap();
        for (x, y) in prod.data().iter().zip(a.data()) {
            prop_assert!((x - y).abs() <= 1e-5);
        }
    }

    #[test]
    fn gelu_matches_f64_oracle(raw in prop::collection::vec(-8.0f32..8.0, 1..24)) {
        let v = Vector::from_vec(raw.clone()).unwrap();
        let g = gelu(&v);
        for (&x, &y) in raw.iter().zip(g.as_slice()) {
            let x64 = x as f64;
            let want = 0.5 * x64 * (1.0 + ((2.0/std::f64::consts::PI).sqrt() * (x64 + 0.044715*x64.powi(3))).tanh());
            prop_assert!((y as f64 - want).abs() <= 1e-5);
        }
    }

    #[test]
    fn l1_matches_f64_oracle(raw in prop::collection::vec(-10.0f32..10.0, 0..24)) {
        let got = l1_norm(&raw) as f64;
        let want: f64 = raw.iter().map(|&v| (v as f64).abs()).sum();
        prop_assert!((got - want).abs() <= 1e-4);
    }

    #[test]
    fn ops_stay_finite(raw in prop::collection::vec(-100.0f32..100.0, 24)) {
        let a = Matrix::from_vec(4, 6, raw.clone()).unwrap();
        let b = Matrix::from_vec(6, 4, raw).unwrap();
        let c = a.matmul(&b).unwrap();
        prop_assert!(c.data().iter().all(|v| v.is_finite()));
        let t = c.transpose().add(&c).unwrap();
        prop_assert!(t.data().iter().all(|v| v.is_finite()));
    }
}
