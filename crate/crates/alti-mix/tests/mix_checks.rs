//! Coefficient construction and rollout checks.

use alti_mix::{layer_coefficients, mix_matrices, rollout, MixError};
use attn_decomp::TransformedVectors;
use forward_trace::{run_forward, ForwardTrace, LayerTrace, LnStats};
use model_io::synthetic::{synthetic_bundle, tiny_config, SplitMix64};
use proptest::prelude::*;
use tensor_core::{Matrix, Vector};

fn tv_with_rows(query: usize, rows: Vec<Vec<f64>>, bias: Vec<f64>) -> TransformedVectors<f64> {
    TransformedVectors {
        layer: 0,
        query,
        summed: Matrix::from_rows(rows).unwrap(),
        per_head: None,
        bias: Vector::from_vec(bias).unwrap(),
    }
}

fn trace_with_x_in(x_in: Matrix<f64>) -> ForwardTrace<f64> {
    let t = x_in.rows();
    let d = x_in.cols();
    ForwardTrace {
        ids: vec![0; t],
        x0: x_in.clone(),
        layers: vec![LayerTrace {
            x_in: x_in.clone(),
            ln1: vec![LnStats { mean: 0.0, std: 1.0 }; t],
            attn: vec![],
            attn_out: Matrix::zeros(t, d),
            mid: x_in.clone(),
            ln2: vec![LnStats { mean: 0.0, std: 1.0 }; t],
            mlp_keys: Matrix::zeros(t, 1),
            mlp_out: Matrix::zeros(t, d),
        }],
        x_final: x_in,
        lnf: vec![LnStats { mean: 0.0, std: 1.0 }; t],
    }
}

#[test]
fn first_token_row_is_always_one() {
    let bundle = synthetic_bundle::<f64>(&tiny_config(), 6);
    let (trace, _) = run_forward(&bundle, &[4, 9, 2]).unwrap();
    let mix = mix_matrices(&bundle, &trace).unwrap();
    for c in &mix.coefficients {
        assert_eq!(c.get(0, 0), 1.0);
    }
}

#[test]
fn dominant_candidate_takes_full_coefficient() {
    // hand-constructed: v_{1,0} == r and v_{1,1} == 0  =>  c row = [1, 0].
    // Verified against the closed formula: s_0 = ||r||_1, s_1 = 0.
    let d = 4;
    let r = vec![2.0, -1.0, 0.5, 3.0];
    let x_in = Matrix::from_rows(vec![vec![0.0; d], vec![0.7; d]]).unwrap();
    let trace = trace_with_x_in(x_in);
    let tv0 = tv_with_rows(0, vec![vec![0.25; d]], vec![0.0; d]);
    let tv1 = tv_with_rows(1, vec![r, vec![-0.7; d]], vec![0.0; d]);
    let c = layer_coefficients(&[tv0, tv1], &trace, 0).unwrap();
    assert!((c.get(1, 0) - 1.0).abs() < 1e-12);
    assert_eq!(c.get(1, 1), 0.0);
    assert_eq!(c.get(0, 0), 1.0);
}

#[test]
fn all_clipped_scores_fall_back_to_uniform() {
    // v_{1,0} = 2r, v_{1,1} = -r: both affinity scores clip to zero.
    let d = 4;
    let r = [1.0, -2.0, 0.5, 1.5];
    let two_r: Vec<f64> = r.iter().map(|v| 2.0 * v).collect();
    let neg_r_minus_x: Vec<f64> = r.iter().map(|v| -v - 0.3).collect();
    let x_in = Matrix::from_rows(vec![vec![0.0; d], vec![0.3; d]]).unwrap();
    let trace = trace_with_x_in(x_in);
    let tv0 = tv_with_rows(0, vec![vec![0.1; d]], vec![0.0; d]);
    let tv1 = tv_with_rows(1, vec![two_r, neg_r_minus_x], vec![0.0; d]);
    let c = layer_coefficients(&[tv0, tv1], &trace, 0).unwrap();
    assert!((c.get(1, 0) - 0.5).abs() < 1e-12);
    assert!((c.get(1, 1) - 0.5).abs() < 1e-12);
}

#[test]
fn synthetic_model_rows_are_stochastic_and_causal() {
    let bundle = synthetic_bundle::<f32>(&tiny_config(), 14);
    let ids = [1u32, 8, 3, 20, 11, 7];
    let (trace, _) = run_forward(&bundle, &ids).unwrap();
    let mix = mix_matrices(&bundle, &trace).unwrap();
    for m in mix.coefficients.iter().chain(&mix.rollout) {
        for i in 0..m.rows() {
            let mut sum = 0.0f64;
            for j in 0..m.cols() {
                let v = m.get(i, j) as f64;
                assert!(v >= 0.0, "negative coefficient");
                if j > i {
                    assert_eq!(v, 0.0, "upper triangle must stay zero");
                }
                sum += v;
            }
            assert!((sum - 1.0).abs() <= 1e-6, "row {i} sums to {sum}");
        }
    }
}

#[test]
fn identity_coefficients_roll_to_identity() {
    let cs = vec![Matrix::<f64>::identity(4); 3];
    let ms = rollout(&cs).unwrap();
    for m in &ms {
        assert_eq!(*m, Matrix::identity(4));
    }
}

#[test]
fn rollout_matches_direct_product_oracle() {
    let mut rng = SplitMix64(3);
    let n = 5;
    let mut mk = || {
        let mut m = Matrix::<f64>::zeros(n, n);
        for i in 0..n {
            let mut row: Vec<f64> = (0..=i).map(|_| rng.uniform(0.0, 1.0)).collect();
            let s: f64 = row.iter().sum();
            for v in &mut row {
                *v /= s;
            }
            for (j, v) in row.into_iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    };
    let c1 = mk();
    let c2 = mk();
    let ms = rollout(&[c1.clone(), c2.clone()]).unwrap();
    let mut want = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                want[i][j] += c2.get(i, k) * c1.get(k, j);
            }
        }
    }
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            assert!((ms[2].get(i, j) - want[i][j]).abs() <= 1e-7);
            if j > i {
                assert_eq!(ms[2].get(i, j), 0.0);
            }
            sum += ms[2].get(i, j);
        }
        assert!((sum - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn non_stochastic_input_is_rejected() {
    let mut c = Matrix::<f64>::identity(3);
    c.set(1, 1, 0.5);
    assert!(matches!(rollout(&[c]), Err(MixError::NotStochastic { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn rollout_preserves_stochasticity(seed in 0u64..10_000) {
        let mut rng = SplitMix64(seed);
        let n = 4;
        let mut cs = Vec::new();
        for _ in 0..3 {
            let mut m = Matrix::<f64>::zeros(n, n);
            for i in 0..n {
                let mut row: Vec<f64> = (0..=i).map(|_| rng.uniform(0.0, 1.0) + 1e-9).collect();
                let s: f64 = row.iter().sum();
                for v in &mut row { *v /= s; }
                for (j, v) in row.into_iter().enumerate() { m.set(i, j, v); }
            }
            cs.push(m);
        }
        let ms = rollout(&cs).unwrap();
        for m in &ms {
            for i in 0..n {
                let sum: f64 = (0..n).map(|j| m.get(i, j)).sum();
                prop_assert!((sum - 1.0).abs() <= 1e-6);
                for j in 0..n {
                    prop_assert!(m.get(i, j) >= 0.0);
                    if j > i { prop_assert!(m.get(i, j) == 0.0); }
                }
            }
        }
    }
}
