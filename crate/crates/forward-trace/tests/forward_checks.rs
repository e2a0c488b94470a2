//! Forward-pass checks: trivial invariants, an independent 64-bit
//! straight-line oracle on a synthetic model, and GPT-2 small paper values.

use forward_trace::{next_token_logit, run_forward, ForwardError};
use model_io::synthetic::{synthetic_bundle, tiny_config};
use model_io::{load_bundle, ModelBundle};
use std::path::PathBuf;

// ---------------------------------------------------------------------
// Independent straight-line f64 forward pass (the oracle). Plain loops,
// no shared kernels with the implementation under test.
// ---------------------------------------------------------------------

fn oracle_logits(bundle: &ModelBundle<f32>, ids: &[u32]) -> Vec<f64> {
    let cfg = &bundle.config;
    let (t, d, nh, dh, dmlp) = (
        ids.len(),
        cfg.d_model,
        cfg.n_head,
        cfg.d_head(),
        cfg.d_mlp,
    );
    let eps = cfg.layer_norm_epsilon;
    let f = |m: &tensor_core::Matrix<f32>, i: usize, j: usize| m.get(i, j) as f64;

    let mut x = vec![vec![0.0f64; d]; t];
    for (pos, &id) in ids.iter().enumerate() {
        for j in 0..d {
            x[pos][j] = f(&bundle.token_embedding, id as usize, j)
                + f(&bundle.position_embedding, pos, j);
        }
    }

    let ln = |row: &[f64], g: &[f32], b: &[f32]| -> Vec<f64> {
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let std = (var + eps).sqrt();
        row.iter()
            .enumerate()
            .map(|(j, v)| (v - mean) / std * g[j] as f64 + b[j] as f64)
            .collect()
    };

    for layer in &bundle.layers {
        // attention
        let xn: Vec<Vec<f64>> = x
            .iter()
            .map(|r| ln(r, layer.ln1_gamma.as_slice(), layer.ln1_beta.as_slice()))
            .collect();
        let project = |w: &tensor_core::Matrix<f32>, b: &[f32], row: &[f64]| -> Vec<f64> {
            (0..w.cols())
                .map(|j| {
                    let mut acc = b[j] as f64;
                    for i in 0..d {
                        acc += row[i] * w.get(i, j) as f64;
                    }
                    acc
                })
                .collect()
        };
        let q: Vec<Vec<f64>> = xn
            .iter()
            .map(|r| project(&layer.w_q, layer.b_q.as_slice(), r))
            .collect();
        let k: Vec<Vec<f64>> = xn
            .iter()
            .map(|r| project(&layer.w_k, layer.b_k.as_slice(), r))
            .collect();
        let v: Vec<Vec<f64>> = xn
            .iter()
            .map(|r| project(&layer.w_v, layer.b_v.as_slice(), r))
            .collect();
        let mut ctx = vec![vec![0.0f64; d]; t];
        for head in 0..nh {
            let lo = head * dh;
            for i in 0..t {
                let mut scores = Vec::with_capacity(i + 1);
                for j in 0..=i {
                    let mut acc = 0.0;
                    for s in 0..dh {
                        acc += q[i][lo + s] * k[j][lo + s];
                    }
                    scores.push(acc / (dh as f64).sqrt());
                }
                let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
                let z: f64 = exps.iter().sum();
                for j in 0..=i {
                    for s in 0..dh {
                        ctx[i][lo + s] += exps[j] / z * v[j][lo + s];
                    }
                }
            }
        }
        for i in 0..t {
            let attn_out = project(&layer.w_o, layer.b_o.as_slice(), &ctx[i]);
            for j in 0..d {
                x[i][j] += attn_out[j];
            }
        }
        // mlp
        for i in 0..t {
            let xn2 = ln(&x[i], layer.ln2_gamma.as_slice(), layer.ln2_beta.as_slice());
            let mut keys = vec![0.0f64; dmlp];
            for kk in 0..dmlp {
                let mut acc = layer.b_fc.as_slice()[kk] as f64;
                for j in 0..d {
                    acc += xn2[j] * layer.w_fc.get(j, kk) as f64;
                }
                let c = (2.0 / std::f64::consts::PI).sqrt();
                keys[kk] = 0.5 * acc * (1.0 + (c * (acc + 0.044715 * acc.powi(3))).tanh());
            }
            for j in 0..d {
                let mut acc = layer.b_proj.as_slice()[j] as f64;
                for kk in 0..dmlp {
                    acc += keys[kk] * layer.w_proj.get(kk, j) as f64;
                }
                x[i][j] += acc;
            }
        }
    }

    let last = ln(
        &x[t - 1],
        bundle.lnf_gamma.as_slice(),
        bundle.lnf_beta.as_slice(),
    );
    (0..cfg.vocab_size)
        .map(|w| {
            let mut acc = 0.0;
            for j in 0..d {
                acc += last[j] * bundle.unembedding.get(j, w) as f64;
            }
            acc
        })
        .collect()
}

// ---------------------------------------------------------------------

#[test]
fn single_token_attention_is_forced() {
    let bundle = synthetic_bundle::<f32>(&tiny_config(), 1);
    let (trace, _) = run_forward(&bundle, &[3]).unwrap();
    for layer in &trace.layers {
        for a in &layer.attn {
            assert_eq!(a.rows(), 1);
            assert_eq!(a.get(0, 0), 1.0);
        }
    }
}

#[test]
fn error_paths() {
    let bundle = synthetic_bundle::<f32>(&tiny_config(), 1);
    assert!(matches!(
        run_forward(&bundle, &[]),
        Err(ForwardError::EmptySequence)
    ));
    let long = vec![0u32; bundle.config.n_positions + 1];
    assert!(matches!(
        run_forward(&bundle, &long),
        Err(ForwardError::SequenceTooLong { .. })
    ));
    assert!(matches!(
        run_forward(&bundle, &[999]),
        Err(ForwardError::TokenOutOfRange { .. })
    ));
}

#[test]
fn synthetic_matches_straight_line_oracle() {
    let bundle = synthetic_bundle::<f32>(&tiny_config(), 7);
    let ids = [4u32, 17, 9, 3, 30, 12];
    let (_, head) = run_forward(&bundle, &ids).unwrap();
    let oracle = oracle_logits(&bundle, &ids);
    for (got, want) in head.logits.as_slice().iter().zip(&oracle) {
        assert!(
            (*got as f64 - want).abs() <= 1e-4,
            "logit {got} vs oracle {want}"
        );
    }
    // next_token_logit agrees with the oracle too
    let l5 = next_token_logit(&head, 5).unwrap() as f64;
    assert!((l5 - oracle[5]).abs() <= 1e-4);
}

#[test]
fn residual_bookkeeping_reconstructs_final_state() {
    let bundle = synthetic_bundle::<f32>(&tiny_config(), 3)
        .convert::<f64>();
    let ids = [1u32, 2, 3, 4, 5, 6, 7];
    let (trace, _) = run_forward(&bundle, &ids).unwrap();
    let mut acc = trace.x0.clone();
    for layer in &trace.layers {
        acc = acc.add(&layer.attn_out).unwrap();
        acc = acc.add(&layer.mlp_out).unwrap();
    }
    for i in 0..trace.seq_len() {
        for j in 0..bundle.config.d_model {
            let diff = (acc.get(i, j) - trace.x_final.get(i, j)).abs();
            assert!(diff <= 1e-5, "position {i} dim {j}: {diff}");
        }
    }
}

#[test]
fn causality_prefix_runs_are_bit_identical() {
    let bundle = synthetic_bundle::<f32>(&tiny_config(), 9);
    let ids = [8u32, 1, 44, 2, 19, 6];
    let (full, _) = run_forward(&bundle, &ids).unwrap();
    for k in 1..ids.len() {
        let (prefix, _) = run_forward(&bundle, &ids[..k]).unwrap();
        for i in 0..k {
            assert_eq!(
                prefix.x_final.row(i),
                &full.x_final.row(i)[..],
                "prefix length {k}, position {i}"
            );
        }
    }
}

#[test]
fn attention_rows_are_stochastic_and_causal() {
    let bundle = synthetic_bundle::<f32>(&tiny_config(), 5);
    let ids = [2u32, 9, 11, 30, 7];
    let (trace, _) = run_forward(&bundle, &ids).unwrap();
    for layer in &trace.layers {
        for a in &layer.attn {
            for i in 0..a.rows() {
                let mut sum = 0.0f32;
                for j in 0..a.cols() {
                    if j > i {
                        assert_eq!(a.get(i, j), 0.0, "causality violated");
                    }
                    sum += a.get(i, j);
                }
                assert!((sum - 1.0).abs() <= 1e-5);
            }
        }
    }
}

#[test]
fn argmax_logits_equals_argmax_probs() {
    let bundle = synthetic_bundle::<f32>(&tiny_config(), 13);
    let (_, head) = run_forward(&bundle, &[5, 6, 7]).unwrap();
    let by_logit = head.argmax();
    let probs = head.probs.as_slice();
    let by_prob = probs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0 as u32;
    assert_eq!(by_logit, by_prob);
}

// ---------------------------------------------------------------------
// GPT-2 small paper values (Table 1 sentence)
// ---------------------------------------------------------------------

fn gpt2() -> ModelBundle<f32> {
    let dir = match std::env::var_os("MODEL_DIR") {
        Some(d) => PathBuf::from(d),
        None => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models/gpt2"),
    };
    load_bundle(&dir.join("model.safetensors"), &dir.join("config.json"))
        .expect("GPT-2 small checkpoint required (see README: fetching the model)")
    }

#[test]
fn gpt2_table1_sentence_probabilities() {
    let bundle = gpt2();
    // "A report about the Impressionists"
    let ids = [32u32, 989, 546, 262, 9855, 2234, 1023];
    let (trace, head) = run_forward(&bundle, &ids).unwrap();
    assert_eq!(trace.seq_len(), 7);
    let (has, have) = (468u32, 423u32);
    let p_has = head.probs.get(has as usize).unwrap() * 100.0;
    let p_have = head.probs.get(have as usize).unwrap() * 100.0;
    assert!((p_has - 2.2).abs() <= 0.3, "P(' has') = {p_has}%");
    assert!((p_have - 0.1).abs() <= 0.05, "P(' have') = {p_have}%");
    let diff = next_token_logit(&head, has).unwrap() - next_token_logit(&head, have).unwrap();
    assert!((diff - 3.1).abs() <= 0.1, "logit difference = {diff}");
}
