use crate::safetensors::SafeTensors;
use crate::{ModelConfig, ModelIoError, Result};
use std::path::Path;
use tensor_core::{Matrix, Scalar, Vector};

/// All weights of one decoder layer, in the row-vector `(in x out)`
/// convention: activations are row vectors and multiply matrices from the
/// left, so `W_q` is `d x d`, `W_fc` is `d x d_mlp`, `W_proj` is `d_mlp x d`.
#[derive(Debug, Clone)]
pub struct LayerParams<T> {
    pub ln1_gamma: Vector<T>,
    pub ln1_beta: Vector<T>,
    pub w_q: Matrix<T>,
    pub b_q: Vector<T>,
    pub w_k: Matrix<T>,
    pub b_k: Vector<T>,
    pub w_v: Matrix<T>,
    pub b_v: Vector<T>,
    pub w_o: Matrix<T>,
    pub b_o: Vector<T>,
    pub ln2_gamma: Vector<T>,
    pub ln2_beta: Vector<T>,
    pub w_fc: Matrix<T>,
    pub b_fc: Vector<T>,
    pub w_proj: Matrix<T>,
    pub b_proj: Vector<T>,
}

impl<T: Scalar> LayerParams<T> {
    /// Columns of `W_v` belonging to head `h` (a `d x d_head` matrix).
    pub fn value_head(&self, h: usize, d_head: usize) -> Matrix<T> {
        self.w_v
            .col_slice(h * d_head, (h + 1) * d_head)
            .expect("head index within layer width")
    }

    /// Rows of `W_o` belonging to head `h` (a `d_head x d` matrix).
    pub fn output_head(&self, h: usize, d_head: usize) -> Matrix<T> {
        self.w_o
            .row_slice(h * d_head, (h + 1) * d_head)
            .expect("head index within layer width")
    }

    /// Slice of the value bias belonging to head `h`.
    pub fn value_bias_head(&self, h: usize, d_head: usize) -> Vector<T> {
        Vector::from_vec(self.b_v.as_slice()[h * d_head..(h + 1) * d_head].to_vec())
            .expect("bias slice finite")
    }

    fn convert<U: Scalar>(&self) -> LayerParams<U> {
        LayerParams {
            ln1_gamma: self.ln1_gamma.convert(),
            ln1_beta: self.ln1_beta.convert(),
            w_q: self.w_q.convert(),
            b_q: self.b_q.convert(),
            w_k: self.w_k.convert(),
            b_k: self.b_k.convert(),
            w_v: self.w_v.convert(),
            b_v: self.b_v.convert(),
            w_o: self.w_o.convert(),
            b_o: self.b_o.convert(),
            ln2_gamma: self.ln2_gamma.convert(),
            ln2_beta: self.ln2_beta.convert(),
            w_fc: self.w_fc.convert(),
            b_fc: self.b_fc.convert(),
            w_proj: self.w_proj.convert(),
            b_proj: self.b_proj.convert(),
        }
    }
}

/// A fully validated model: config, every weight tensor, and the
/// unembedding.
#[derive(Debug, Clone)]
pub struct ModelBundle<T> {
    pub config: ModelConfig,
    /// Token embedding, `vocab x d`.
    pub token_embedding: Matrix<T>,
    /// Position embedding, `n_positions x d`.
    pub position_embedding: Matrix<T>,
    pub layers: Vec<LayerParams<T>>,
    pub lnf_gamma: Vector<T>,
    pub lnf_beta: Vector<T>,
    /// Unembedding `U`, `d x vocab`.
    pub unembedding: Matrix<T>,
    /// True when `U` is exactly the transpose of the token embedding.
    pub tied_unembedding: bool,
}

impl<T: Scalar> ModelBundle<T> {
    /// Column `w` of the unembedding (the direction read out for token `w`).
    pub fn unembed_col(&self, w: u32) -> Result<Vector<T>> {
        if (w as usize) >= self.config.vocab_size {
            return Err(ModelIoError::UnknownId {
                id: w,
                vocab: self.config.vocab_size,
            });
        }
        Ok(self
            .unembedding
            .col(w as usize)
            .expect("vocab bound checked"))
    }

    pub fn convert<U: Scalar>(&self) -> ModelBundle<U> {
        ModelBundle {
            config: self.config.clone(),
            token_embedding: self.token_embedding.convert(),
            position_embedding: self.position_embedding.convert(),
            layers: self.layers.iter().map(LayerParams::convert).collect(),
            lnf_gamma: self.lnf_gamma.convert(),
            lnf_beta: self.lnf_beta.convert(),
            unembedding: self.unembedding.convert(),
            tied_unembedding: self.tied_unembedding,
        }
    }

    /// Shape-checks every tensor against the config.
    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        let check = |name: &str, got: (usize, usize), want: (usize, usize)| {
            if got != want {
                return Err(ModelIoError::ShapeMismatch {
                    name: name.into(),
                    expected: vec![want.0, want.1],
                    got: vec![got.0, got.1],
                });
            }
            Ok(())
        };
        let dims = |m: &Matrix<T>| (m.rows(), m.cols());
        check("token_embedding", dims(&self.token_embedding), (c.vocab_size, c.d_model))?;
        check(
            "position_embedding",
            dims(&self.position_embedding),
            (c.n_positions, c.d_model),
        )?;
        check("unembedding", dims(&self.unembedding), (c.d_model, c.vocab_size))?;
        if self.layers.len() != c.n_layer {
            return Err(ModelIoError::ConfigInvalid {
                reason: format!("expected {} layers, got {}", c.n_layer, self.layers.len()),
            });
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let d = c.d_model;
            check(&format!("layer {l} w_q"), dims(&layer.w_q), (d, d))?;
            check(&format!("layer {l} w_k"), dims(&layer.w_k), (d, d))?;
            check(&format!("layer {l} w_v"), dims(&layer.w_v), (d, d))?;
            check(&format!("layer {l} w_o"), dims(&layer.w_o), (d, d))?;
            check(&format!("layer {l} w_fc"), dims(&layer.w_fc), (d, c.d_mlp))?;
            check(&format!("layer {l} w_proj"), dims(&layer.w_proj), (c.d_mlp, d))?;
            for (name, v, want) in [
                ("ln1_gamma", &layer.ln1_gamma, d),
                ("ln1_beta", &layer.ln1_beta, d),
                ("b_q", &layer.b_q, d),
                ("b_k", &layer.b_k, d),
                ("b_v", &layer.b_v, d),
                ("b_o", &layer.b_o, d),
                ("ln2_gamma", &layer.ln2_gamma, d),
                ("ln2_beta", &layer.ln2_beta, d),
                ("b_fc", &layer.b_fc, c.d_mlp),
                ("b_proj", &layer.b_proj, d),
            ] {
                if v.len() != want {
                    return Err(ModelIoError::ShapeMismatch {
                        name: format!("layer {l} {name}"),
                        expected: vec![want],
                        got: vec![v.len()],
                    });
                }
            }
        }
        Ok(())
    }
}

/// Where a canonical tensor lives in the checkpoint.
///
/// HuggingFace GPT-2 checkpoints use Conv1D-style storage, which is already
/// `(in x out)` for row-vector activations; entries with `transpose` set
/// cover checkpoints that store `(out x in)` linear weights instead.
struct Slot {
    candidates: &'static [(&'static str, bool)], // (name template, transpose)
}

const SLOT_PREFIXES: [&str; 2] = ["", "transformer."];

fn fetch_matrix(
    st: &SafeTensors,
    slot: &Slot,
    layer: Option<usize>,
    want: (usize, usize),
) -> Result<Matrix<f32>> {
    let (name, shape, mut vals, transpose) = fetch_raw(st, slot, layer)?;
    let got: Vec<usize> = shape.clone();
    let (mut r, mut c) = match got.as_slice() {
        [r, c] => (*r, *c),
        _ => {
            return Err(ModelIoError::ShapeMismatch {
                name,
                expected: vec![want.0, want.1],
                got,
            })
        }
    };
    if transpose {
        let m = Matrix::from_vec(r, c, vals).map_err(|_| ModelIoError::NonFiniteWeight {
            name: name.clone(),
        })?;
        let t = m.transpose();
        r = t.rows();
        c = t.cols();
        vals = t.data().to_vec();
    }
    if (r, c) != want {
        return Err(ModelIoError::ShapeMismatch {
            name,
            expected: vec![want.0, want.1],
            got: vec![r, c],
        });
    }
    Matrix::from_vec(r, c, vals).map_err(|_| ModelIoError::NonFiniteWeight { name })
}

fn fetch_vector(st: &SafeTensors, slot: &Slot, layer: Option<usize>, want: usize) -> Result<Vector<f32>> {
    let (name, shape, vals, _) = fetch_raw(st, slot, layer)?;
    if shape != vec![want] {
        return Err(ModelIoError::ShapeMismatch {
            name,
            expected: vec![want],
            got: shape,
        });
    }
    Vector::from_vec(vals).map_err(|_| ModelIoError::NonFiniteWeight { name })
}

fn fetch_raw(
    st: &SafeTensors,
    slot: &Slot,
    layer: Option<usize>,
) -> Result<(String, Vec<usize>, Vec<f32>, bool)> {
    let mut tried = Vec::new();
    for (template, transpose) in slot.candidates {
        for prefix in SLOT_PREFIXES {
            let name = match layer {
                Some(l) => format!("{prefix}{}", template.replace("{l}", &l.to_string())),
                None => format!("{prefix}{template}"),
            };
            if st.contains(&name) {
                let (shape, vals) = st.tensor_f32(&name)?;
                return Ok((name, shape, vals, *transpose));
            }
            tried.push(name);
        }
    }
    Err(ModelIoError::MissingTensor {
        name: tried.join(" | "),
    })
}

/// Loads and validates a checkpoint plus config into a bundle.
///
/// The fused `c_attn` projection is split into `W_q`/`W_k`/`W_v` by column
/// range, so per-head views remain plain column/row slices downstream.
pub fn load_bundle(weights_path: &Path, config_path: &Path) -> Result<ModelBundle<f32>> {
    let config = ModelConfig::from_file(config_path)?;
    let st = SafeTensors::open(weights_path)?;
    let d = config.d_model;
    let v: usize = config.vocab_size;

    let wte = Slot { candidates: &[("wte.weight", false)] };
    let wpe = Slot { candidates: &[("wpe.weight", false)] };
    let ln1_w = Slot { candidates: &[("h.{l}.ln_1.weight", false)] };
    let ln1_b = Slot { candidates: &[("h.{l}.ln_1.bias", false)] };
    let attn_w = Slot { candidates: &[("h.{l}.attn.c_attn.weight", false)] };
    let attn_b = Slot { candidates: &[("h.{l}.attn.c_attn.bias", false)] };
    let proj_w = Slot { candidates: &[("h.{l}.attn.c_proj.weight", false)] };
    let proj_b = Slot { candidates: &[("h.{l}.attn.c_proj.bias", false)] };
    let ln2_w = Slot { candidates: &[("h.{l}.ln_2.weight", false)] };
    let ln2_b = Slot { candidates: &[("h.{l}.ln_2.bias", false)] };
    let fc_w = Slot { candidates: &[("h.{l}.mlp.c_fc.weight", false)] };
    let fc_b = Slot { candidates: &[("h.{l}.mlp.c_fc.bias", false)] };
    let mlp_proj_w = Slot { candidates: &[("h.{l}.mlp.c_proj.weight", false)] };
    let mlp_proj_b = Slot { candidates: &[("h.{l}.mlp.c_proj.bias", false)] };
    let lnf_w = Slot { candidates: &[("ln_f.weight", false)] };
    let lnf_b = Slot { candidates: &[("ln_f.bias", false)] };
    let lm_head = Slot { candidates: &[("lm_head.weight", true)] };

    // d_mlp comes from the checkpoint; re-check the config default.
    let mut config = config;
    if let Ok(shape) = st.shape("h.0.mlp.c_fc.weight").or_else(|_| st.shape("transformer.h.0.mlp.c_fc.weight")) {
        if shape.len() == 2 {
            config.d_mlp = shape[1];
        }
    }

    let token_embedding = fetch_matrix(&st, &wte, None, (v, d))?;
    let position_embedding = fetch_matrix(&st, &wpe, None, (config.n_positions, d))?;

    let mut layers = Vec::with_capacity(config.n_layer);
    for l in 0..config.n_layer {
        let qkv_w = fetch_matrix(&st, &attn_w, Some(l), (d, 3 * d))?;
        let qkv_b = fetch_vector(&st, &attn_b, Some(l), 3 * d)?;
        let split_w = |lo: usize, hi: usize| qkv_w.col_slice(lo, hi).expect("split in range");
        let split_b = |lo: usize, hi: usize| {
            Vector::from_vec(qkv_b.as_slice()[lo..hi].to_vec()).expect("bias finite")
        };
        layers.push(LayerParams {
            ln1_gamma: fetch_vector(&st, &ln1_w, Some(l), d)?,
            ln1_beta: fetch_vector(&st, &ln1_b, Some(l), d)?,
            w_q: split_w(0, d),
            b_q: split_b(0, d),
            w_k: split_w(d, 2 * d),
            b_k: split_b(d, 2 * d),
            w_v: split_w(2 * d, 3 * d),
            b_v: split_b(2 * d, 3 * d),
            w_o: fetch_matrix(&st, &proj_w, Some(l), (d, d))?,
            b_o: fetch_vector(&st, &proj_b, Some(l), d)?,
            ln2_gamma: fetch_vector(&st, &ln2_w, Some(l), d)?,
            ln2_beta: fetch_vector(&st, &ln2_b, Some(l), d)?,
            w_fc: fetch_matrix(&st, &fc_w, Some(l), (d, config.d_mlp))?,
            b_fc: fetch_vector(&st, &fc_b, Some(l), config.d_mlp)?,
            w_proj: fetch_matrix(&st, &mlp_proj_w, Some(l), (config.d_mlp, d))?,
            b_proj: fetch_vector(&st, &mlp_proj_b, Some(l), d)?,
        });
    }

    let lnf_gamma = fetch_vector(&st, &lnf_w, None, d)?;
    let lnf_beta = fetch_vector(&st, &lnf_b, None, d)?;

    // Unembedding: a separate lm_head wins; otherwise tie to the embedding.
    // Tying is verified by comparison when both tensors exist.
    let (unembedding, tied) = match fetch_matrix(&st, &lm_head, None, (d, v)) {
        Ok(u) => {
            let tied = u == token_embedding.transpose();
            (u, tied)
        }
        Err(ModelIoError::MissingTensor { .. }) => (token_embedding.transpose(), true),
        Err(e) => return Err(e),
    };

    let bundle = ModelBundle {
        config,
        token_embedding,
        position_embedding,
        layers,
        lnf_gamma,
        lnf_beta,
        unembedding,
        tied_unembedding: tied,
    };
    bundle.validate()?;
    Ok(bundle)
}
