use crate::explanation::{Buckets, Explanation, Method};
use crate::{ExplainError, Result};
use forward_trace::run_forward;
use model_io::ModelBundle;
use rayon::prelude::*;
use tensor_core::Scalar;

/// What the erasure score measures. The paper's definition uses the
/// model's likelihood, i.e. the token probability; the logit variant is
/// kept as an ablation switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErasureMeasure {
    #[default]
    Probability,
    Logit,
}

/// Contrastive input erasure: for each position `s`, re-run the model with
/// the `s`-th token deleted (the sequence shortens) and score
/// `(m_w(x) - m_w(x_without_s)) - (m_f(x) - m_f(x_without_s))`.
pub fn contrastive_erasure<T: Scalar>(
    bundle: &ModelBundle<T>,
    ids: &[u32],
    target: u32,
    foil: u32,
    measure: ErasureMeasure,
) -> Result<Explanation> {
    if ids.len() < 2 {
        return Err(ExplainError::SequenceTooShort { len: ids.len() });
    }
    let vocab = bundle.config.vocab_size;
    for &tok in [target, foil].iter() {
        if tok as usize >= vocab {
            return Err(ExplainError::TokenOutOfRange { id: tok, vocab });
        }
    }
    let read = |head: &forward_trace::PredictionHead<T>, id: u32| -> f64 {
        let v = match measure {
            ErasureMeasure::Probability => head.probs.as_slice()[id as usize],
            ErasureMeasure::Logit => head.logits.as_slice()[id as usize],
        };
        v.to_f64().unwrap()
    };

    let (_, base) = run_forward(bundle, ids)?;
    let base_w = read(&base, target);
    let base_f = read(&base, foil);

    let scores: Vec<f64> = (0..ids.len())
        .into_par_iter()
        .map(|s| -> Result<f64> {
            let mut reduced = ids.to_vec();
            reduced.remove(s);
            let (_, head) = run_forward(bundle, &reduced)?;
            let w_drop = base_w - read(&head, target);
            let f_drop = base_f - read(&head, foil);
            Ok(w_drop - f_drop)
        })
        .collect::<Result<_>>()?;

    Ok(Explanation {
        method: Method::Erasure,
        target,
        foil: Some(foil),
        tokens: Vec::new(),
        scores,
        per_layer: Vec::new(),
        buckets: Buckets::default(),
    })
}
