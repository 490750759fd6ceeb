//! Groundtruth-referenced similarity: max/min pooled word vectors compared by cosine.

use crate::corpus::Utterance;
use crate::embeddings::Embeddings;
use crate::linalg::{dot, norm};

/// `[v_max; v_min]`, length `2d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceVector {
    pub values: Vec<f64>,
}

impl SentenceVector {
    pub fn max_part(&self) -> &[f64] {
        &self.values[..self.values.len() / 2]
    }

    pub fn min_part(&self) -> &[f64] {
        &self.values[self.values.len() / 2..]
    }
}

/// Dimension-wise max and min over the utterance's word vectors. An empty
/// utterance pools to the zero vector.
pub fn pool(utterance: &Utterance, embeddings: &Embeddings) -> SentenceVector {
    let d = embeddings.dim();
    if utterance.is_empty() {
        return SentenceVector {
            values: vec![0.0; 2 * d],
        };
    }
    let mut vmax = vec![f64::NEG_INFINITY; d];
    let mut vmin = vec![f64::INFINITY; d];
    for tok in &utterance.tokens {
        for ((hi, lo), &w) in vmax.iter_mut().zip(vmin.iter_mut()).zip(embeddings.lookup(tok)) {
            *hi = hi.max(w);
            *lo = lo.min(w);
        }
    }
    vmax.extend(vmin);
    SentenceVector { values: vmax }
}

/// Cosine similarity, with 0 when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        return 0.0;
    }
    (dot(a, b) / denom).clamp(-1.0, 1.0)
}

/// `s_R`: cosine between the pooled groundtruth and candidate vectors.
pub fn referenced_score(groundtruth: &Utterance, candidate: &Utterance, embeddings: &Embeddings) -> f64 {
    cosine(
        &pool(groundtruth, embeddings).values,
        &pool(candidate, embeddings).values,
    )
}
