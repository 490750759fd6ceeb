//! Word-overlap baselines: sentence-level BLEU-1..4 and ROUGE-L.
//!
//! BLEU is computed against a single reference without smoothing. A candidate
//! with zero clipped matches at some order scores 0, and a candidate too short
//! to contain an n-gram of some order has no defined score (`NaN`).

use std::collections::HashMap;

use crate::corpus::Utterance;
use crate::error::{ensure, Result};

pub const MAX_BLEU_ORDER: usize = 4;

/// Multiset of the order-`n` token tuples of an utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramCounts<'a> {
    order: usize,
    counts: HashMap<&'a [String], usize>,
}

impl<'a> NgramCounts<'a> {
    pub fn new(utterance: &'a Utterance, order: usize) -> Self {
        let mut counts = HashMap::new();
        if order >= 1 {
            for gram in utterance.tokens.windows(order) {
                *counts.entry(gram).or_insert(0) += 1;
            }
        }
        NgramCounts { order, counts }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn get(&self, gram: &[String]) -> usize {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    /// Matches of `self` against `reference`, each gram clipped to its reference count.
    pub fn clipped_matches(&self, reference: &NgramCounts<'_>) -> usize {
        self.counts
            .iter()
            .map(|(gram, &c)| c.min(reference.get(gram)))
            .sum()
    }
}

/// Sentence BLEU-`n` of `candidate` against one `reference`.
pub fn bleu(candidate: &Utterance, reference: &Utterance, n: usize) -> Result<f64> {
    ensure!(
        (1..=MAX_BLEU_ORDER).contains(&n),
        "BLEU order must be in 1..={MAX_BLEU_ORDER}, got {n}"
    );
    ensure!(!reference.is_empty(), "BLEU reference must be non-empty");
    if candidate.len() < n {
        return Ok(f64::NAN);
    }
    let mut log_sum = 0.0;
    for k in 1..=n {
        let cand = NgramCounts::new(candidate, k);
        let refr = NgramCounts::new(reference, k);
        let matches = cand.clipped_matches(&refr);
        if matches == 0 {
            return Ok(0.0);
        }
        log_sum += (matches as f64 / cand.total() as f64).ln();
    }
    let c = candidate.len() as f64;
    let r = reference.len() as f64;
    let brevity = (1.0 - r / c).exp().min(1.0);
    Ok(brevity * (log_sum / n as f64).exp())
}

/// Length of the longest common subsequence.
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F1 from LCS-based precision and recall.
pub fn rouge_l(candidate: &Utterance, reference: &Utterance) -> f64 {
    let lcs = lcs_len(&candidate.tokens, &reference.tokens);
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / candidate.len() as f64;
    let r = lcs as f64 / reference.len() as f64;
    2.0 * p * r / (p + r)
}
