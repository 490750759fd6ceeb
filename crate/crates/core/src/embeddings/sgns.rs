//! Skip-gram word2vec with negative sampling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EmbeddingMatrix, Embeddings, UNK_ID};
use crate::corpus::{build_vocab, Dataset, Record};
use crate::error::{ensure, Result, RuberError};
use crate::linalg::{axpy, dot, sigmoid, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    pub min_count: usize,
    pub seed: u64,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dim: 50,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
            min_count: 1,
            seed: 1,
        }
    }
}

impl SgnsConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.dim >= 1, "dim must be at least 1");
        ensure!(self.window >= 1, "window must be at least 1");
        ensure!(self.negatives >= 1, "negatives must be at least 1");
        ensure!(self.min_count >= 1, "min_count must be at least 1");
        ensure!(self.lr > 0.0 && self.lr.is_finite(), "lr must be positive");
        Ok(())
    }
}

const MIN_LR_FRACTION: f64 = 1e-4;
const UNIGRAM_POWER: f64 = 0.75;

/// Trains input vectors over every utterance of `dataset`. Tokens below
/// `min_count` are dropped; the UNK row is set to the mean trained vector.
pub fn train_sgns<T: Record>(dataset: &Dataset<T>, config: &SgnsConfig) -> Result<Embeddings> {
    config.validate()?;
    ensure!(!dataset.is_empty(), "cannot train embeddings on an empty corpus");
    let vocab = build_vocab(dataset, config.min_count)?;
    if vocab.len() <= 1 {
        return Err(RuberError::Contract(format!(
            "no token reaches min_count = {}",
            config.min_count
        )));
    }

    let sentences: Vec<Vec<usize>> = dataset
        .pairs
        .iter()
        .flat_map(|r| r.utterances())
        .map(|u| u.tokens.iter().filter_map(|t| vocab.id(t)).collect::<Vec<_>>())
        .filter(|s: &Vec<usize>| !s.is_empty())
        .collect();

    let mut counts = vec![0usize; vocab.len()];
    for &id in sentences.iter().flatten() {
        counts[id] += 1;
    }
    let weights: Vec<f64> = counts
        .iter()
        .enumerate()
        .map(|(id, &c)| if id == UNK_ID { 0.0 } else { (c as f64).powf(UNIGRAM_POWER) })
        .collect();
    let noise = WeightedIndex::new(&weights)
        .map_err(|e| RuberError::Numerical(format!("negative-sampling table: {e}")))?;

    let dim = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init = 0.5 / dim as f64;
    let mut input = Matrix::uniform(vocab.len(), dim, init, &mut rng);
    let mut output = Matrix::zeros(vocab.len(), dim);

    let words_per_epoch: usize = sentences.iter().map(Vec::len).sum();
    let total = (words_per_epoch * config.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut grad = vec![0.0; dim];

    for _ in 0..config.epochs {
        for sentence in &sentences {
            for (pos, &center) in sentence.iter().enumerate() {
                let alpha = config.lr * (1.0 - processed as f64 / total).max(MIN_LR_FRACTION);
                processed += 1;
                let span = config.window - rng.random_range(0..config.window);
                let lo = pos.saturating_sub(span);
                let hi = (pos + span).min(sentence.len() - 1);
                for (ctx_pos, &context) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                    if ctx_pos == pos {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for k in 0..=config.negatives {
                        let (target, label) = if k == 0 {
                            (center, 1.0)
                        } else {
                            let t = noise.sample(&mut rng);
                            if t == center {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let f = dot(input.row(context), output.row(target));
                        let g = (label - sigmoid(f)) * alpha;
                        axpy(g, output.row(target), &mut grad);
                        let ctx_vec = input.row(context).to_vec();
                        axpy(g, &ctx_vec, output.row_mut(target));
                    }
                    axpy(1.0, &grad, input.row_mut(context));
                }
            }
        }
    }

    let mut mean = vec![0.0; dim];
    for id in 1..vocab.len() {
        axpy(1.0, input.row(id), &mut mean);
    }
    let n = (vocab.len() - 1) as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    input.row_mut(UNK_ID).copy_from_slice(&mean);

    if !input.is_finite() {
        return Err(RuberError::Numerical(
            "embedding training diverged (non-finite vectors)".into(),
        ));
    }
    Embeddings::new(vocab, EmbeddingMatrix::new(input)?)
}
