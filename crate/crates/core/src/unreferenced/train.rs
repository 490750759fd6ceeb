//! Negative-sampling training of the scorer with a hinge objective and Adam.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{backward, forward, token_ids};
use super::params::ScorerParams;
use crate::corpus::{Dataset, QueryReplyPair, Utterance};
use crate::embeddings::{EmbeddingMatrix, Embeddings};
use crate::error::{ensure, Result, RuberError};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub margin: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden: usize,
    pub mlp_hidden: usize,
    pub max_len: usize,
    pub seed: u64,
    pub fine_tune_embeddings: bool,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            margin: 0.5,
            lr: 1e-3,
            epochs: 5,
            batch_size: 64,
            hidden: 64,
            mlp_hidden: 128,
            max_len: 50,
            seed: 1,
            fine_tune_embeddings: false,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.margin > 0.0 && self.margin.is_finite(), "margin must be positive");
        ensure!(self.lr > 0.0 && self.lr.is_finite(), "learning rate must be positive");
        ensure!(self.batch_size >= 1, "batch_size must be at least 1");
        ensure!(self.hidden >= 1, "hidden size must be at least 1");
        ensure!(self.mlp_hidden >= 1, "MLP hidden size must be at least 1");
        ensure!(self.max_len >= 1, "max_len must be at least 1");
        ensure!((0.0..1.0).contains(&self.beta1), "beta1 must be in [0, 1)");
        ensure!((0.0..1.0).contains(&self.beta2), "beta2 must be in [0, 1)");
        ensure!(self.epsilon > 0.0, "epsilon must be positive");
        Ok(())
    }
}

/// Hinge loss `max(0, Δ − s⁺ + s⁻)`.
pub fn margin_loss(positive: f64, negative: f64, margin: f64) -> f64 {
    (margin - positive + negative).max(0.0)
}

/// Resampling budget before [`sample_negative`] gives up.
pub const NEGATIVE_RETRIES: usize = 100;

/// Reply of a uniformly drawn pair other than `positive_index` whose tokens
/// differ from the positive reply.
pub fn sample_negative<'a, R: Rng + ?Sized>(
    pairs: &'a [QueryReplyPair],
    positive_index: usize,
    rng: &mut R,
) -> Result<&'a Utterance> {
    ensure!(pairs.len() >= 2, "negative sampling needs at least 2 pairs");
    ensure!(positive_index < pairs.len(), "positive index out of range");
    let positive = &pairs[positive_index].reply;
    for _ in 0..NEGATIVE_RETRIES {
        let mut j = rng.random_range(0..pairs.len() - 1);
        if j >= positive_index {
            j += 1;
        }
        let candidate = &pairs[j].reply;
        if candidate.tokens != positive.tokens {
            return Ok(candidate);
        }
    }
    Err(RuberError::Numerical(format!(
        "no reply different from pair {positive_index}'s after {NEGATIVE_RETRIES} draws"
    )))
}

#[derive(Debug, Clone, Copy)]
pub struct Triple<'a> {
    pub query: &'a Utterance,
    pub positive: &'a Utterance,
    pub negative: &'a Utterance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub params: ScorerParams,
    /// Present only when embeddings are being fine-tuned.
    pub embeddings: Option<Matrix>,
}

/// Mean hinge loss over `batch` and its analytic gradient. Samples whose
/// margin is already met contribute nothing.
pub fn compute_gradients(
    batch: &[Triple<'_>],
    params: &ScorerParams,
    embeddings: &Embeddings,
    config: &TrainConfig,
) -> Result<(Gradients, f64)> {
    ensure!(!batch.is_empty(), "empty batch");
    ensure!(
        params.input_dim() == embeddings.dim(),
        "scorer expects {}-dim embeddings, got {}",
        params.input_dim(),
        embeddings.dim()
    );
    let mut grads = Gradients {
        params: params.zeros_like(),
        embeddings: config
            .fine_tune_embeddings
            .then(|| Matrix::zeros(embeddings.matrix.len(), embeddings.dim())),
    };
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for (i, t) in batch.iter().enumerate() {
        let q = token_ids(t.query, embeddings, config.max_len);
        let pos = token_ids(t.positive, embeddings, config.max_len);
        let neg = token_ids(t.negative, embeddings, config.max_len);
        ensure!(
            !q.is_empty() && !pos.is_empty() && !neg.is_empty(),
            "batch sample {i} has an empty utterance"
        );
        let pos_trace = forward(params, &embeddings.matrix, q.clone(), pos);
        let neg_trace = forward(params, &embeddings.matrix, q, neg);
        let slack = config.margin - pos_trace.score + neg_trace.score;
        if !slack.is_finite() {
            return Err(RuberError::Numerical(format!(
                "non-finite loss on batch sample {i} (s+ = {}, s- = {})",
                pos_trace.score, neg_trace.score
            )));
        }
        if slack > 0.0 {
            total += slack;
            backward(
                params,
                &embeddings.matrix,
                &pos_trace,
                -scale,
                &mut grads.params,
                grads.embeddings.as_mut(),
            );
            backward(
                params,
                &embeddings.matrix,
                &neg_trace,
                scale,
                &mut grads.params,
                grads.embeddings.as_mut(),
            );
        }
    }
    Ok((grads, total * scale))
}

/// Adam moment estimates mirroring the trainable tensors.
#[derive(Debug, Clone)]
pub struct AdamState {
    first: ScorerParams,
    second: ScorerParams,
    emb_first: Option<Matrix>,
    emb_second: Option<Matrix>,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &ScorerParams, embeddings: Option<&EmbeddingMatrix>) -> Self {
        let emb = embeddings.map(|e| Matrix::zeros(e.len(), e.dim()));
        AdamState {
            first: params.zeros_like(),
            second: params.zeros_like(),
            emb_first: emb.clone(),
            emb_second: emb,
            step: 0,
        }
    }

    /// One bias-corrected Adam update.
    pub fn update(
        &mut self,
        params: &mut ScorerParams,
        embeddings: Option<&mut EmbeddingMatrix>,
        grads: &Gradients,
        config: &TrainConfig,
    ) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - config.beta1.powi(t);
        let c2 = 1.0 - config.beta2.powi(t);
        let apply = |p: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64]| {
            for i in 0..p.len() {
                m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
                v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= config.lr * m_hat / (v_hat.sqrt() + config.epsilon);
            }
        };
        let tensors = params.tensors_mut();
        let firsts = self.first.tensors_mut();
        let seconds = self.second.tensors_mut();
        let gs = grads.params.tensors();
        for (((p, m), v), g) in tensors.into_iter().zip(firsts).zip(seconds).zip(gs) {
            apply(p.as_mut_slice(), m.as_mut_slice(), v.as_mut_slice(), g.as_slice());
        }
        if let (Some(e), Some(g), Some(m), Some(v)) = (
            embeddings,
            grads.embeddings.as_ref(),
            self.emb_first.as_mut(),
            self.emb_second.as_mut(),
        ) {
            apply(
                e.values_mut().as_mut_slice(),
                m.as_mut_slice(),
                v.as_mut_slice(),
                g.as_slice(),
            );
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Fraction of held-out pairs with `s_U(q, r⁺) > s_U(q, r⁻)`; `None`
    /// when the corpus is too small to hold anything out.
    pub heldout_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub epochs: Vec<EpochStats>,
    pub train_pairs: usize,
    pub heldout_pairs: usize,
}

#[derive(Debug, Clone)]
pub struct TrainedScorer {
    pub params: ScorerParams,
    /// Updated embedding table when fine-tuning was enabled.
    pub tuned_embeddings: Option<EmbeddingMatrix>,
    pub log: TrainingLog,
}

/// Fraction of the corpus held out for ranking accuracy.
pub const HELDOUT_FRACTION: f64 = 0.1;

/// Trains a scorer on query/reply pairs, drawing one fresh negative per
/// positive each epoch. Fully determined by `(dataset, embeddings, config)`.
pub fn train(
    dataset: &Dataset<QueryReplyPair>,
    embeddings: &Embeddings,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainedScorer> {
    config.validate()?;
    ensure!(dataset.len() >= 2, "training needs at least 2 query/reply pairs");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ScorerParams::init(embeddings.dim(), config.hidden, config.mlp_hidden, &mut rng);
    if config.epochs == 0 {
        return Ok(TrainedScorer {
            params,
            tuned_embeddings: None,
            log: TrainingLog::default(),
        });
    }

    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng);
    let n_heldout = (dataset.len() as f64 * HELDOUT_FRACTION).floor() as usize;
    let n_heldout = if dataset.len() - n_heldout < 2 { 0 } else { n_heldout };
    let (heldout_idx, train_idx) = order.split_at(n_heldout);
    let train_pairs: Vec<QueryReplyPair> = train_idx.iter().map(|&i| dataset.pairs[i].clone()).collect();
    let heldout: Vec<(usize, Utterance)> = heldout_idx
        .iter()
        .map(|&i| Ok((i, sample_negative(&dataset.pairs, i, &mut rng)?.clone())))
        .collect::<Result<_>>()?;

    let mut tuned = config.fine_tune_embeddings.then(|| embeddings.clone());
    let mut adam = AdamState::new(&params, tuned.as_ref().map(|e| &e.matrix));
    let mut log = TrainingLog {
        epochs: Vec::with_capacity(config.epochs),
        train_pairs: train_pairs.len(),
        heldout_pairs: heldout.len(),
    };

    let mut epoch_order: Vec<usize> = (0..train_pairs.len()).collect();
    for epoch in 1..=config.epochs {
        epoch_order.shuffle(&mut rng);
        let negatives: Vec<&Utterance> = epoch_order
            .iter()
            .map(|&i| sample_negative(&train_pairs, i, &mut rng))
            .collect::<Result<_>>()?;
        let mut loss_sum = 0.0;
        for (chunk, negs) in epoch_order
            .chunks(config.batch_size)
            .zip(negatives.chunks(config.batch_size))
        {
            let batch: Vec<Triple<'_>> = chunk
                .iter()
                .zip(negs)
                .map(|(&i, &neg)| Triple {
                    query: &train_pairs[i].query,
                    positive: &train_pairs[i].reply,
                    negative: neg,
                })
                .collect();
            let current = tuned.as_ref().unwrap_or(embeddings);
            let (grads, loss) = compute_gradients(&batch, &params, current, config)?;
            loss_sum += loss * batch.len() as f64;
            adam.update(&mut params, tuned.as_mut().map(|e| &mut e.matrix), &grads, config);
        }
        if !params.is_finite() {
            return Err(RuberError::Numerical(format!(
                "parameters became non-finite in epoch {epoch}"
            )));
        }
        let current = tuned.as_ref().unwrap_or(embeddings);
        let heldout_accuracy = (!heldout.is_empty())
            .then(|| ranking_accuracy(&params, current, config.max_len, dataset, &heldout))
            .transpose()?;
        let stats = EpochStats {
            epoch,
            mean_loss: loss_sum / train_pairs.len() as f64,
            heldout_accuracy,
        };
        on_epoch(&stats);
        log.epochs.push(stats);
    }
    Ok(TrainedScorer {
        params,
        tuned_embeddings: tuned.map(|e| e.matrix),
        log,
    })
}

fn ranking_accuracy(
    params: &ScorerParams,
    embeddings: &Embeddings,
    max_len: usize,
    dataset: &Dataset<QueryReplyPair>,
    heldout: &[(usize, Utterance)],
) -> Result<f64> {
    let mut correct = 0usize;
    for (i, negative) in heldout {
        let pair = &dataset.pairs[*i];
        let pos = super::unreferenced_score(&pair.query, &pair.reply, params, embeddings, max_len)?;
        let neg = super::unreferenced_score(&pair.query, negative, params, embeddings, max_len)?;
        if pos > neg {
            correct += 1;
        }
    }
    Ok(correct as f64 / heldout.len() as f64)
}
