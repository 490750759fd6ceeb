//! Forward and backward passes of the query/reply scorer.
//!
//! `s_U = σ(w_out · tanh(W [q; r; qᵀ M r] + b) + b_out)` where `q` and `r`
//! are the concatenated final states of each utterance's bidirectional GRU.

use super::gru::{step_backward, step_with_cache, GruParams, StepCache};
use super::params::{BiGruEncoder, ScorerParams};
use crate::corpus::Utterance;
use crate::embeddings::{EmbeddingMatrix, Embeddings};
use crate::error::{ensure, Result};
use crate::linalg::{axpy, dot, sigmoid, Matrix};

/// Token ids of the first `max_len` tokens.
pub(crate) fn token_ids(utterance: &Utterance, embeddings: &Embeddings, max_len: usize) -> Vec<usize> {
    utterance
        .tokens
        .iter()
        .take(max_len)
        .map(|t| embeddings.vocab.id_or_unk(t))
        .collect()
}

fn run_direction<'a>(
    params: &GruParams,
    matrix: &EmbeddingMatrix,
    ids: impl Iterator<Item = &'a usize>,
) -> (Vec<f64>, Vec<StepCache>) {
    let mut h = vec![0.0; params.hidden()];
    let mut caches = Vec::new();
    for &id in ids {
        let (next, cache) = step_with_cache(params, matrix.row(id), &h);
        h = next;
        caches.push(cache);
    }
    (h, caches)
}

pub(crate) struct EncoderTrace {
    ids: Vec<usize>,
    forward: Vec<StepCache>,
    backward: Vec<StepCache>,
    pub output: Vec<f64>,
}

fn encode_trace(encoder: &BiGruEncoder, matrix: &EmbeddingMatrix, ids: Vec<usize>) -> EncoderTrace {
    let (hf, forward) = run_direction(&encoder.forward, matrix, ids.iter());
    let (hb, backward) = run_direction(&encoder.backward, matrix, ids.iter().rev());
    let mut output = hf;
    output.extend(hb);
    EncoderTrace {
        ids,
        forward,
        backward,
        output,
    }
}

fn backprop_direction<'a>(
    params: &GruParams,
    grads: &mut GruParams,
    matrix: &EmbeddingMatrix,
    ids: impl DoubleEndedIterator<Item = &'a usize>,
    caches: &[StepCache],
    dh_last: &[f64],
    mut emb_grad: Option<&mut Matrix>,
) {
    let mut dh = dh_last.to_vec();
    let dim = matrix.dim();
    for (&id, cache) in ids.rev().zip(caches.iter().rev()) {
        let x = matrix.row(id);
        match emb_grad.as_deref_mut() {
            Some(g) => {
                let mut dx = vec![0.0; dim];
                dh = step_backward(params, grads, x, cache, &dh, Some(&mut dx));
                axpy(1.0, &dx, g.row_mut(id));
            }
            None => dh = step_backward(params, grads, x, cache, &dh, None),
        }
    }
}

fn backprop_encoder(
    encoder: &BiGruEncoder,
    grads: &mut BiGruEncoder,
    matrix: &EmbeddingMatrix,
    trace: &EncoderTrace,
    d_output: &[f64],
    mut emb_grad: Option<&mut Matrix>,
) {
    let h = encoder.hidden();
    backprop_direction(
        &encoder.forward,
        &mut grads.forward,
        matrix,
        trace.ids.iter(),
        &trace.forward,
        &d_output[..h],
        emb_grad.as_deref_mut(),
    );
    backprop_direction(
        &encoder.backward,
        &mut grads.backward,
        matrix,
        trace.ids.iter().rev(),
        &trace.backward,
        &d_output[h..],
        emb_grad,
    );
}

/// `[h_T→ ; h_1←]`, length `2H`. Tokens beyond `max_len` are dropped.
pub fn encode(
    utterance: &Utterance,
    encoder: &BiGruEncoder,
    embeddings: &Embeddings,
    max_len: usize,
) -> Result<Vec<f64>> {
    let ids = token_ids(utterance, embeddings, max_len);
    ensure!(!ids.is_empty(), "cannot encode an empty utterance");
    ensure!(
        encoder.input_dim() == embeddings.dim(),
        "encoder expects {}-dim inputs, embeddings are {}-dim",
        encoder.input_dim(),
        embeddings.dim()
    );
    Ok(encode_trace(encoder, &embeddings.matrix, ids).output)
}

pub(crate) struct ScoreTrace {
    query: EncoderTrace,
    reply: EncoderTrace,
    /// `M r`
    matched: Vec<f64>,
    features: Vec<f64>,
    hidden: Vec<f64>,
    pub score: f64,
}

pub(crate) fn forward(
    params: &ScorerParams,
    matrix: &EmbeddingMatrix,
    query_ids: Vec<usize>,
    reply_ids: Vec<usize>,
) -> ScoreTrace {
    let query = encode_trace(&params.query_encoder, matrix, query_ids);
    let reply = encode_trace(&params.reply_encoder, matrix, reply_ids);
    let matched = params.matching.matvec(&reply.output);
    let quadratic = dot(&query.output, &matched);

    let mut features = Vec::with_capacity(4 * params.hidden() + 1);
    features.extend_from_slice(&query.output);
    features.extend_from_slice(&reply.output);
    features.push(quadratic);

    let mut hidden = params.mlp_hidden_weight.matvec(&features);
    for (h, b) in hidden.iter_mut().zip(params.mlp_hidden_bias.as_slice()) {
        *h = (*h + b).tanh();
    }
    let logit = dot(params.mlp_out_weight.as_slice(), &hidden) + params.mlp_out_bias.get(0, 0);
    ScoreTrace {
        query,
        reply,
        matched,
        features,
        hidden,
        score: sigmoid(logit),
    }
}

/// Adds `d_score · ∂s_U/∂θ` into `grads` (and into `emb_grad` when given).
pub(crate) fn backward(
    params: &ScorerParams,
    matrix: &EmbeddingMatrix,
    trace: &ScoreTrace,
    d_score: f64,
    grads: &mut ScorerParams,
    mut emb_grad: Option<&mut Matrix>,
) {
    let h2 = 2 * params.hidden();
    let d_logit = d_score * trace.score * (1.0 - trace.score);
    if d_logit == 0.0 {
        return;
    }
    axpy(d_logit, &trace.hidden, grads.mlp_out_weight.as_mut_slice());
    grads.mlp_out_bias.as_mut_slice()[0] += d_logit;

    let d_pre: Vec<f64> = trace
        .hidden
        .iter()
        .zip(params.mlp_out_weight.as_slice())
        .map(|(h, w)| d_logit * w * (1.0 - h * h))
        .collect();
    grads.mlp_hidden_weight.add_outer(1.0, &d_pre, &trace.features);
    axpy(1.0, &d_pre, grads.mlp_hidden_bias.as_mut_slice());
    let mut d_features = vec![0.0; trace.features.len()];
    params.mlp_hidden_weight.add_matvec_t(&d_pre, &mut d_features);

    let d_quad = d_features[2 * h2];
    let mut d_query = d_features[..h2].to_vec();
    let mut d_reply = d_features[h2..2 * h2].to_vec();
    axpy(d_quad, &trace.matched, &mut d_query);
    let mut mt_q = vec![0.0; h2];
    params.matching.add_matvec_t(&trace.query.output, &mut mt_q);
    axpy(d_quad, &mt_q, &mut d_reply);
    grads
        .matching
        .add_outer(d_quad, &trace.query.output, &trace.reply.output);

    backprop_encoder(
        &params.query_encoder,
        &mut grads.query_encoder,
        matrix,
        &trace.query,
        &d_query,
        emb_grad.as_deref_mut(),
    );
    backprop_encoder(
        &params.reply_encoder,
        &mut grads.reply_encoder,
        matrix,
        &trace.reply,
        &d_reply,
        emb_grad,
    );
}

const SCORE_FLOOR: f64 = f64::MIN_POSITIVE;
const SCORE_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;

/// `s_U(q, r)`, strictly inside `(0, 1)`.
pub fn unreferenced_score(
    query: &Utterance,
    reply: &Utterance,
    params: &ScorerParams,
    embeddings: &Embeddings,
    max_len: usize,
) -> Result<f64> {
    let q = token_ids(query, embeddings, max_len);
    let r = token_ids(reply, embeddings, max_len);
    ensure!(!q.is_empty(), "cannot score an empty query");
    ensure!(!r.is_empty(), "cannot score an empty reply");
    ensure!(
        params.input_dim() == embeddings.dim(),
        "scorer expects {}-dim embeddings, got {}",
        params.input_dim(),
        embeddings.dim()
    );
    let s = forward(params, &embeddings.matrix, q, r).score;
    Ok(s.clamp(SCORE_FLOOR, SCORE_CEIL))
}
