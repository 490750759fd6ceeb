//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod oracles;

use std::collections::HashSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use ruber::analysis::stats::correlation_p_value;
use ruber::analysis::{pearson, spearman};
use ruber::baselines::{bleu, lcs_len, rouge_l};
use ruber::blending::{blend, normalize, BlendStrategy, ScoreSeries};
use ruber::cli::{build_report, score_dataset, ScoreTable};
use ruber::corpus::{AnnotatedPair, Dataset, QueryReplyPair, Utterance};
use ruber::embeddings::{EmbeddingMatrix, Embeddings, Vocabulary};
use ruber::linalg::Matrix;
use ruber::referenced::referenced_score;
use ruber::unreferenced::{
    compute_gradients, encode, gru_step, margin_loss, train, unreferenced_score, ScorerParams, TrainConfig, Triple,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! require {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    };
}

fn check(id: usize, name: &str, f: fn() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    match &outcome {
        Ok(detail) => println!("PASS [{id:>2}] {name}: {detail} ({secs:.2}s)"),
        Err(detail) => println!("FAIL [{id:>2}] {name}: {detail} ({secs:.2}s)"),
    }
    outcome.is_ok()
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("gradient correctness", gradient_correctness),
        ("forward-pass oracle", forward_oracle),
        ("margin-loss exactness", margin_loss_exactness),
        ("training sanity", training_sanity),
        ("referenced metric properties", referenced_properties),
        ("baseline oracles", baseline_oracles),
        ("statistics oracles", statistics_oracles),
        ("blending properties", blending_properties),
        ("normalization/report reproducibility", reproducibility),
        ("paper-pathology reproduction", pathology),
    ];
    let passed = criteria
        .iter()
        .enumerate()
        .filter(|(i, (name, f))| check(i + 1, name, *f))
        .count();
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- helpers

fn token_list(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i}")).collect()
}

fn random_embeddings(rng: &mut ChaCha8Rng, tokens: &[String], dim: usize, limit: f64) -> Embeddings {
    let vocab = Vocabulary::with_unk(tokens);
    let values = Matrix::uniform(vocab.len(), dim, limit, rng);
    Embeddings::new(vocab, EmbeddingMatrix::new(values).unwrap()).unwrap()
}

fn random_utterance(rng: &mut ChaCha8Rng, tokens: &[String], min: usize, max: usize) -> Utterance {
    let len = rng.random_range(min..=max);
    Utterance::new((0..len).map(|_| {
        if rng.random_bool(0.1) {
            "oov".to_owned()
        } else {
            tokens[rng.random_range(0..tokens.len())].clone()
        }
    }))
}

/// Glorot init followed by uniform noise on every tensor, so that zero-initialized
/// tensors (biases, matching matrix) are exercised as well.
fn perturbed_params(rng: &mut ChaCha8Rng, d: usize, h: usize, m: usize, noise: f64) -> ScorerParams {
    let mut p = ScorerParams::init(d, h, m, rng);
    for t in p.tensors_mut() {
        for v in t.as_mut_slice() {
            *v += rng.random_range(-noise..noise);
        }
    }
    p
}

/// Input vectors of an utterance by direct table lookup (unknown → row 0).
fn vectors(emb: &Embeddings, tokens: &[String], u: &Utterance, max_len: usize) -> Vec<Vec<f64>> {
    u.tokens
        .iter()
        .take(max_len)
        .map(|t| {
            let row = tokens.iter().position(|k| k == t).map_or(0, |i| i + 1);
            emb.matrix.row(row).to_vec()
        })
        .collect()
}

// ---------------------------------------------------------------- 1

const FD_STEP: f64 = 1e-5;
const FD_FLOOR: f64 = 1e-6;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(FD_FLOOR)
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let (d, h, m) = (4, 3, 5);
    let tokens = token_list(6);
    let mut worst = 0.0f64;
    let mut entries = 0usize;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let emb = random_embeddings(&mut rng, &tokens, d, 1.0);
        let params = perturbed_params(&mut rng, d, h, m, 0.5);
        // Margin above the score range keeps every hinge active.
        let config = TrainConfig {
            margin: 2.0,
            hidden: h,
            mlp_hidden: m,
            max_len: 5,
            fine_tune_embeddings: true,
            ..TrainConfig::default()
        };
        let samples: Vec<[Utterance; 3]> = (0..2)
            .map(|_| std::array::from_fn(|_| random_utterance(&mut rng, &tokens, 1, 5)))
            .collect();
        let batch: Vec<Triple> = samples
            .iter()
            .map(|[q, p, n]| Triple {
                query: q,
                positive: p,
                negative: n,
            })
            .collect();
        let loss = |p: &ScorerParams, e: &Embeddings| -> f64 {
            samples
                .iter()
                .map(|[q, pos, neg]| {
                    let sp = unreferenced_score(q, pos, p, e, config.max_len).unwrap();
                    let sn = unreferenced_score(q, neg, p, e, config.max_len).unwrap();
                    margin_loss(sp, sn, config.margin)
                })
                .sum::<f64>()
                / samples.len() as f64
        };
        let (grads, mean_loss) = compute_gradients(&batch, &params, &emb, &config).map_err(|e| e.to_string())?;
        require!(
            (mean_loss - loss(&params, &emb)).abs() < 1e-12,
            "seed {seed}: reported loss {mean_loss} disagrees with forward evaluation"
        );

        let analytic = grads.params.tensors();
        for (ti, g) in analytic.iter().enumerate() {
            for k in 0..g.as_slice().len() {
                let mut plus = params.clone();
                plus.tensors_mut()[ti].as_mut_slice()[k] += FD_STEP;
                let mut minus = params.clone();
                minus.tensors_mut()[ti].as_mut_slice()[k] -= FD_STEP;
                let numeric = (loss(&plus, &emb) - loss(&minus, &emb)) / (2.0 * FD_STEP);
                let e = rel_err(g.as_slice()[k], numeric);
                require!(
                    e < 1e-4,
                    "seed {seed}: tensor {ti} entry {k}: analytic {} vs numeric {numeric} (rel {e:.2e})",
                    g.as_slice()[k]
                );
                worst = worst.max(e);
                entries += 1;
            }
        }

        let emb_grad = grads.embeddings.as_ref().ok_or("missing embedding gradient")?;
        for k in 0..emb_grad.as_slice().len() {
            let shifted = |delta: f64| {
                let mut values = emb.matrix.values().clone();
                values.as_mut_slice()[k] += delta;
                Embeddings::new(emb.vocab.clone(), EmbeddingMatrix::new(values).unwrap()).unwrap()
            };
            let numeric = (loss(&params, &shifted(FD_STEP)) - loss(&params, &shifted(-FD_STEP))) / (2.0 * FD_STEP);
            let e = rel_err(emb_grad.as_slice()[k], numeric);
            require!(
                e < 1e-4,
                "seed {seed}: embedding entry {k}: analytic {} vs numeric {numeric} (rel {e:.2e})",
                emb_grad.as_slice()[k]
            );
            worst = worst.max(e);
            entries += 1;
        }
    }
    let elapsed = start.elapsed();
    require!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("20 instances, {entries} entries, max rel err {worst:.2e}"))
}

// ---------------------------------------------------------------- 2

fn forward_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tokens = token_list(8);
    for case in 0..100 {
        let d = rng.random_range(1..=5);
        let h = rng.random_range(1..=4);
        let m = rng.random_range(1..=5);
        let max_len = rng.random_range(1..=6);
        let emb = random_embeddings(&mut rng, &tokens, d, 1.0);
        let params = perturbed_params(&mut rng, d, h, m, 1.0);

        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let hp: Vec<f64> = (0..h).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gru = &params.query_encoder.forward;
        let got = gru_step(&x, &hp, gru).map_err(|e| e.to_string())?;
        let want = oracles::Gru::of(gru).step(&x, &hp);
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }

        let u = random_utterance(&mut rng, &tokens, 1, 8);
        let enc = &params.reply_encoder;
        let got = encode(&u, enc, &emb, max_len).map_err(|e| e.to_string())?;
        let want = oracles::encode(
            &oracles::Gru::of(&enc.forward),
            &oracles::Gru::of(&enc.backward),
            &vectors(&emb, &tokens, &u, max_len),
        );
        require!(got.len() == 2 * h, "case {case}: encoding length {}", got.len());
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }

        let q = random_utterance(&mut rng, &tokens, 1, 8);
        let got = unreferenced_score(&q, &u, &params, &emb, max_len).map_err(|e| e.to_string())?;
        let want = oracles::Scorer::of(&params).score(
            &vectors(&emb, &tokens, &q, max_len),
            &vectors(&emb, &tokens, &u, max_len),
        );
        worst = worst.max((got - want).abs());
        require!(worst <= 1e-10, "case {case}: deviation {worst:.2e}");
    }
    Ok(format!("100 instances each of gru_step/encode/unreferenced_score, max abs dev {worst:.2e}"))
}

// ---------------------------------------------------------------- 3

fn margin_loss_exactness() -> Outcome {
    let table = [(0.9, 0.2, 0.5, 0.0), (0.5, 0.4, 0.5, 0.4), (0.3, 0.3, 0.5, 0.5)];
    for (p, n, delta, want) in table {
        let got = margin_loss(p, n, delta);
        require!(got == want, "margin_loss({p}, {n}, {delta}) = {got}, want {want}");
    }

    let tokens = token_list(10);
    let delta = 0.01;
    let mut batches = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let emb = random_embeddings(&mut rng, &tokens, 4, 1.0);
        let mut params = perturbed_params(&mut rng, 4, 3, 5, 0.5);
        params.mlp_out_weight.scale(4.0);
        let config = TrainConfig {
            margin: delta,
            hidden: 3,
            mlp_hidden: 5,
            fine_tune_embeddings: seed % 2 == 0,
            ..TrainConfig::default()
        };
        let mut samples = Vec::new();
        for _ in 0..1000 {
            if samples.len() == 4 {
                break;
            }
            let q = random_utterance(&mut rng, &tokens, 1, 5);
            let a = random_utterance(&mut rng, &tokens, 1, 5);
            let b = random_utterance(&mut rng, &tokens, 1, 5);
            let sa = unreferenced_score(&q, &a, &params, &emb, config.max_len).unwrap();
            let sb = unreferenced_score(&q, &b, &params, &emb, config.max_len).unwrap();
            if sb + 2.0 * delta < sa {
                samples.push((q, a, b));
            } else if sa + 2.0 * delta < sb {
                samples.push((q, b, a));
            }
        }
        require!(samples.len() == 4, "seed {seed}: could not build a margin-satisfied batch");
        let batch: Vec<Triple> = samples
            .iter()
            .map(|(q, p, n)| Triple {
                query: q,
                positive: p,
                negative: n,
            })
            .collect();
        let (grads, loss) = compute_gradients(&batch, &params, &emb, &config).map_err(|e| e.to_string())?;
        require!(loss == 0.0, "seed {seed}: loss {loss}");
        let nonzero = grads
            .params
            .tensors()
            .iter()
            .flat_map(|t| t.as_slice().iter())
            .chain(grads.embeddings.iter().flat_map(|e| e.as_slice().iter()))
            .filter(|&&g| g != 0.0)
            .count();
        require!(nonzero == 0, "seed {seed}: {nonzero} nonzero gradient entries");
        batches += 1;
    }
    Ok(format!("3-row hinge table exact; {batches} satisfied batches with all-zero gradients"))
}

// ---------------------------------------------------------------- 4

const TOPICS: usize = 25;
const WORDS_PER_TOPIC: usize = 8;

/// Topic-clustered corpus: each reply repeats one of its query's tokens,
/// and different topics share no vocabulary.
fn separable_corpus(rng: &mut ChaCha8Rng, pairs: usize) -> (Dataset<QueryReplyPair>, Vec<Vec<String>>) {
    let topics: Vec<Vec<String>> = (0..TOPICS)
        .map(|t| (0..WORDS_PER_TOPIC).map(|w| format!("t{t}w{w}")).collect())
        .collect();
    let data = (0..pairs)
        .map(|i| {
            let words = &topics[i % TOPICS];
            let query: Vec<String> = (0..4).map(|_| words[rng.random_range(0..WORDS_PER_TOPIC)].clone()).collect();
            let mut reply = vec![query[rng.random_range(0..query.len())].clone()];
            reply.extend((0..2).map(|_| words[rng.random_range(0..WORDS_PER_TOPIC)].clone()));
            reply.shuffle(rng);
            QueryReplyPair {
                query: Utterance::new(query),
                reply: Utterance::new(reply),
            }
        })
        .collect();
    (Dataset::from_pairs(data), topics)
}

/// Word vectors scattered around one random center per topic.
fn cluster_embeddings(rng: &mut ChaCha8Rng, topics: &[Vec<String>], dim: usize) -> Embeddings {
    let tokens: Vec<&String> = topics.iter().flatten().collect();
    let vocab = Vocabulary::with_unk(tokens.iter().copied());
    let mut values = Matrix::zeros(vocab.len(), dim);
    for words in topics {
        let center: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        for w in words {
            let row = values.row_mut(vocab.id(w).unwrap());
            for (v, c) in row.iter_mut().zip(&center) {
                let noise: f64 = StandardNormal.sample(rng);
                *v = c + 0.3 * noise;
            }
        }
    }
    Embeddings::new(vocab, EmbeddingMatrix::new(values).unwrap()).unwrap()
}

fn training_sanity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (dataset, topics) = separable_corpus(&mut rng, 500);
    let emb = cluster_embeddings(&mut rng, &topics, 16);
    let config = TrainConfig {
        hidden: 16,
        mlp_hidden: 32,
        epochs: 5,
        batch_size: 16,
        lr: 5e-3,
        seed: 3,
        ..TrainConfig::default()
    };
    let trained = train(&dataset, &emb, &config, |_| {}).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let accs: Vec<String> = trained
        .log
        .epochs
        .iter()
        .map(|e| format!("{:.3}", e.heldout_accuracy.unwrap_or(f64::NAN)))
        .collect();
    let last = trained
        .log
        .epochs
        .last()
        .and_then(|e| e.heldout_accuracy)
        .ok_or("no held-out accuracy recorded")?;
    require!(trained.log.heldout_pairs == 50, "held out {} pairs", trained.log.heldout_pairs);
    require!(last >= 0.9, "held-out accuracy {last:.3} after 5 epochs (per epoch: {})", accs.join(", "));
    require!(elapsed < Duration::from_secs(180), "took {elapsed:?}");
    Ok(format!(
        "500 pairs, H=16, held-out accuracy per epoch [{}]",
        accs.join(", ")
    ))
}

// ---------------------------------------------------------------- 5

fn referenced_properties() -> Outcome {
    const CASES: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tokens = token_list(30);
    let emb = random_embeddings(&mut rng, &tokens, 8, 1.0);
    let (mut sym, mut bound, mut order, mut scale) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..CASES {
        let a = random_utterance(&mut rng, &tokens, 0, 10);
        let b = random_utterance(&mut rng, &tokens, 0, 10);
        let s = referenced_score(&a, &b, &emb);
        sym = sym.max((s - referenced_score(&b, &a, &emb)).abs());
        bound = bound.max(s.abs() - 1.0);

        let mut shuffled = b.clone();
        shuffled.tokens.shuffle(&mut rng);
        order = order.max((s - referenced_score(&a, &shuffled, &emb)).abs());

        let c = 10f64.powf(rng.random_range(-3.0..3.0));
        let scaled = Embeddings::new(emb.vocab.clone(), emb.matrix.scaled(c)).unwrap();
        scale = scale.max((s - referenced_score(&a, &b, &scaled)).abs());
    }
    let tol = 1e-12;
    require!(sym <= tol, "symmetry violated by {sym:.2e}");
    require!(bound <= tol, "|s_R| exceeds 1 by {bound:.2e}");
    require!(order <= tol, "token order changes s_R by {order:.2e}");
    require!(scale <= tol, "embedding scale changes s_R by {scale:.2e}");
    Ok(format!(
        "{CASES} cases each; max dev symmetry {sym:.1e}, order {order:.1e}, scale {scale:.1e}"
    ))
}

// ---------------------------------------------------------------- 6

fn u(s: &str) -> Utterance {
    ruber::corpus::tokenize(s)
}

fn baseline_oracles() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    for n in 1..=3 {
        let b = bleu(&u("the cat sat"), &u("the cat sat"), n).unwrap();
        require!(close(b, 1.0), "self BLEU-{n} = {b}");
    }
    let b = bleu(&u("the the the"), &u("the cat"), 1).unwrap();
    require!(close(b, 1.0 / 3.0), "clipped BLEU-1 = {b}");
    let b = bleu(&u("how are you"), &u("you are how"), 2).unwrap();
    require!(b == 0.0, "no shared bigram gives BLEU-2 = {b}");
    require!(bleu(&u("hi"), &u("hi there"), 2).unwrap().is_nan(), "short candidate not NaN");
    require!(rouge_l(&u("a b c"), &u("a b c")) == 1.0, "identical ROUGE-L");
    require!(rouge_l(&u("a b"), &u("c d")) == 0.0, "disjoint ROUGE-L");
    require!(close(rouge_l(&u("a b c d"), &u("a c d f")), 0.75), "worked ROUGE-L example");

    let strings = oracles::Strings::new(8);
    let count = strings.count();
    let utterances: Vec<Vec<String>> = (0..count)
        .map(|i| strings.get(i).iter().map(|&c| ["a", "b", "c"][c as usize].to_owned()).collect())
        .collect();
    let subsequences: Vec<Vec<Vec<usize>>> = (0..count).map(|i| strings.subsequences(&strings.get(i))).collect();
    let contains: Vec<oracles::BitSet> = subsequences
        .iter()
        .map(|groups| {
            let mut set = oracles::BitSet::new(count);
            groups.iter().flatten().for_each(|&s| set.insert(s));
            set
        })
        .collect();
    let mut pairs = 0u64;
    for a in 0..count {
        let subs_a = &subsequences[a];
        for b in 0..count {
            let limit = (subs_a.len() - 1).min(utterances[b].len());
            let brute = (0..=limit)
                .rev()
                .find(|&len| subs_a[len].iter().any(|&s| contains[b].contains(s)))
                .unwrap();
            let dp = lcs_len(&utterances[a], &utterances[b]);
            require!(dp == brute, "LCS({:?}, {:?}): dp {dp}, brute force {brute}", utterances[a], utterances[b]);
            pairs += 1;
        }
    }
    Ok(format!("worked examples exact; LCS equals brute force on all {pairs} pairs of length <= 8"))
}

// ---------------------------------------------------------------- 7

fn statistics_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_r = 0.0f64;
    let mut cases = 0;
    for case in 0..300 {
        let n = rng.random_range(3..=200);
        let range = [2i64, 5, 1000][case % 3];
        let x: Vec<i64> = (0..n).map(|_| rng.random_range(0..=range)).collect();
        let y: Vec<i64> = x
            .iter()
            .map(|&v| if rng.random_bool(0.5) { v + rng.random_range(-2..=2) } else { rng.random_range(0..=range) })
            .collect();
        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();

        let got_p = pearson(&xf, &yf).map_err(|e| e.to_string())?.map(|c| c.coefficient);
        let got_s = spearman(&xf, &yf).map_err(|e| e.to_string())?.map(|c| c.coefficient);
        let want_p = oracles::pearson_exact(&x, &y);
        let want_s = oracles::pearson_exact(&oracles::doubled_ranks(&x), &oracles::doubled_ranks(&y));
        for (kind, got, want) in [("pearson", got_p, want_p), ("spearman", got_s, want_s)] {
            match (got, want) {
                (Some(g), Some(w)) => {
                    worst_r = worst_r.max((g - w).abs());
                    require!((g - w).abs() <= 1e-12, "case {case}: {kind} {g} vs exact {w}");
                }
                (None, None) => {}
                _ => return Err(format!("case {case}: {kind} definedness differs: {got:?} vs {want:?}")),
            }
        }
        cases += 1;
    }

    let mut worst_p = 0.0f64;
    for n in [5usize, 30, 150] {
        let df = (n - 2) as f64;
        for k in -19..=19 {
            let r = k as f64 * 0.05;
            let t = r * (df / (1.0 - r * r)).sqrt();
            let got = correlation_p_value(r, n);
            let want = oracles::t_two_tailed_quadrature(t, df);
            worst_p = worst_p.max((got - want).abs());
            require!((got - want).abs() <= 1e-6, "n={n}, r={r}: p {got} vs quadrature {want}");
        }
    }
    Ok(format!(
        "{cases} vectors: max coefficient dev {worst_r:.1e}; p-values at n in {{5,30,150}}: max dev {worst_p:.1e}"
    ))
}

// ---------------------------------------------------------------- 8

fn blending_properties() -> Outcome {
    for i in 0..=100 {
        for j in 0..=100 {
            let (x, y) = (i as f64 / 100.0, j as f64 / 100.0);
            let v = |s| blend(x, y, s).unwrap();
            let (mn, g, a, mx) = (
                v(BlendStrategy::Min),
                v(BlendStrategy::GeometricMean),
                v(BlendStrategy::ArithmeticMean),
                v(BlendStrategy::Max),
            );
            require!(mn <= g && g <= a && a <= mx, "chain broken at ({x}, {y}): {mn} {g} {a} {mx}");
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut cases = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=40);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1000i32..=1000) as f64).collect();
        let a = 2f64.powi(rng.random_range(-10..=10));
        let b = rng.random_range(-1000i32..=1000) as f64;
        let base = normalize(&ScoreSeries::new("x", x.clone())).map_err(|e| e.to_string())?;
        let moved = normalize(&ScoreSeries::new("y", x.iter().map(|v| a * v + b).collect()))
            .map_err(|e| e.to_string())?;
        require!(
            base.series.values == moved.series.values,
            "normalize(x) != normalize({a}x + {b}) for x = {x:?}"
        );
        cases += 1;
    }
    Ok(format!("101x101 grid chain holds; affine invariance exact on {cases} series"))
}

// ---------------------------------------------------------------- 9

const BIN: &str = env!("CARGO_BIN_EXE_ruber");

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(BIN).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("`ruber {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(())
}

fn write_fixture(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (dataset, topics) = separable_corpus(&mut rng, 120);
    let pairs: String = dataset.pairs.iter().map(|p| format!("{}\t{}\n", p.query, p.reply)).collect();
    fs::write(dir.join("pairs.tsv"), pairs).unwrap();
    let mut ann = String::new();
    for i in 0..30 {
        let t = i % TOPICS;
        let other = (t + 1 + i % 3) % TOPICS;
        let pick = |t: usize, n: usize, rng: &mut ChaCha8Rng| {
            (0..n).map(|_| topics[t][rng.random_range(0..WORDS_PER_TOPIC)].clone()).collect::<Vec<_>>().join(" ")
        };
        let on_topic = i % 2 == 0;
        let cand = pick(if on_topic { t } else { other }, 1 + i % 4, &mut rng);
        let scores: Vec<String> = (0..3)
            .map(|_| (if on_topic { rng.random_range(1..=2) } else { rng.random_range(0..=1) }).to_string())
            .collect();
        ann.push_str(&format!("{}\t{}\t{}\t{}\n", pick(t, 4, &mut rng), pick(t, 3, &mut rng), cand, scores.join("\t")));
    }
    fs::write(dir.join("ann.tsv"), ann).unwrap();
}

fn pipeline(dir: &Path, tag: &str) -> Result<(), String> {
    let p = |name: &str| dir.join(format!("{tag}_{name}")).to_str().unwrap().to_owned();
    let corpus = dir.join("pairs.tsv").to_str().unwrap().to_owned();
    let ann = dir.join("ann.tsv").to_str().unwrap().to_owned();
    run_cli(&["train-embeddings", "--corpus", &corpus, "--out", &p("emb.txt"), "--dim", "8", "--seed", "4"])?;
    run_cli(&[
        "train-scorer", "--corpus", &corpus, "--embeddings", &p("emb.txt"), "--out", &p("scorer.ckpt"),
        "--hidden", "6", "--mlp-hidden", "8", "--epochs", "2", "--batch-size", "16", "--seed", "4",
    ])?;
    run_cli(&[
        "score", "--corpus", &ann, "--embeddings", &p("emb.txt"), "--checkpoint", &p("scorer.ckpt"),
        "--out", &p("scores.tsv"),
    ])?;
    run_cli(&["report", "--scores", &p("scores.tsv"), "--corpus", &ann, "--out", &p("report"), "--seed", "4"])
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_fixture(dir.path());
    pipeline(dir.path(), "a")?;
    pipeline(dir.path(), "b")?;
    let mut compared = 0;
    for name in ["emb.txt", "scorer.ckpt", "scores.tsv"] {
        let a = fs::read(dir.path().join(format!("a_{name}"))).unwrap();
        let b = fs::read(dir.path().join(format!("b_{name}"))).unwrap();
        require!(a == b, "{name} differs between runs");
        compared += 1;
    }
    let mut reports: Vec<_> = fs::read_dir(dir.path().join("a_report")).unwrap().map(|e| e.unwrap().file_name()).collect();
    reports.sort();
    for name in &reports {
        let a = fs::read(dir.path().join("a_report").join(name)).unwrap();
        let b = fs::read(dir.path().join("b_report").join(name)).unwrap();
        require!(a == b, "report file {name:?} differs between runs");
        compared += 1;
    }

    let text = fs::read_to_string(dir.path().join("a_scores.tsv")).unwrap();
    let table = ScoreTable::parse(&text, Path::new("a_scores.tsv")).map_err(|e| e.to_string())?;
    for col in ["s_R_norm", "s_U_norm"] {
        let v = table.column(col).unwrap();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        require!(lo == 0.0 && hi == 1.0, "{col} spans [{lo}, {hi}]");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let n = rng.random_range(2..=50);
        let scale = 10f64.powf(rng.random_range(-6.0..6.0));
        let values: Vec<f64> = (0..n).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let norm = normalize(&ScoreSeries::new("v", values.clone())).map_err(|e| e.to_string())?;
        for (v, z) in values.iter().zip(&norm.series.values) {
            if *v == norm.min {
                require!(*z == 0.0, "minimum {v} maps to {z}");
            }
            if *v == norm.max {
                require!(*z == 1.0, "maximum {v} maps to {z}");
            }
        }
    }
    Ok(format!("{compared} artifacts byte-identical across reruns; endpoints exact on 1000 series"))
}

// ---------------------------------------------------------------- 10

fn bigrams(u: &Utterance) -> HashSet<(&str, &str)> {
    u.tokens.windows(2).map(|w| (w[0].as_str(), w[1].as_str())).collect()
}

fn pathology() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let tokens = token_list(6);
    let mut cases = 0;
    while cases < 2000 {
        let c = random_utterance(&mut rng, &tokens, 2, 8);
        let r = random_utterance(&mut rng, &tokens, 1, 8);
        if !bigrams(&c).is_disjoint(&bigrams(&r)) {
            continue;
        }
        let b = bleu(&c, &r, 2).unwrap();
        require!(b == 0.0 && format!("{b:.4}") == "0.0000", "BLEU-2({c}, {r}) = {b}");
        cases += 1;
    }

    let emb = random_embeddings(&mut rng, &tokens, 4, 1.0);
    let params = perturbed_params(&mut rng, 4, 3, 5, 0.5);
    let pairs: Vec<AnnotatedPair> = (0..12)
        .map(|i| AnnotatedPair {
            query: random_utterance(&mut rng, &tokens, 2, 5),
            groundtruth: random_utterance(&mut rng, &tokens, 4, 6),
            candidate: random_utterance(&mut rng, &tokens, 1, 3),
            human_scores: vec![(i % 3) as u8, ((i + 1) % 3) as u8],
        })
        .collect();
    let dataset = Dataset::from_pairs(pairs);
    let table = score_dataset(&dataset, &emb, &emb, &params, 50).map_err(|e| e.to_string())?;
    let tsv = table.to_tsv();
    let nan_cells = tsv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .filter(|l| l.split('\t').nth(12) == Some("nan"))
        .count();
    require!(nan_cells == 12, "{nan_cells} of 12 BLEU-4 cells are nan");
    let reread = ScoreTable::parse(&tsv, Path::new("table.tsv")).map_err(|e| e.to_string())?;
    let report = build_report(&reread, Some(&dataset)).map_err(|e| e.to_string())?;
    let text = report.to_text();
    let line = text.lines().find(|l| l.starts_with("BLEU-4")).ok_or("no BLEU-4 row")?;
    require!(line.contains("undefined"), "BLEU-4 row reads `{line}`");
    let json = report.to_json_value();
    let cell = &json["metrics"]["BLEU-4"];
    require!(
        cell["pearson_r"].is_null() && cell["spearman_rho"].is_null() && cell["n_used"] == 0,
        "BLEU-4 JSON cell {cell}"
    );
    Ok(format!("{cases} no-shared-bigram pairs give BLEU-2 0.0000; short candidates give nan -> undefined"))
}
