//! Agreement between automatic metrics and human judgments.
//!
//! Pearson and Spearman coefficients carry two-tailed p-values from the
//! exact Student t distribution. A correlation over a constant vector (or
//! fewer than three usable pairs) is *undefined*: it is returned as `None`
//! rather than an error so a report can still be assembled around it.

mod report;
pub mod stats;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

pub use report::{CorrelationReport, MetricNormalization, ReportRow};

use crate::corpus::{AnnotatedPair, Dataset};
use crate::error::{ensure, Result, RuberError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub coefficient: f64,
    pub p_value: f64,
}

/// Pearson and Spearman results over the rows both inputs define.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationResult {
    pub pearson: Option<Correlation>,
    pub spearman: Option<Correlation>,
    pub n_used: usize,
}

impl CorrelationResult {
    pub const UNDEFINED: CorrelationResult = CorrelationResult {
        pearson: None,
        spearman: None,
        n_used: 0,
    };
}

/// Mean annotator score, in `[0, 2]`.
pub fn aggregate_human(pair: &AnnotatedPair) -> f64 {
    let sum: u32 = pair.human_scores.iter().map(|&s| s as u32).sum();
    sum as f64 / pair.human_scores.len() as f64
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    ensure!(
        x.len() == y.len(),
        "correlation inputs differ in length ({} vs {})",
        x.len(),
        y.len()
    );
    Ok(())
}

/// Sample Pearson coefficient with its t-test p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<Correlation>> {
    check_lengths(x, y)?;
    let n = x.len();
    if n < 3 {
        return Ok(None);
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(Some(Correlation {
        coefficient: r,
        p_value: stats::correlation_p_value(r, n),
    }))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman's rho: Pearson over fractional ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<Correlation>> {
    check_lengths(x, y)?;
    pearson(&fractional_ranks(x), &fractional_ranks(y))
}

/// Both coefficients over the rows where neither input is NaN.
pub fn correlate(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    check_lengths(x, y)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| !a.is_nan() && !b.is_nan())
        .map(|(a, b)| (*a, *b))
        .unzip();
    Ok(CorrelationResult {
        pearson: pearson(&xs, &ys)?,
        spearman: spearman(&xs, &ys)?,
        n_used: xs.len(),
    })
}

/// Average, maximum, and median of the defined per-annotator coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementSummary {
    pub avg: Option<Correlation>,
    pub max: Option<Correlation>,
    pub median: Option<Correlation>,
    /// Annotators whose coefficient was undefined and left out of the summary.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterAnnotator {
    /// Annotator `i` against the mean of the others, in annotator order.
    pub per_annotator: Vec<CorrelationResult>,
    pub pearson: AgreementSummary,
    pub spearman: AgreementSummary,
    pub n_pairs: usize,
}

fn summarize(values: Vec<Correlation>, excluded: usize, n: usize) -> AgreementSummary {
    if values.is_empty() {
        return AgreementSummary {
            avg: None,
            max: None,
            median: None,
            excluded,
        };
    }
    let with_p = |r: f64| Correlation {
        coefficient: r,
        p_value: stats::correlation_p_value(r, n),
    };
    let avg = values.iter().map(|c| c.coefficient).sum::<f64>() / values.len() as f64;
    let max = values
        .iter()
        .copied()
        .max_by(|a, b| a.coefficient.total_cmp(&b.coefficient))
        .expect("non-empty");
    let mut sorted: Vec<f64> = values.iter().map(|c| c.coefficient).collect();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    };
    AgreementSummary {
        avg: Some(with_p(avg)),
        max: Some(max),
        median: Some(with_p(median)),
        excluded,
    }
}

/// One-vs-rest agreement: each annotator against the mean of the remaining ones.
pub fn inter_annotator(dataset: &Dataset<AnnotatedPair>) -> Result<InterAnnotator> {
    let k = dataset.annotators();
    ensure!(k >= 2, "inter-annotator agreement needs at least 2 annotators, got {k}");
    let n = dataset.len();
    let mut per_annotator = Vec::with_capacity(k);
    for i in 0..k {
        let own: Vec<f64> = dataset.pairs.iter().map(|p| p.human_scores[i] as f64).collect();
        let rest: Vec<f64> = dataset
            .pairs
            .iter()
            .map(|p| {
                let total: u32 = p.human_scores.iter().map(|&s| s as u32).sum();
                (total - p.human_scores[i] as u32) as f64 / (k - 1) as f64
            })
            .collect();
        per_annotator.push(correlate(&own, &rest)?);
    }
    let collect = |pick: fn(&CorrelationResult) -> Option<Correlation>| {
        let defined: Vec<Correlation> = per_annotator.iter().filter_map(pick).collect();
        let excluded = per_annotator.len() - defined.len();
        summarize(defined, excluded, n)
    };
    let pearson = collect(|c| c.pearson);
    let spearman = collect(|c| c.spearman);
    Ok(InterAnnotator {
        per_annotator,
        pearson,
        spearman,
        n_pairs: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileBin {
    pub size: usize,
    pub human_mean: f64,
    pub metric_mean: f64,
}

/// Sorts pairs by human score (stable) and splits them into `k` contiguous
/// groups whose sizes differ by at most one, larger groups first.
pub fn quantile_bins(human: &[f64], metric: &[f64], k: usize) -> Result<Vec<QuantileBin>> {
    check_lengths(human, metric)?;
    ensure!(k >= 1, "number of bins must be at least 1");
    let n = human.len();
    ensure!(n >= k, "need at least {k} pairs for {k} bins, got {n}");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| human[a].total_cmp(&human[b]));
    let base = n / k;
    let extra = n % k;
    let mut bins = Vec::with_capacity(k);
    let mut start = 0;
    for b in 0..k {
        let size = base + usize::from(b < extra);
        let idx = &order[start..start + size];
        let mean = |v: &[f64]| idx.iter().map(|&i| v[i]).sum::<f64>() / size as f64;
        bins.push(QuantileBin {
            size,
            human_mean: mean(human),
            metric_mean: mean(metric),
        });
        start += size;
    }
    Ok(bins)
}

/// Human scores with seeded `N(0, σ²)` jitter, paired with the raw metric.
pub fn scatter_points(human: &[f64], metric: &[f64], sigma: f64, seed: u64) -> Result<Vec<(f64, f64)>> {
    check_lengths(human, metric)?;
    let noise = Normal::new(0.0, sigma)
        .map_err(|e| RuberError::Contract(format!("invalid jitter sigma {sigma}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(human
        .iter()
        .zip(metric)
        .map(|(&h, &m)| {
            let jitter: f64 = noise.sample(&mut rng);
            (if sigma == 0.0 { h } else { h + jitter }, m)
        })
        .collect())
}

/// Writes `human,metric` CSV with six decimals; undefined metric cells are `nan`.
pub fn write_scatter_csv<W: Write>(points: &[(f64, f64)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "human,metric")?;
    for &(h, m) in points {
        writeln!(out, "{},{}", fmt6(h), fmt6(m))?;
    }
    Ok(())
}

pub(crate) fn fmt6(v: f64) -> String {
    if v.is_nan() {
        "nan".to_owned()
    } else {
        format!("{v:.6}")
    }
}
