//! Per-pair score table written by `score` and read by `report`.
//!
//! Tab-separated, `#` header comments carrying provenance and the
//! normalization bounds, then one header row and one row per pair.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::{aggregate_human, fmt6, MetricNormalization};
use crate::baselines::{bleu, rouge_l};
use crate::blending::{blend, normalize, BlendStrategy, ScoreSeries};
use crate::corpus::{AnnotatedPair, Dataset};
use crate::embeddings::Embeddings;
use crate::error::{Result, RuberError};
use crate::referenced::referenced_score;
use crate::unreferenced::{unreferenced_score, ScorerParams};

pub const HUMAN_COLUMN: &str = "human";

/// Score columns in file order, each with its report label.
pub const SCORE_COLUMNS: [(&str, &str); 13] = [
    ("s_R", "s_R (vector pool)"),
    ("s_U", "s_U (NN scorer)"),
    ("s_R_norm", "s_R normalized"),
    ("s_U_norm", "s_U normalized"),
    ("ruber_min", "RUBER (min)"),
    ("ruber_max", "RUBER (max)"),
    ("ruber_geometric", "RUBER (geometric mean)"),
    ("ruber_arithmetic", "RUBER (arithmetic mean)"),
    ("bleu1", "BLEU-1"),
    ("bleu2", "BLEU-2"),
    ("bleu3", "BLEU-3"),
    ("bleu4", "BLEU-4"),
    ("rouge_l", "ROUGE"),
];

pub fn column_index(name: &str) -> Option<usize> {
    SCORE_COLUMNS.iter().position(|(c, _)| *c == name)
}

pub fn blend_column(strategy: BlendStrategy) -> &'static str {
    match strategy {
        BlendStrategy::Min => "ruber_min",
        BlendStrategy::Max => "ruber_max",
        BlendStrategy::GeometricMean => "ruber_geometric",
        BlendStrategy::ArithmeticMean => "ruber_arithmetic",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub human: f64,
    pub scores: [f64; 13],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub dataset: String,
    pub annotators: usize,
    pub normalization: Vec<MetricNormalization>,
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = column_index(name)?;
        Some(self.rows.iter().map(|r| r.scores[i]).collect())
    }

    pub fn human(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.human).collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# ruber score table");
        let _ = writeln!(out, "# dataset: {}", self.dataset);
        let _ = writeln!(out, "# pairs: {}", self.rows.len());
        let _ = writeln!(out, "# annotators: {}", self.annotators);
        for n in &self.normalization {
            let _ = writeln!(out, "# normalization {} min={:?} max={:?}", n.name, n.min, n.max);
        }
        out.push_str(HUMAN_COLUMN);
        for (c, _) in SCORE_COLUMNS {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&fmt6(row.human));
            for v in row.scores {
                out.push('\t');
                out.push_str(&fmt6(v));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<ScoreTable> {
        let mut dataset = String::new();
        let mut annotators = 0;
        let mut normalization = Vec::new();
        let mut rows = Vec::new();
        let mut saw_header = false;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |m: String| RuberError::parse(path, line_no, m);
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(d) = comment.strip_prefix("dataset: ") {
                    dataset = d.to_owned();
                } else if let Some(k) = comment.strip_prefix("annotators: ") {
                    annotators = k.parse().map_err(|_| err(format!("bad annotator count `{k}`")))?;
                } else if let Some(rest) = comment.strip_prefix("normalization ") {
                    normalization.push(parse_normalization(rest).ok_or_else(|| {
                        err(format!("bad normalization comment `{rest}`"))
                    })?);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if !saw_header {
                let expected: Vec<&str> = std::iter::once(HUMAN_COLUMN)
                    .chain(SCORE_COLUMNS.iter().map(|(c, _)| *c))
                    .collect();
                if fields != expected {
                    return Err(err("unexpected column header".into()));
                }
                saw_header = true;
                continue;
            }
            if fields.len() != 1 + SCORE_COLUMNS.len() {
                return Err(err(format!(
                    "expected {} columns, found {}",
                    1 + SCORE_COLUMNS.len(),
                    fields.len()
                )));
            }
            let parse = |f: &str| -> Result<f64> {
                f.parse::<f64>().map_err(|_| err(format!("`{f}` is not a number")))
            };
            let human = parse(fields[0])?;
            let mut scores = [0.0; 13];
            for (slot, f) in scores.iter_mut().zip(&fields[1..]) {
                *slot = parse(f)?;
            }
            rows.push(ScoreRow { human, scores });
        }
        if !saw_header {
            return Err(RuberError::parse(path, 0, "missing column header"));
        }
        Ok(ScoreTable {
            dataset,
            annotators,
            normalization,
            rows,
        })
    }
}

fn parse_normalization(s: &str) -> Option<MetricNormalization> {
    let mut parts = s.split_whitespace();
    let name = parts.next()?.to_owned();
    let min = parts.next()?.strip_prefix("min=")?.parse().ok()?;
    let max = parts.next()?.strip_prefix("max=")?.parse().ok()?;
    Some(MetricNormalization { name, min, max })
}

/// Scores every pair with both metrics, the four blends, and the baselines.
/// Normalization bounds are taken over this dataset.
pub fn score_dataset(
    dataset: &Dataset<AnnotatedPair>,
    embeddings: &Embeddings,
    scorer_embeddings: &Embeddings,
    params: &ScorerParams,
    max_len: usize,
) -> Result<ScoreTable> {
    let mut s_r = Vec::with_capacity(dataset.len());
    let mut s_u = Vec::with_capacity(dataset.len());
    for pair in &dataset.pairs {
        s_r.push(referenced_score(&pair.groundtruth, &pair.candidate, embeddings));
        s_u.push(unreferenced_score(
            &pair.query,
            &pair.candidate,
            params,
            scorer_embeddings,
            max_len,
        )?);
    }
    let norm_r = normalize(&ScoreSeries::new("s_R", s_r.clone()))?;
    let norm_u = normalize(&ScoreSeries::new("s_U", s_u.clone()))?;

    let mut rows = Vec::with_capacity(dataset.len());
    for (i, pair) in dataset.pairs.iter().enumerate() {
        let (r, u) = (norm_r.series.values[i], norm_u.series.values[i]);
        let mut scores = [0.0; 13];
        scores[0] = s_r[i];
        scores[1] = s_u[i];
        scores[2] = r;
        scores[3] = u;
        for (k, strategy) in [
            BlendStrategy::Min,
            BlendStrategy::Max,
            BlendStrategy::GeometricMean,
            BlendStrategy::ArithmeticMean,
        ]
        .into_iter()
        .enumerate()
        {
            scores[4 + k] = blend(r, u, strategy)?;
        }
        for n in 1..=4 {
            scores[7 + n] = bleu(&pair.candidate, &pair.groundtruth, n)?;
        }
        scores[12] = rouge_l(&pair.candidate, &pair.groundtruth);
        rows.push(ScoreRow {
            human: aggregate_human(pair),
            scores,
        });
    }
    Ok(ScoreTable {
        dataset: dataset.provenance.path.display().to_string(),
        annotators: dataset.annotators(),
        normalization: vec![
            MetricNormalization {
                name: "s_R".into(),
                min: norm_r.min,
                max: norm_r.max,
            },
            MetricNormalization {
                name: "s_U".into(),
                min: norm_u.min,
                max: norm_u.max,
            },
        ],
        rows,
    })
}
