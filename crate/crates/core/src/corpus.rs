//! Ingestion of pre-tokenized dialog corpora and human annotation files.
//!
//! Input text is expected to be segmented already: a token is any maximal
//! run of non-whitespace characters. Two record shapes are supported, plain
//! query/reply pairs used for training, and annotated triples
//! (query, groundtruth, candidate, per-annotator scores) used for evaluation.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::embeddings::Vocabulary;
use crate::error::{ensure, Result, RuberError};

/// Highest score an annotator may give; scores range over `0..=MAX_HUMAN_SCORE`.
pub const MAX_HUMAN_SCORE: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Utterance {
    pub tokens: Vec<String>,
}

impl Utterance {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        Utterance {
            tokens: tokens.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl fmt::Display for Utterance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

impl From<&str> for Utterance {
    fn from(line: &str) -> Self {
        tokenize(line)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryReplyPair {
    pub query: Utterance,
    pub reply: Utterance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedPair {
    pub query: Utterance,
    pub groundtruth: Utterance,
    pub candidate: Utterance,
    /// One score per annotator, each in `0..=2`.
    pub human_scores: Vec<u8>,
}

/// Records that contribute tokens to a vocabulary.
pub trait Record {
    fn utterances(&self) -> Vec<&Utterance>;
}

impl Record for QueryReplyPair {
    fn utterances(&self) -> Vec<&Utterance> {
        vec![&self.query, &self.reply]
    }
}

impl Record for AnnotatedPair {
    fn utterances(&self) -> Vec<&Utterance> {
        vec![&self.query, &self.groundtruth, &self.candidate]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Tsv,
    Jsonl,
}

impl Format {
    /// Guesses the format from a file extension, defaulting to TSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => Format::Jsonl,
            _ => Format::Tsv,
        }
    }
}

impl serde::Serialize for Format {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for Format {
    type Err = RuberError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(Format::Tsv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(RuberError::Config(format!(
                "unknown corpus format `{other}` (expected tsv or jsonl)"
            ))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Tsv => "tsv",
            Format::Jsonl => "jsonl",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub path: PathBuf,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub pairs: Vec<T>,
    pub provenance: Provenance,
    /// Rows dropped because one of their utterances was empty.
    pub skipped: usize,
}

impl<T> Dataset<T> {
    /// Wraps in-memory records, e.g. synthetic corpora built by tests.
    pub fn from_pairs(pairs: Vec<T>) -> Self {
        Dataset {
            pairs,
            provenance: Provenance {
                path: PathBuf::from("<memory>"),
                format: Format::Tsv,
            },
            skipped: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl Dataset<AnnotatedPair> {
    /// Annotator count shared by every record.
    pub fn annotators(&self) -> usize {
        self.pairs.first().map_or(0, |p| p.human_scores.len())
    }
}

/// Splits a line on whitespace. No other normalization is applied.
pub fn tokenize(line: &str) -> Utterance {
    Utterance {
        tokens: line.split_whitespace().map(str::to_owned).collect(),
    }
}

fn read_lines(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| RuberError::io(path, e))
}

/// Non-empty lines with their 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.is_empty())
}

#[derive(Deserialize)]
struct JsonPair {
    query: String,
    reply: String,
}

#[derive(Deserialize)]
struct JsonAnnotated {
    query: String,
    groundtruth: String,
    candidate: String,
    scores: Vec<i64>,
}

/// Loads query/reply pairs in file order, skipping rows with an empty side.
pub fn load_pairs(path: impl AsRef<Path>, format: Format) -> Result<Dataset<QueryReplyPair>> {
    let path = path.as_ref();
    let text = read_lines(path)?;
    let mut pairs = Vec::new();
    let mut skipped = 0;
    for (line_no, line) in records(&text) {
        let (query, reply) = match format {
            Format::Tsv => {
                let mut fields = line.split('\t');
                match (fields.next(), fields.next()) {
                    (Some(q), Some(r)) => (tokenize(q), tokenize(r)),
                    _ => {
                        return Err(RuberError::parse(
                            path,
                            line_no,
                            "expected at least 2 tab-separated fields (query, reply)",
                        ))
                    }
                }
            }
            Format::Jsonl => {
                let rec: JsonPair = serde_json::from_str(line)
                    .map_err(|e| RuberError::parse(path, line_no, e.to_string()))?;
                (tokenize(&rec.query), tokenize(&rec.reply))
            }
        };
        if query.is_empty() || reply.is_empty() {
            skipped += 1;
            continue;
        }
        pairs.push(QueryReplyPair { query, reply });
    }
    if pairs.is_empty() {
        return Err(RuberError::parse(path, 0, "no usable query/reply pairs"));
    }
    Ok(Dataset {
        pairs,
        provenance: Provenance {
            path: path.to_owned(),
            format,
        },
        skipped,
    })
}

/// Loads annotated triples, validating the score range and a constant annotator count.
pub fn load_annotated(path: impl AsRef<Path>, format: Format) -> Result<Dataset<AnnotatedPair>> {
    let path = path.as_ref();
    let text = read_lines(path)?;
    let mut pairs = Vec::new();
    let mut skipped = 0;
    let mut annotators: Option<usize> = None;

    for (line_no, line) in records(&text) {
        let (query, groundtruth, candidate, raw_scores) = match format {
            Format::Tsv => {
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() < 4 {
                    return Err(RuberError::parse(
                        path,
                        line_no,
                        "expected query, groundtruth, candidate and at least one score column",
                    ));
                }
                let scores = fields[3..]
                    .iter()
                    .map(|f| {
                        f.trim().parse::<i64>().map_err(|_| {
                            RuberError::parse(path, line_no, format!("score `{f}` is not an integer"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                (
                    tokenize(fields[0]),
                    tokenize(fields[1]),
                    tokenize(fields[2]),
                    scores,
                )
            }
            Format::Jsonl => {
                let rec: JsonAnnotated = serde_json::from_str(line)
                    .map_err(|e| RuberError::parse(path, line_no, e.to_string()))?;
                (
                    tokenize(&rec.query),
                    tokenize(&rec.groundtruth),
                    tokenize(&rec.candidate),
                    rec.scores,
                )
            }
        };

        if raw_scores.is_empty() {
            return Err(RuberError::validation(path, line_no, "record has no scores"));
        }
        let mut human_scores = Vec::with_capacity(raw_scores.len());
        for s in raw_scores {
            if !(0..=MAX_HUMAN_SCORE as i64).contains(&s) {
                return Err(RuberError::validation(
                    path,
                    line_no,
                    format!("score {s} outside 0..={MAX_HUMAN_SCORE}"),
                ));
            }
            human_scores.push(s as u8);
        }
        match annotators {
            None => annotators = Some(human_scores.len()),
            Some(k) if k != human_scores.len() => {
                return Err(RuberError::validation(
                    path,
                    line_no,
                    format!(
                        "record has {} scores but earlier records have {k}",
                        human_scores.len()
                    ),
                ))
            }
            Some(_) => {}
        }

        if query.is_empty() || groundtruth.is_empty() || candidate.is_empty() {
            skipped += 1;
            continue;
        }
        pairs.push(AnnotatedPair {
            query,
            groundtruth,
            candidate,
            human_scores,
        });
    }
    if pairs.is_empty() {
        return Err(RuberError::parse(path, 0, "no usable annotated records"));
    }
    Ok(Dataset {
        pairs,
        provenance: Provenance {
            path: path.to_owned(),
            format,
        },
        skipped,
    })
}

/// Builds a frequency-ranked vocabulary. Id 0 is UNK; kept tokens get ids
/// `1..V` by descending count, ties broken lexicographically.
pub fn build_vocab<T: Record>(dataset: &Dataset<T>, min_count: usize) -> Result<Vocabulary> {
    ensure!(min_count >= 1, "min_count must be at least 1, got {min_count}");
    ensure!(!dataset.is_empty(), "cannot build a vocabulary from an empty dataset");
    let counts = token_counts(dataset);
    let mut kept: Vec<(&str, usize)> = counts
        .iter()
        .filter(|(_, &c)| c >= min_count)
        .map(|(t, &c)| (t.as_str(), c))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(Vocabulary::with_unk(kept.into_iter().map(|(t, _)| t)))
}

pub(crate) fn token_counts<T: Record>(dataset: &Dataset<T>) -> HashMap<String, usize> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for record in &dataset.pairs {
        for utt in record.utterances() {
            for tok in &utt.tokens {
                *counts.entry(tok.clone()).or_default() += 1;
            }
        }
    }
    counts
}
