//! Word vocabularies and the embedding table shared by both metrics.
//!
//! Embeddings are read and written in the plain-text interchange format
//! (`V d` header, then one `token x_1 .. x_d` line per word). Out-of-vocabulary
//! tokens map to the UNK row, which is always id 0.

mod sgns;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub use sgns::{train_sgns, SgnsConfig};

use crate::error::{ensure, Result, RuberError};
use crate::linalg::Matrix;

pub const UNK_TOKEN: &str = "<unk>";
pub const UNK_ID: usize = 0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// UNK at id 0 followed by `tokens` in order. A literal `<unk>` in the
    /// input is folded into id 0.
    pub fn with_unk<S: AsRef<str>>(tokens: impl IntoIterator<Item = S>) -> Self {
        let mut vocab = Vocabulary {
            tokens: vec![UNK_TOKEN.to_owned()],
            index: HashMap::from([(UNK_TOKEN.to_owned(), UNK_ID)]),
        };
        for t in tokens {
            let t = t.as_ref();
            if !vocab.index.contains_key(t) {
                vocab.index.insert(t.to_owned(), vocab.tokens.len());
                vocab.tokens.push(t.to_owned());
            }
        }
        vocab
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Id of `token`, or UNK.
    pub fn id_or_unk(&self, token: &str) -> usize {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// 64-bit FNV-1a over the concatenation of `token\n` in id order.
    pub fn content_hash(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        for t in &self.tokens {
            for &b in t.as_bytes().iter().chain(b"\n") {
                h ^= b as u64;
                h = h.wrapping_mul(PRIME);
            }
        }
        h
    }
}

/// `V × d` table of finite word vectors; row `i` belongs to token id `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    values: Matrix,
}

impl EmbeddingMatrix {
    pub fn new(values: Matrix) -> Result<Self> {
        ensure!(values.cols() >= 1, "embedding dimension must be at least 1");
        ensure!(values.is_finite(), "embedding matrix has non-finite entries");
        Ok(EmbeddingMatrix { values })
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn row(&self, id: usize) -> &[f64] {
        self.values.row(id)
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut Matrix {
        &mut self.values
    }

    /// Uniformly rescales every vector by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut values = self.values.clone();
        values.scale(c);
        EmbeddingMatrix { values }
    }
}

/// Vector of `token`, falling back to the UNK row.
pub fn lookup<'a>(vocab: &Vocabulary, matrix: &'a EmbeddingMatrix, token: &str) -> &'a [f64] {
    matrix.row(vocab.id_or_unk(token))
}

/// A vocabulary together with its vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    pub vocab: Vocabulary,
    pub matrix: EmbeddingMatrix,
}

impl Embeddings {
    pub fn new(vocab: Vocabulary, matrix: EmbeddingMatrix) -> Result<Self> {
        ensure!(
            vocab.len() == matrix.len(),
            "vocabulary has {} tokens but matrix has {} rows",
            vocab.len(),
            matrix.len()
        );
        Ok(Embeddings { vocab, matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn lookup(&self, token: &str) -> &[f64] {
        lookup(&self.vocab, &self.matrix, token)
    }
}

/// Reads the plain-text embedding format. If no `<unk>` entry exists, one
/// is synthesized as the element-wise mean of all loaded rows and placed at id 0.
pub fn load_text_embeddings(path: impl AsRef<Path>) -> Result<Embeddings> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| RuberError::io(path, e))?;
    let mut lines = text
        .split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| RuberError::parse(path, 1, "missing `V d` header"))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    let (count, dim) = match head.as_slice() {
        [v, d] => match (v.parse::<usize>(), d.parse::<usize>()) {
            (Ok(v), Ok(d)) if d >= 1 => (v, d),
            _ => return Err(RuberError::parse(path, line_no, "header must be `V d` with d >= 1")),
        },
        _ => return Err(RuberError::parse(path, line_no, "header must be `V d`")),
    };

    let mut tokens: Vec<String> = Vec::with_capacity(count);
    let mut seen: HashMap<String, usize> = HashMap::with_capacity(count);
    let mut data: Vec<f64> = Vec::with_capacity(count * dim);
    for (line_no, line) in lines {
        if tokens.len() == count {
            return Err(RuberError::parse(
                path,
                line_no,
                format!("more rows than the {count} declared in the header"),
            ));
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().unwrap_or_default();
        let start = data.len();
        for field in fields {
            let v: f64 = field
                .parse()
                .map_err(|_| RuberError::parse(path, line_no, format!("`{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(RuberError::parse(path, line_no, "non-finite value"));
            }
            data.push(v);
        }
        let arity = data.len() - start;
        if arity != dim {
            return Err(RuberError::parse(
                path,
                line_no,
                format!("row has {arity} values, header declares {dim}"),
            ));
        }
        if seen.insert(token.to_owned(), tokens.len()).is_some() {
            return Err(RuberError::parse(path, line_no, format!("duplicate token `{token}`")));
        }
        tokens.push(token.to_owned());
    }
    if tokens.len() != count {
        return Err(RuberError::parse(
            path,
            0,
            format!("header declares {count} rows, found {}", tokens.len()),
        ));
    }
    if count == 0 {
        return Err(RuberError::parse(path, line_no, "embedding file has no rows"));
    }

    let loaded = Matrix::from_vec(count, dim, data);
    let (unk_row, rest): (Vec<f64>, Vec<usize>) = match seen.get(UNK_TOKEN) {
        Some(&i) => (loaded.row(i).to_vec(), (0..count).filter(|&j| j != i).collect()),
        None => {
            let mut mean = vec![0.0; dim];
            for i in 0..count {
                crate::linalg::axpy(1.0, loaded.row(i), &mut mean);
            }
            mean.iter_mut().for_each(|m| *m /= count as f64);
            (mean, (0..count).collect())
        }
    };

    let vocab = Vocabulary::with_unk(rest.iter().map(|&i| tokens[i].as_str()));
    let mut out = Matrix::zeros(vocab.len(), dim);
    out.row_mut(UNK_ID).copy_from_slice(&unk_row);
    for (k, &i) in rest.iter().enumerate() {
        out.row_mut(k + 1).copy_from_slice(loaded.row(i));
    }
    Embeddings::new(vocab, EmbeddingMatrix::new(out)?)
}

/// Writes the table with six decimal places; UNK is saved as a literal `<unk>` row.
pub fn save_text_embeddings(embeddings: &Embeddings, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let Embeddings { vocab, matrix } = embeddings;
    ensure!(!vocab.is_empty(), "cannot save an empty vocabulary");
    ensure!(vocab.len() == matrix.len(), "vocabulary/matrix size mismatch");
    let mut out = String::with_capacity(vocab.len() * (matrix.dim() * 10 + 8));
    let _ = writeln!(out, "{} {}", vocab.len(), matrix.dim());
    for (id, token) in vocab.tokens().iter().enumerate() {
        out.push_str(token);
        for v in matrix.row(id) {
            let _ = write!(out, " {v:.6}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| RuberError::io(path, e))
}
