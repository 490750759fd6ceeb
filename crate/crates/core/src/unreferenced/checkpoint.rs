//! Versioned binary checkpoints for trained scorers.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "RUBR"  u16 version
//! config: f64 margin, f64 lr, u32 epochs, u32 batch_size, u32 hidden,
//!         u32 mlp_hidden, u32 max_len, u64 seed, u8 fine_tune_embeddings,
//!         f64 beta1, f64 beta2, f64 epsilon
//! u64 vocabulary hash (FNV-1a over "token\n" in id order)
//! 29 tensors in ScorerParams order, each: u32 rows, u32 cols, rows*cols f32 (row-major)
//! u8 has_tuned_embeddings, then one more tensor when set
//! ```

use std::fs;
use std::path::Path;

use super::params::{ScorerParams, TENSOR_COUNT};
use super::train::TrainConfig;
use crate::embeddings::{EmbeddingMatrix, Vocabulary};
use crate::error::{Result, RuberError};
use crate::linalg::Matrix;

pub const MAGIC: &[u8; 4] = b"RUBR";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ScorerParams,
    pub config: TrainConfig,
    pub vocab_hash: u64,
    pub tuned_embeddings: Option<EmbeddingMatrix>,
}

impl Checkpoint {
    /// Fails unless `vocab` hashes to the stored value or `allow_mismatch` is set.
    pub fn check_vocab(&self, vocab: &Vocabulary, allow_mismatch: bool) -> Result<()> {
        let actual = vocab.content_hash();
        if actual != self.vocab_hash && !allow_mismatch {
            return Err(RuberError::Compatibility(format!(
                "checkpoint vocabulary hash {:016x} does not match embeddings ({actual:016x})",
                self.vocab_hash
            )));
        }
        if let Some(t) = &self.tuned_embeddings {
            if t.len() != vocab.len() {
                return Err(RuberError::Compatibility(format!(
                    "checkpoint carries {} tuned embedding rows, vocabulary has {}",
                    t.len(),
                    vocab.len()
                )));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.config;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&c.margin.to_le_bytes());
        out.extend_from_slice(&c.lr.to_le_bytes());
        for v in [c.epochs, c.batch_size, c.hidden, c.mlp_hidden, c.max_len] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&c.seed.to_le_bytes());
        out.push(u8::from(c.fine_tune_embeddings));
        for v in [c.beta1, c.beta2, c.epsilon] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.vocab_hash.to_le_bytes());
        for t in self.params.tensors() {
            write_tensor(&mut out, t);
        }
        match &self.tuned_embeddings {
            Some(e) => {
                out.push(1);
                write_tensor(&mut out, e.values());
            }
            None => out.push(0),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(RuberError::Format("bad magic (expected \"RUBR\")".into()));
        }
        let version = r.u16()?;
        if version != FORMAT_VERSION {
            return Err(RuberError::Format(format!(
                "unsupported version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let margin = r.f64()?;
        let lr = r.f64()?;
        let epochs = r.u32()? as usize;
        let batch_size = r.u32()? as usize;
        let hidden = r.u32()? as usize;
        let mlp_hidden = r.u32()? as usize;
        let max_len = r.u32()? as usize;
        let seed = r.u64()?;
        let fine_tune_embeddings = r.flag()?;
        let config = TrainConfig {
            margin,
            lr,
            epochs,
            batch_size,
            hidden,
            mlp_hidden,
            max_len,
            seed,
            fine_tune_embeddings,
            beta1: r.f64()?,
            beta2: r.f64()?,
            epsilon: r.f64()?,
        };
        let vocab_hash = r.u64()?;

        let mut tensors = Vec::with_capacity(TENSOR_COUNT);
        for _ in 0..TENSOR_COUNT {
            tensors.push(r.tensor()?);
        }
        let input_dim = tensors[0].cols();
        let expected = ScorerParams::expected_shapes(input_dim, hidden, mlp_hidden);
        for (i, (t, want)) in tensors.iter().zip(&expected).enumerate() {
            if t.shape() != *want {
                return Err(RuberError::Format(format!(
                    "tensor {i} has shape {:?}, expected {want:?}",
                    t.shape()
                )));
            }
        }
        let mut params = ScorerParams::zeros(input_dim, hidden, mlp_hidden);
        for (slot, t) in params.tensors_mut().into_iter().zip(tensors) {
            *slot = t;
        }

        let tuned_embeddings = if r.flag()? {
            let m = r.tensor()?;
            if m.cols() != input_dim {
                return Err(RuberError::Format(format!(
                    "tuned embeddings are {}-dim, scorer expects {input_dim}",
                    m.cols()
                )));
            }
            Some(EmbeddingMatrix::new(m).map_err(|e| RuberError::Format(e.to_string()))?)
        } else {
            None
        };
        if r.pos != bytes.len() {
            return Err(RuberError::Format(format!(
                "{} trailing bytes after the last tensor",
                bytes.len() - r.pos
            )));
        }
        Ok(Checkpoint {
            params,
            config,
            vocab_hash,
            tuned_embeddings,
        })
    }
}

fn write_tensor(out: &mut Vec<u8>, t: &Matrix) {
    out.extend_from_slice(&(t.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(t.cols() as u32).to_le_bytes());
    for &v in t.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            RuberError::Format(format!("truncated checkpoint at byte {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn flag(&mut self) -> Result<bool> {
        match self.take(1)?[0] {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(RuberError::Format(format!("invalid flag byte {b}"))),
        }
    }

    fn tensor(&mut self) -> Result<Matrix> {
        let rows = self.u32()? as usize;
        let cols = self.u32()? as usize;
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| RuberError::Format("tensor dimensions overflow".into()))?;
        let raw = self.take(len.checked_mul(4).ok_or_else(|| {
            RuberError::Format("tensor dimensions overflow".into())
        })?)?;
        let data: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")) as f64)
            .collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(RuberError::Format("tensor contains non-finite values".into()));
        }
        Ok(Matrix::from_vec(rows, cols, data))
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, checkpoint.to_bytes()).map_err(|e| RuberError::io(path, e))
}

/// Reads a checkpoint without checking it against any vocabulary.
pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| RuberError::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

/// Reads a checkpoint and verifies it was trained against `vocab`.
pub fn load_checkpoint(path: impl AsRef<Path>, vocab: &Vocabulary, allow_mismatch: bool) -> Result<Checkpoint> {
    let ckpt = read_checkpoint(path)?;
    ckpt.check_vocab(vocab, allow_mismatch)?;
    Ok(ckpt)
}
