use rand::Rng;

use super::gru::{glorot_limit, GruParams};
use crate::error::{ensure, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct BiGruEncoder {
    pub forward: GruParams,
    pub backward: GruParams,
}

impl BiGruEncoder {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        BiGruEncoder {
            forward: GruParams::zeros(input_dim, hidden),
            backward: GruParams::zeros(input_dim, hidden),
        }
    }

    pub fn glorot<R: Rng + ?Sized>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        BiGruEncoder {
            forward: GruParams::glorot(input_dim, hidden, rng),
            backward: GruParams::glorot(input_dim, hidden, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden()
    }

    pub fn input_dim(&self) -> usize {
        self.forward.input_dim()
    }
}

/// Every trainable tensor of the query/reply relatedness scorer.
///
/// Vectors are stored as single-column matrices and the output layer as a
/// `1 × m` row, so every parameter can be visited uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerParams {
    pub query_encoder: BiGruEncoder,
    pub reply_encoder: BiGruEncoder,
    /// `2H × 2H` bilinear matching matrix.
    pub matching: Matrix,
    /// `m × (4H + 1)`
    pub mlp_hidden_weight: Matrix,
    pub mlp_hidden_bias: Matrix,
    /// `1 × m`
    pub mlp_out_weight: Matrix,
    pub mlp_out_bias: Matrix,
}

/// Number of tensors visited by [`ScorerParams::tensors`].
pub const TENSOR_COUNT: usize = 4 * 6 + 5;

impl ScorerParams {
    pub fn zeros(input_dim: usize, hidden: usize, mlp_hidden: usize) -> Self {
        let features = 4 * hidden + 1;
        ScorerParams {
            query_encoder: BiGruEncoder::zeros(input_dim, hidden),
            reply_encoder: BiGruEncoder::zeros(input_dim, hidden),
            matching: Matrix::zeros(2 * hidden, 2 * hidden),
            mlp_hidden_weight: Matrix::zeros(mlp_hidden, features),
            mlp_hidden_bias: Matrix::zeros(mlp_hidden, 1),
            mlp_out_weight: Matrix::zeros(1, mlp_hidden),
            mlp_out_bias: Matrix::zeros(1, 1),
        }
    }

    /// Glorot-uniform weight matrices; biases and the matching matrix start at zero.
    pub fn init<R: Rng + ?Sized>(input_dim: usize, hidden: usize, mlp_hidden: usize, rng: &mut R) -> Self {
        let mut p = ScorerParams::zeros(input_dim, hidden, mlp_hidden);
        p.query_encoder = BiGruEncoder::glorot(input_dim, hidden, rng);
        p.reply_encoder = BiGruEncoder::glorot(input_dim, hidden, rng);
        for m in [&mut p.mlp_hidden_weight, &mut p.mlp_out_weight] {
            let (rows, cols) = m.shape();
            *m = Matrix::uniform(rows, cols, glorot_limit(cols, rows), rng);
        }
        p
    }

    pub fn hidden(&self) -> usize {
        self.query_encoder.hidden()
    }

    pub fn input_dim(&self) -> usize {
        self.query_encoder.input_dim()
    }

    pub fn mlp_hidden(&self) -> usize {
        self.mlp_hidden_weight.rows()
    }

    /// Tensors in checkpoint order.
    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut out = Vec::with_capacity(TENSOR_COUNT);
        for enc in [&self.query_encoder, &self.reply_encoder] {
            out.extend(enc.forward.tensors());
            out.extend(enc.backward.tensors());
        }
        out.extend([
            &self.matching,
            &self.mlp_hidden_weight,
            &self.mlp_hidden_bias,
            &self.mlp_out_weight,
            &self.mlp_out_bias,
        ]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::with_capacity(TENSOR_COUNT);
        for enc in [&mut self.query_encoder, &mut self.reply_encoder] {
            out.extend(enc.forward.tensors_mut());
            out.extend(enc.backward.tensors_mut());
        }
        out.extend([
            &mut self.matching,
            &mut self.mlp_hidden_weight,
            &mut self.mlp_hidden_bias,
            &mut self.mlp_out_weight,
            &mut self.mlp_out_bias,
        ]);
        out
    }

    pub fn expected_shapes(input_dim: usize, hidden: usize, mlp_hidden: usize) -> Vec<(usize, usize)> {
        ScorerParams::zeros(input_dim, hidden, mlp_hidden)
            .tensors()
            .iter()
            .map(|t| t.shape())
            .collect()
    }

    pub fn check_shapes(&self) -> Result<()> {
        let expected = Self::expected_shapes(self.input_dim(), self.hidden(), self.mlp_hidden());
        for (i, (t, want)) in self.tensors().iter().zip(expected).enumerate() {
            ensure!(
                t.shape() == want,
                "scorer tensor {i} has shape {:?}, expected {want:?}",
                t.shape()
            );
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    /// Same shapes, all entries zero.
    pub fn zeros_like(&self) -> Self {
        ScorerParams::zeros(self.input_dim(), self.hidden(), self.mlp_hidden())
    }

    /// Rounds every entry to the nearest `f32`, the precision checkpoints store.
    pub fn round_to_f32(&mut self) {
        for t in self.tensors_mut() {
            for v in t.as_mut_slice() {
                *v = *v as f32 as f64;
            }
        }
    }
}
