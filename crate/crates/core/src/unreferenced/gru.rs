//! Gated recurrent unit: forward step, cached trace, and its backward pass.

use rand::Rng;

use crate::error::{ensure, Result};
use crate::linalg::{sigmoid, Matrix};

/// One direction of a GRU. Reset and update gates are stacked: rows `0..H`
/// of `w_rz`/`u_rz`/`b_rz` drive the reset gate, rows `H..2H` the update gate.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub w_rz: Matrix,
    pub u_rz: Matrix,
    pub b_rz: Matrix,
    pub w_h: Matrix,
    pub u_h: Matrix,
    pub b_h: Matrix,
}

pub(crate) fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl GruParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        GruParams {
            w_rz: Matrix::zeros(2 * hidden, input_dim),
            u_rz: Matrix::zeros(2 * hidden, hidden),
            b_rz: Matrix::zeros(2 * hidden, 1),
            w_h: Matrix::zeros(hidden, input_dim),
            u_h: Matrix::zeros(hidden, hidden),
            b_h: Matrix::zeros(hidden, 1),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let mut p = GruParams::zeros(input_dim, hidden);
        for m in [&mut p.w_rz, &mut p.u_rz, &mut p.w_h, &mut p.u_h] {
            let (rows, cols) = m.shape();
            *m = Matrix::uniform(rows, cols, glorot_limit(cols, rows), rng);
        }
        p
    }

    pub fn hidden(&self) -> usize {
        self.w_h.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_h.cols()
    }

    pub fn tensors(&self) -> [&Matrix; 6] {
        [&self.w_rz, &self.u_rz, &self.b_rz, &self.w_h, &self.u_h, &self.b_h]
    }

    pub fn tensors_mut(&mut self) -> [&mut Matrix; 6] {
        [
            &mut self.w_rz,
            &mut self.u_rz,
            &mut self.b_rz,
            &mut self.w_h,
            &mut self.u_h,
            &mut self.b_h,
        ]
    }

    pub(crate) fn expected_shapes(input_dim: usize, hidden: usize) -> [(usize, usize); 6] {
        [
            (2 * hidden, input_dim),
            (2 * hidden, hidden),
            (2 * hidden, 1),
            (hidden, input_dim),
            (hidden, hidden),
            (hidden, 1),
        ]
    }

    pub fn check_shapes(&self) -> Result<()> {
        let expected = Self::expected_shapes(self.input_dim(), self.hidden());
        for (i, (t, want)) in self.tensors().iter().zip(expected).enumerate() {
            ensure!(
                t.shape() == want,
                "GRU tensor {i} has shape {:?}, expected {want:?}",
                t.shape()
            );
        }
        Ok(())
    }
}

/// Intermediate values of one step, kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    pub h_prev: Vec<f64>,
    pub reset: Vec<f64>,
    pub update: Vec<f64>,
    pub candidate: Vec<f64>,
}

pub(crate) fn step_with_cache(params: &GruParams, x: &[f64], h_prev: &[f64]) -> (Vec<f64>, StepCache) {
    let hdim = params.hidden();
    let mut gates = params.w_rz.matvec(x);
    let rec = params.u_rz.matvec(h_prev);
    for ((g, r), b) in gates.iter_mut().zip(&rec).zip(params.b_rz.as_slice()) {
        *g = sigmoid(*g + r + b);
    }
    let update = gates.split_off(hdim);
    let reset = gates;

    let gated: Vec<f64> = reset.iter().zip(h_prev).map(|(r, h)| r * h).collect();
    let mut candidate = params.w_h.matvec(x);
    let rec = params.u_h.matvec(&gated);
    for ((c, r), b) in candidate.iter_mut().zip(&rec).zip(params.b_h.as_slice()) {
        *c = (*c + r + b).tanh();
    }

    let h: Vec<f64> = (0..hdim)
        .map(|i| (1.0 - update[i]) * h_prev[i] + update[i] * candidate[i])
        .collect();
    (
        h,
        StepCache {
            h_prev: h_prev.to_vec(),
            reset,
            update,
            candidate,
        },
    )
}

/// One GRU transition `h_{t-1} → h_t` for input `x`.
pub fn gru_step(x: &[f64], h_prev: &[f64], params: &GruParams) -> Result<Vec<f64>> {
    params.check_shapes()?;
    ensure!(
        x.len() == params.input_dim(),
        "input has length {}, GRU expects {}",
        x.len(),
        params.input_dim()
    );
    ensure!(
        h_prev.len() == params.hidden(),
        "state has length {}, GRU expects {}",
        h_prev.len(),
        params.hidden()
    );
    Ok(step_with_cache(params, x, h_prev).0)
}

/// Accumulates parameter gradients of one step into `grads` given `dh`
/// (gradient w.r.t. this step's output). Adds the input gradient into `dx`
/// when requested and returns the gradient w.r.t. `h_prev`.
pub(crate) fn step_backward(
    params: &GruParams,
    grads: &mut GruParams,
    x: &[f64],
    cache: &StepCache,
    dh: &[f64],
    dx: Option<&mut [f64]>,
) -> Vec<f64> {
    let hdim = params.hidden();
    let StepCache {
        h_prev,
        reset,
        update,
        candidate,
    } = cache;

    let mut dh_prev: Vec<f64> = (0..hdim).map(|i| dh[i] * (1.0 - update[i])).collect();
    // tanh pre-activation of the candidate state
    let dcand: Vec<f64> = (0..hdim)
        .map(|i| dh[i] * update[i] * (1.0 - candidate[i] * candidate[i]))
        .collect();
    let gated: Vec<f64> = reset.iter().zip(h_prev).map(|(r, h)| r * h).collect();
    grads.w_h.add_outer(1.0, &dcand, x);
    grads.u_h.add_outer(1.0, &dcand, &gated);
    crate::linalg::axpy(1.0, &dcand, grads.b_h.as_mut_slice());
    let mut dgated = vec![0.0; hdim];
    params.u_h.add_matvec_t(&dcand, &mut dgated);

    // sigmoid pre-activations of [reset; update]
    let mut dgates = vec![0.0; 2 * hdim];
    for i in 0..hdim {
        dh_prev[i] += dgated[i] * reset[i];
        let dr = dgated[i] * h_prev[i];
        dgates[i] = dr * reset[i] * (1.0 - reset[i]);
        let dz = dh[i] * (candidate[i] - h_prev[i]);
        dgates[hdim + i] = dz * update[i] * (1.0 - update[i]);
    }
    grads.w_rz.add_outer(1.0, &dgates, x);
    grads.u_rz.add_outer(1.0, &dgates, h_prev);
    crate::linalg::axpy(1.0, &dgates, grads.b_rz.as_mut_slice());
    params.u_rz.add_matvec_t(&dgates, &mut dh_prev);

    if let Some(dx) = dx {
        params.w_h.add_matvec_t(&dcand, dx);
        params.w_rz.add_matvec_t(&dgates, dx);
    }
    dh_prev
}
