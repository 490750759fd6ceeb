//! Independent reference implementations used to check the library.
//!
//! Nothing here calls into the code under test except to read parameter
//! values out of its containers.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::FRAC_PI_2;

use ruber::linalg::Matrix;
use ruber::unreferenced::{GruParams, ScorerParams};

pub type Mat = Vec<Vec<f64>>;

pub fn to_mat(m: &Matrix) -> Mat {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j)).collect()).collect()
}

pub fn to_vec(m: &Matrix) -> Vec<f64> {
    (0..m.rows()).flat_map(|i| (0..m.cols()).map(move |j| (i, j))).map(|(i, j)| m.get(i, j)).collect()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub struct Gru {
    w_rz: Mat,
    u_rz: Mat,
    b_rz: Vec<f64>,
    w_h: Mat,
    u_h: Mat,
    b_h: Vec<f64>,
}

impl Gru {
    pub fn of(p: &GruParams) -> Self {
        Gru {
            w_rz: to_mat(&p.w_rz),
            u_rz: to_mat(&p.u_rz),
            b_rz: to_vec(&p.b_rz),
            w_h: to_mat(&p.w_h),
            u_h: to_mat(&p.u_h),
            b_h: to_vec(&p.b_h),
        }
    }

    pub fn step(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let n = h.len();
        let mut r = vec![0.0; n];
        let mut z = vec![0.0; n];
        for i in 0..n {
            let mut a = self.b_rz[i];
            let mut b = self.b_rz[n + i];
            for j in 0..x.len() {
                a += self.w_rz[i][j] * x[j];
                b += self.w_rz[n + i][j] * x[j];
            }
            for k in 0..n {
                a += self.u_rz[i][k] * h[k];
                b += self.u_rz[n + i][k] * h[k];
            }
            r[i] = logistic(a);
            z[i] = logistic(b);
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut c = self.b_h[i];
            for j in 0..x.len() {
                c += self.w_h[i][j] * x[j];
            }
            for k in 0..n {
                c += self.u_h[i][k] * r[k] * h[k];
            }
            let cand = c.tanh();
            out[i] = (1.0 - z[i]) * h[i] + z[i] * cand;
        }
        out
    }

    fn run<'a>(&self, xs: impl Iterator<Item = &'a Vec<f64>>, hidden: usize) -> Vec<f64> {
        let mut h = vec![0.0; hidden];
        for x in xs {
            h = self.step(x, &h);
        }
        h
    }
}

/// Bidirectional encoding of a sequence of input vectors.
pub fn encode(forward: &Gru, backward: &Gru, xs: &[Vec<f64>]) -> Vec<f64> {
    let hidden = forward.b_h.len();
    let mut out = forward.run(xs.iter(), hidden);
    out.extend(backward.run(xs.iter().rev(), hidden));
    out
}

pub struct Scorer {
    qf: Gru,
    qb: Gru,
    rf: Gru,
    rb: Gru,
    m: Mat,
    w1: Mat,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

impl Scorer {
    pub fn of(p: &ScorerParams) -> Self {
        Scorer {
            qf: Gru::of(&p.query_encoder.forward),
            qb: Gru::of(&p.query_encoder.backward),
            rf: Gru::of(&p.reply_encoder.forward),
            rb: Gru::of(&p.reply_encoder.backward),
            m: to_mat(&p.matching),
            w1: to_mat(&p.mlp_hidden_weight),
            b1: to_vec(&p.mlp_hidden_bias),
            w2: to_vec(&p.mlp_out_weight),
            b2: p.mlp_out_bias.get(0, 0),
        }
    }

    pub fn score(&self, query: &[Vec<f64>], reply: &[Vec<f64>]) -> f64 {
        let q = encode(&self.qf, &self.qb, query);
        let r = encode(&self.rf, &self.rb, reply);
        let mut quad = 0.0;
        for i in 0..q.len() {
            for j in 0..r.len() {
                quad += q[i] * self.m[i][j] * r[j];
            }
        }
        let mut features = q;
        features.extend(r);
        features.push(quad);
        let mut logit = self.b2;
        for (k, row) in self.w1.iter().enumerate() {
            let mut a = self.b1[k];
            for (w, f) in row.iter().zip(&features) {
                a += w * f;
            }
            logit += self.w2[k] * a.tanh();
        }
        logistic(logit)
    }
}

/// Pearson's r from exact integer moment sums; `None` for a constant input.
pub fn pearson_exact(x: &[i64], y: &[i64]) -> Option<f64> {
    let n = x.len() as i128;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for (&a, &b) in x.iter().zip(y) {
        let (a, b) = (a as i128, b as i128);
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    let num = n * sxy - sx * sy;
    let dx = n * sxx - sx * sx;
    let dy = n * syy - sy * sy;
    if dx == 0 || dy == 0 {
        return None;
    }
    Some(num as f64 / ((dx * dy) as f64).sqrt())
}

/// Twice the fractional (tie-averaged, 1-based) ranks, which are integers.
pub fn doubled_ranks(v: &[i64]) -> Vec<i64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by_key(|&i| v[i]);
    let mut out = vec![0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && v[idx[j]] == v[idx[i]] {
            j += 1;
        }
        // positions i..j share the average of ranks i+1..=j
        for &k in &idx[i..j] {
            out[k] = (i + 1 + j) as i64;
        }
        i = j;
    }
    out
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

/// Two-tailed Student-t tail probability by quadrature of the density.
///
/// With `t = √ν·tan θ` the density becomes proportional to `cos^(ν−1) θ`
/// on `[0, π/2)`, which is smooth and bounded.
pub fn t_two_tailed_quadrature(t: f64, nu: f64) -> f64 {
    let theta0 = (t.abs() / nu.sqrt()).atan();
    let f = |th: f64| th.cos().powf(nu - 1.0);
    let total = simpson(f, 0.0, FRAC_PI_2, 200_000);
    simpson(f, theta0, FRAC_PI_2, 200_000) / total
}

/// All strings over a 3-letter alphabet with length `0..=max_len`, in
/// order of length then base-3 value.
pub struct Strings {
    pub max_len: usize,
    offsets: Vec<usize>,
}

impl Strings {
    pub fn new(max_len: usize) -> Self {
        let mut offsets = vec![0];
        for len in 0..=max_len {
            offsets.push(offsets[len] + 3usize.pow(len as u32));
        }
        Strings { max_len, offsets }
    }

    pub fn count(&self) -> usize {
        self.offsets[self.max_len + 1]
    }

    pub fn index(&self, s: &[u8]) -> usize {
        self.offsets[s.len()] + s.iter().fold(0usize, |acc, &c| acc * 3 + c as usize)
    }

    pub fn get(&self, mut idx: usize) -> Vec<u8> {
        let len = (0..=self.max_len).rfind(|&l| self.offsets[l] <= idx).unwrap();
        idx -= self.offsets[len];
        let mut s = vec![0u8; len];
        for slot in s.iter_mut().rev() {
            *slot = (idx % 3) as u8;
            idx /= 3;
        }
        s
    }

    /// Indices of the distinct subsequences of `s`, grouped by length.
    pub fn subsequences(&self, s: &[u8]) -> Vec<Vec<usize>> {
        let mut by_len = vec![Vec::new(); s.len() + 1];
        for mask in 0u32..(1 << s.len()) {
            let sub: Vec<u8> = (0..s.len()).filter(|&i| mask >> i & 1 == 1).map(|i| s[i]).collect();
            by_len[sub.len()].push(self.index(&sub));
        }
        for v in &mut by_len {
            v.sort_unstable();
            v.dedup();
        }
        by_len
    }
}

#[derive(Clone)]
pub struct BitSet(Vec<u64>);

impl BitSet {
    pub fn new(bits: usize) -> Self {
        BitSet(vec![0; bits.div_ceil(64)])
    }

    pub fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
}
