use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::{CandidateFeatures, StateVector, CANDIDATE_DIM, STATE_DIM};
use super::RlHyperParams;

/// Width of the network input: state features followed by candidate features.
pub const INPUT_DIM: usize = STATE_DIM + CANDIDATE_DIM;

pub fn input_vector(state: &StateVector, cand: &CandidateFeatures) -> [f64; INPUT_DIM] {
    let mut x = [0.0; INPUT_DIM];
    x[..STATE_DIM].copy_from_slice(&state.to_array());
    x[STATE_DIM..].copy_from_slice(&cand.to_array());
    x
}

/// Fully connected value network: tanh hidden layers, linear scalar output.
///
/// Parameters are stored flat, layer by layer, each layer as a row-major
/// `out x in` weight block followed by its `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub widths: Vec<usize>,
    pub params: Vec<f64>,
    pub hyper: RlHyperParams,
}

/// Per-layer activations kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardScratch {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next_delta: Vec<f64>,
}

fn param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl PolicyParams {
    pub fn layer_widths(hyper: &RlHyperParams) -> Vec<usize> {
        let mut widths = vec![INPUT_DIM];
        widths.extend(&hyper.hidden);
        widths.push(1);
        widths
    }

    pub fn zeros(hyper: &RlHyperParams) -> Self {
        let widths = Self::layer_widths(hyper);
        let n = param_count(&widths);
        Self {
            widths,
            params: vec![0.0; n],
            hyper: hyper.clone(),
        }
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for weights and biases.
    pub fn init<R: Rng>(hyper: &RlHyperParams, rng: &mut R) -> Self {
        let mut p = Self::zeros(hyper);
        let mut off = 0;
        for w in p.widths.clone().windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for v in &mut p.params[off..off + w[0] * w[1] + w[1]] {
                *v = rng.random_range(-bound..=bound);
            }
            off += w[0] * w[1] + w[1];
        }
        p
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|v| v.is_finite())
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut scratch = ForwardScratch::default();
        self.forward_with(x, &mut scratch)
    }

    /// Forward pass that records activations in `scratch`.
    pub fn forward_with(&self, x: &[f64], scratch: &mut ForwardScratch) -> f64 {
        debug_assert_eq!(x.len(), self.widths[0]);
        let layers = self.widths.len() - 1;
        scratch.acts.resize(layers + 1, Vec::new());
        scratch.acts[0].clear();
        scratch.acts[0].extend_from_slice(x);
        let mut off = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let (w, rest) = self.params[off..].split_at(n_in * n_out);
            let b = &rest[..n_out];
            let (prev, next) = scratch.acts.split_at_mut(l + 1);
            let input = &prev[l];
            let out = &mut next[0];
            out.clear();
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let mut z = b[o];
                for (wi, xi) in row.iter().zip(input) {
                    z += wi * xi;
                }
                out.push(if l + 1 < layers { z.tanh() } else { z });
            }
            off += n_in * n_out + n_out;
        }
        scratch.acts[layers][0]
    }

    /// Adds `dl_dq * d q / d params` to `grad`, using the activations of the
    /// last [`forward_with`](Self::forward_with) call on `scratch`.
    pub fn backward_into(&self, scratch: &mut ForwardScratch, dl_dq: f64, grad: &mut [f64]) {
        let layers = self.widths.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.widths[l] * self.widths[l + 1] + self.widths[l + 1];
        }
        scratch.delta.clear();
        scratch.delta.push(dl_dq);
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let off = offsets[l];
            let input = &scratch.acts[l];
            for o in 0..n_out {
                let d = scratch.delta[o];
                if d == 0.0 {
                    continue;
                }
                let g_row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                for (g, xi) in g_row.iter_mut().zip(input) {
                    *g += d * xi;
                }
                grad[off + n_in * n_out + o] += d;
            }
            if l == 0 {
                break;
            }
            // propagate through weights and the tanh of layer l's input
            scratch.next_delta.clear();
            scratch.next_delta.resize(n_in, 0.0);
            let w = &self.params[off..off + n_in * n_out];
            for o in 0..n_out {
                let d = scratch.delta[o];
                if d == 0.0 {
                    continue;
                }
                for (nd, wi) in scratch
                    .next_delta
                    .iter_mut()
                    .zip(&w[o * n_in..(o + 1) * n_in])
                {
                    *nd += d * wi;
                }
            }
            for (nd, a) in scratch.next_delta.iter_mut().zip(input) {
                *nd *= 1.0 - a * a;
            }
            std::mem::swap(&mut scratch.delta, &mut scratch.next_delta);
        }
    }

    /// Gradient of `0.5 * sum (q(x_i) - y_i)^2` over the given samples, and
    /// the loss itself.
    pub fn squared_error_gradient(&self, samples: &[([f64; INPUT_DIM], f64)]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut scratch = ForwardScratch::default();
        let mut loss = 0.0;
        for (x, y) in samples {
            let q = self.forward_with(x, &mut scratch);
            let err = q - y;
            loss += 0.5 * err * err;
            self.backward_into(&mut scratch, err, &mut grad);
        }
        (loss, grad)
    }
}

/// Score of every candidate under the shared network.
pub fn q_scores(
    p: &PolicyParams,
    state: &StateVector,
    candidates: &[CandidateFeatures],
) -> Vec<f64> {
    let mut scratch = ForwardScratch::default();
    candidates
        .iter()
        .map(|c| p.forward_with(&input_vector(state, c), &mut scratch))
        .collect()
}

/// Adam moment estimates for one parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    pub fn apply(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step.min(i32::MAX as u64) as i32);
        let c2 = 1.0 - Self::BETA2.powi(self.step.min(i32::MAX as u64) as i32);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + Self::EPS);
        }
    }
}
