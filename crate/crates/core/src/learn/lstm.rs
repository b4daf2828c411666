//! Single-layer LSTM over cropped playtrace sequences with three sigmoid
//! outputs, trained by backpropagation through time and plain SGD.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{from_model_file, targets, to_model_file, LearnError};
use crate::labeling::LabelSet;
use crate::trace::{CroppedSequence, CROP_INPUT_SIZE};

pub const OUTPUTS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LstmConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Global gradient norm cap per update.
    pub clip_norm: f64,
    pub seed: u64,
    /// Independently seeded networks trained by [`train_lstm_replicas`].
    pub replicas: usize,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self { hidden: 100, epochs: 200, learning_rate: 0.001, clip_norm: 5.0, seed: 0, replicas: 3 }
    }
}

/// All weights. Gate blocks are ordered input, forget, cell, output.
/// `wx[j * 4H + g]` links input `j` to gate unit `g`, `wh[k * 4H + g]`
/// links hidden unit `k`, and `wy[o * H + k]` feeds output `o`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub input: usize,
    pub hidden: usize,
    pub wx: Vec<f64>,
    pub wh: Vec<f64>,
    pub b: Vec<f64>,
    pub wy: Vec<f64>,
    pub by: Vec<f64>,
}

/// Gradients share the parameter layout.
pub type LstmGradients = LstmParams;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-output binary cross-entropy summed over outputs, from logits.
pub fn bce_loss(logits: &[f64; OUTPUTS], target: &[f64; OUTPUTS]) -> f64 {
    logits.iter().zip(target).map(|(z, t)| z.max(0.0) - t * z + (-z.abs()).exp().ln_1p()).sum()
}

struct Step {
    x: Vec<(usize, f64)>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates, 4H.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let g = 4 * hidden;
        Self {
            input,
            hidden,
            wx: vec![0.0; input * g],
            wh: vec![0.0; hidden * g],
            b: vec![0.0; g],
            wy: vec![0.0; OUTPUTS * hidden],
            by: vec![0.0; OUTPUTS],
        }
    }

    /// Uniform in ±1/sqrt(fan-in) per layer.
    pub fn init(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(input, hidden);
        let gate = 1.0 / ((input + hidden) as f64).sqrt();
        let out = 1.0 / (hidden as f64).sqrt();
        for w in p.wx.iter_mut().chain(p.wh.iter_mut()).chain(p.b.iter_mut()) {
            *w = rng.gen_range(-gate..gate);
        }
        for w in p.wy.iter_mut().chain(p.by.iter_mut()) {
            *w = rng.gen_range(-out..out);
        }
        p
    }

    pub fn tensors(&self) -> [(&'static str, &Vec<f64>); 5] {
        [("wx", &self.wx), ("wh", &self.wh), ("b", &self.b), ("wy", &self.wy), ("by", &self.by)]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 5] {
        [&mut self.wx, &mut self.wh, &mut self.b, &mut self.wy, &mut self.by]
    }

    pub fn norm(&self) -> f64 {
        self.tensors().iter().flat_map(|(_, t)| t.iter()).map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    fn check_inputs(&self, inputs: &[Vec<f64>]) -> Result<(), LearnError> {
        if inputs.is_empty() {
            return Err(LearnError::EmptySequence);
        }
        match inputs.iter().find(|x| x.len() != self.input) {
            Some(x) => Err(LearnError::InputSize { expected: self.input, got: x.len() }),
            None => Ok(()),
        }
    }

    fn run(&self, inputs: &[Vec<f64>], keep: bool) -> (Vec<Step>, Vec<f64>, [f64; OUTPUTS]) {
        let h_size = self.hidden;
        let g4 = 4 * h_size;
        let mut h = vec![0.0; h_size];
        let mut c = vec![0.0; h_size];
        let mut steps = Vec::with_capacity(if keep { inputs.len() } else { 0 });
        let mut z = vec![0.0; g4];
        for x in inputs {
            let sparse: Vec<(usize, f64)> = x.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
            z.copy_from_slice(&self.b);
            for &(j, v) in &sparse {
                for (zg, w) in z.iter_mut().zip(&self.wx[j * g4..(j + 1) * g4]) {
                    *zg += v * w;
                }
            }
            for (k, &hk) in h.iter().enumerate() {
                if hk != 0.0 {
                    for (zg, w) in z.iter_mut().zip(&self.wh[k * g4..(k + 1) * g4]) {
                        *zg += hk * w;
                    }
                }
            }
            let mut gates = z.clone();
            for (u, a) in gates.iter_mut().enumerate() {
                *a = if (2 * h_size..3 * h_size).contains(&u) { a.tanh() } else { sigmoid(*a) };
            }
            let c_prev = c.clone();
            let mut tanh_c = vec![0.0; h_size];
            let h_prev = h.clone();
            for k in 0..h_size {
                let (i, f, g, o) = (gates[k], gates[h_size + k], gates[2 * h_size + k], gates[3 * h_size + k]);
                c[k] = f * c_prev[k] + i * g;
                tanh_c[k] = c[k].tanh();
                h[k] = o * tanh_c[k];
            }
            if keep {
                steps.push(Step { x: sparse, h_prev, c_prev, gates, tanh_c });
            }
        }
        let mut logits = [0.0; OUTPUTS];
        for (o, l) in logits.iter_mut().enumerate() {
            *l = self.by[o] + self.wy[o * h_size..(o + 1) * h_size].iter().zip(&h).map(|(w, hk)| w * hk).sum::<f64>();
        }
        (steps, h, logits)
    }

    pub fn forward(&self, inputs: &[Vec<f64>]) -> Result<[f64; OUTPUTS], LearnError> {
        self.check_inputs(inputs)?;
        Ok(self.run(inputs, false).2.map(sigmoid))
    }

    /// Loss for one labeled sequence and its exact gradient.
    pub fn loss_and_gradients(
        &self,
        inputs: &[Vec<f64>],
        target: &[f64; OUTPUTS],
    ) -> Result<(f64, LstmGradients), LearnError> {
        self.check_inputs(inputs)?;
        let h_size = self.hidden;
        let g4 = 4 * h_size;
        let (steps, h_last, logits) = self.run(inputs, true);
        let loss = bce_loss(&logits, target);
        let mut grad = LstmParams::zeros(self.input, h_size);
        let mut dh = vec![0.0; h_size];
        for o in 0..OUTPUTS {
            let dl = sigmoid(logits[o]) - target[o];
            grad.by[o] = dl;
            for k in 0..h_size {
                grad.wy[o * h_size + k] = dl * h_last[k];
                dh[k] += dl * self.wy[o * h_size + k];
            }
        }
        let mut dc_next = vec![0.0; h_size];
        let mut dz = vec![0.0; g4];
        for s in steps.iter().rev() {
            for k in 0..h_size {
                let (i, f, g, o) = (s.gates[k], s.gates[h_size + k], s.gates[2 * h_size + k], s.gates[3 * h_size + k]);
                let tc = s.tanh_c[k];
                let d_o = dh[k] * tc;
                let dc = dc_next[k] + dh[k] * o * (1.0 - tc * tc);
                dz[k] = dc * g * i * (1.0 - i);
                dz[h_size + k] = dc * s.c_prev[k] * f * (1.0 - f);
                dz[2 * h_size + k] = dc * i * (1.0 - g * g);
                dz[3 * h_size + k] = d_o * o * (1.0 - o);
                dc_next[k] = dc * f;
            }
            for (gb, d) in grad.b.iter_mut().zip(&dz) {
                *gb += d;
            }
            for &(j, v) in &s.x {
                for (gw, d) in grad.wx[j * g4..(j + 1) * g4].iter_mut().zip(&dz) {
                    *gw += v * d;
                }
            }
            for k in 0..h_size {
                let row = k * g4..(k + 1) * g4;
                let hk = s.h_prev[k];
                if hk != 0.0 {
                    for (gw, d) in grad.wh[row.clone()].iter_mut().zip(&dz) {
                        *gw += hk * d;
                    }
                }
                dh[k] = self.wh[row].iter().zip(&dz).map(|(w, d)| w * d).sum();
            }
        }
        Ok((loss, grad))
    }

    fn sgd_step(&mut self, grad: &LstmGradients, lr: f64, clip: f64) {
        let norm = grad.norm();
        let scale = if norm > clip { clip / norm } else { 1.0 };
        for (p, g) in self.tensors_mut().into_iter().zip(grad.tensors()) {
            for (pv, gv) in p.iter_mut().zip(g.1) {
                *pv -= lr * scale * gv;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    pub params: LstmParams,
    pub config: LstmConfig,
    /// Seed this replica was initialized and shuffled with.
    pub seed: u64,
    /// Mean training loss per epoch.
    pub loss_history: Vec<f64>,
}

impl LstmModel {
    pub fn untrained(params: LstmParams, config: LstmConfig) -> Self {
        Self { params, config, seed: config.seed, loss_history: Vec::new() }
    }

    pub fn predict(&self, seq: &CroppedSequence) -> Result<[f64; OUTPUTS], LearnError> {
        lstm_forward(self, seq)
    }

    pub fn to_json(&self) -> Result<String, LearnError> {
        to_model_file("lstm", self)
    }

    pub fn from_json(text: &str) -> Result<Self, LearnError> {
        from_model_file("lstm", text)
    }
}

/// Persona probabilities for a cropped sequence.
pub fn lstm_forward(model: &LstmModel, seq: &CroppedSequence) -> Result<[f64; OUTPUTS], LearnError> {
    lstm_forward_inputs(model, &seq.inputs())
}

pub fn lstm_forward_inputs(model: &LstmModel, inputs: &[Vec<f64>]) -> Result<[f64; OUTPUTS], LearnError> {
    model.params.forward(inputs)
}

/// One network trained with `seed`.
pub fn train_lstm(
    sequences: &[Vec<Vec<f64>>],
    labels: &[LabelSet],
    config: &LstmConfig,
    seed: u64,
) -> Result<LstmModel, LearnError> {
    if sequences.len() != labels.len() {
        return Err(LearnError::LengthMismatch { inputs: sequences.len(), labels: labels.len() });
    }
    if sequences.is_empty() {
        return Err(LearnError::EmptyDataset("no training sequences".into()));
    }
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if config.hidden == 0 || !positive(config.learning_rate) || !positive(config.clip_norm) {
        return Err(LearnError::InvalidConfig(format!("{config:?}")));
    }
    let input = sequences[0].first().map_or(CROP_INPUT_SIZE, Vec::len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = LstmParams::init(input, config.hidden, &mut rng);
    for s in sequences {
        params.check_inputs(s)?;
    }
    let ys: Vec<[f64; OUTPUTS]> = labels.iter().map(|l| targets(*l)).collect();
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let (loss, grad) = params.loss_and_gradients(&sequences[i], &ys[i])?;
            if !loss.is_finite() {
                return Err(LearnError::Diverged { seed, epoch });
            }
            total += loss;
            params.sgd_step(&grad, config.learning_rate, config.clip_norm);
        }
        if !params.is_finite() {
            return Err(LearnError::Diverged { seed, epoch });
        }
        history.push(total / sequences.len() as f64);
    }
    Ok(LstmModel { params, config: *config, seed, loss_history: history })
}

/// `config.replicas` networks seeded `seed, seed + 1, ...`, trained in
/// parallel.
pub fn train_lstm_replicas(
    sequences: &[Vec<Vec<f64>>],
    labels: &[LabelSet],
    config: &LstmConfig,
) -> Result<Vec<LstmModel>, LearnError> {
    (0..config.replicas as u64).into_par_iter().map(|r| train_lstm(sequences, labels, config, config.seed + r)).collect()
}
