use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, Classifier, TrainingSet, FEATURE_COUNT};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NnParams {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for NnParams {
    fn default() -> Self {
        NnParams {
            hidden: 11,
            epochs: 500,
            learning_rate: 0.05,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// 17 inputs, one sigmoid hidden layer, softmax output.
///
/// Weights are row-major: `w1[j * 17 + i]` connects input `i` to hidden unit
/// `j`, `w2[k * hidden + j]` connects hidden unit `j` to output `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnModel {
    pub n_hidden: usize,
    pub n_outputs: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    /// Per-feature z-score statistics from the training data.
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Gradient of the mean cross-entropy, shaped like the model weights.
#[derive(Clone, Debug, PartialEq)]
pub struct NnGradient {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl NnGradient {
    fn zeros(m: &NnModel) -> Self {
        NnGradient {
            w1: vec![0.0; m.w1.len()],
            b1: vec![0.0; m.b1.len()],
            w2: vec![0.0; m.w2.len()],
            b2: vec![0.0; m.b2.len()],
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Column means and standard deviations; zero deviations become 1.
pub fn normalization(data: &[[f64; FEATURE_COUNT]]) -> (Vec<f64>, Vec<f64>) {
    let n = data.len().max(1) as f64;
    let mut mean = vec![0.0; FEATURE_COUNT];
    for r in data {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut std = vec![0.0; FEATURE_COUNT];
    for r in data {
        for ((s, v), m) in std.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut std {
        *s = (*s / n).sqrt();
        if !(*s > 1e-12) {
            *s = 1.0;
        }
    }
    (mean, std)
}

impl NnModel {
    /// Xavier-uniform weights and zero biases drawn from `seed`.
    pub fn init(
        n_hidden: usize,
        n_outputs: usize,
        mean: Vec<f64>,
        std: Vec<f64>,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xavier = |fan_in: usize, fan_out: usize, len: usize| -> Vec<f64> {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..len).map(|_| rng.random_range(-a..a)).collect()
        };
        let w1 = xavier(FEATURE_COUNT, n_hidden, n_hidden * FEATURE_COUNT);
        let w2 = xavier(n_hidden, n_outputs, n_outputs * n_hidden);
        NnModel {
            n_hidden,
            n_outputs,
            w1,
            b1: vec![0.0; n_hidden],
            w2,
            b2: vec![0.0; n_outputs],
            mean,
            std,
        }
    }

    pub fn train(data: &TrainingSet, params: NnParams) -> Result<NnModel> {
        Ok(Self::train_with_history(data, params)?.0)
    }

    /// Trains and also returns the training-set loss after every epoch.
    pub fn train_with_history(data: &TrainingSet, params: NnParams) -> Result<(NnModel, Vec<f64>)> {
        if params.hidden == 0 || params.batch_size == 0 {
            return Err(Error::InvalidConfig(
                "hidden and batch_size must be positive".into(),
            ));
        }
        if !(params.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(
                "learning_rate must be positive".into(),
            ));
        }
        let present = data.class_counts().iter().filter(|&&c| c > 0).count();
        if present < 2 {
            return Err(Error::InsufficientData(format!(
                "{present} class(es) present, need 2"
            )));
        }
        let (mean, std) = normalization(&data.features);
        let mut model = NnModel::init(params.hidden, data.n_classes, mean, std, params.seed);
        let z: Vec<[f64; FEATURE_COUNT]> =
            data.features.iter().map(|x| model.normalize(x)).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x5eed_5eed);
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut grad = NnGradient::zeros(&model);
        let mut history = Vec::with_capacity(params.epochs);
        let mut batch_x = Vec::with_capacity(params.batch_size);
        let mut batch_y = Vec::with_capacity(params.batch_size);
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(params.batch_size) {
                batch_x.clear();
                batch_y.clear();
                batch_x.extend(chunk.iter().map(|&i| z[i]));
                batch_y.extend(chunk.iter().map(|&i| data.labels[i]));
                model.accumulate(&batch_x, &batch_y, &mut grad);
                model.step(&grad, params.learning_rate);
            }
            history.push(model.accumulate(&z, &data.labels, &mut grad));
        }
        Ok((model, history))
    }

    pub fn normalize(&self, x: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
        let mut z = [0.0; FEATURE_COUNT];
        for i in 0..FEATURE_COUNT {
            z[i] = (x[i] - self.mean[i]) / self.std[i];
        }
        z
    }

    fn hidden(&self, z: &[f64; FEATURE_COUNT], h: &mut [f64]) {
        for (j, hj) in h.iter_mut().enumerate() {
            let w = &self.w1[j * FEATURE_COUNT..(j + 1) * FEATURE_COUNT];
            let a: f64 = w.iter().zip(z).map(|(w, z)| w * z).sum::<f64>() + self.b1[j];
            *hj = sigmoid(a);
        }
    }

    fn logits(&self, h: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let w = &self.w2[k * self.n_hidden..(k + 1) * self.n_hidden];
            *o = w.iter().zip(h).map(|(w, h)| w * h).sum::<f64>() + self.b2[k];
        }
    }

    /// Turns logits into probabilities in place and returns log-sum-exp.
    fn softmax(out: &mut [f64]) -> f64 {
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = out.iter().map(|o| (o - max).exp()).sum();
        let lse = max + sum.ln();
        for o in out.iter_mut() {
            *o = (*o - lse).exp();
        }
        lse
    }

    /// Mean cross-entropy over normalised inputs; writes its gradient into `g`.
    fn accumulate(&self, z: &[[f64; FEATURE_COUNT]], y: &[usize], g: &mut NnGradient) -> f64 {
        for v in [&mut g.w1, &mut g.b1, &mut g.w2, &mut g.b2] {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
        let mut h = vec![0.0; self.n_hidden];
        let mut p = vec![0.0; self.n_outputs];
        let mut dh = vec![0.0; self.n_hidden];
        let mut loss = 0.0;
        for (zi, &yi) in z.iter().zip(y) {
            self.hidden(zi, &mut h);
            self.logits(&h, &mut p);
            let logit_y = p[yi];
            loss += Self::softmax(&mut p) - logit_y;
            p[yi] -= 1.0;
            dh.iter_mut().for_each(|d| *d = 0.0);
            for (k, &dk) in p.iter().enumerate() {
                g.b2[k] += dk;
                let row = k * self.n_hidden;
                for j in 0..self.n_hidden {
                    g.w2[row + j] += dk * h[j];
                    dh[j] += dk * self.w2[row + j];
                }
            }
            for j in 0..self.n_hidden {
                let da = dh[j] * h[j] * (1.0 - h[j]);
                g.b1[j] += da;
                let row = &mut g.w1[j * FEATURE_COUNT..(j + 1) * FEATURE_COUNT];
                for (w, zv) in row.iter_mut().zip(zi) {
                    *w += da * zv;
                }
            }
        }
        let inv = 1.0 / z.len().max(1) as f64;
        for v in [&mut g.w1, &mut g.b1, &mut g.w2, &mut g.b2] {
            v.iter_mut().for_each(|x| *x *= inv);
        }
        loss * inv
    }

    fn step(&mut self, g: &NnGradient, lr: f64) {
        for (w, d) in [
            (&mut self.w1, &g.w1),
            (&mut self.b1, &g.b1),
            (&mut self.w2, &g.w2),
            (&mut self.b2, &g.b2),
        ] {
            for (w, d) in w.iter_mut().zip(d) {
                *w -= lr * d;
            }
        }
    }

    /// Mean cross-entropy of raw (unnormalised) samples and its gradient.
    pub fn loss_and_gradient(&self, x: &[[f64; FEATURE_COUNT]], y: &[usize]) -> (f64, NnGradient) {
        let z: Vec<_> = x.iter().map(|r| self.normalize(r)).collect();
        let mut g = NnGradient::zeros(self);
        let loss = self.accumulate(&z, y, &mut g);
        (loss, g)
    }

    pub fn loss(&self, x: &[[f64; FEATURE_COUNT]], y: &[usize]) -> f64 {
        self.loss_and_gradient(x, y).0
    }

    /// All weights and biases in the order `w1, b1, w2, b2`.
    pub fn parameters(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    pub fn set_parameters(&mut self, p: &[f64]) -> Result<()> {
        let total = self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len();
        if p.len() != total {
            return Err(Error::DimensionMismatch {
                expected: total,
                actual: p.len(),
            });
        }
        let mut rest = p;
        for v in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            let (head, tail) = rest.split_at(v.len());
            v.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }
}

impl Classifier for NnModel {
    fn n_classes(&self) -> usize {
        self.n_outputs
    }

    fn predict_proba(&self, x: &[f64; FEATURE_COUNT]) -> Vec<f64> {
        let z = self.normalize(x);
        let mut h = vec![0.0; self.n_hidden];
        let mut p = vec![0.0; self.n_outputs];
        self.hidden(&z, &mut h);
        self.logits(&h, &mut p);
        Self::softmax(&mut p);
        p
    }

    fn predict(&self, x: &[f64; FEATURE_COUNT]) -> (usize, f64) {
        argmax(&self.predict_proba(x))
    }
}
