//! Small differentiable classifiers with exact gradients.
//!
//! Two architectures: a linear map and a one-hidden-layer tanh MLP, each
//! followed by a head matched to the loss: softmax onto the simplex for
//! cross-entropy, or normalization onto the unit sphere for negative
//! cosine. Gradients are hand-rolled reverse mode over a flat parameter
//! vector, so a whole training step is a couple of loops over slices.

use crate::losses::{self, LossKind, LOG_FLOOR};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::ops::Range;
use thiserror::Error;

/// Norm floor for the unit-normalizing head.
pub const NORM_FLOOR: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("input has dimension {got}, model expects {expected}")]
    DimMismatch { got: usize, expected: usize },
    #[error("loss {loss} is incompatible with head {head:?}")]
    HeadMismatch { loss: LossKind, head: Head },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    Linear,
    MlpOneHidden { width: usize },
}

/// Output head: simplex via softmax, or unit sphere via normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Simplex,
    UnitNorm,
}

impl Head {
    pub fn for_loss(kind: LossKind) -> Head {
        match kind {
            LossKind::CrossEntropy => Head::Simplex,
            LossKind::NegativeCosine => Head::UnitNorm,
        }
    }

    fn accepts(self, kind: LossKind) -> bool {
        self == Head::for_loss(kind)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    arch: Arch,
    head: Head,
    input_dim: usize,
    output_dim: usize,
    params: Vec<f64>,
}

fn param_count(arch: Arch, input_dim: usize, output_dim: usize) -> usize {
    match arch {
        Arch::Linear => output_dim * input_dim + output_dim,
        Arch::MlpOneHidden { width } => width * input_dim + width + output_dim * width + output_dim,
    }
}

impl Model {
    /// All-zero parameters: the simplex head predicts uniform, the unit
    /// head predicts the zero vector (norm floor).
    pub fn zeros(arch: Arch, head: Head, input_dim: usize, output_dim: usize) -> Model {
        Model {
            arch,
            head,
            input_dim,
            output_dim,
            params: vec![0.0; param_count(arch, input_dim, output_dim)],
        }
    }

    /// Xavier-style uniform init, deterministic in the seed.
    pub fn random(arch: Arch, head: Head, input_dim: usize, output_dim: usize, seed: u64) -> Model {
        let mut model = Model::zeros(arch, head, input_dim, output_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init_matrix = |params: &mut [f64], fan_in: usize, fan_out: usize| {
            let r = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in params.iter_mut() {
                *p = rng.gen_range(-r..r);
            }
        };
        match arch {
            Arch::Linear => {
                let w = output_dim * input_dim;
                init_matrix(&mut model.params[..w], input_dim, output_dim);
            }
            Arch::MlpOneHidden { width } => {
                let w1 = width * input_dim;
                init_matrix(&mut model.params[..w1], input_dim, width);
                let w2_start = w1 + width;
                let w2_end = w2_start + output_dim * width;
                init_matrix(&mut model.params[w2_start..w2_end], width, output_dim);
            }
        }
        model
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Parameter range holding the bias of the output layer. The gradient
    /// over this range equals the gradient with respect to the pre-head
    /// output.
    pub fn output_bias_range(&self) -> Range<usize> {
        let n = self.params.len();
        n - self.output_dim..n
    }

    /// Pre-head output z = W x + b (optionally through the hidden layer).
    fn pre_head(&self, x: &[f64], hidden: &mut Vec<f64>) -> Vec<f64> {
        let d = self.input_dim;
        match self.arch {
            Arch::Linear => {
                let (w, b) = self.params.split_at(self.output_dim * d);
                (0..self.output_dim)
                    .map(|o| losses::dot(&w[o * d..(o + 1) * d], x) + b[o])
                    .collect()
            }
            Arch::MlpOneHidden { width } => {
                let w1 = &self.params[..width * d];
                let b1 = &self.params[width * d..width * d + width];
                hidden.clear();
                hidden.extend(
                    (0..width).map(|h| (losses::dot(&w1[h * d..(h + 1) * d], x) + b1[h]).tanh()),
                );
                let w2_start = width * d + width;
                let w2 = &self.params[w2_start..w2_start + self.output_dim * width];
                let b2 = &self.params[w2_start + self.output_dim * width..];
                (0..self.output_dim)
                    .map(|o| losses::dot(&w2[o * width..(o + 1) * width], hidden) + b2[o])
                    .collect()
            }
        }
    }

    /// Head output for an input vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        if x.len() != self.input_dim {
            return Err(ModelError::DimMismatch {
                got: x.len(),
                expected: self.input_dim,
            });
        }
        let mut hidden = Vec::new();
        let mut z = self.pre_head(x, &mut hidden);
        apply_head(self.head, &mut z);
        Ok(z)
    }

    /// Mean loss over (input, target) items and its exact gradient with
    /// respect to the parameters, plus the count of clamped log terms.
    /// Items are accumulated in order, so results are reproducible.
    pub fn loss_and_grad(
        &self,
        kind: LossKind,
        items: &[(Vec<f64>, Vec<f64>)],
    ) -> Result<(f64, Vec<f64>, u64), ModelError> {
        if !self.head.accepts(kind) {
            return Err(ModelError::HeadMismatch {
                loss: kind,
                head: self.head,
            });
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut total = 0.0;
        let mut clamped: u64 = 0;
        let scale = 1.0 / items.len().max(1) as f64;
        let mut hidden = Vec::new();
        for (x, target) in items {
            if x.len() != self.input_dim {
                return Err(ModelError::DimMismatch {
                    got: x.len(),
                    expected: self.input_dim,
                });
            }
            let z = self.pre_head(x, &mut hidden);
            let mut out = z.clone();
            apply_head(self.head, &mut out);
            let lv = losses::loss_detailed(kind, &out, target);
            total += lv.value;
            clamped += lv.clamped as u64;
            let dz = head_backward(self.head, kind, &z, &out, target);
            self.accumulate(&mut grad, x, &hidden, &dz, scale);
        }
        Ok((total * scale, grad, clamped))
    }

    /// Adds `scale * dL/dparams` for one item given dL/dz at the pre-head
    /// output.
    fn accumulate(&self, grad: &mut [f64], x: &[f64], hidden: &[f64], dz: &[f64], scale: f64) {
        let d = self.input_dim;
        match self.arch {
            Arch::Linear => {
                let (gw, gb) = grad.split_at_mut(self.output_dim * d);
                for (o, &dzo) in dz.iter().enumerate() {
                    let row = &mut gw[o * d..(o + 1) * d];
                    for (g, &xi) in row.iter_mut().zip(x) {
                        *g += scale * dzo * xi;
                    }
                    gb[o] += scale * dzo;
                }
            }
            Arch::MlpOneHidden { width } => {
                let w2_start = width * d + width;
                let w2 = &self.params[w2_start..w2_start + self.output_dim * width];
                // output layer
                for (o, &dzo) in dz.iter().enumerate() {
                    let row = &mut grad[w2_start + o * width..w2_start + (o + 1) * width];
                    for (g, &h) in row.iter_mut().zip(hidden) {
                        *g += scale * dzo * h;
                    }
                    grad[w2_start + self.output_dim * width + o] += scale * dzo;
                }
                // hidden layer through tanh'
                for h_idx in 0..width {
                    let mut dh = 0.0;
                    for (o, &dzo) in dz.iter().enumerate() {
                        dh += dzo * w2[o * width + h_idx];
                    }
                    let dz1 = dh * (1.0 - hidden[h_idx] * hidden[h_idx]);
                    let row = &mut grad[h_idx * d..(h_idx + 1) * d];
                    for (g, &xi) in row.iter_mut().zip(x) {
                        *g += scale * dz1 * xi;
                    }
                    grad[width * d + h_idx] += scale * dz1;
                }
            }
        }
    }
}

fn apply_head(head: Head, z: &mut [f64]) {
    match head {
        Head::Simplex => {
            let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in z.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in z.iter_mut() {
                *v /= sum;
            }
        }
        Head::UnitNorm => {
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt().max(NORM_FLOOR);
            for v in z.iter_mut() {
                *v /= norm;
            }
        }
    }
}

/// dL/dz at the pre-head output, composed through loss and head. Matches
/// the clamped cross-entropy exactly: coordinates pinned at the log floor
/// contribute zero.
fn head_backward(head: Head, kind: LossKind, z: &[f64], out: &[f64], target: &[f64]) -> Vec<f64> {
    match (head, kind) {
        (Head::Simplex, LossKind::CrossEntropy) => {
            // a_y = q_y * dL/dq_y;  dL/dz_j = a_j - q_j * sum(a)
            let a: Vec<f64> = out
                .iter()
                .zip(target)
                .map(|(&q, &t)| if t != 0.0 && q >= LOG_FLOOR { -t } else { 0.0 })
                .collect();
            let s: f64 = a.iter().sum();
            a.iter().zip(out).map(|(&ai, &q)| ai - q * s).collect()
        }
        (Head::UnitNorm, LossKind::NegativeCosine) => {
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm >= NORM_FLOOR {
                // project out the norm direction
                let ot = losses::dot(out, target);
                out.iter()
                    .zip(target)
                    .map(|(&o, &t)| (-t + o * ot) / norm)
                    .collect()
            } else {
                target.iter().map(|&t| -t / NORM_FLOOR).collect()
            }
        }
        _ => unreachable!("head/loss compatibility checked on entry"),
    }
}
