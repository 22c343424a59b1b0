//! SGD training of the scheme losses on synthetic datasets, with the
//! evaluation protocol used for result tables: per-epoch test error, a
//! final error averaged over the last few epochs, and mean ± 95%
//! confidence interval across runs.
//!
//! Runs are bit-reproducible: every source of randomness is a separate
//! stream derived from the config seed, and all reductions are sequential.

use crate::losses::{EmbeddingError, LossKind, TargetEmbedding};
use crate::model::{Arch, Head, Model, ModelError};
use crate::policy::{Policy, WeightingFunction};
use crate::schemes::{Dataset, LabeledExample, PairSequence, SchemeError};
use crate::seeding::{stream_rng, stream_seed};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::time::{Duration, Instant};
use thiserror::Error;

const STREAM_INIT: u64 = 0x01;
const STREAM_EMBED: u64 = 0x02;
const STREAM_PAIRS: u64 = 0x03;
const STREAM_LAMBDA: u64 = 0x04;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("eval_window {eval_window} must be in 1..={epochs}")]
    BadEvalWindow { eval_window: usize, epochs: usize },
    #[error("batch_size must be positive")]
    BadBatchSize,
    #[error("training diverged at epoch {epoch}: batch loss is not finite")]
    Diverged { epoch: usize },
    #[error("train and test sets disagree: {detail}")]
    DatasetMismatch { detail: String },
    #[error("need at least 2 runs to form a confidence interval, got {got}")]
    NotEnoughRuns { got: usize },
    #[error("dataset needs at least 10 examples, got {got}")]
    TooSmall { got: usize },
    #[error("flip rate {rate} outside [0, 1]")]
    BadFlipRate { rate: f64 },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// Target-mixing weight as a function of λ. The grid form looks γ up at
/// the bin containing λ; the identity form is exact, which is what makes
/// an untied run with γ = id reproduce a MixUp run bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaSpec {
    Identity,
    Grid(WeightingFunction),
}

impl GammaSpec {
    pub fn eval(&self, lambda: f64) -> f64 {
        match self {
            GammaSpec::Identity => lambda,
            GammaSpec::Grid(w) => w.lookup(lambda),
        }
    }
}

/// Which loss construction a training run minimizes.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeSpec {
    Baseline,
    Mix { policy: Policy },
    Dat { policy: Policy },
    Untied { policy: Policy, gamma: GammaSpec },
}

impl SchemeSpec {
    fn policy(&self) -> Option<&Policy> {
        match self {
            SchemeSpec::Baseline => None,
            SchemeSpec::Mix { policy }
            | SchemeSpec::Dat { policy }
            | SchemeSpec::Untied { policy, .. } => Some(policy),
        }
    }
}

impl std::fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SchemeSpec::Baseline => write!(f, "baseline"),
            SchemeSpec::Mix { policy } => write!(f, "mix({policy})"),
            SchemeSpec::Dat { policy } => write!(f, "dat({policy})"),
            SchemeSpec::Untied { policy, .. } => write!(f, "umix({policy})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub scheme: SchemeSpec,
    pub loss: LossKind,
    pub arch: Arch,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
    /// Epochs averaged into the reported final error.
    pub eval_window: usize,
    /// Target dimension for the unit-vector embedding (negative cosine).
    pub embedding_dim: usize,
}

impl TrainConfig {
    pub fn new(scheme: SchemeSpec, loss: LossKind) -> Self {
        TrainConfig {
            scheme,
            loss,
            arch: Arch::MlpOneHidden { width: 64 },
            epochs: 100,
            batch_size: 32,
            learning_rate: 0.1,
            weight_decay: 0.0,
            seed: 0,
            eval_window: 10,
            embedding_dim: 16,
        }
    }
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub per_epoch_test_error: Vec<f64>,
    pub final_error: f64,
    pub wall_time: Duration,
    /// Cross-entropy log-floor clamps observed during training.
    pub clamp_events: u64,
}

impl RunReport {
    /// CSV with one `epoch,test_error` row per epoch and a trailing
    /// summary line. Wall time is deliberately excluded so that reruns
    /// with the same seed produce identical bytes.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,test_error\n");
        for (epoch, err) in self.per_epoch_test_error.iter().enumerate() {
            s.push_str(&format!("{epoch},{err:.12}\n"));
        }
        s.push_str(&format!("final,{:.12}\n", self.final_error));
        s
    }
}

/// Mean final error across runs with a 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub runs: usize,
    pub mean: f64,
    pub ci_half_width: f64,
}

/// Mean and 1.96·s/√n over the runs' final errors.
pub fn aggregate_runs(reports: &[RunReport]) -> Result<RunSummary, TrainError> {
    if reports.len() < 2 {
        return Err(TrainError::NotEnoughRuns { got: reports.len() });
    }
    let n = reports.len() as f64;
    let mean = reports.iter().map(|r| r.final_error).sum::<f64>() / n;
    let var = reports
        .iter()
        .map(|r| (r.final_error - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    Ok(RunSummary {
        runs: reports.len(),
        mean,
        ci_half_width: 1.96 * var.sqrt() / n.sqrt(),
    })
}

/// One `model,policy,runs,mean,confint` table row. Fields holding commas
/// are quoted.
pub fn table_row(model: &str, policy: &str, summary: &RunSummary) -> String {
    let quote = |s: &str| {
        if s.contains(',') || s.contains('"') {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    format!(
        "{},{},{runs},{mean:.6},{ci:.6}",
        quote(model),
        quote(policy),
        runs = summary.runs,
        mean = summary.mean,
        ci = summary.ci_half_width
    )
}

/// Fraction of test examples misclassified: argmax over simplex outputs
/// for cross-entropy, nearest embedding by inner product for negative
/// cosine.
pub fn test_error(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    dataset: &Dataset,
) -> Result<f64, TrainError> {
    let mut wrong = 0usize;
    for ex in dataset.examples() {
        let out = model.forward(&ex.features)?;
        let pred = match kind {
            LossKind::CrossEntropy => argmax(&out),
            LossKind::NegativeCosine => {
                let mut best = 0;
                let mut best_score = f64::NEG_INFINITY;
                for label in 0..emb.n_labels() {
                    let score = crate::losses::dot(&out, emb.embed(label)?);
                    if score > best_score {
                        best_score = score;
                        best = label;
                    }
                }
                best
            }
        };
        if pred != ex.label {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / dataset.len() as f64)
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Trains a model under the configured scheme. Deterministic in
/// `config.seed`; aborts with a diagnostic if the loss stops being finite.
pub fn train(
    config: &TrainConfig,
    train_set: &Dataset,
    test_set: &Dataset,
) -> Result<RunReport, TrainError> {
    if config.eval_window == 0 || config.eval_window > config.epochs {
        return Err(TrainError::BadEvalWindow {
            eval_window: config.eval_window,
            epochs: config.epochs,
        });
    }
    if config.batch_size == 0 {
        return Err(TrainError::BadBatchSize);
    }
    if train_set.dim() != test_set.dim() || train_set.n_labels() != test_set.n_labels() {
        return Err(TrainError::DatasetMismatch {
            detail: format!(
                "train dim={} labels={}, test dim={} labels={}",
                train_set.dim(),
                train_set.n_labels(),
                test_set.dim(),
                test_set.n_labels()
            ),
        });
    }

    let start = Instant::now();
    let emb = match config.loss {
        LossKind::CrossEntropy => TargetEmbedding::one_hot(train_set.n_labels())?,
        LossKind::NegativeCosine => TargetEmbedding::random_unit(
            train_set.n_labels(),
            config.embedding_dim,
            stream_seed(config.seed, STREAM_EMBED, 0),
        )?,
    };
    let output_dim = emb.dim();
    let mut model = Model::random(
        config.arch,
        Head::for_loss(config.loss),
        train_set.dim(),
        output_dim,
        stream_seed(config.seed, STREAM_INIT, 0),
    );

    let n = train_set.len();
    let mut per_epoch_test_error = Vec::with_capacity(config.epochs);
    let mut clamp_events: u64 = 0;
    let mut items: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(config.batch_size);

    for epoch in 0..config.epochs {
        let pairs = PairSequence::shuffled(n, stream_seed(config.seed, STREAM_PAIRS, epoch as u64));
        let lambdas: Vec<f64> = match config.scheme.policy() {
            Some(policy) => policy.sample(n, stream_seed(config.seed, STREAM_LAMBDA, epoch as u64)),
            None => Vec::new(),
        };

        for chunk_start in (0..n).step_by(config.batch_size) {
            let chunk_end = (chunk_start + config.batch_size).min(n);
            let pair_slice = &pairs.pairs()[chunk_start..chunk_end];
            let lam_slice = if lambdas.is_empty() {
                &[]
            } else {
                &lambdas[chunk_start..chunk_end]
            };
            items.clear();
            build_items(
                &config.scheme,
                &emb,
                train_set,
                pair_slice,
                lam_slice,
                &mut items,
            )?;
            let (loss, grad, clamped) = model.loss_and_grad(config.loss, &items)?;
            clamp_events += clamped;
            if !loss.is_finite() {
                return Err(TrainError::Diverged { epoch });
            }
            let decay = 1.0 - config.learning_rate * config.weight_decay;
            for (p, g) in model.params_mut().iter_mut().zip(&grad) {
                if config.weight_decay != 0.0 {
                    *p *= decay;
                }
                *p -= config.learning_rate * g;
            }
        }
        per_epoch_test_error.push(test_error(&model, &emb, config.loss, test_set)?);
    }

    let window = &per_epoch_test_error[config.epochs - config.eval_window..];
    let final_error = window.iter().sum::<f64>() / window.len() as f64;
    Ok(RunReport {
        per_epoch_test_error,
        final_error,
        wall_time: start.elapsed(),
        clamp_events,
    })
}

/// Expands scheme draws into plain (input, target) items: inputs mixed by
/// λ, targets mixed by λ, γ(λ), or kept, depending on the scheme.
fn build_items(
    scheme: &SchemeSpec,
    emb: &TargetEmbedding,
    dataset: &Dataset,
    pair_slice: &[(usize, usize)],
    lambdas: &[f64],
    items: &mut Vec<(Vec<f64>, Vec<f64>)>,
) -> Result<(), TrainError> {
    if !matches!(scheme, SchemeSpec::Baseline) && lambdas.len() != pair_slice.len() {
        return Err(TrainError::Scheme(SchemeError::LengthMismatch {
            expected: pair_slice.len(),
            pairs: pair_slice.len(),
            got: lambdas.len(),
        }));
    }
    let mix_vec = |a: &[f64], b: &[f64], w: f64| -> Vec<f64> {
        a.iter()
            .zip(b)
            .map(|(p, q)| w * p + (1.0 - w) * q)
            .collect()
    };
    for (k, &(a, b)) in pair_slice.iter().enumerate() {
        let x = dataset.get(a);
        let x_prime = dataset.get(b);
        items.push(match scheme {
            SchemeSpec::Baseline => (x.features.clone(), emb.embed(x.label)?.to_vec()),
            SchemeSpec::Mix { .. } => {
                let lam = lambdas[k];
                (
                    mix_vec(&x.features, &x_prime.features, lam),
                    mix_vec(emb.embed(x.label)?, emb.embed(x_prime.label)?, lam),
                )
            }
            SchemeSpec::Dat { .. } => {
                let s = lambdas[k];
                (
                    mix_vec(&x.features, &x_prime.features, s),
                    emb.embed(x.label)?.to_vec(),
                )
            }
            SchemeSpec::Untied { gamma, .. } => {
                let lam = lambdas[k];
                let g = gamma.eval(lam);
                (
                    mix_vec(&x.features, &x_prime.features, lam),
                    mix_vec(emb.embed(x.label)?, emb.embed(x_prime.label)?, g),
                )
            }
        });
    }
    Ok(())
}

/// Mean scheme loss over the given pairs and draws, with its exact
/// gradient with respect to the model parameters and the clamp count.
/// This is the quantity one SGD step descends.
pub fn scheme_loss_and_grad(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    scheme: &SchemeSpec,
    dataset: &Dataset,
    pair_slice: &[(usize, usize)],
    lambdas: &[f64],
) -> Result<(f64, Vec<f64>, u64), TrainError> {
    let mut items = Vec::with_capacity(pair_slice.len());
    build_items(scheme, emb, dataset, pair_slice, lambdas, &mut items)?;
    Ok(model.loss_and_grad(kind, &items)?)
}

/// Synthetic dataset families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DatasetKind {
    /// Two well-separated Gaussian blobs, one per class.
    Blobs,
    /// Two interleaved spirals.
    TwoSpirals,
    /// Blobs with a fraction of training labels flipped; test labels stay
    /// clean, so fitting the noise shows up as test error.
    NoisyBlobs { flip_rate: f64 },
}

const BLOB_MEAN_X: f64 = 1.5;
const BLOB_STD: f64 = 0.6;
const BLOB_DIM: usize = 8;

/// Seeded train/test pair, `n` examples each.
pub fn make_toy_dataset(
    kind: DatasetKind,
    n: usize,
    seed: u64,
) -> Result<(Dataset, Dataset), TrainError> {
    if n < 10 {
        return Err(TrainError::TooSmall { got: n });
    }
    if let DatasetKind::NoisyBlobs { flip_rate } = kind {
        if !(0.0..=1.0).contains(&flip_rate) {
            return Err(TrainError::BadFlipRate { rate: flip_rate });
        }
    }
    const STREAM_TRAIN: u64 = 0x10;
    const STREAM_TEST: u64 = 0x11;
    const STREAM_FLIP: u64 = 0x12;
    let base = match kind {
        DatasetKind::Blobs | DatasetKind::NoisyBlobs { .. } => DatasetKind::Blobs,
        DatasetKind::TwoSpirals => DatasetKind::TwoSpirals,
    };
    let mut train = generate(base, n, seed, STREAM_TRAIN)?;
    let test = generate(base, n, seed, STREAM_TEST)?;
    if let DatasetKind::NoisyBlobs { flip_rate } = kind {
        let mut rng = stream_rng(seed, STREAM_FLIP, 0);
        let n_labels = train.n_labels();
        let mut examples = train.examples().to_vec();
        for ex in examples.iter_mut() {
            if rng.gen::<f64>() < flip_rate {
                // flip to a uniformly chosen different label
                let offset = rng.gen_range(1..n_labels);
                ex.label = (ex.label + offset) % n_labels;
            }
        }
        train = Dataset::new(examples, n_labels)?;
    }
    Ok((train, test))
}

fn generate(kind: DatasetKind, n: usize, seed: u64, stream: u64) -> Result<Dataset, TrainError> {
    let mut rng = stream_rng(seed, stream, 0);
    let mut examples = Vec::with_capacity(n);
    match kind {
        DatasetKind::Blobs | DatasetKind::NoisyBlobs { .. } => {
            for i in 0..n {
                let label = i % 2;
                let center = if label == 0 {
                    -BLOB_MEAN_X
                } else {
                    BLOB_MEAN_X
                };
                let mut features: Vec<f64> = (0..BLOB_DIM)
                    .map(|_| {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        BLOB_STD * g
                    })
                    .collect();
                features[0] += center;
                examples.push(LabeledExample { features, label });
            }
        }
        DatasetKind::TwoSpirals => {
            for i in 0..n {
                let label = i % 2;
                let t: f64 = rng.gen::<f64>();
                let theta = 0.5 + t * 3.0 * std::f64::consts::PI;
                let r = theta / (0.5 + 3.0 * std::f64::consts::PI);
                let sign = if label == 0 { 1.0 } else { -1.0 };
                let dx: f64 = StandardNormal.sample(&mut rng);
                let dy: f64 = StandardNormal.sample(&mut rng);
                examples.push(LabeledExample {
                    features: vec![
                        sign * r * theta.cos() + 0.02 * dx,
                        sign * r * theta.sin() + 0.02 * dy,
                    ],
                    label,
                });
            }
        }
    }
    Ok(Dataset::new(examples, 2)?)
}
