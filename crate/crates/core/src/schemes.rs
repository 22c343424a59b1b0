//! Per-example and batch losses for MixUp, DAT, and Untied MixUp, plus
//! pair-sequence construction and exact expected losses by quadrature
//! over a policy grid.

use crate::losses::{self, LossKind, TargetEmbedding};
use crate::model::{Model, ModelError};
use crate::policy::{Policy, WeightingFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("feature dimension mismatch: {a} vs {b}")]
    DimMismatch { a: usize, b: usize },
    #[error("expected {expected} lambda draws for {pairs} pairs, got {got}")]
    LengthMismatch {
        expected: usize,
        pairs: usize,
        got: usize,
    },
    #[error("untied scheme loss needs a weighting function")]
    MissingWeighting,
    #[error("weighting function supplied for a scheme that does not use one")]
    UnexpectedWeighting,
    #[error("pair index {index} out of range for dataset of {len} examples")]
    PairOutOfRange { index: usize, len: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("example {index} has dimension {got}, dataset dimension is {expected}")]
    BadExample {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("example {index} has label {label}, dataset has {n_labels} labels")]
    BadLabel {
        index: usize,
        label: usize,
        n_labels: usize,
    },
    #[error("malformed dataset at line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Embedding(#[from] losses::EmbeddingError),
}

/// A feature vector with its true label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    pub label: usize,
}

/// A set of labeled examples with consistent dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    examples: Vec<LabeledExample>,
    dim: usize,
    n_labels: usize,
}

impl Dataset {
    pub fn new(examples: Vec<LabeledExample>, n_labels: usize) -> Result<Self, SchemeError> {
        let dim = examples
            .first()
            .ok_or(SchemeError::EmptyDataset)?
            .features
            .len();
        for (index, ex) in examples.iter().enumerate() {
            if ex.features.len() != dim {
                return Err(SchemeError::BadExample {
                    index,
                    got: ex.features.len(),
                    expected: dim,
                });
            }
            if ex.label >= n_labels {
                return Err(SchemeError::BadLabel {
                    index,
                    label: ex.label,
                    n_labels,
                });
            }
        }
        Ok(Dataset {
            examples,
            dim,
            n_labels,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn get(&self, i: usize) -> &LabeledExample {
        &self.examples[i]
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    /// Text form: header `dataset n=<K> dim=<d> labels=<L>`, one example
    /// per line, features then label.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "dataset n={} dim={} labels={}\n",
            self.examples.len(),
            self.dim,
            self.n_labels
        );
        for ex in &self.examples {
            for f in &ex.features {
                s.push_str(&format!("{f} "));
            }
            s.push_str(&format!("{}\n", ex.label));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, SchemeError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(SchemeError::Parse {
            line: 1,
            detail: "empty input".into(),
        })?;
        let parse_err = |line: usize, detail: String| SchemeError::Parse { line, detail };
        let body = header.strip_prefix("dataset ").ok_or_else(|| {
            parse_err(1, format!("expected `dataset ...` header, got `{header}`"))
        })?;
        let mut n = None;
        let mut dim = None;
        let mut labels = None;
        for field in body.split_whitespace() {
            match field.split_once('=') {
                Some(("n", v)) => n = v.parse().ok(),
                Some(("dim", v)) => dim = v.parse().ok(),
                Some(("labels", v)) => labels = v.parse().ok(),
                _ => return Err(parse_err(1, format!("bad header field `{field}`"))),
            }
        }
        let (n, dim, labels): (usize, usize, usize) = match (n, dim, labels) {
            (Some(n), Some(d), Some(l)) => (n, d, l),
            _ => return Err(parse_err(1, "header must carry n, dim, labels".into())),
        };
        let mut examples = Vec::with_capacity(n);
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != dim + 1 {
                return Err(parse_err(
                    idx + 1,
                    format!("expected {} fields, found {}", dim + 1, fields.len()),
                ));
            }
            let features: Result<Vec<f64>, _> = fields[..dim].iter().map(|t| t.parse()).collect();
            let features = features.map_err(|e| parse_err(idx + 1, format!("{e}")))?;
            let label: usize = fields[dim]
                .parse()
                .map_err(|e| parse_err(idx + 1, format!("bad label: {e}")))?;
            examples.push(LabeledExample { features, label });
        }
        if examples.len() != n {
            return Err(parse_err(
                examples.len() + 1,
                format!("header says {n} examples, found {}", examples.len()),
            ));
        }
        Dataset::new(examples, labels)
    }
}

/// A sequence of example pairs, by index into a dataset. The `symmetric`
/// flag records whether every ordered pair (a, b) occurs as often as
/// (b, a); it is established by multiset comparison at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSequence {
    pairs: Vec<(usize, usize)>,
    symmetric: bool,
}

impl PairSequence {
    pub fn from_pairs(pairs: Vec<(usize, usize)>) -> Self {
        let symmetric = pair_multiset_symmetric(&pairs);
        PairSequence { pairs, symmetric }
    }

    /// Two independent shuffled copies of `0..n`, zipped. Each example
    /// appears exactly once in first position and once in second; the
    /// sequence approximates i.i.d. draws from the uniform pair
    /// distribution but is not marked symmetric.
    pub fn shuffled(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let first = permutation(n, &mut rng);
        let second = permutation(n, &mut rng);
        PairSequence {
            pairs: first.into_iter().zip(second).collect(),
            symmetric: false,
        }
    }

    /// The sequence concatenated with its swapped copy; symmetric by
    /// construction.
    pub fn symmetrize(&self) -> Self {
        let mut pairs = self.pairs.clone();
        pairs.extend(self.pairs.iter().map(|&(a, b)| (b, a)));
        PairSequence {
            pairs,
            symmetric: true,
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    fn check_bounds(&self, dataset: &Dataset) -> Result<(), SchemeError> {
        for &(a, b) in &self.pairs {
            let bad = if a >= dataset.len() {
                Some(a)
            } else if b >= dataset.len() {
                Some(b)
            } else {
                None
            };
            if let Some(index) = bad {
                return Err(SchemeError::PairOutOfRange {
                    index,
                    len: dataset.len(),
                });
            }
        }
        Ok(())
    }
}

fn pair_multiset_symmetric(pairs: &[(usize, usize)]) -> bool {
    let mut counts: HashMap<(usize, usize), i64> = HashMap::new();
    for &(a, b) in pairs {
        if a != b {
            // count (a,b) against (b,a); self-pairs are their own mirror
            let key = if a < b { (a, b) } else { (b, a) };
            *counts.entry(key).or_insert(0) += if a < b { 1 } else { -1 };
        }
    }
    counts.values().all(|&c| c == 0)
}

fn permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    idx
}

fn mix_features(x: &[f64], x_prime: &[f64], lambda: f64) -> Result<Vec<f64>, SchemeError> {
    if x.len() != x_prime.len() {
        return Err(SchemeError::DimMismatch {
            a: x.len(),
            b: x_prime.len(),
        });
    }
    Ok(x.iter()
        .zip(x_prime)
        .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
        .collect())
}

fn mix_targets(t: &[f64], t_prime: &[f64], weight: f64) -> Vec<f64> {
    t.iter()
        .zip(t_prime)
        .map(|(a, b)| weight * a + (1.0 - weight) * b)
        .collect()
}

/// MixUp loss for one pair: inputs mixed by λ, targets mixed by the same
/// λ, loss evaluated at the model's prediction for the mixed input.
pub fn mix_loss(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    x: &LabeledExample,
    x_prime: &LabeledExample,
    lambda: f64,
) -> Result<f64, SchemeError> {
    untied_loss(model, emb, kind, x, x_prime, lambda, lambda)
}

/// DAT loss for one pair: `x` perturbed toward `x_prime` by fraction
/// `1 - s`, target kept at `x`'s label.
pub fn dat_loss(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    x: &LabeledExample,
    x_prime: &LabeledExample,
    s: f64,
) -> Result<f64, SchemeError> {
    let input = mix_features(&x.features, &x_prime.features, s)?;
    let prediction = model.forward(&input)?;
    Ok(losses::loss(kind, &prediction, emb.embed(x.label)?))
}

/// Untied MixUp loss for one pair: inputs mixed by λ, targets mixed by an
/// independent weight γ(λ).
pub fn untied_loss(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    x: &LabeledExample,
    x_prime: &LabeledExample,
    lambda: f64,
    gamma_value: f64,
) -> Result<f64, SchemeError> {
    let input = mix_features(&x.features, &x_prime.features, lambda)?;
    let prediction = model.forward(&input)?;
    let target = mix_targets(emb.embed(x.label)?, emb.embed(x_prime.label)?, gamma_value);
    Ok(losses::loss(kind, &prediction, &target))
}

/// Draws W ~ Bernoulli(γ(λ)) and returns the DAT loss of `x → x'` at λ
/// when W = 1, else of `x' → x` at 1 − λ. Averages to the untied loss.
#[allow(clippy::too_many_arguments)]
pub fn bernoulli_dat_surrogate(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    x: &LabeledExample,
    x_prime: &LabeledExample,
    lambda: f64,
    gamma_value: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64, SchemeError> {
    let w = rng.gen::<f64>() < gamma_value;
    if w {
        dat_loss(model, emb, kind, x, x_prime, lambda)
    } else {
        dat_loss(model, emb, kind, x_prime, x, 1.0 - lambda)
    }
}

fn check_lengths(pairs: &PairSequence, lambdas: &[f64]) -> Result<(), SchemeError> {
    if pairs.len() != lambdas.len() {
        return Err(SchemeError::LengthMismatch {
            expected: pairs.len(),
            pairs: pairs.len(),
            got: lambdas.len(),
        });
    }
    Ok(())
}

/// Mean MixUp loss over a pair sequence with per-pair λ draws.
pub fn batch_mix_loss(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    dataset: &Dataset,
    pairs: &PairSequence,
    lambdas: &[f64],
) -> Result<f64, SchemeError> {
    check_lengths(pairs, lambdas)?;
    pairs.check_bounds(dataset)?;
    let mut total = 0.0;
    for (&(a, b), &lam) in pairs.pairs().iter().zip(lambdas) {
        total += mix_loss(model, emb, kind, dataset.get(a), dataset.get(b), lam)?;
    }
    Ok(total / pairs.len().max(1) as f64)
}

/// Mean DAT loss over a pair sequence with per-pair policy draws.
pub fn batch_dat_loss(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    dataset: &Dataset,
    pairs: &PairSequence,
    lambdas: &[f64],
) -> Result<f64, SchemeError> {
    check_lengths(pairs, lambdas)?;
    pairs.check_bounds(dataset)?;
    let mut total = 0.0;
    for (&(a, b), &lam) in pairs.pairs().iter().zip(lambdas) {
        total += dat_loss(model, emb, kind, dataset.get(a), dataset.get(b), lam)?;
    }
    Ok(total / pairs.len().max(1) as f64)
}

/// Mean Untied MixUp loss; γ is looked up at the bin containing each λ.
pub fn batch_untied_loss(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    dataset: &Dataset,
    pairs: &PairSequence,
    lambdas: &[f64],
    weighting: &WeightingFunction,
) -> Result<f64, SchemeError> {
    check_lengths(pairs, lambdas)?;
    pairs.check_bounds(dataset)?;
    let mut total = 0.0;
    for (&(a, b), &lam) in pairs.pairs().iter().zip(lambdas) {
        let gamma = weighting.lookup(lam);
        total += untied_loss(model, emb, kind, dataset.get(a), dataset.get(b), lam, gamma)?;
    }
    Ok(total / pairs.len().max(1) as f64)
}

/// Which batch construction a policy drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeTag {
    Mix,
    Dat,
    Untied,
}

impl std::fmt::Display for SchemeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SchemeTag::Mix => write!(f, "mix"),
            SchemeTag::Dat => write!(f, "dat"),
            SchemeTag::Untied => write!(f, "umix"),
        }
    }
}

/// Expected batch loss under i.i.d. λ draws from `policy`, computed by
/// exact quadrature over the policy grid: the expectation distributes
/// over the per-pair mean, so this is
/// `(1/K) Σ_k Σ_i mass_i · ℓ(x_k, x'_k, midpoint_i)`.
#[allow(clippy::too_many_arguments)]
pub fn expected_loss(
    model: &Model,
    emb: &TargetEmbedding,
    kind: LossKind,
    tag: SchemeTag,
    dataset: &Dataset,
    pairs: &PairSequence,
    policy: &Policy,
    weighting: Option<&WeightingFunction>,
) -> Result<f64, SchemeError> {
    match (tag, weighting) {
        (SchemeTag::Untied, None) => return Err(SchemeError::MissingWeighting),
        (SchemeTag::Mix | SchemeTag::Dat, Some(_)) => return Err(SchemeError::UnexpectedWeighting),
        _ => {}
    }
    pairs.check_bounds(dataset)?;
    let masses = policy.masses();
    let mut total = 0.0;
    for &(a, b) in pairs.pairs() {
        let x = dataset.get(a);
        let x_prime = dataset.get(b);
        let mut pair_sum = 0.0;
        for (i, &mass) in masses.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let lam = policy.midpoint(i);
            let value = match tag {
                SchemeTag::Mix => mix_loss(model, emb, kind, x, x_prime, lam)?,
                SchemeTag::Dat => dat_loss(model, emb, kind, x, x_prime, lam)?,
                SchemeTag::Untied => {
                    let gamma = weighting.unwrap().values()[i];
                    untied_loss(model, emb, kind, x, x_prime, lam, gamma)?
                }
            };
            pair_sum += mass * value;
        }
        total += pair_sum;
    }
    Ok(total / pairs.len().max(1) as f64)
}
