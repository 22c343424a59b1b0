//! Target embeddings and target-linear loss functions.
//!
//! Both losses here are linear in their target argument: cross-entropy
//! over one-hot (simplex) targets and negative cosine similarity over
//! unit-vector targets. Target-linearity is what makes a mixed-target
//! loss decompose exactly into a weighted pair of kept-target losses.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Floor applied inside the log of the cross-entropy loss.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("label {label} out of range for {n_labels} labels")]
    LabelOutOfRange { label: usize, n_labels: usize },
    #[error("embedding needs at least one label")]
    Empty,
    #[error("unit-vector embedding needs dim >= 1, got {dim}")]
    BadDim { dim: usize },
    #[error("malformed embedding at line {line}: {detail}")]
    Parse { line: usize, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingKind {
    OneHot,
    UnitVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    CrossEntropy,
    NegativeCosine,
}

impl LossKind {
    /// The embedding family this loss is defined over.
    pub fn embedding_kind(self) -> EmbeddingKind {
        match self {
            LossKind::CrossEntropy => EmbeddingKind::OneHot,
            LossKind::NegativeCosine => EmbeddingKind::UnitVector,
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LossKind::CrossEntropy => write!(f, "CE"),
            LossKind::NegativeCosine => write!(f, "NC"),
        }
    }
}

/// A fixed map from labels to target vectors: standard basis vectors for
/// cross-entropy, seeded random unit vectors for negative cosine.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetEmbedding {
    kind: EmbeddingKind,
    n_labels: usize,
    dim: usize,
    seed: u64,
    vectors: Vec<Vec<f64>>,
}

impl TargetEmbedding {
    pub fn one_hot(n_labels: usize) -> Result<Self, EmbeddingError> {
        if n_labels == 0 {
            return Err(EmbeddingError::Empty);
        }
        let vectors = (0..n_labels)
            .map(|i| {
                let mut v = vec![0.0; n_labels];
                v[i] = 1.0;
                v
            })
            .collect();
        Ok(TargetEmbedding {
            kind: EmbeddingKind::OneHot,
            n_labels,
            dim: n_labels,
            seed: 0,
            vectors,
        })
    }

    /// I.i.d. standard Gaussian rows normalized to unit length, fixed for
    /// the lifetime of the embedding. Rows are redrawn in the (practically
    /// impossible) event of a duplicate or a degenerate norm.
    pub fn random_unit(n_labels: usize, dim: usize, seed: u64) -> Result<Self, EmbeddingError> {
        if n_labels == 0 {
            return Err(EmbeddingError::Empty);
        }
        if dim == 0 {
            return Err(EmbeddingError::BadDim { dim });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n_labels);
        while vectors.len() < n_labels {
            let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-12 {
                continue;
            }
            for x in v.iter_mut() {
                *x /= norm;
            }
            let duplicate = vectors.iter().any(|w| dot(w, &v) >= 1.0 - 1e-12);
            if !duplicate {
                vectors.push(v);
            }
        }
        Ok(TargetEmbedding {
            kind: EmbeddingKind::UnitVector,
            n_labels,
            dim,
            seed,
            vectors,
        })
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Target vector for a label.
    pub fn embed(&self, label: usize) -> Result<&[f64], EmbeddingError> {
        self.vectors
            .get(label)
            .map(|v| v.as_slice())
            .ok_or(EmbeddingError::LabelOutOfRange {
                label,
                n_labels: self.n_labels,
            })
    }

    /// Text form: header `embedding kind=<k> n_labels=<L> dim=<d> seed=<s>`
    /// followed by one row per label.
    pub fn to_text(&self) -> String {
        let kind = match self.kind {
            EmbeddingKind::OneHot => "one_hot",
            EmbeddingKind::UnitVector => "unit_vector",
        };
        let mut s = format!(
            "embedding kind={kind} n_labels={} dim={} seed={}\n",
            self.n_labels, self.dim, self.seed
        );
        for row in &self.vectors {
            let fields: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
            s.push_str(&fields.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, EmbeddingError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(EmbeddingError::Parse {
            line: 1,
            detail: "empty input".into(),
        })?;
        let mut kind = None;
        let mut n_labels = None;
        let mut dim = None;
        let mut seed = None;
        let body = header
            .strip_prefix("embedding ")
            .ok_or_else(|| EmbeddingError::Parse {
                line: 1,
                detail: format!("expected `embedding ...` header, got `{header}`"),
            })?;
        for field in body.split_whitespace() {
            let (k, v) = field.split_once('=').ok_or_else(|| EmbeddingError::Parse {
                line: 1,
                detail: format!("bad header field `{field}`"),
            })?;
            match k {
                "kind" => {
                    kind = Some(match v {
                        "one_hot" => EmbeddingKind::OneHot,
                        "unit_vector" => EmbeddingKind::UnitVector,
                        other => {
                            return Err(EmbeddingError::Parse {
                                line: 1,
                                detail: format!("unknown kind `{other}`"),
                            })
                        }
                    })
                }
                "n_labels" => n_labels = v.parse().ok(),
                "dim" => dim = v.parse().ok(),
                "seed" => seed = v.parse().ok(),
                other => {
                    return Err(EmbeddingError::Parse {
                        line: 1,
                        detail: format!("unknown header field `{other}`"),
                    })
                }
            }
        }
        let (kind, n_labels, dim, seed) = match (kind, n_labels, dim, seed) {
            (Some(k), Some(n), Some(d), Some(s)) => (k, n, d, s),
            _ => {
                return Err(EmbeddingError::Parse {
                    line: 1,
                    detail: "header must carry kind, n_labels, dim, seed".into(),
                })
            }
        };
        let mut vectors = Vec::with_capacity(n_labels);
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row: Result<Vec<f64>, _> = line.split_whitespace().map(|t| t.parse()).collect();
            let row = row.map_err(|e| EmbeddingError::Parse {
                line: idx + 1,
                detail: format!("{e}"),
            })?;
            if row.len() != dim {
                return Err(EmbeddingError::Parse {
                    line: idx + 1,
                    detail: format!("expected {dim} values, found {}", row.len()),
                });
            }
            vectors.push(row);
        }
        if vectors.len() != n_labels {
            return Err(EmbeddingError::Parse {
                line: vectors.len() + 1,
                detail: format!("expected {n_labels} rows, found {}", vectors.len()),
            });
        }
        Ok(TargetEmbedding {
            kind,
            n_labels,
            dim,
            seed,
            vectors,
        })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Loss value plus the number of clamped log arguments (cross-entropy
/// terms where the prediction fell below [`LOG_FLOOR`] at a coordinate
/// with nonzero target weight).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub clamped: u32,
}

/// Loss of a prediction against a target vector. The target argument may
/// be any linear combination of embedded labels; the loss is linear in it.
pub fn loss(kind: LossKind, prediction: &[f64], target: &[f64]) -> f64 {
    loss_detailed(kind, prediction, target).value
}

pub fn loss_detailed(kind: LossKind, prediction: &[f64], target: &[f64]) -> LossValue {
    debug_assert_eq!(prediction.len(), target.len());
    match kind {
        LossKind::CrossEntropy => {
            let mut value = 0.0;
            let mut clamped = 0;
            for (&q, &t) in prediction.iter().zip(target) {
                if t == 0.0 {
                    continue;
                }
                let q = if q < LOG_FLOOR {
                    clamped += 1;
                    LOG_FLOOR
                } else {
                    q
                };
                value -= t * q.ln();
            }
            LossValue { value, clamped }
        }
        LossKind::NegativeCosine => LossValue {
            value: -dot(prediction, target),
            clamped: 0,
        },
    }
}

/// |ℓ(z', αz₁ + βz₂) − α ℓ(z', z₁) − β ℓ(z', z₂)|.
///
/// Zero (up to rounding) for every loss in this module; the combined
/// target need not itself be a valid target.
pub fn target_linearity_gap(
    kind: LossKind,
    prediction: &[f64],
    z1: &[f64],
    z2: &[f64],
    alpha: f64,
    beta: f64,
) -> f64 {
    let combined: Vec<f64> = z1
        .iter()
        .zip(z2)
        .map(|(a, b)| alpha * a + beta * b)
        .collect();
    let lhs = loss(kind, prediction, &combined);
    let rhs = alpha * loss(kind, prediction, z1) + beta * loss(kind, prediction, z2);
    (lhs - rhs).abs()
}
