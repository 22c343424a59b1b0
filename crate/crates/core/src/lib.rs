//! MixUp, directional adversarial training (DAT), and Untied MixUp over
//! target-linear losses, together with the policy-space maps that connect
//! them and numerical checks that the connected schemes really do share
//! their expected losses.
//!
//! The pieces:
//!
//! - [`policy`]: distributions on [0, 1] as grid bin masses, the three
//!   transforms between scheme families, and seeded sampling.
//! - [`losses`]: one-hot and random-unit-vector target embeddings with
//!   the cross-entropy and negative-cosine losses, both linear in the
//!   target argument.
//! - [`model`]: small differentiable classifiers (linear, one-hidden-layer
//!   MLP) with exact gradients.
//! - [`schemes`]: per-pair and batch losses for the three schemes, pair
//!   sequences, and exact expected losses by grid quadrature.
//! - [`trainer`]: seeded SGD runs on synthetic datasets with the
//!   final-window evaluation protocol and run aggregation.
//! - [`verify`]: equivalence and concentration checks, plus the fixed
//!   suites the CLI exposes.

pub mod losses;
pub mod model;
pub mod policy;
pub mod schemes;
pub mod seeding;
pub mod trainer;
pub mod verify;

pub use losses::{LossKind, TargetEmbedding};
pub use model::{Arch, Head, Model};
pub use policy::{Policy, UntiedScheme, WeightingFunction, DEFAULT_BINS};
pub use schemes::{Dataset, LabeledExample, PairSequence, SchemeTag};
pub use trainer::{
    aggregate_runs, make_toy_dataset, scheme_loss_and_grad, train, DatasetKind, GammaSpec,
    RunReport, RunSummary, SchemeSpec, TrainConfig,
};
