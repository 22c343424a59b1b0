//! Flat TOML config for training runs and sweeps. Command-line flags
//! override the file where both are given.

use anyhow::{bail, Context, Result};
use mixdat::losses::LossKind;
use mixdat::model::Arch;
use mixdat::trainer::DatasetKind;
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_dataset")]
    pub dataset: String,
    #[serde(default = "default_flip_rate")]
    pub flip_rate: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_dataset_seed")]
    pub dataset_seed: u64,
    #[serde(default = "default_loss")]
    pub loss: String,
    #[serde(default = "default_arch")]
    pub arch: String,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub weight_decay: f64,
    #[serde(default = "default_eval_window")]
    pub eval_window: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_embedding_dim")]
    pub embedding_dim: usize,
    pub schemes: Vec<String>,
}

fn default_dataset() -> String {
    "noisy_blobs".into()
}
fn default_flip_rate() -> f64 {
    0.2
}
fn default_n() -> usize {
    500
}
fn default_dataset_seed() -> u64 {
    2024
}
fn default_loss() -> String {
    "ce".into()
}
fn default_arch() -> String {
    "mlp".into()
}
fn default_hidden() -> usize {
    64
}
fn default_epochs() -> usize {
    100
}
fn default_batch_size() -> usize {
    32
}
fn default_learning_rate() -> f64 {
    0.1
}
fn default_eval_window() -> usize {
    10
}
fn default_runs() -> usize {
    10
}
fn default_bins() -> usize {
    mixdat::DEFAULT_BINS
}
fn default_embedding_dim() -> usize {
    16
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config `{}`", path.display()))?;
        let config: SweepConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config `{}`", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            bail!(
                "config lists no schemes; add e.g. schemes = [\"baseline\", \"mix:beta:0.9,0.9\"]"
            );
        }
        self.loss_kind()?;
        self.arch_kind()?;
        self.dataset_kind()?;
        Ok(())
    }

    pub fn loss_kind(&self) -> Result<LossKind> {
        match self.loss.as_str() {
            "ce" => Ok(LossKind::CrossEntropy),
            "nc" => Ok(LossKind::NegativeCosine),
            other => bail!("unknown loss `{other}` (use `ce` or `nc`)"),
        }
    }

    pub fn arch_kind(&self) -> Result<Arch> {
        match self.arch.as_str() {
            "linear" => Ok(Arch::Linear),
            "mlp" => Ok(Arch::MlpOneHidden { width: self.hidden }),
            other => bail!("unknown arch `{other}` (use `linear` or `mlp`)"),
        }
    }

    pub fn dataset_kind(&self) -> Result<DatasetKind> {
        match self.dataset.as_str() {
            "blobs" => Ok(DatasetKind::Blobs),
            "two_spirals" => Ok(DatasetKind::TwoSpirals),
            "noisy_blobs" => Ok(DatasetKind::NoisyBlobs {
                flip_rate: self.flip_rate,
            }),
            other => {
                bail!("unknown dataset `{other}` (use `blobs`, `two_spirals`, or `noisy_blobs`)")
            }
        }
    }
}
