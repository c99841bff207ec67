//! TOML configuration files for runs (`train`, `eval`, `compare`) and for
//! the synthetic generator (`gen-data`). Both carry `schema_version = 1`.

use std::path::Path;

use predproto_core::data::SynthConfig;
use predproto_core::training::{OptimizerKind, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractorKindConfig {
    ClassOrthogonal,
    FactorCoded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractorConfig {
    pub kind: ExtractorKindConfig,
    /// Seed of the orthonormal basis (and JLT, when `k < C`).
    #[serde(default)]
    pub seed: u64,
    /// Display names for the factor columns, in column order.
    #[serde(default)]
    pub factor_names: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden_dims: Vec<usize>,
    pub embedding_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerName {
    Sgd,
    Adam,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}
fn default_optimizer() -> OptimizerName {
    OptimizerName::Adam
}
fn default_learning_rate() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerName,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Defaults to `1/embedding_dim`.
    #[serde(default)]
    pub lambda_p: Option<f64>,
    #[serde(default)]
    pub mixup_alpha: f64,
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}
fn default_train_fraction() -> f64 {
    0.8
}
fn default_jobs() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub split_seed: u64,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            seeds: default_seeds(),
            train_fraction: default_train_fraction(),
            split_seed: 0,
            jobs: default_jobs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub model: ModelConfig,
    pub extractor: ExtractorConfig,
    pub training: TrainingConfig,
    #[serde(default)]
    pub compare: CompareConfig,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn check_version(found: u32) -> Result<()> {
    if found != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "unsupported schema_version {found}, expected {SCHEMA_VERSION}"
        )));
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        check_version(cfg.schema_version)?;
        cfg.train_config(cfg.seed)
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.compare.seeds.is_empty() {
            return Err(CliError::Config("compare.seeds must not be empty".into()));
        }
        if cfg.compare.jobs == 0 {
            return Err(CliError::Config("compare.jobs must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read(path)?).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let t = &self.training;
        TrainConfig {
            hidden_dims: self.model.hidden_dims.clone(),
            embedding_dim: self.model.embedding_dim,
            lambda_p: t.lambda_p,
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            optimizer: match t.optimizer {
                OptimizerName::Sgd => OptimizerKind::Sgd,
                OptimizerName::Adam => OptimizerKind::Adam {
                    beta1: t.beta1,
                    beta2: t.beta2,
                    epsilon: t.epsilon,
                },
            },
            mixup_alpha: t.mixup_alpha,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub name: String,
    /// One row of (low, medium, high) probabilities per class.
    pub table: Vec<[f64; 3]>,
}

/// Generator configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthFile {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub class_count: usize,
    pub input_dim: usize,
    pub samples_per_class: usize,
    pub separation: f64,
    pub noise: f64,
    #[serde(default)]
    pub factor_strength: f64,
    #[serde(default)]
    pub factors: Vec<FactorSpec>,
}

impl SynthFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: SynthFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        check_version(cfg.schema_version)?;
        cfg.to_synth_config(cfg.seed)
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read(path)?).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_synth_config(&self, seed: u64) -> SynthConfig {
        SynthConfig {
            class_count: self.class_count,
            input_dim: self.input_dim,
            samples_per_class: self.samples_per_class,
            factor_names: self.factors.iter().map(|f| f.name.clone()).collect(),
            level_tables: self.factors.iter().map(|f| f.table.clone()).collect(),
            separation: self.separation,
            noise: self.noise,
            factor_strength: self.factor_strength,
            seed,
        }
    }
}
