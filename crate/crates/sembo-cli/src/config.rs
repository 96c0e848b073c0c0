//! JSON config files for the subcommands. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use sembo_core::acquisition::AcquisitionConfig;
use sembo_core::embed::EmbedderConfig;
use sembo_core::error::{HarnessError, ObjectiveError};
use sembo_core::harness::bench::BenchmarkConfig;
use sembo_core::objectives::{BbobFunction, ComboKind, CombinatorialProblem, SyntheticObjective, TransformOptions};
use sembo_core::pretrain::dataset::TaskObjective;
use sembo_core::pretrain::PretrainConfig;
use sembo_core::regressor::RegressorConfig;
use sembo_core::rng::rng_from_seed;

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read config {path:?}: {e}")))?;
    serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("config {path:?}: {e}")))
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PretrainFileConfig {
    pub pretrain: PretrainConfig,
    pub model: RegressorConfig,
    pub embedder: EmbedderConfig,
    /// Read an existing dataset instead of generating one.
    pub dataset: Option<PathBuf>,
    /// Checkpoint file name within the output directory.
    pub checkpoint_name: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct GenDataFileConfig {
    pub pretrain: PretrainConfig,
    /// Dataset file name within the output directory.
    pub dataset_name: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    /// A transformed synthetic function instance.
    Bbob {
        function: String,
        dim: usize,
        #[serde(default)]
        instance_seed: u64,
        #[serde(default = "default_true")]
        shift: bool,
        #[serde(default = "default_true")]
        rotate: bool,
        #[serde(default = "default_true")]
        discretize: bool,
    },
    /// A sampled combinatorial instance.
    Combo {
        kind: String,
        n: usize,
        #[serde(default)]
        k: usize,
        #[serde(default)]
        instance_seed: u64,
    },
    /// A serialized instance file (JSON `TaskObjective`).
    InstanceFile { path: PathBuf },
}

fn default_true() -> bool {
    true
}

impl TaskSpec {
    pub fn build(&self) -> Result<TaskObjective, HarnessError> {
        match self {
            TaskSpec::Bbob { function, dim, instance_seed, shift, rotate, discretize } => {
                let base = BbobFunction::from_name(function)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                let mut rng = rng_from_seed(*instance_seed);
                let opts = TransformOptions { shift: *shift, rotate: *rotate, discretize: *discretize };
                Ok(TaskObjective::Synthetic(SyntheticObjective::sample(base, *dim, opts, &mut rng)))
            }
            TaskSpec::Combo { kind, n, k, instance_seed } => {
                let kind = ComboKind::from_name(kind)
                    .map_err(|e: ObjectiveError| HarnessError::Config(e.to_string()))?;
                let mut rng = rng_from_seed(*instance_seed);
                let prob = CombinatorialProblem::sample(kind, *n, *k, &mut rng)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                Ok(TaskObjective::Combinatorial(prob))
            }
            TaskSpec::InstanceFile { path } => load_json(path),
        }
    }

    pub fn name(&self) -> String {
        match self {
            TaskSpec::Bbob { function, dim, .. } => format!("{function}_{dim}d"),
            TaskSpec::Combo { kind, n, k, .. } => {
                if *k > 0 {
                    format!("{kind}_{n}c{k}")
                } else {
                    format!("{kind}_{n}")
                }
            }
            TaskSpec::InstanceFile { path } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "instance".to_string()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeFileConfig {
    pub task: TaskSpec,
    pub algorithm: String,
    pub budget: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    pub checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub embedder: EmbedderConfig,
    #[serde(default)]
    pub acquisition: AcquisitionConfig,
}

fn default_repeats() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkFileConfig {
    pub benchmark: BenchmarkConfig,
    pub checkpoint: Option<PathBuf>,
    pub embedder: EmbedderConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalFileConfig {
    pub tasks: usize,
    pub contexts: Vec<usize>,
    pub targets_per_task: usize,
    pub seed: u64,
    pub trajectory_len: usize,
    pub dim_range: [usize; 2],
    pub embedder: EmbedderConfig,
}

impl Default for EvalFileConfig {
    fn default() -> Self {
        Self {
            tasks: 20,
            contexts: vec![10, 50],
            targets_per_task: 30,
            seed: 777,
            trajectory_len: 100,
            dim_range: [2, 6],
            embedder: EmbedderConfig::default(),
        }
    }
}
