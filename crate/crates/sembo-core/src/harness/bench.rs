//! Benchmark suites and multi-seed orchestration.
//!
//! The synthetic suite holds one transformed instance per held-out test
//! function; the combinatorial suite holds one instance per problem kind.
//! Each (task, algorithm) pair runs over `repeats` seeds and lands as
//! `trials.csv` per seed plus aggregated `curves.csv` / `metrics.json`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{best_so_far, log_efficiency, predictive_metrics, PredictiveMetrics};
use super::persist::{write_curves_csv, write_metrics_json, write_trials_csv, MetricsReport};
use super::{Algorithm, ModelHandle, RunResult, RunSetup};
use crate::acquisition::AcquisitionConfig;
use crate::error::HarnessError;
use crate::num::Scalar;
use crate::objectives::{BbobFunction, ComboKind, CombinatorialProblem, SyntheticObjective, TransformOptions};
use crate::pretrain::dataset::TaskObjective;
use crate::rng::{derive_seed, derive_seed_indexed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Bbob,
    Combo,
}

impl SuiteKind {
    pub fn from_name(name: &str) -> Result<Self, HarnessError> {
        match name {
            "bbob" => Ok(Self::Bbob),
            "combo" => Ok(Self::Combo),
            other => Err(HarnessError::Config(format!("unknown suite {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkTask {
    pub name: String,
    pub objective: TaskObjective,
}

/// One transformed instance per test-split function, dimensions cycling
/// through `dims`.
pub fn bbob_test_suite(dims: &[usize], seed: u64) -> Vec<BenchmarkTask> {
    BbobFunction::TEST
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let dim = dims[i % dims.len()];
            let mut rng = rng_from_seed(derive_seed_indexed(seed, "bbob-task", i as u64));
            let obj = SyntheticObjective::sample(*f, dim, TransformOptions::default(), &mut rng);
            BenchmarkTask {
                name: format!("{}_{}d", f.name(), dim),
                objective: TaskObjective::Synthetic(obj),
            }
        })
        .collect()
}

/// One instance per combinatorial kind at the default sizes.
pub fn combo_suite(seed: u64) -> Vec<BenchmarkTask> {
    let sizes: [(ComboKind, usize, usize); 8] = [
        (ComboKind::Tsp, 10, 0),
        (ComboKind::Flowshop, 10, 0),
        (ComboKind::LinearOrdering, 10, 0),
        (ComboKind::Qap, 8, 0),
        (ComboKind::NQueens, 10, 0),
        (ComboKind::Modular, 20, 5),
        (ComboKind::Coverage, 20, 5),
        (ComboKind::LogDet, 20, 5),
    ];
    sizes
        .iter()
        .enumerate()
        .map(|(i, (kind, n, k))| {
            let mut rng = rng_from_seed(derive_seed_indexed(seed, "combo-task", i as u64));
            let prob = CombinatorialProblem::sample(*kind, *n, *k, &mut rng)
                .expect("suite sizes are valid");
            let name = if kind.is_choice() {
                format!("{}_{}c{}", kind.name(), n, k)
            } else {
                format!("{}_{}", kind.name(), n)
            };
            BenchmarkTask { name, objective: TaskObjective::Combinatorial(prob) }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    pub suite: SuiteKind,
    pub algorithms: Vec<String>,
    pub budget: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Dimensions the synthetic suite cycles through.
    pub bbob_dims: Vec<usize>,
    pub acquisition: AcquisitionConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            suite: SuiteKind::Combo,
            algorithms: vec!["regevo_etr".into(), "regevo".into(), "random".into()],
            budget: 100,
            repeats: 10,
            seed: 0,
            bbob_dims: vec![2, 3, 4],
            acquisition: AcquisitionConfig::default(),
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<Vec<Algorithm>, HarnessError> {
        if self.budget < 1 || self.repeats < 1 {
            return Err(HarnessError::Config("budget and repeats must be >= 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(HarnessError::Config("at least one algorithm required".into()));
        }
        self.algorithms.iter().map(|a| Algorithm::from_name(a)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct AlgSummary {
    pub algorithm: Algorithm,
    /// Best-so-far curve per seed.
    pub curves: Vec<Vec<f64>>,
    pub mean_final_best: f64,
    pub mean_curve: Vec<f64>,
    pub predictive: Option<PredictiveMetrics>,
}

#[derive(Debug, Clone)]
pub struct TaskSummary {
    pub name: String,
    pub per_alg: BTreeMap<String, AlgSummary>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkSummary {
    pub tasks: Vec<TaskSummary>,
}

/// Run every (task, algorithm, seed) combination; when `out_dir` is given,
/// artifacts are written underneath it.
pub fn run_benchmark<T: Scalar>(
    config: &BenchmarkConfig,
    tasks: &[BenchmarkTask],
    model: Option<&ModelHandle<'_, T>>,
    out_dir: Option<&Path>,
) -> Result<BenchmarkSummary, HarnessError> {
    let algorithms = config.validate()?;
    if algorithms.iter().any(|a| a.is_model_based()) && model.is_none() {
        return Err(HarnessError::Config(
            "benchmark includes a model-based algorithm but no checkpoint was provided".into(),
        ));
    }
    let reference = algorithms
        .iter()
        .copied()
        .find(Algorithm::is_model_based)
        .unwrap_or(algorithms[0]);

    let mut summaries = Vec::new();
    for task in tasks {
        let mut per_alg = BTreeMap::new();
        for &alg in &algorithms {
            let mut curves = Vec::with_capacity(config.repeats);
            let mut predictions = Vec::new();
            for seed_index in 0..config.repeats {
                let run_seed = derive_seed_indexed(
                    derive_seed(config.seed, &task.name),
                    alg.name(),
                    seed_index as u64,
                );
                let setup = RunSetup {
                    objective: &task.objective,
                    algorithm: alg,
                    budget: config.budget,
                    seed: run_seed,
                    model: model.map(|m| ModelHandle {
                        params: m.params,
                        config: m.config,
                        embedder: m.embedder,
                    }),
                    acq_config: config.acquisition,
                    collect_predictions: alg.is_model_based(),
                };
                let RunResult { log, predictions: preds } =
                    super::run_optimization(&setup).map_err(|f| f.error)?;
                if let Some(dir) = out_dir {
                    let seed_dir = dir.join(&task.name).join(alg.name()).join(format!("seed_{seed_index}"));
                    std::fs::create_dir_all(&seed_dir)?;
                    write_trials_csv(&seed_dir.join("trials.csv"), &log)?;
                }
                curves.push(best_so_far(&log.rows.iter().map(|r| r.y).collect::<Vec<_>>()));
                predictions.extend(preds);
            }
            let mean_curve: Vec<f64> = (0..config.budget)
                .map(|t| curves.iter().map(|c| c[t]).sum::<f64>() / curves.len() as f64)
                .collect();
            let mean_final_best = *mean_curve.last().expect("budget >= 1");
            let predictive = if predictions.is_empty() {
                None
            } else {
                let (preds, ys): (Vec<_>, Vec<_>) = predictions.into_iter().unzip();
                Some(predictive_metrics(&preds, &ys))
            };
            per_alg.insert(
                alg.name().to_string(),
                AlgSummary { algorithm: alg, curves, mean_final_best, mean_curve, predictive },
            );
        }

        if let Some(dir) = out_dir {
            let ref_curve = per_alg[reference.name()].mean_curve.clone();
            for (name, summary) in &per_alg {
                let alg_dir = dir.join(&task.name).join(name);
                std::fs::create_dir_all(&alg_dir)?;
                write_curves_csv(&alg_dir.join("curves.csv"), &summary.curves)?;
                let mut log_eff = BTreeMap::new();
                log_eff.insert(
                    format!("{name}_vs_{}", reference.name()),
                    log_efficiency(&summary.mean_curve, &ref_curve).score,
                );
                let report = MetricsReport {
                    nll: summary.predictive.map(|m| m.nll),
                    mae: summary.predictive.map(|m| m.mae),
                    r2: summary.predictive.and_then(|m| m.r2),
                    mace: summary.predictive.map(|m| m.mace),
                    log_efficiency: log_eff,
                };
                write_metrics_json(&alg_dir.join("metrics.json"), &report)?;
            }
        }
        summaries.push(TaskSummary { name: task.name.clone(), per_alg });
    }
    Ok(BenchmarkSummary { tasks: summaries })
}
