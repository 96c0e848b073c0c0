//! End-to-end optimization runs, baselines, and artifact persistence.

pub mod bench;
pub mod evalreg;
pub mod metrics;
pub mod persist;

use serde::{Deserialize, Serialize};

use crate::acquisition::{plain_regevo_suggest, AcquisitionConfig, Suggester};
use crate::embed::Embedder;
use crate::error::HarnessError;
use crate::normalizer::Normalizer;
use crate::num::Scalar;
use crate::pretrain::dataset::TaskObjective;
use crate::regressor::{predict, GaussianPrediction, RegressorConfig, RegressorParams};
use crate::rng::{derive_seed_indexed, rng_from_seed};
use crate::space::{Candidate, SearchSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Model-guided suggestion (firefly over UCB on flat spaces).
    Etr,
    /// Uniform random search.
    Random,
    /// Plain Regularized Evolution.
    RegEvo,
    /// Regularized Evolution with best-of-k UCB ranking.
    RegEvoEtr,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Etr => "etr",
            Self::Random => "random",
            Self::RegEvo => "regevo",
            Self::RegEvoEtr => "regevo_etr",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, HarnessError> {
        match name {
            "etr" => Ok(Self::Etr),
            "random" => Ok(Self::Random),
            "regevo" => Ok(Self::RegEvo),
            "regevo_etr" => Ok(Self::RegEvoEtr),
            other => Err(HarnessError::Config(format!("unknown algorithm {other:?}"))),
        }
    }

    pub fn is_model_based(&self) -> bool {
        matches!(self, Self::Etr | Self::RegEvoEtr)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub candidate: String,
    pub y: f64,
    pub best_so_far: f64,
    /// Reserved timing column; written as 0 so same-seed artifacts are
    /// byte-identical.
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialLog {
    pub rows: Vec<TrialRow>,
}

impl TrialLog {
    pub fn best_curve(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.best_so_far).collect()
    }

    pub fn final_best(&self) -> f64 {
        self.rows.last().map(|r| r.best_so_far).unwrap_or(f64::NEG_INFINITY)
    }
}

/// A loaded regressor plus its embedder.
pub struct ModelHandle<'a, T: Scalar> {
    pub params: &'a RegressorParams<T>,
    pub config: &'a RegressorConfig,
    pub embedder: &'a Embedder<T>,
}

pub struct RunSetup<'a, T: Scalar> {
    pub objective: &'a TaskObjective,
    pub algorithm: Algorithm,
    pub budget: usize,
    pub seed: u64,
    pub model: Option<ModelHandle<'a, T>>,
    pub acq_config: AcquisitionConfig,
    /// Record one-step-ahead predictions of each evaluated candidate once the
    /// model is active; feeds the predictive metrics.
    pub collect_predictions: bool,
}

#[derive(Debug)]
pub struct RunResult {
    pub log: TrialLog,
    /// `(prediction, realized normalized y)` pairs for model-driven trials.
    pub predictions: Vec<(GaussianPrediction, f64)>,
}

/// A run that aborted mid-way; the partial log is preserved for flushing.
#[derive(Debug)]
pub struct RunFailure {
    pub partial: TrialLog,
    pub error: HarnessError,
}

/// Sequential suggest-evaluate-append loop; deterministic per seed.
pub fn run_optimization<T: Scalar>(setup: &RunSetup<T>) -> Result<RunResult, RunFailure> {
    assert!(setup.budget >= 1, "budget must be at least 1");
    if setup.algorithm.is_model_based() && setup.model.is_none() {
        return Err(RunFailure {
            partial: TrialLog::default(),
            error: HarnessError::Config(format!(
                "algorithm {} needs a checkpointed model",
                setup.algorithm.name()
            )),
        });
    }
    let space = setup.objective.search_space();
    let mut history: Vec<(Candidate, f64)> = Vec::with_capacity(setup.budget);
    let mut log = TrialLog::default();
    let mut predictions = Vec::new();
    let mut best = f64::NEG_INFINITY;

    for trial in 0..setup.budget {
        let mut rng = rng_from_seed(derive_seed_indexed(setup.seed, "trial", trial as u64));
        let cand = match setup.algorithm {
            Algorithm::Random => space.sample(&mut rng),
            Algorithm::RegEvo => plain_regevo_suggest(&space, &history, &setup.acq_config, &mut rng),
            Algorithm::Etr | Algorithm::RegEvoEtr => {
                let model = setup.model.as_ref().expect("checked above");
                let suggester = Suggester {
                    space: &space,
                    params: model.params,
                    model_config: model.config,
                    embedder: model.embedder,
                    acq_config: &setup.acq_config,
                    metadata_text: None,
                };
                match suggester.suggest(&history, &mut rng) {
                    Ok(c) => c,
                    Err(e) => return Err(RunFailure { partial: log, error: e.into() }),
                }
            }
        };
        let candidate_string = match space.candidate_to_string(&cand) {
            Ok(s) => s,
            Err(e) => return Err(RunFailure { partial: log, error: e.into() }),
        };
        let prediction = if setup.collect_predictions && setup.algorithm.is_model_based() {
            let model = setup.model.as_ref().expect("checked above");
            match one_step_prediction(model, &space, &history, &cand, &setup.acq_config) {
                Ok(p) => p,
                Err(e) => return Err(RunFailure { partial: log, error: e }),
            }
        } else {
            None
        };
        let y = match setup.objective.eval_max(&cand) {
            Ok(y) => y,
            Err(source) => {
                return Err(RunFailure {
                    partial: log,
                    error: HarnessError::Objective { trial, source },
                })
            }
        };
        if let Some((pred, normalizer)) = prediction {
            predictions.push((pred, normalizer.apply(y)));
        }
        best = best.max(y);
        log.rows.push(TrialRow { trial, candidate: candidate_string, y, best_so_far: best, wall_ms: 0 });
        history.push((cand, y));
    }
    Ok(RunResult { log, predictions })
}

/// Predict the objective at `cand` given the current history, returning the
/// normalizer so the realized value can be mapped into the same space.
/// `None` during the warmup window where suggestions are not model-driven.
fn one_step_prediction<T: Scalar>(
    model: &ModelHandle<'_, T>,
    space: &SearchSpace,
    history: &[(Candidate, f64)],
    cand: &Candidate,
    acq: &AcquisitionConfig,
) -> Result<Option<(GaussianPrediction, Normalizer)>, HarnessError> {
    let warmup = match space {
        SearchSpace::Flat { .. } => acq.flat_warmup.max(2),
        _ => acq.ranking_start_trial.max(2),
    };
    if history.len() < warmup {
        return Ok(None);
    }
    let ys: Vec<f64> = history.iter().map(|(_, y)| *y).collect();
    let normalizer = Normalizer::fit(&ys)?;
    let strings: Vec<String> = history
        .iter()
        .map(|(c, _)| space.candidate_to_string(c))
        .collect::<Result<_, _>>()?;
    let refs: Vec<&str> = strings.iter().map(|s| s.as_str()).collect();
    let embeds = model.embedder.embed_batch(&refs)?;
    let history_embeds: Vec<_> = embeds
        .into_iter()
        .zip(&ys)
        .map(|(e, &y)| (e, normalizer.apply(y)))
        .collect();
    let target = model.embedder.embed(&space.candidate_to_string(cand)?)?;
    let preds = predict(model.params, model.config, &history_embeds, &[target], None)?;
    Ok(Some((preds[0], normalizer)))
}
