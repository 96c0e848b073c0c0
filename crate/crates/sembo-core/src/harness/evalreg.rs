//! Held-out predictive evaluation of a checkpointed regressor at varying
//! context lengths.

use serde::{Deserialize, Serialize};

use super::metrics::{predictive_metrics, PredictiveMetrics};
use crate::embed::Embedder;
use crate::error::HarnessError;
use crate::normalizer::Normalizer;
use crate::num::Scalar;
use crate::objectives::BbobFunction;
use crate::pretrain::dataset::TaskRecord;
use crate::pretrain::{generate_task_from_pool, PretrainConfig};
use crate::regressor::{predict, GaussianPrediction, RegressorConfig, RegressorParams};
use crate::rng::derive_seed_indexed;

/// Held-out tasks over the synthetic test split (or any explicit pool).
pub fn generate_held_out_tasks(
    config: &PretrainConfig,
    count: usize,
    pool: &[BbobFunction],
) -> Result<Vec<TaskRecord>, HarnessError> {
    (0..count)
        .map(|i| {
            let seed = derive_seed_indexed(config.seed, "held-out", i as u64);
            generate_task_from_pool(config, seed, pool)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextMetrics {
    pub context: usize,
    pub metrics: PredictiveMetrics,
}

/// Mean predictive metrics over tasks at each context length: the first
/// `context` trials of every trajectory form the history, the following
/// `targets_per_task` trials are predicted.
pub fn in_context_metrics<T: Scalar>(
    params: &RegressorParams<T>,
    model_config: &RegressorConfig,
    embedder: &Embedder<T>,
    records: &[TaskRecord],
    contexts: &[usize],
    targets_per_task: usize,
) -> Result<Vec<ContextMetrics>, HarnessError> {
    assert!(!records.is_empty() && !contexts.is_empty() && targets_per_task >= 1);
    let max_context = contexts.iter().copied().max().expect("non-empty");
    for record in records {
        assert!(
            record.trials.len() >= max_context + targets_per_task,
            "trajectories too short for context {max_context} + {targets_per_task} targets"
        );
    }

    let mut out = Vec::with_capacity(contexts.len());
    for &context in contexts {
        let mut per_task = Vec::with_capacity(records.len());
        for record in records {
            let history_raw = &record.trials[..context];
            let target_raw = &record.trials[context..context + targets_per_task];
            let normalizer =
                Normalizer::fit(&history_raw.iter().map(|(_, y)| *y).collect::<Vec<_>>())?;
            let history_refs: Vec<&str> = history_raw.iter().map(|(s, _)| s.as_str()).collect();
            let history: Vec<_> = embedder
                .embed_batch(&history_refs)?
                .into_iter()
                .zip(history_raw)
                .map(|(e, (_, y))| (e, normalizer.apply(*y)))
                .collect();
            let target_refs: Vec<&str> = target_raw.iter().map(|(s, _)| s.as_str()).collect();
            let targets = embedder.embed_batch(&target_refs)?;
            let preds: Vec<GaussianPrediction> =
                predict(params, model_config, &history, &targets, None)?;
            let ys: Vec<f64> = target_raw.iter().map(|(_, y)| normalizer.apply(*y)).collect();
            per_task.push(predictive_metrics(&preds, &ys));
        }
        out.push(ContextMetrics { context, metrics: average_metrics(&per_task) });
    }
    Ok(out)
}

fn average_metrics(all: &[PredictiveMetrics]) -> PredictiveMetrics {
    let n = all.len() as f64;
    let r2_defined: Vec<f64> = all.iter().filter_map(|m| m.r2).collect();
    PredictiveMetrics {
        nll: all.iter().map(|m| m.nll).sum::<f64>() / n,
        mae: all.iter().map(|m| m.mae).sum::<f64>() / n,
        r2: if r2_defined.is_empty() {
            None
        } else {
            Some(r2_defined.iter().sum::<f64>() / r2_defined.len() as f64)
        },
        mace: all.iter().map(|m| m.mace).sum::<f64>() / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::EmbedderConfig;

    #[test]
    fn held_out_tasks_come_from_the_requested_pool() {
        let config = PretrainConfig { task_count: 1, seed: 4, ..Default::default() };
        let tasks = generate_held_out_tasks(&config, 6, &BbobFunction::TEST).unwrap();
        assert_eq!(tasks.len(), 6);
        for task in &tasks {
            let crate::pretrain::dataset::TaskObjective::Synthetic(obj) = &task.header.objective
            else {
                panic!()
            };
            assert!(!obj.base().is_train(), "{} leaked from the train split", obj.base().name());
        }
    }

    #[test]
    fn in_context_metrics_runs_at_multiple_contexts() {
        let pretrain = PretrainConfig { task_count: 1, seed: 8, ..Default::default() };
        let tasks = generate_held_out_tasks(&pretrain, 3, &BbobFunction::TEST).unwrap();
        let model_config = RegressorConfig {
            d_model: 16,
            n_layers: 1,
            n_heads: 2,
            d_ff: 32,
            d_embed: 32,
            ..RegressorConfig::desk_scale()
        };
        let params = RegressorParams::<f64>::init(&model_config, 2);
        let embedder = Embedder::<f64>::new(&EmbedderConfig { dim: 32, ..Default::default() }).unwrap();
        let out =
            in_context_metrics(&params, &model_config, &embedder, &tasks, &[10, 50], 20).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].context, 10);
        assert_eq!(out[1].context, 50);
        for cm in out {
            assert!(cm.metrics.nll.is_finite());
            assert!(cm.metrics.mae >= 0.0);
        }
    }
}
