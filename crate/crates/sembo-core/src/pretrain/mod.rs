//! Offline task generation and regressor pretraining.
//!
//! Tasks pair a sampled objective (train-split synthetic function with
//! random transforms, or a random combinatorial instance) with a trajectory
//! of uniform-random evaluated candidates. Each training example cuts a
//! trajectory at a random point: the prefix is history, everything after is
//! a target, and objective values are normalized by a state fitted on the
//! history slice only. The loss is the summed Gaussian NLL over a task's
//! targets, averaged across the batch.

pub mod dataset;

use serde::{Deserialize, Serialize};

use crate::embed::Embedder;
use crate::error::HarnessError;
use crate::normalizer::Normalizer;
use crate::num::Scalar;
use crate::objectives::{BbobFunction, ComboKind, CombinatorialProblem, SyntheticObjective, TransformOptions};
use crate::regressor::{bind_params, task_nll_graph, tokens::build_tokens, RegressorConfig, RegressorParams};
use crate::rng::{derive_seed, derive_seed_indexed, rng_from_seed, SeededRng};
use crate::tensor::adamw::{AdamWConfig, AdamWState};
use crate::tensor::graph::Graph;
use dataset::{TaskHeader, TaskObjective, TaskRecord};
use rand::RngExt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskFamily {
    BbobTrain,
    Combinatorial,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PretrainConfig {
    pub task_count: usize,
    /// Trajectory length T; at least 100 trials sit in every context window.
    pub trajectory_len: usize,
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
    pub family: TaskFamily,
    /// Synthetic dimensions are drawn uniformly from this inclusive range.
    pub dim_range: [usize; 2],
    /// Combinatorial sizes likewise.
    pub combo_n_range: [usize; 2],
    /// Rename synthetic parameters to random short names per task.
    pub randomize_names: bool,
    pub optimizer: AdamWConfig,
    pub log_every: usize,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            task_count: 10_000,
            trajectory_len: 100,
            batch_size: 16,
            steps: 2_000,
            seed: 0,
            family: TaskFamily::BbobTrain,
            dim_range: [2, 6],
            combo_n_range: [6, 12],
            randomize_names: true,
            optimizer: AdamWConfig::default(),
            log_every: 50,
        }
    }
}

impl PretrainConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trajectory_len < 100 {
            return Err(HarnessError::Config(format!(
                "trajectory_len must be >= 100, got {}",
                self.trajectory_len
            )));
        }
        if self.batch_size < 1 || self.task_count < 1 || self.steps < 1 {
            return Err(HarnessError::Config("task_count, batch_size, steps must be >= 1".into()));
        }
        if self.dim_range[0] < 1 || self.dim_range[0] > self.dim_range[1] {
            return Err(HarnessError::Config("dim_range must be a non-empty range".into()));
        }
        if self.combo_n_range[0] < 4 || self.combo_n_range[0] > self.combo_n_range[1] {
            return Err(HarnessError::Config("combo_n_range must start at 4 or more".into()));
        }
        Ok(())
    }
}

/// Generate the offline dataset. Each task derives its own seed from
/// `(config.seed, index)`, so any record can be regenerated independently.
pub fn generate_tasks(config: &PretrainConfig) -> Result<Vec<TaskRecord>, HarnessError> {
    config.validate()?;
    (0..config.task_count)
        .map(|i| {
            let task_seed = derive_seed_indexed(config.seed, "task", i as u64);
            generate_task(config, task_seed)
        })
        .collect()
}

/// Generate one task from its seed; pure given (config, task_seed).
pub fn generate_task(config: &PretrainConfig, task_seed: u64) -> Result<TaskRecord, HarnessError> {
    generate_task_from_pool(config, task_seed, &BbobFunction::TRAIN)
}

/// Like [`generate_task`] with an explicit synthetic function pool; the
/// held-out evaluation suites pass the test split here.
pub fn generate_task_from_pool(
    config: &PretrainConfig,
    task_seed: u64,
    pool: &[BbobFunction],
) -> Result<TaskRecord, HarnessError> {
    let mut rng = rng_from_seed(task_seed);
    let use_combo = match config.family {
        TaskFamily::BbobTrain => false,
        TaskFamily::Combinatorial => true,
        TaskFamily::Mixed => rng.random_bool(0.5),
    };
    let objective = if use_combo {
        let kind = ComboKind::ALL[rng.random_range(0..ComboKind::ALL.len())];
        let n = rng.random_range(config.combo_n_range[0]..=config.combo_n_range[1]);
        let k = rng.random_range(2..=(n / 2).max(2));
        let prob = CombinatorialProblem::sample(kind, n, k, &mut rng)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        TaskObjective::Combinatorial(prob)
    } else {
        let base = pool[rng.random_range(0..pool.len())];
        let dim = rng.random_range(config.dim_range[0]..=config.dim_range[1]);
        let mut obj = SyntheticObjective::sample(base, dim, TransformOptions::default(), &mut rng);
        if config.randomize_names {
            let names = random_param_names(dim, &mut rng);
            obj = obj.with_param_names(&names).map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        TaskObjective::Synthetic(obj)
    };

    let space = objective.search_space();
    let mut trials = Vec::with_capacity(config.trajectory_len);
    for _ in 0..config.trajectory_len {
        let cand = space.sample(&mut rng);
        let y = match &objective {
            // Synthetic functions minimize; trajectories store the
            // maximization scale used everywhere downstream.
            TaskObjective::Synthetic(obj) => {
                -obj.eval(&cand).map_err(|e| HarnessError::Config(e.to_string()))?
            }
            TaskObjective::Combinatorial(prob) => {
                prob.eval(&cand).map_err(|e| HarnessError::Config(e.to_string()))?
            }
        };
        let s = space.candidate_to_string(&cand)?;
        trials.push((s, y));
    }
    Ok(TaskRecord {
        header: TaskHeader { seed: task_seed, objective, trial_count: config.trajectory_len },
        trials,
    })
}

/// Short random alphanumeric parameter names, unique within the task.
fn random_param_names(count: usize, rng: &mut SeededRng) -> Vec<String> {
    let mut names: Vec<String> = Vec::with_capacity(count);
    while names.len() < count {
        let len = rng.random_range(2..=6usize);
        let mut name = String::with_capacity(len);
        name.push((b'a' + rng.random_range(0..26u8)) as char);
        for _ in 1..len {
            let c = rng.random_range(0..36u8);
            name.push(if c < 26 { (b'a' + c) as char } else { (b'0' + c - 26) as char });
        }
        if !names.contains(&name) {
            names.push(name);
        }
    }
    names
}

/// One training example: history cut plus normalized targets.
#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub history: Vec<(String, f64)>,
    pub target_strings: Vec<String>,
    pub target_ys: Vec<f64>,
    pub metadata: String,
}

/// Cut a uniform task at a uniform `t'` in `[10, T-10]`; values are
/// normalized by a state fitted on the history slice only.
pub fn sample_training_example(
    records: &[TaskRecord],
    rng: &mut SeededRng,
) -> Result<TrainingExample, HarnessError> {
    assert!(!records.is_empty(), "dataset must be non-empty");
    let record = &records[rng.random_range(0..records.len())];
    let t_total = record.trials.len();
    assert!(t_total >= 20, "trajectories must hold at least 20 trials");
    let cut = rng.random_range(10..=t_total - 10);
    let history_raw = &record.trials[..cut];
    let targets_raw = &record.trials[cut..];
    let normalizer = Normalizer::fit(&history_raw.iter().map(|(_, y)| *y).collect::<Vec<_>>())?;
    Ok(TrainingExample {
        history: history_raw.iter().map(|(s, y)| (s.clone(), normalizer.apply(*y))).collect(),
        target_strings: targets_raw.iter().map(|(s, _)| s.clone()).collect(),
        target_ys: targets_raw.iter().map(|(_, y)| normalizer.apply(*y)).collect(),
        metadata: record.header.objective.search_space().metadata_to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainStepMetrics {
    pub step: usize,
    pub loss: f64,
    pub grad_norm: f64,
}

/// Result of a pretraining run.
pub struct TrainOutcome<T> {
    pub params: RegressorParams<T>,
    pub metrics: Vec<TrainStepMetrics>,
    /// Set when training aborted on a non-finite loss; `params` then hold
    /// the last good state.
    pub aborted: Option<String>,
}

/// Pretrain the regressor over the dataset.
pub fn train<T: Scalar>(
    config: &PretrainConfig,
    model_config: &RegressorConfig,
    embedder: &Embedder<T>,
    records: &[TaskRecord],
    mut progress: impl FnMut(&TrainStepMetrics),
) -> Result<TrainOutcome<T>, HarnessError> {
    config.validate()?;
    model_config.validate()?;
    assert!(!records.is_empty(), "dataset must be non-empty");

    let mut params = RegressorParams::<T>::init(model_config, derive_seed(config.seed, "init"));
    let mut opt = AdamWState::new(config.optimizer, params.tensors());
    let mut metrics = Vec::new();

    for step in 0..config.steps {
        let mut rng = rng_from_seed(derive_seed_indexed(config.seed, "batch", step as u64));
        let examples: Vec<TrainingExample> = (0..config.batch_size)
            .map(|_| sample_training_example(records, &mut rng))
            .collect::<Result<_, _>>()?;

        let prev = params.clone();
        let outcome = train_step(&mut params, &mut opt, model_config, embedder, &examples);
        let (loss, grad_norm) = match outcome {
            Ok(pair) => pair,
            Err(e) => {
                // Keep the last good parameters.
                params = prev;
                return Ok(TrainOutcome {
                    params,
                    metrics,
                    aborted: Some(format!("step {step}: {e}")),
                });
            }
        };
        if !loss.is_finite() {
            params = prev;
            return Ok(TrainOutcome {
                params,
                metrics,
                aborted: Some(format!("step {step}: non-finite loss")),
            });
        }
        let m = TrainStepMetrics { step, loss, grad_norm };
        if step % config.log_every == 0 || step + 1 == config.steps {
            progress(&m);
            metrics.push(m);
        }
    }
    Ok(TrainOutcome { params, metrics, aborted: None })
}

/// One optimizer step over a batch; returns (mean batch loss, grad norm).
pub fn train_step<T: Scalar>(
    params: &mut RegressorParams<T>,
    opt: &mut AdamWState<T>,
    model_config: &RegressorConfig,
    embedder: &Embedder<T>,
    examples: &[TrainingExample],
) -> Result<(f64, f64), HarnessError> {
    let mut g = Graph::new();
    let bound = bind_params(&mut g, params);
    let mut per_task = Vec::with_capacity(examples.len());
    for ex in examples {
        let history_refs: Vec<&str> = ex.history.iter().map(|(s, _)| s.as_str()).collect();
        let history_embeds = embedder.embed_batch(&history_refs)?;
        let history: Vec<_> = history_embeds
            .into_iter()
            .zip(&ex.history)
            .map(|(e, (_, y))| (e, *y))
            .collect();
        let target_refs: Vec<&str> = ex.target_strings.iter().map(|s| s.as_str()).collect();
        let targets = embedder.embed_batch(&target_refs)?;
        let metadata = if model_config.use_metadata {
            Some(embedder.embed(&ex.metadata)?)
        } else {
            None
        };
        let batch = build_tokens(&history, &targets, metadata.as_ref(), model_config)
            .map_err(HarnessError::Regressor)?;
        let loss = task_nll_graph(&mut g, &bound, model_config, &batch, &ex.target_ys)
            .map_err(HarnessError::Regressor)?;
        per_task.push(loss);
    }
    // Sum per task (all targets), mean over the batch.
    let mut total = per_task[0];
    for &node in &per_task[1..] {
        total = g.add(total, node).map_err(|e| HarnessError::Regressor(e.into()))?;
    }
    let mean = g
        .scale(total, T::of(1.0 / examples.len() as f64))
        .map_err(|e| HarnessError::Regressor(e.into()))?;
    let loss_value = g.value(mean).item().as_f64();
    let grads = g.backward(mean).map_err(|e| HarnessError::Regressor(e.into()))?;
    let grad_tensors = g.collect_param_grads(&grads, params.len());
    let names = params.names().to_vec();
    let grad_norm = opt
        .step(params.tensors_mut(), &names, &grad_tensors)
        .map_err(|e| HarnessError::Regressor(e.into()))?;
    Ok((loss_value, grad_norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::EmbedderConfig;
    use crate::space::SearchSpace;

    fn tiny_pretrain() -> PretrainConfig {
        PretrainConfig {
            task_count: 8,
            trajectory_len: 100,
            batch_size: 2,
            steps: 3,
            seed: 7,
            ..Default::default()
        }
    }

    fn tiny_model(d_embed: usize) -> RegressorConfig {
        RegressorConfig {
            d_model: 16,
            n_layers: 1,
            n_heads: 2,
            d_ff: 32,
            d_embed,
            ..RegressorConfig::desk_scale()
        }
    }

    #[test]
    fn generated_tasks_use_train_split_and_are_reproducible() {
        let config = tiny_pretrain();
        let tasks = generate_tasks(&config).unwrap();
        assert_eq!(tasks.len(), 8);
        for task in &tasks {
            assert_eq!(task.trials.len(), 100);
            let TaskObjective::Synthetic(obj) = &task.header.objective else {
                panic!("bbob family generates synthetic tasks")
            };
            assert!(obj.base().is_train(), "{} is not in the train split", obj.base().name());
            // Regeneration from the stored seed reproduces the record.
            let again = generate_task(&config, task.header.seed).unwrap();
            assert_eq!(&again, task);
        }
    }

    #[test]
    fn randomized_names_show_up_in_candidate_strings() {
        let config = PretrainConfig { task_count: 4, ..tiny_pretrain() };
        let tasks = generate_tasks(&config).unwrap();
        let canonical = tasks.iter().all(|t| t.trials[0].0.contains("\"x0\":"));
        assert!(!canonical, "expected at least one task with randomized names");
    }

    #[test]
    fn combinatorial_family_generates_valid_instances() {
        let config = PretrainConfig {
            family: TaskFamily::Combinatorial,
            task_count: 12,
            ..tiny_pretrain()
        };
        let tasks = generate_tasks(&config).unwrap();
        for task in tasks {
            let TaskObjective::Combinatorial(prob) = &task.header.objective else { panic!() };
            prob.check_invariants().unwrap();
            assert!(task.trials.iter().all(|(_, y)| y.is_finite()));
        }
    }

    #[test]
    fn training_example_cut_respects_bounds_and_history_only_normalization() {
        let config = tiny_pretrain();
        let tasks = generate_tasks(&config).unwrap();
        let mut rng = rng_from_seed(3);
        for _ in 0..500 {
            let ex = sample_training_example(&tasks, &mut rng).unwrap();
            let t = ex.history.len();
            assert!((10..=90).contains(&t), "cut {t} out of [10, 90]");
            assert_eq!(ex.target_strings.len(), 100 - t);
            assert!(ex.target_strings.len() >= 10);
            // History values are min-max normalized into [0, 1].
            assert!(ex.history.iter().all(|(_, y)| (0.0..=1.0).contains(y)));
        }
    }

    #[test]
    fn normalizer_state_ignores_targets() {
        // Two datasets identical up to the cut, then divergent: the
        // normalized history must be identical.
        let config = PretrainConfig { task_count: 1, ..tiny_pretrain() };
        let mut tasks_a = generate_tasks(&config).unwrap();
        let mut tasks_b = tasks_a.clone();
        for (_, y) in tasks_a[0].trials.iter_mut().skip(90) {
            *y += 1e6;
        }
        for (_, y) in tasks_b[0].trials.iter_mut().skip(90) {
            *y -= 1e6;
        }
        let mut rng_a = rng_from_seed(5);
        let mut rng_b = rng_from_seed(5);
        let ex_a = sample_training_example(&tasks_a, &mut rng_a).unwrap();
        let ex_b = sample_training_example(&tasks_b, &mut rng_b).unwrap();
        assert!(ex_a.history.len() <= 90);
        assert_eq!(ex_a.history, ex_b.history);
    }

    #[test]
    fn dataset_round_trips_through_disk() {
        let config = PretrainConfig { task_count: 3, ..tiny_pretrain() };
        let tasks = generate_tasks(&config).unwrap();
        let path = std::env::temp_dir()
            .join(format!("sembo-dataset-{}.bin", std::process::id()));
        dataset::write_dataset(&path, &tasks).unwrap();
        let back = dataset::read_dataset(&path).unwrap();
        assert_eq!(back, tasks);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn loss_decreases_on_a_frozen_batch() {
        let config = tiny_pretrain();
        let tasks = generate_tasks(&config).unwrap();
        let embedder = Embedder::<f64>::new(&EmbedderConfig { dim: 32, ..Default::default() }).unwrap();
        let model_config = tiny_model(32);
        let mut params = RegressorParams::<f64>::init(&model_config, 1);
        let mut opt = AdamWState::new(AdamWConfig::default(), params.tensors());
        let mut rng = rng_from_seed(11);
        let examples: Vec<TrainingExample> =
            (0..2).map(|_| sample_training_example(&tasks, &mut rng).unwrap()).collect();

        let mut losses = Vec::new();
        for _ in 0..10 {
            let (loss, _) =
                train_step(&mut params, &mut opt, &model_config, &embedder, &examples).unwrap();
            losses.push(loss);
        }
        // Strict descent with up to 2 non-monotone steps tolerated.
        let non_monotone = losses.windows(2).filter(|w| w[1] >= w[0]).count();
        assert!(non_monotone <= 2, "losses not descending: {losses:?}");
        assert!(losses.last().unwrap() < losses.first().unwrap());
    }

    #[test]
    fn training_is_reproducible_bit_for_bit() {
        let config = PretrainConfig { steps: 4, ..tiny_pretrain() };
        let embedder = Embedder::<f64>::new(&EmbedderConfig { dim: 32, ..Default::default() }).unwrap();
        let model_config = tiny_model(32);
        let tasks = generate_tasks(&config).unwrap();
        let run = || {
            train(&config, &model_config, &embedder, &tasks, |_| {}).unwrap().params
        };
        let a = run();
        let b = run();
        assert_eq!(a.tensors(), b.tensors());
    }

    #[test]
    fn metadata_strings_follow_space_kind() {
        let config = PretrainConfig {
            family: TaskFamily::Combinatorial,
            task_count: 6,
            ..tiny_pretrain()
        };
        let tasks = generate_tasks(&config).unwrap();
        let mut rng = rng_from_seed(2);
        let ex = sample_training_example(&tasks, &mut rng).unwrap();
        assert!(ex.metadata.starts_with("task:\""));
        let some_perm = tasks
            .iter()
            .any(|t| matches!(t.header.objective.search_space(), SearchSpace::Permutation { .. }));
        let some_choice = tasks
            .iter()
            .any(|t| matches!(t.header.objective.search_space(), SearchSpace::Choice { .. }));
        assert!(some_perm || some_choice);
    }
}
