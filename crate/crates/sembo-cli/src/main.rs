//! `sembo`: pretraining, optimization runs, benchmark suites, and regressor
//! evaluation from the command line.

mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{
    load_json, BenchmarkFileConfig, EvalFileConfig, GenDataFileConfig, OptimizeFileConfig,
    PretrainFileConfig,
};
use sembo_core::embed::{Embedder, EmbedderConfig};
use sembo_core::error::HarnessError;
use sembo_core::harness::bench::{bbob_test_suite, combo_suite, run_benchmark, BenchmarkTask, SuiteKind};
use sembo_core::harness::evalreg::{generate_held_out_tasks, in_context_metrics};
use sembo_core::harness::metrics::{best_so_far, log_efficiency, predictive_metrics};
use sembo_core::harness::persist::{write_curves_csv, write_metrics_json, write_trials_csv, MetricsReport};
use sembo_core::harness::{run_optimization, Algorithm, ModelHandle, RunSetup};
use sembo_core::objectives::BbobFunction;
use sembo_core::pretrain::dataset::{read_dataset, write_dataset};
use sembo_core::pretrain::{generate_tasks, train, PretrainConfig, TaskFamily};
use sembo_core::regressor::checkpoint::{load_checkpoint, save_checkpoint};
use sembo_core::regressor::{RegressorConfig, RegressorParams};
use sembo_core::rng::derive_seed_indexed;

#[derive(Parser)]
#[command(name = "sembo", version, about = "String-embedding in-context Bayesian optimization")]
struct Cli {
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "sembo-out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pretrain the in-context regressor and write a checkpoint.
    Pretrain {
        #[arg(long)]
        config: PathBuf,
    },
    /// Optimize one task with one algorithm over several repeats.
    Optimize {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a benchmark suite across algorithms and seeds.
    Benchmark {
        /// bbob or combo.
        #[arg(long)]
        suite: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Predictive metrics of a checkpoint on held-out tasks.
    EvalRegressor {
        #[arg(long)]
        checkpoint: PathBuf,
        /// bbob-test, bbob-train, or combo.
        #[arg(long)]
        suite: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Generate an offline task dataset.
    GenData {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Config and argument problems exit 2; runtime failures exit 1.
enum CliError {
    Config(String),
    Runtime(String),
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(msg) => CliError::Config(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    std::fs::create_dir_all(&cli.out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {:?}: {e}", cli.out_dir)))?;
    match &cli.command {
        Command::Pretrain { config } => pretrain_cmd(&cli, config),
        Command::Optimize { config } => optimize_cmd(&cli, config),
        Command::Benchmark { suite, config } => benchmark_cmd(&cli, suite, config.as_deref()),
        Command::EvalRegressor { checkpoint, suite, config } => {
            eval_regressor_cmd(&cli, checkpoint, suite, config.as_deref())
        }
        Command::GenData { config } => gen_data_cmd(&cli, config),
    }
}

fn load_model(
    path: &Path,
) -> Result<(RegressorParams<f64>, RegressorConfig), CliError> {
    if !path.is_file() {
        return Err(CliError::Config(format!("checkpoint {path:?} does not exist")));
    }
    load_checkpoint::<f64>(path).map_err(|e| CliError::Runtime(format!("checkpoint {path:?}: {e}")))
}

fn build_embedder(config: &EmbedderConfig) -> Result<Embedder<f64>, CliError> {
    Embedder::new(config).map_err(|e| CliError::Config(e.to_string()))
}

fn pretrain_cmd(cli: &Cli, config_path: &Path) -> Result<(), CliError> {
    let mut file: PretrainFileConfig = load_json(config_path)?;
    if let Some(seed) = cli.seed {
        file.pretrain.seed = seed;
    }
    file.pretrain.validate()?;
    file.model.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let embedder = build_embedder(&file.embedder)?;

    let records = match &file.dataset {
        Some(path) => {
            println!("reading dataset {path:?}");
            read_dataset(path)?
        }
        None => {
            println!("generating {} tasks...", file.pretrain.task_count);
            generate_tasks(&file.pretrain)?
        }
    };
    println!("training {} steps (batch {})...", file.pretrain.steps, file.pretrain.batch_size);
    let outcome = train(&file.pretrain, &file.model, &embedder, &records, |m| {
        println!("step {:6}  loss {:10.4}  grad_norm {:10.4}", m.step, m.loss, m.grad_norm);
    })?;

    let name = file.checkpoint_name.as_deref().unwrap_or("checkpoint.etrr");
    let ckpt_path = cli.out_dir.join(name);
    save_checkpoint(&outcome.params, &file.model, &ckpt_path)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let metrics_path = cli.out_dir.join("train_metrics.json");
    let json = serde_json::to_string_pretty(&outcome.metrics)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(&metrics_path, json).map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("checkpoint written to {ckpt_path:?}");
    match outcome.aborted {
        Some(reason) => Err(CliError::Runtime(format!(
            "training aborted ({reason}); last good checkpoint retained at {ckpt_path:?}"
        ))),
        None => Ok(()),
    }
}

fn optimize_cmd(cli: &Cli, config_path: &Path) -> Result<(), CliError> {
    let mut file: OptimizeFileConfig = load_json(config_path)?;
    if let Some(seed) = cli.seed {
        file.seed = seed;
    }
    if file.budget < 1 || file.repeats < 1 {
        return Err(CliError::Config("budget and repeats must be >= 1".into()));
    }
    let algorithm = Algorithm::from_name(&file.algorithm)?;
    let objective = file.task.build()?;
    let task_name = file.task.name();

    let model = if algorithm.is_model_based() {
        let path = file.checkpoint.as_ref().ok_or_else(|| {
            CliError::Config(format!(
                "algorithm {} requires a checkpoint path in the config",
                algorithm.name()
            ))
        })?;
        Some(load_model(path)?)
    } else {
        None
    };
    let embedder = build_embedder(&file.embedder)?;

    let mut curves = Vec::with_capacity(file.repeats);
    let mut predictions = Vec::new();
    for repeat in 0..file.repeats {
        let run_seed = derive_seed_indexed(file.seed, "repeat", repeat as u64);
        let setup = RunSetup {
            objective: &objective,
            algorithm,
            budget: file.budget,
            seed: run_seed,
            model: model.as_ref().map(|(params, config)| ModelHandle {
                params,
                config,
                embedder: &embedder,
            }),
            acq_config: file.acquisition,
            collect_predictions: algorithm.is_model_based(),
        };
        let seed_dir = cli.out_dir.join(&task_name).join(algorithm.name()).join(format!("seed_{repeat}"));
        std::fs::create_dir_all(&seed_dir).map_err(|e| CliError::Runtime(e.to_string()))?;
        match run_optimization(&setup) {
            Ok(result) => {
                write_trials_csv(&seed_dir.join("trials.csv"), &result.log)?;
                curves.push(best_so_far(
                    &result.log.rows.iter().map(|r| r.y).collect::<Vec<_>>(),
                ));
                predictions.extend(result.predictions);
                println!(
                    "repeat {repeat}: best {}",
                    sembo_core::fmt::format_float(result.log.final_best())
                );
            }
            Err(failure) => {
                // Flush whatever completed before the abort.
                write_trials_csv(&seed_dir.join("trials.csv"), &failure.partial)?;
                return Err(CliError::Runtime(format!(
                    "run aborted at trial {} ({}); partial log flushed",
                    failure.partial.rows.len(),
                    failure.error
                )));
            }
        }
    }

    let alg_dir = cli.out_dir.join(&task_name).join(algorithm.name());
    write_curves_csv(&alg_dir.join("curves.csv"), &curves)?;
    let predictive = if predictions.is_empty() {
        None
    } else {
        let (preds, ys): (Vec<_>, Vec<_>) = predictions.into_iter().unzip();
        Some(predictive_metrics(&preds, &ys))
    };
    let mean_curve: Vec<f64> = (0..file.budget)
        .map(|t| curves.iter().map(|c| c[t]).sum::<f64>() / curves.len() as f64)
        .collect();
    let mut log_eff = BTreeMap::new();
    log_eff.insert(
        format!("{}_vs_{}", algorithm.name(), algorithm.name()),
        log_efficiency(&mean_curve, &mean_curve).score,
    );
    write_metrics_json(
        &alg_dir.join("metrics.json"),
        &MetricsReport {
            nll: predictive.map(|m| m.nll),
            mae: predictive.map(|m| m.mae),
            r2: predictive.and_then(|m| m.r2),
            mace: predictive.map(|m| m.mace),
            log_efficiency: log_eff,
        },
    )?;
    println!("artifacts in {:?}", alg_dir);
    Ok(())
}

fn benchmark_cmd(cli: &Cli, suite: &str, config_path: Option<&Path>) -> Result<(), CliError> {
    let mut file: BenchmarkFileConfig = match config_path {
        Some(path) => load_json(path)?,
        None => BenchmarkFileConfig::default(),
    };
    file.benchmark.suite = SuiteKind::from_name(suite)?;
    if let Some(seed) = cli.seed {
        file.benchmark.seed = seed;
    }
    if file.benchmark.suite == SuiteKind::Bbob
        && config_path.is_none()
    {
        // The combo-oriented default algorithm list makes no sense on flat
        // spaces; swap in the flat pair.
        file.benchmark.algorithms = vec!["etr".into(), "random".into()];
    }
    let algorithms = file.benchmark.validate()?;

    let model = if algorithms.iter().any(|a| a.is_model_based()) {
        let path = file.checkpoint.as_ref().ok_or_else(|| {
            CliError::Config("benchmark includes a model-based algorithm; set \"checkpoint\"".into())
        })?;
        Some(load_model(path)?)
    } else {
        None
    };
    let embedder = build_embedder(&file.embedder)?;
    let tasks: Vec<BenchmarkTask> = match file.benchmark.suite {
        SuiteKind::Bbob => bbob_test_suite(&file.benchmark.bbob_dims, file.benchmark.seed),
        SuiteKind::Combo => combo_suite(file.benchmark.seed),
    };
    let handle = model.as_ref().map(|(params, config)| ModelHandle {
        params,
        config,
        embedder: &embedder,
    });
    let summary = run_benchmark(&file.benchmark, &tasks, handle.as_ref(), Some(&cli.out_dir))?;
    for task in &summary.tasks {
        print!("{:30}", task.name);
        for (name, alg) in &task.per_alg {
            print!(
                "  {name}: {}",
                sembo_core::fmt::format_float(alg.mean_final_best)
            );
        }
        println!();
    }
    println!("artifacts in {:?}", cli.out_dir);
    Ok(())
}

fn eval_regressor_cmd(
    cli: &Cli,
    checkpoint: &Path,
    suite: &str,
    config_path: Option<&Path>,
) -> Result<(), CliError> {
    let mut file: EvalFileConfig = match config_path {
        Some(path) => load_json(path)?,
        None => EvalFileConfig::default(),
    };
    if let Some(seed) = cli.seed {
        file.seed = seed;
    }
    let (params, model_config) = load_model(checkpoint)?;
    let embedder = build_embedder(&file.embedder)?;

    let gen_config = PretrainConfig {
        task_count: file.tasks,
        trajectory_len: file.trajectory_len,
        seed: file.seed,
        dim_range: file.dim_range,
        family: if suite == "combo" { TaskFamily::Combinatorial } else { TaskFamily::BbobTrain },
        ..Default::default()
    };
    let pool: &[BbobFunction] = match suite {
        "bbob-test" => &BbobFunction::TEST,
        "bbob-train" => &BbobFunction::TRAIN,
        "combo" => &BbobFunction::TRAIN, // unused for the combo family
        other => return Err(CliError::Config(format!("unknown eval suite {other:?}"))),
    };
    let records = generate_held_out_tasks(&gen_config, file.tasks, pool)?;
    let results = in_context_metrics(
        &params,
        &model_config,
        &embedder,
        &records,
        &file.contexts,
        file.targets_per_task,
    )?;

    println!("{:>8} {:>10} {:>10} {:>10} {:>10}", "context", "nll", "mae", "r2", "mace");
    for r in &results {
        println!(
            "{:>8} {:>10.4} {:>10.4} {:>10} {:>10.4}",
            r.context,
            r.metrics.nll,
            r.metrics.mae,
            r.metrics.r2.map_or("n/a".to_string(), |v| format!("{v:.4}")),
            r.metrics.mace
        );
    }
    let json = serde_json::to_string_pretty(&results).map_err(|e| CliError::Runtime(e.to_string()))?;
    let path = cli.out_dir.join("eval_metrics.json");
    std::fs::write(&path, json).map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("metrics written to {path:?}");
    Ok(())
}

fn gen_data_cmd(cli: &Cli, config_path: &Path) -> Result<(), CliError> {
    let mut file: GenDataFileConfig = load_json(config_path)?;
    if let Some(seed) = cli.seed {
        file.pretrain.seed = seed;
    }
    file.pretrain.validate()?;
    println!("generating {} tasks...", file.pretrain.task_count);
    let records = generate_tasks(&file.pretrain)?;
    let name = file.dataset_name.as_deref().unwrap_or("dataset.etrd");
    let path = cli.out_dir.join(name);
    write_dataset(&path, &records)?;
    println!("dataset with {} tasks written to {path:?}", records.len());
    Ok(())
}
