//! `hamsig`: synthetic ham-radio datasets, training and evaluation from the
//! command line.
//!
//! Exit codes: 0 success, 1 invalid input or config, 2 I/O failure,
//! 3 internal error. Failures print one JSON line on stderr:
//! `{"error": "<kind>", "message": "..."}`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hamsig::eval::ReportFormat;
use hamsig::pipeline::{self, read_config_or, AugmentConfig, CleanConfig, EvalOptions, KfoldConfig, Task, TrainRunConfig};
use hamsig::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "hamsig", version, about = "Synthetic ham-radio signal pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Shared {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format for eval.
    #[arg(long, global = true, default_value = "json")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a dataset directory.
    Synth {
        #[command(flatten)]
        shared: Shared,
        /// Records per modulated class when no config is given.
        #[arg(long, default_value_t = 40)]
        per_class: usize,
    },
    /// Write an augmented copy of a dataset.
    Augment {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Validate a manifest and flag outliers.
    Clean {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        manifest: PathBuf,
        /// Also write a manifest without the flagged records.
        #[arg(long)]
        filter: bool,
    },
    /// Train a classifier or denoiser.
    Train {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        task: Option<Task>,
        #[arg(long)]
        max_epochs: Option<usize>,
        /// Print one line per epoch on stderr.
        #[arg(long)]
        verbose: bool,
    },
    /// Evaluate a model on a manifest.
    Eval {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// splits.json from training; restricts evaluation to one split.
        #[arg(long)]
        splits: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        subset: String,
    },
    /// Denoise a WAV or raw float32 file.
    Denoise {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Clean reference for SNR metrics.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Sample rate of raw inputs.
        #[arg(long, default_value_t = 8000)]
        sample_rate: u32,
    },
    /// Label one file clean or noisy.
    Classify {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 8000)]
        sample_rate: u32,
    },
    /// Stratified k-fold cross-validation.
    Kfold {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        task: Option<Task>,
        #[arg(long)]
        max_epochs: Option<usize>,
    },
}

fn out_dir(shared: &Shared, default: &str) -> PathBuf {
    shared.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn print(value: serde_json::Value) {
    println!("{value}");
}

fn run(command: Command) -> hamsig::Result<ExitCode> {
    match command {
        Command::Synth { shared, per_class } => {
            let mut config = read_config_or(shared.config.as_deref(), pipeline::default_synth_config(per_class))?;
            if let Some(s) = shared.seed {
                config.master_seed = s;
            }
            let out = out_dir(&shared, "data");
            let records = pipeline::synth(&config, &out)?;
            print(json!({ "records": records.len(), "out": out }));
        }
        Command::Augment { shared, manifest } => {
            let mut config = read_config_or(shared.config.as_deref(), AugmentConfig::default())?;
            if let Some(s) = shared.seed {
                config.seed = s;
            }
            let out = out_dir(&shared, "augmented");
            let records = pipeline::augment(&manifest, &config, &out)?;
            print(json!({ "records": records.len(), "out": out }));
        }
        Command::Clean {
            shared,
            manifest,
            filter,
        } => {
            let mut config = read_config_or(shared.config.as_deref(), CleanConfig::default())?;
            config.filter |= filter;
            let out = out_dir(&shared, "clean");
            let summary = pipeline::clean(&manifest, &config, &out)?;
            let violations = summary.validation.violations.len();
            print(json!({
                "records": summary.validation.n_records,
                "violations": violations,
                "outliers": summary.outliers.as_ref().map(|o| o.flags.len()),
                "kept": summary.n_kept,
            }));
            if violations > 0 {
                let e = Error::InvalidDataset(format!("{violations} manifest violation(s); see clean_report.txt"));
                report_error(&e);
                return Ok(ExitCode::from(e.exit_code()));
            }
        }
        Command::Train {
            shared,
            manifest,
            task,
            max_epochs,
            verbose,
        } => {
            let mut config = read_config_or(shared.config.as_deref(), TrainRunConfig::default())?;
            if let Some(s) = shared.seed {
                config.seed = s;
            }
            if let Some(t) = task {
                config.task = t;
            }
            if let Some(e) = max_epochs {
                config.max_epochs = e;
            }
            let out = out_dir(&shared, "model");
            let summary = pipeline::train(&manifest, &config, &out, &mut |e| {
                if verbose {
                    eprintln!(
                        "epoch {:>3}  train_loss {:.5}  val_loss {:.5}  val_accuracy {}",
                        e.epoch,
                        e.train_loss,
                        e.val_loss,
                        e.val_accuracy.map_or("n/a".into(), |a| format!("{a:.4}"))
                    );
                }
            })?;
            print(json!({
                "task": summary.task,
                "n_train": summary.n_train,
                "n_val": summary.n_val,
                "n_test": summary.n_test,
                "n_skipped": summary.n_skipped,
                "best_epoch": summary.history.best_epoch,
                "epochs": summary.history.epochs.len(),
                "model_sha256": summary.model_sha256,
            }));
        }
        Command::Eval {
            shared,
            model,
            manifest,
            splits,
            subset,
        } => {
            let options = EvalOptions {
                splits,
                subset,
                format: shared.format.parse::<ReportFormat>()?,
            };
            let out = out_dir(&shared, "report");
            let report = pipeline::eval(&model, &manifest, &options, &out)?;
            print(json!({ "task": report.task, "n_records": report.aggregate.n_records, "accuracy": report.aggregate.accuracy, "f1": report.aggregate.f1, "snr_improvement_db": report.aggregate.snr_improvement_db }));
        }
        Command::Denoise {
            shared,
            model,
            input,
            reference,
            sample_rate,
        } => {
            let out = out_dir(&shared, "denoised");
            let summary = pipeline::denoise_file(&model, &input, sample_rate, reference.as_deref(), &out)?;
            print(serde_json::to_value(summary)?);
        }
        Command::Classify {
            shared,
            model,
            input,
            sample_rate,
        } => {
            let result = pipeline::classify(&model, &input, sample_rate)?;
            if let Some(out) = &shared.out {
                std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
                pipeline::write_json(&out.join("result.json"), &result)?;
            }
            print(serde_json::to_value(result)?);
        }
        Command::Kfold {
            shared,
            manifest,
            k,
            task,
            max_epochs,
        } => {
            let mut config = read_config_or(shared.config.as_deref(), KfoldConfig::default())?;
            if let Some(s) = shared.seed {
                config.seed = s;
            }
            if let Some(k) = k {
                config.k = k;
            }
            if let Some(t) = task {
                config.task = t;
            }
            if let Some(e) = max_epochs {
                config.max_epochs = e;
            }
            let out = out_dir(&shared, "kfold");
            let summary = pipeline::kfold(&manifest, &config, &out)?;
            print(json!({
                "k": summary.k,
                "accuracy": summary.accuracy,
                "f1": summary.f1,
                "snr_improvement_db": summary.snr_improvement_db,
            }));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn report_error(e: &Error) {
    eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", json!({ "error": "usage", "message": first }));
            return ExitCode::from(1);
        }
    };
    std::panic::set_hook(Box::new(|_| {}));
    match std::panic::catch_unwind(|| run(cli.command)) {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            report_error(&e);
            ExitCode::from(e.exit_code())
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            eprintln!("{}", json!({ "error": "internal", "message": message }));
            ExitCode::from(3)
        }
    }
}
