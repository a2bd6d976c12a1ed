use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dgner::stats::SubtreeMode;
use dgner::train::DEFAULT_RESAMPLES;
use dgner::Result;
use dgner_cli::{
    cmd_bootstrap, cmd_eval, cmd_gradcheck, cmd_predict, cmd_repair, cmd_stats, cmd_subsample,
    cmd_train, exit_code, parse_override, RunConfig, StatsKind, StatsOptions,
};

#[derive(Parser)]
#[command(
    name = "dgner",
    version,
    about = "Dependency-guided LSTM-CRF named entity recognition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Complete,
    Connected,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a run configuration.
    Train {
        config: PathBuf,
        /// Override a configuration key, e.g. `--set epochs=5`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Score a checkpoint on a corpus.
    Eval {
        checkpoint: PathBuf,
        corpus: PathBuf,
        #[arg(long)]
        context: Option<PathBuf>,
        /// Also write the report as TSV.
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
    /// Tag a corpus; output carries the prediction as a sixth column.
    Predict {
        checkpoint: PathBuf,
        corpus: PathBuf,
        #[arg(long)]
        context: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Dependency/entity statistics as TSV.
    Stats {
        corpus: PathBuf,
        /// st, gd, relmatrix or pairmatrix.
        which: String,
        #[arg(long, default_value_t = 3)]
        min_len: usize,
        #[arg(long, value_enum, default_value = "complete")]
        variant: Variant,
        #[arg(long, default_value_t = dgner::stats::DEFAULT_COLUMN_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        raw: bool,
    },
    /// Reattach heads so every entity forms a connected subtree.
    Repair { input: PathBuf, output: PathBuf },
    /// Sample sentences without replacement.
    Subsample {
        corpus: PathBuf,
        #[arg(short, long)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Finite-difference gradient check of the configured model.
    Gradcheck {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
    /// Paired bootstrap test between two prediction files.
    Bootstrap {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
        resamples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn emit(output: Option<PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let overrides = overrides
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>>>()?;
    RunConfig::load(path, &overrides)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train { config, overrides } => {
            let cfg = load_config(&config, &overrides)?;
            let out = cmd_train(&cfg)?;
            println!(
                "best epoch {} (dev F1 {:.2}); checkpoint {}",
                out.best_epoch,
                out.best_dev_f1,
                out.checkpoint.display()
            );
            if let Some(test) = out.test {
                print!("test\n{}", test.to_text());
            }
        }
        Command::Eval {
            checkpoint,
            corpus,
            context,
            tsv,
        } => {
            let report = cmd_eval(&checkpoint, &corpus, context.as_deref())?;
            print!("{}", report.to_text());
            if let Some(p) = tsv {
                fs::write(p, report.to_tsv())?;
            }
        }
        Command::Predict {
            checkpoint,
            corpus,
            context,
            output,
        } => emit(
            output,
            &cmd_predict(&checkpoint, &corpus, context.as_deref())?,
        )?,
        Command::Stats {
            corpus,
            which,
            min_len,
            variant,
            threshold,
            raw,
        } => {
            let kind: StatsKind = which.parse()?;
            let mode = match variant {
                Variant::Complete => SubtreeMode::Complete,
                Variant::Connected => SubtreeMode::Connected,
            };
            let opts = StatsOptions {
                min_len,
                mode,
                threshold,
                raw,
            };
            print!("{}", cmd_stats(&corpus, kind, opts)?);
        }
        Command::Repair { input, output } => {
            let changed = cmd_repair(&input, &output)?;
            eprintln!("{changed} sentences changed");
        }
        Command::Subsample {
            corpus,
            n,
            seed,
            output,
        } => emit(output, &cmd_subsample(&corpus, n, seed)?)?,
        Command::Gradcheck {
            config,
            overrides,
            eps,
            tolerance,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let r = cmd_gradcheck(&cfg, eps)?;
            println!(
                "max relative error {:e} at {}[{}] (analytic {:e}, numeric {:e}); {} entries checked",
                r.max_rel_error, r.worst_param, r.worst_index, r.worst_analytic, r.worst_numeric, r.checked
            );
            if !(r.max_rel_error <= tolerance) {
                eprintln!(
                    "gradient check failed: {:e} > {tolerance:e}",
                    r.max_rel_error
                );
                return Ok(ExitCode::from(1));
            }
        }
        Command::Bootstrap {
            a,
            b,
            resamples,
            seed,
        } => {
            let r = cmd_bootstrap(&a, &b, resamples, seed)?;
            println!("delta\t{}", r.delta);
            println!("p_value\t{}", r.p_value);
            println!("resamples\t{}", r.resamples);
            println!("seed\t{}", r.seed);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
