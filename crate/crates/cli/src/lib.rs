//! Batch front end: `prep`, `synth`, `split`, `train`, `eval`, `bench`.
//!
//! Exit status is 0 on success, 1 when some items were skipped or failed,
//! and 2 for usage, config or input-format errors.

pub mod bench;
pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use digitprep::learners::ModelKind;

use config::Settings;

/// Errors the user can fix by changing flags, config or inputs.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Partial,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::Partial => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "digitprep",
    version,
    about = "Clean noisy handwritten digit scans and compare classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Settings file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one setting; repeatable. Applied after --config.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the cleaning pipeline over a labelled corpus.
    Prep {
        #[arg(long)]
        input: PathBuf,
        /// Label file; defaults to INPUT/labels.csv.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write every stage's snapshot under OUT/trace/<name>/.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a synthetic noisy-digit corpus.
    Synth {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Turn every corruption off.
        #[arg(long)]
        clean: bool,
        #[arg(long)]
        salt_pepper: Option<f64>,
        #[arg(long)]
        spot_prob: Option<f64>,
        #[arg(long)]
        invert_prob: Option<f64>,
        #[arg(long)]
        grid_prob: Option<f64>,
        #[arg(long)]
        jitter: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Write a seeded train/test partition of a corpus.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        train_frac: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Fit one model and save it.
    Train {
        #[arg(long, value_parser = parse_kind)]
        model: ModelKind,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Score a saved model on a labelled corpus.
    Eval {
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare models on a raw corpus and its preprocessed twin.
    Bench {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        raw_csv: Option<PathBuf>,
        #[arg(long)]
        prep: PathBuf,
        #[arg(long)]
        prep_csv: Option<PathBuf>,
        /// Comma-separated names, or `all`.
        #[arg(long, default_value = "all")]
        models: String,
        /// Split seed, shared by both pathways.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        train_frac: Option<f64>,
        /// Report CSV path; the table always goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn labels_in(dir: &Path, csv: Option<PathBuf>) -> PathBuf {
    csv.unwrap_or_else(|| dir.join(commands::LABELS))
}

fn settings(common: &Common, extra: &[(&str, Option<String>)]) -> anyhow::Result<Settings> {
    let mut overrides = common.set.clone();
    overrides.extend(
        extra
            .iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| format!("{k}={v}"))),
    );
    Settings::load(common.config.as_deref(), &overrides)
}

fn dispatch(cli: Cli) -> anyhow::Result<Status> {
    match cli.command {
        Command::Prep {
            input,
            csv,
            out,
            trace,
            common,
        } => {
            let s = settings(&common, &[])?;
            let csv = labels_in(&input, csv);
            commands::prep(
                &commands::PrepArgs {
                    input: &input,
                    csv: &csv,
                    out: &out,
                    trace,
                },
                &s,
            )
        }
        Command::Synth {
            count,
            seed,
            out,
            clean,
            salt_pepper,
            spot_prob,
            invert_prob,
            grid_prob,
            jitter,
            common,
        } => {
            let off = |v: Option<f64>| if clean { Some(v.unwrap_or(0.0)) } else { v };
            let mut s = settings(
                &common,
                &[
                    (
                        "synth.salt_pepper_rate",
                        off(salt_pepper).map(|v| v.to_string()),
                    ),
                    (
                        "synth.spot_probability",
                        off(spot_prob).map(|v| v.to_string()),
                    ),
                    (
                        "synth.invert_probability",
                        off(invert_prob).map(|v| v.to_string()),
                    ),
                    (
                        "synth.grid_lines_probability",
                        off(grid_prob).map(|v| v.to_string()),
                    ),
                    ("synth.jitter", jitter.map(|v| v.to_string())),
                ],
            )?;
            s.synth.count = count;
            s.synth.seed = seed;
            s.synth.validate().map_err(usage)?;
            commands::synth(&out, &s)
        }
        Command::Split {
            input,
            csv,
            out,
            seed,
            train_frac,
            common,
        } => {
            let s = settings(
                &common,
                &[
                    ("split.seed", seed.map(|v| v.to_string())),
                    ("split.train_frac", train_frac.map(|v| v.to_string())),
                ],
            )?;
            let csv = labels_in(&input, csv);
            commands::split(&input, &csv, &out, &s)
        }
        Command::Train {
            model,
            data,
            csv,
            out,
            common,
        } => {
            let s = settings(&common, &[])?;
            let csv = labels_in(&data, csv);
            commands::train(model, &data, &csv, &out, &s)
        }
        Command::Eval {
            model_file,
            data,
            csv,
            common,
        } => {
            let s = settings(&common, &[])?;
            let csv = labels_in(&data, csv);
            commands::eval(&model_file, &data, &csv, &s)
        }
        Command::Bench {
            raw,
            raw_csv,
            prep,
            prep_csv,
            models,
            seed,
            train_frac,
            out,
            common,
        } => {
            let s = settings(
                &common,
                &[
                    ("split.seed", seed.map(|v| v.to_string())),
                    ("split.train_frac", train_frac.map(|v| v.to_string())),
                ],
            )?;
            let raw_csv = labels_in(&raw, raw_csv);
            let prep_csv = labels_in(&prep, prep_csv);
            commands::bench(
                &commands::BenchArgs {
                    raw: &raw,
                    raw_csv: &raw_csv,
                    prep: &prep,
                    prep_csv: &prep_csv,
                    models: &models,
                    out: out.as_deref(),
                },
                &s,
            )
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(status) => status.code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}
