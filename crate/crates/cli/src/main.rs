mod commands;
mod config;
mod layout;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use serde::de::{DeserializeOwned, IntoDeserializer};
use serde_json::json;
use segfree::features::{FeatureKind, ReverseNormalization};
use segfree::policy::{NaiveMode, SessionMode};

use config::{ExperimentConfig, DEFAULT_OUTPUT};
use layout::Layout;

/// Marks failures caused by bad input (config, files, data) rather than by
/// the run itself; they exit with code 2.
#[derive(Debug)]
pub struct DataError(pub String);

impl std::fmt::Display for DataError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "segfree", version, about = "Segmentation-free streaming translation experiments")]
struct Cli {
    /// TOML experiment config; built-in defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output root for data, models, traces and reports.
    #[arg(long, global = true, env = "SEGFREE_OUTPUT")]
    output: Option<PathBuf>,

    /// Experiment seed; every stage derives its own seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the synthetic language, train/dev/test documents and boundary files.
    GenData(GenDataArgs),
    /// Train the reverse model and length feature, then tune the feature weights on dev.
    Train(TrainArgs),
    /// Run every (mode, k) session over the sweep split and write traces.
    Simulate(SimulateArgs),
    /// Score the traces and write the report and curve.
    Evaluate(EvaluateArgs),
    /// Rewrite the curve from an existing report.
    Curve(CurveArgs),
}

fn serde_value<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    T::deserialize(s.into_deserializer()).map_err(|e: serde::de::value::Error| e.to_string())
}

#[derive(Debug, Args)]
struct GenDataArgs {
    #[arg(long)]
    train_docs: Option<usize>,
    #[arg(long)]
    dev_docs: Option<usize>,
    #[arg(long)]
    test_docs: Option<usize>,
    #[arg(long)]
    sentences_per_doc: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Comma-separated subset of reverse_mt,linreg.
    #[arg(long, value_delimiter = ',', value_parser = serde_value::<FeatureKind>)]
    features: Option<Vec<FeatureKind>>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    em_iterations: Option<usize>,
    /// none or alignment_prior.
    #[arg(long, value_parser = serde_value::<ReverseNormalization>)]
    reverse_normalization: Option<ReverseNormalization>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated modes: segfree, naive, segmented-oracle, segmented-fixed.
    #[arg(long, value_delimiter = ',', value_parser = serde_value::<SessionMode>)]
    modes: Option<Vec<SessionMode>>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    split: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    #[arg(long)]
    beam: Option<usize>,
    #[arg(long)]
    history_cap: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, value_parser = serde_value::<NaiveMode>)]
    naive_mode: Option<NaiveMode>,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    #[arg(long)]
    resamples: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct CurveArgs {
    /// Restrict the curve to these systems.
    #[arg(long, value_delimiter = ',', value_parser = serde_value::<SessionMode>)]
    systems: Vec<SessionMode>,
    /// Destination file; defaults to eval/curve.csv under the output root.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn set<T>(field: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *field = v;
    }
}

impl SweepArgs {
    fn apply(self, config: &mut ExperimentConfig) {
        let s = &mut config.sweep;
        set(&mut s.modes, self.modes);
        set(&mut s.k_min, self.k_min);
        set(&mut s.k_max, self.k_max);
        set(&mut s.split, self.split);
    }
}

fn init_threads(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    let mut config = ExperimentConfig::load(cli.config.as_deref())?;
    set(&mut config.seed, cli.seed);
    let root = cli
        .output
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    let layout = Layout::new(root);

    match cli.command {
        Command::GenData(a) => {
            let c = &mut config.corpus;
            set(&mut c.train_docs, a.train_docs);
            set(&mut c.dev_docs, a.dev_docs);
            set(&mut c.test_docs, a.test_docs);
            set(&mut c.sentences_per_doc, a.sentences_per_doc);
            config.validate()?;
            commands::gen_data(&config, &layout)
        }
        Command::Train(a) => {
            let t = &mut config.train;
            set(&mut t.features, a.features);
            set(&mut t.weights.epochs, a.epochs);
            set(&mut t.weights.learning_rate, a.learning_rate);
            set(&mut t.em_iterations, a.em_iterations);
            set(&mut t.reverse_normalization, a.reverse_normalization);
            config.validate()?;
            commands::train(&config, &layout)
        }
        Command::Simulate(a) => {
            a.sweep.apply(&mut config);
            let s = &mut config.sweep;
            set(&mut s.beam, a.beam);
            set(&mut s.history_cap, a.history_cap);
            set(&mut s.noise, a.noise);
            set(&mut s.naive_mode, a.naive_mode);
            config.validate()?;
            init_threads(a.jobs)?;
            commands::simulate(&config, &layout)
        }
        Command::Evaluate(a) => {
            a.sweep.apply(&mut config);
            set(&mut config.evaluate.resamples, a.resamples);
            config.validate()?;
            init_threads(a.jobs)?;
            commands::evaluate(&config, &layout)
        }
        Command::Curve(a) => commands::curve(&layout, &a.systems, a.out.as_deref()),
    }
}

fn exit_code(error: &anyhow::Error) -> u8 {
    for cause in error.chain() {
        if let Some(e) = cause.downcast_ref::<segfree::Error>() {
            return if e.is_data_error() { EXIT_DATA } else { EXIT_RUNTIME };
        }
        if cause.is::<DataError>() || cause.is::<std::io::Error>() {
            return EXIT_DATA;
        }
    }
    EXIT_RUNTIME
}

fn fail(kind: &str, code: u8, message: String, causes: Vec<String>) -> ExitCode {
    let record = json!({
        "status": "error",
        "kind": kind,
        "exit_code": code,
        "message": message,
        "causes": causes,
    });
    eprintln!("{record}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.kind().to_string();
            return fail("usage", EXIT_USAGE, message, vec![e.to_string().trim().to_string()]);
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            let kind = if code == EXIT_DATA { "data" } else { "runtime" };
            let causes = e.chain().skip(1).map(|c| c.to_string()).collect();
            fail(kind, code, e.to_string(), causes)
        }
    }
}
