//! Command-line surface over the descriptor/recognition pipeline.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use rrv_core::data::Protocol;
use rrv_core::eval::{Backend, RunConfig};
use rrv_core::rrv::Metric;

#[derive(Parser, Debug)]
#[command(
    name = "rrv",
    version,
    about = "Rotation and relative-velocity descriptors for 6-DOF motion, \
             with DTW and bag-of-words recognition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    shared: SharedArgs,
}

#[derive(Args, Debug, Clone)]
struct SharedArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Generator seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "rrv-out")]
    out: PathBuf,

    /// Recognition back-end.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,

    /// Descriptor metric.
    #[arg(long, global = true, value_enum)]
    metric: Option<MetricArg>,

    /// Evaluation protocol.
    #[arg(long, global = true, value_enum)]
    protocol: Option<ProtocolArg>,

    /// Skip the SVD rotational normalization on rigid trajectories.
    #[arg(long = "skip-svd-norm", global = true)]
    skip_svd_norm: bool,

    /// Worker threads for test classification.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum BackendArg {
    Dtw,
    Bow,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MetricArg {
    Rrv,
    L2,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ProtocolArg {
    /// Single cross-subject split (odd subjects train by default).
    Cs,
    /// All half/half subject splits.
    CvAll,
    /// Leave one subject out.
    Losubo,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum FormatArg {
    /// Delimited 6-DOF trajectory text.
    Rigid,
    /// 20-joint skeleton text.
    Skeleton,
    /// JSON samples.
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute descriptors for samples and write them as CSV or binary.
    Describe {
        /// A sample file or a dataset directory.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        /// Emit length-prefixed little-endian binary instead of CSV
        /// (single rigid-body descriptors only).
        #[arg(long)]
        binary: bool,
    },
    /// Generate a synthetic labeled dataset on disk.
    Synth {
        /// Synthetic dataset spec (JSON); defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Run the configured recognition experiment end to end.
    Evaluate,
    /// Learn dictionaries and the SVM, then persist the model container.
    TrainBow,
    /// Classify samples with a trained model (or 1-NN against the
    /// configured training split with the DTW back-end).
    Classify {
        /// Trained model container (bag-of-words back-end).
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
}

/// Failure taxonomy behind the exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1: the invocation itself is wrong.
    Usage(String),
    /// Exit 2: input data or configuration cannot be processed.
    Data(String),
}

impl From<rrv_core::eval::EvalError> for CliError {
    fn from(e: rrv_core::eval::EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<rrv_core::data::DataError> for CliError {
    fn from(e: rrv_core::data::DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<rrv_core::io::IoError> for CliError {
    fn from(e: rrv_core::io::IoError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn resolve_config(shared: &SharedArgs) -> Result<RunConfig, CliError> {
    let mut config = match &shared.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = shared.seed {
        config.dataset.synthetic.seed = seed;
    }
    if let Some(backend) = shared.backend {
        config.recognizer.backend = match backend {
            BackendArg::Dtw => Backend::Dtw,
            BackendArg::Bow => Backend::Bow,
        };
    }
    if let Some(metric) = shared.metric {
        config.descriptor.metric = match metric {
            MetricArg::Rrv => Metric::Rrv,
            MetricArg::L2 => Metric::L2,
        };
    }
    if let Some(protocol) = shared.protocol {
        config.protocol = match protocol {
            ProtocolArg::Cs => Protocol::CrossSubject { train: None },
            ProtocolArg::CvAll => Protocol::CrossValidationAllSplits,
            ProtocolArg::Losubo => Protocol::LeaveOneSubjectOut,
        };
    }
    if shared.skip_svd_norm {
        config.descriptor.skip_svd_normalization = true;
    }
    if let Some(threads) = shared.threads {
        config.threads = threads;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = resolve_config(&cli.shared)?;
    match cli.command {
        Command::Describe {
            input,
            format,
            binary,
        } => commands::describe(&config, &input, format, binary, &cli.shared.out),
        Command::Synth { spec } => {
            commands::synth(&config, spec.as_deref(), cli.shared.seed, &cli.shared.out)
        }
        Command::Evaluate => commands::evaluate(&config, &cli.shared.out),
        Command::TrainBow => commands::train_bow(&config, &cli.shared.out),
        Command::Classify {
            model,
            input,
            format,
        } => commands::classify(&config, model.as_deref(), &input, format, &cli.shared.out),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };

    let outcome = std::panic::catch_unwind(move || run(cli));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(CliError::Usage(msg))) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Ok(Err(CliError::Data(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(_) => {
            eprintln!("internal invariant violation");
            ExitCode::from(3)
        }
    }
}
