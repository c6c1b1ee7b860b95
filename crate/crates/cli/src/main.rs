//! `esnn`: generate OMNIST, train, label, evaluate and export trajectories.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error (missing or
//! corrupt inputs), 4 runtime error (simulation failure, unwritable output).

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "esnn",
    version,
    about = "Elastic clustering spiking networks and the OMNIST benchmark"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Replaces the configured seed list with this single seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// No progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetArg {
    Mnist,
    Omnist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Write OMNIST containers and CSV indices. `--seed` sets the generator seed.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "both")]
        split: SplitArg,
        /// Use only the first N source digits of each split.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Unsupervised training, one checkpoint per seed.
    Train {
        #[command(flatten)]
        common: Common,
        /// Train on the first N images (overrides the config).
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Assign digit labels to the neurons of a checkpoint.
    Label {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Label with the first N training images (overrides the config).
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Evaluate a labeled checkpoint; writes metrics JSON and text per seed.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum)]
        dataset: DatasetArg,
        #[arg(long = "st-stdp", value_enum, default_value = "off")]
        st_stdp: Switch,
        /// Evaluate at most N images or frames.
        #[arg(long)]
        limit: Option<usize>,
        /// Allow short-term STDP on static MNIST.
        #[arg(long)]
        force: bool,
        /// Also write the excitatory spike raster.
        #[arg(long)]
        dump_spikes: bool,
    },
    /// Efficacy trajectory of one neuron on the first OMNIST test frames.
    Trajectory {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        neuron: usize,
        /// Number of OMNIST frames streamed.
        #[arg(long, default_value_t = 34)]
        limit: usize,
        /// Sampling interval (ms).
        #[arg(long, default_value_t = 10.0)]
        sample_ms: f64,
        /// Silence after the last frame (ms).
        #[arg(long, default_value_t = 1500.0)]
        tail_ms: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Generate {
            common,
            split,
            limit,
        } => commands::generate(&common, split, limit),
        Cmd::Train { common, limit } => commands::train(&common, limit),
        Cmd::Label {
            common,
            checkpoint,
            limit,
        } => commands::label(&common, &checkpoint, limit),
        Cmd::Eval {
            common,
            checkpoint,
            dataset,
            st_stdp,
            limit,
            force,
            dump_spikes,
        } => commands::eval(
            &common,
            &commands::EvalArgs {
                checkpoint,
                dataset,
                st_stdp: st_stdp == Switch::On,
                limit,
                force,
                dump_spikes,
            },
        ),
        Cmd::Trajectory {
            common,
            checkpoint,
            neuron,
            limit,
            sample_ms,
            tail_ms,
        } => commands::trajectory(&common, &checkpoint, neuron, limit, sample_ms, tail_ms),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("esnn: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
