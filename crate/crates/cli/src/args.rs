use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "momentflow",
    version,
    about = "Moment-map flows and orbit verdicts for Lie brackets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Flow from one bracket to a critical point (or minimal vector).
    Flow {
        /// Bracket file, or `catalog:NAME`.
        input: String,
    },
    /// Moment map, critical residual, Jacobi defect, invariants, stabilizer.
    Check { input: String },
    /// One input: real vs complexified flow. Two inputs: real-forms comparison.
    Compare { input: String, other: Option<String> },
    /// Run `flow` or `check` over the catalog (`catalog`, `catalog:a,b`) or
    /// every `*.json` file in a directory.
    Batch {
        target: String,
        #[arg(long, value_enum, default_value_t = BatchRun::Flow)]
        run: BatchRun,
    },
    /// List the built-in catalog, or write it out as bracket files.
    Catalog {
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BatchRun {
    Flow,
    Check,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupArg {
    Gl,
    Sl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    #[arg(long, global = true, value_enum, default_value_t = GroupArg::Gl)]
    pub group: GroupArg,
    /// Work with the complexification under GL_n(C).
    #[arg(long, global = true)]
    pub complexify: bool,
    /// Kempf–Ness flow instead of the projective flow (needs `--group sl`).
    #[arg(long, global = true)]
    pub kempf_ness: bool,
    /// Move the input by a random well-conditioned group element first.
    #[arg(long, global = true)]
    pub perturb_seed: Option<u64>,
    /// Seed for the random complex perturbation in `compare`.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub tol_grad: Option<f64>,
    #[arg(long, global = true)]
    pub tol_residual: Option<f64>,
    #[arg(long, global = true)]
    pub max_time: Option<f64>,
    #[arg(long, global = true)]
    pub record_stride: Option<usize>,
    /// Include sampled trajectories in flow reports.
    #[arg(long, global = true)]
    pub trajectory: bool,
    /// Accept tensors that fail the Jacobi identity (moment data only).
    #[arg(long, global = true)]
    pub allow_non_lie: bool,
    /// Add wall-clock time to the report (makes it non-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}
