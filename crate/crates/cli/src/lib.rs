//! Command-line front end for `chainrec`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod report;
pub mod svg;

pub use report::{Format, Record};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    /// Some analysis was inconclusive, or a chain or certificate did not check out.
    pub const INCONCLUSIVE: u8 = 1;
    pub const USAGE: u8 = 2;
}

#[derive(Debug, Parser)]
#[command(name = "chainrec", version, about = "Chain recurrence experiments on maps of the line and the plane")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify each (point, notion) pair on a box discretization.
    Classify(CommonArgs),
    /// Find, check or build chains.
    Chain {
        #[command(subcommand)]
        action: ChainAction,
    },
    /// Turn a closed radius chain into a disk chain certificate, or check one.
    Certify {
        #[command(flatten)]
        common: CommonArgs,
        /// Chain file (one point per line).
        #[arg(long)]
        chain: Option<PathBuf>,
        /// Certificate file to check with --verify-only.
        #[arg(long)]
        certificate: Option<PathBuf>,
        #[arg(long)]
        verify_only: bool,
    },
    /// Search the window for a fixed point.
    Fixedpoint {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Draw orbits, chains, disks and fixed boxes as SVG.
    Plot {
        #[command(flatten)]
        common: CommonArgs,
        /// Orbit seed `x,y` (repeatable).
        #[arg(long, allow_hyphen_values = true)]
        seed: Vec<String>,
        #[arg(long)]
        iterates: Option<usize>,
        /// Chain file to draw (repeatable).
        #[arg(long = "chain")]
        chains: Vec<PathBuf>,
        /// Certificate file whose disks are drawn (repeatable).
        #[arg(long = "certificate")]
        certificates: Vec<PathBuf>,
        /// Fill boxes of the grid that contain a sampled fixed point.
        #[arg(long)]
        fixed_boxes: bool,
        #[arg(long)]
        width: Option<u32>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ChainAction {
    /// Search the box graph for a chain from --from to --to (default: --from).
    Find {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<String>,
    },
    /// Check a chain file against every given notion.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        chain: PathBuf,
    },
    /// Build one of the explicit chains: `translation_exp` (needs --eps) or
    /// `semicircle` (needs --radius-field).
    BuildExample {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        example: String,
        #[arg(long, allow_hyphen_values = true)]
        start: String,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in system, e.g. `translation_exp`, `rotation:5`, `semicircle`.
    #[arg(long)]
    pub system: Option<String>,
    /// euclidean | bounded | circle
    #[arg(long)]
    pub metric: Option<String>,
    /// `x0,x1,y0,y1`, or `t0,t1` on the line.
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
    /// `NX,NY`, or `N` on the line.
    #[arg(long)]
    pub grid: Option<String>,
    /// sampled | lipschitz
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub samples_per_box: Option<usize>,
    /// ε values (comma separated or repeated).
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    /// Strong-chain budgets.
    #[arg(long, value_delimiter = ',')]
    pub strong: Vec<f64>,
    /// `const:C`, `invsq:C` or `expr:...` (repeatable).
    #[arg(long = "radius-field")]
    pub radius_field: Vec<String>,
    /// Only jump inside this region: `disk:cx,cy,R` or `box:x0,x1,y0,y1`. Applies to --eps.
    #[arg(long, allow_hyphen_values = true)]
    pub restrict: Option<String>,
    /// Query point `x,y` (repeatable).
    #[arg(long, allow_hyphen_values = true)]
    pub point: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for graph construction (default: all processors).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files.
    Usage(anyhow::Error),
    /// The analysis itself failed, e.g. a certificate could not be built.
    Analysis(anyhow::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Analysis(_) => exit::INCONCLUSIVE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(e) | CliError::Analysis(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.into())
    }
}

/// Runs one command, writing results to `out`; returns the exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<u8, CliError> {
    use commands::*;
    match cli.command {
        Command::Classify(c) => classify(&c, out),
        Command::Chain { action } => match action {
            ChainAction::Find { common, from, to } => chain_find(&common, &from, to.as_deref(), out),
            ChainAction::Verify { common, chain } => chain_verify(&common, &chain, out),
            ChainAction::BuildExample { common, example, start } => chain_build_example(&common, &example, &start, out),
        },
        Command::Certify { common, chain, certificate, verify_only } => {
            certify(&common, chain, certificate, verify_only, out)
        }
        Command::Fixedpoint { common, tol } => fixedpoint(&common, tol, out),
        Command::Plot { common, seed, iterates, chains, certificates, fixed_boxes, width } => {
            let extra = PlotArgs { seed, iterates, chains, certificates, fixed_boxes, width };
            plot(&common, &extra, out)
        }
    }
}
