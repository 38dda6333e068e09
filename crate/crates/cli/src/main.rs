//! `codacube`: log-ratio coordinates, decompositions and sample statistics
//! for k-factorial compositional tables.

mod commands;
mod config;
mod failure;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "codacube", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
pub struct Io {
    /// Long-format CSV: one column per factor, optional `id`, and `value`.
    #[arg(long)]
    pub input: PathBuf,
    /// JSON analysis configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file (stdout if omitted) or directory, depending on the command.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long)]
    pub force: bool,
}

#[derive(Args)]
pub struct Selection {
    /// Emit coordinates without the normalizing constant.
    #[arg(long)]
    pub no_norm: bool,
    /// Coordinate groups to keep (`r`, `rc`, `ind`, `int`, ...).
    #[arg(long, value_delimiter = ',')]
    pub groups: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// One row of coordinates per observation.
    Coords {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        sel: Selection,
    },
    /// Orthogonal parts of each observation, in long format.
    Decompose {
        #[command(flatten)]
        io: Io,
        /// `all`, `ind`, or an interaction label such as `rc`.
        #[arg(long, default_value = "all")]
        part: String,
        /// Close each part to the configured constant.
        #[arg(long)]
        closed: bool,
    },
    /// Per-coordinate mean, sd and bootstrap percentile interval.
    SampleStats {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        sel: Selection,
        #[arg(long = "bootstrap-B")]
        bootstrap_b: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Principal components of the coordinates; writes loadings.csv,
    /// scores.csv and variance.csv into the --out directory.
    Pca {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        sel: Selection,
    },
    /// The contrast matrix of the configured design.
    ContrastMatrix {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
        /// Report max |V V' - I| and the largest row sum on stderr.
        #[arg(long)]
        verify: bool,
    },
    /// Applies user log-contrasts to each observation.
    Transform {
        #[command(flatten)]
        io: Io,
        /// CSV with a `name` column and one column per cell label; rows sum to zero.
        #[arg(long)]
        matrix: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Coords { io, sel } => commands::coords(&io, &sel),
        Command::Decompose { io, part, closed } => commands::decompose(&io, &part, closed),
        Command::SampleStats {
            io,
            sel,
            bootstrap_b,
            alpha,
            seed,
        } => commands::sample_stats(&io, &sel, bootstrap_b, alpha, seed),
        Command::Pca { io, sel } => commands::pca(&io, &sel),
        Command::ContrastMatrix {
            config,
            out,
            force,
            verify,
        } => commands::contrast_matrix(&config, out.as_deref(), force, verify),
        Command::Transform { io, matrix } => commands::transform(&io, &matrix),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
