//! Command-line front end: coin protocols, agreement curves, beam ensembles,
//! and the grid check of the field crossing. Each run writes a manifest and
//! its data files into `--out`; reruns with the same parameters reproduce
//! the data files byte for byte.

mod commands;
mod io;
mod protocol;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "contextsim", version, about = "Contextual-measurement experiments: zero-gravity coin tosses and spin-1/2 beam trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sequential clap measurements of a tossed coin
    Coin(CoinArgs),
    /// Classical vs quantum sequential-agreement curves
    Curves(CurvesArgs),
    /// Trajectory ensembles through the magnet, with screen statistics
    #[command(name = "stern-gerlach")]
    SternGerlach(SgArgs),
    /// Grid solver of the field crossing against the derived beam parameters
    #[command(name = "validate-field")]
    ValidateField(ValidateFieldArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoinPreset {
    /// Single clap along z
    Fig2,
    /// Two claps along z, z
    Fig3,
    /// Two claps along z, y
    Fig4,
    /// Three claps along z, y, z
    Fig5,
}

#[derive(clap::Args)]
pub struct CoinArgs {
    /// Built-in protocol
    #[arg(long, value_enum, conflicts_with_all = ["protocol", "axes"])]
    pub preset: Option<CoinPreset>,
    /// JSON protocol file: {"axes": [...], "trials": n, "seed": s}
    #[arg(long, conflicts_with = "axes")]
    pub protocol: Option<PathBuf>,
    /// Inline axes: x, y, z or a,b,c component triples
    #[arg(long, num_args = 1..)]
    pub axes: Option<Vec<String>>,
    /// Number of trials (overrides the protocol file)
    #[arg(long)]
    pub trials: Option<usize>,
    /// RNG seed (overrides the protocol file)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(clap::Args)]
pub struct CurvesArgs {
    /// Number of angle rows over [0, 180] degrees
    #[arg(long, default_value_t = 181)]
    pub angles: usize,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SgPreset {
    /// Pure state theta0 = 60 deg, 6 trajectories
    Fig7,
    /// Pure state theta0 = 90 deg, 6 trajectories
    Fig8,
    /// Statistical mixture, 6 trajectories
    Fig9,
}

#[derive(clap::Args)]
pub struct SgArgs {
    /// Built-in figure parameters
    #[arg(long, value_enum, conflicts_with_all = ["pure", "mixture"])]
    pub preset: Option<SgPreset>,
    /// Pure-state preparation angles, degrees
    #[arg(long, num_args = 2, value_names = ["THETA_DEG", "PHI_DEG"], conflicts_with = "mixture")]
    pub pure: Option<Vec<f64>>,
    /// Statistical mixture of pure states
    #[arg(long)]
    pub mixture: bool,
    /// Number of trajectories
    #[arg(long)]
    pub n: Option<usize>,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Physical config JSON (defaults match the silver-beam apparatus)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Density-profile times on the entry clock, seconds
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GaugeArg {
    /// Carry the gradient's linear phase as an exact momentum offset
    SpectralOffset,
    /// Apply the exact 2x2 potential exponential at every node
    Pointwise,
}

#[derive(clap::Args)]
pub struct ValidateFieldArgs {
    /// Physical config JSON
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Grid nodes per axis
    #[arg(long, default_value_t = 256)]
    pub nodes: usize,
    /// Box edge length in units of sigma0
    #[arg(long, default_value_t = 14.0)]
    pub box_sigmas: f64,
    /// Strang steps across the field-crossing time
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    /// How the gradient potential is applied
    #[arg(long, value_enum, default_value_t = GaugeArg::SpectralOffset)]
    pub gauge: GaugeArg,
    /// Also write the final grid state as CSV
    #[arg(long)]
    pub dump_state: bool,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Coin(args) => commands::cmd_coin(args),
        Command::Curves(args) => commands::cmd_curves(args),
        Command::SternGerlach(args) => commands::cmd_stern_gerlach(args),
        Command::ValidateField(args) => commands::cmd_validate_field(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}
