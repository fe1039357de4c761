use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "tpa",
    version,
    about = "Two-photon-absorption metrology: QFI, photon counting and optimal probes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// QFI and photon-counting FI over a Γ grid.
    Qfi(Common),
    /// Optimal DV probe populations over a Γ grid.
    Optimize(Common),
    /// Quantum advantage over the coherent state of equal mean photon number.
    Advantage(Common),
    /// Photon-counting efficiency F_PN / QFI.
    Efficiency(Common),
    /// QFI and F_PN against mean photon number at fixed Γ.
    Scaling(Common),
    /// Runs the self-check suite.
    Validate(ValidateArgs),
    /// Prints probe amplitudes.
    Probe(Common),
    /// Photon-number distribution after the channel.
    Evolve(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridSpacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Quick,
    Full,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value = "quick")]
    pub level: LevelArg,
    /// Runs only the named checks.
    #[arg(long = "check", value_name = "ID")]
    pub checks: Vec<String>,
    /// Lists check ids and exits.
    #[arg(long)]
    pub list: bool,
}

/// Flags shared by the computing subcommands. A `--config` JSON file may
/// set any of them under the same name with underscores; flags win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Common {
    /// Mean photon number.
    #[arg(long)]
    pub nbar: Option<f64>,
    /// Single Γ value; replaces the grid.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub gamma_min: Option<f64>,
    #[arg(long)]
    pub gamma_max: Option<f64>,
    #[arg(long)]
    pub gamma_count: Option<usize>,
    #[arg(long, value_enum)]
    pub gamma_spacing: Option<GridSpacing>,
    /// Largest Fock level for optimized and ON probes.
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Fock truncation override.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Tail tolerance for coherent and squeezed truncation.
    #[arg(long)]
    pub tail_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub population: Option<usize>,
    /// Probe specs: fock:n, coherent, sv, on:N, on:best, opt, dv:FILE.
    #[arg(long, value_delimiter = ',')]
    pub probes: Option<Vec<String>>,
    /// Mean photon numbers swept by `scaling`.
    #[arg(long, value_delimiter = ',')]
    pub nbars: Option<Vec<f64>>,
    /// Output file; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON archive written by `optimize` next to the CSV.
    #[arg(long)]
    pub archive: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Common {
    /// Fills every unset flag from `file`.
    pub fn merged_with(self, file: Common) -> Common {
        macro_rules! pick {
            ($($f:ident),*) => { Common { $($f: self.$f.or(file.$f),)* config: self.config } };
        }
        pick!(
            nbar,
            gamma,
            gamma_min,
            gamma_max,
            gamma_count,
            gamma_spacing,
            nmax,
            dim,
            tail_tol,
            seed,
            restarts,
            generations,
            population,
            probes,
            nbars,
            out,
            archive,
            format
        )
    }
}
