use std::fs;
use std::path::PathBuf;

use tpa_core::channel::{gamma_grid, Spacing};
use tpa_core::fock::DEFAULT_TAIL_TOL;
use tpa_core::probe_opt::OptConfig;

use crate::args::{Common, Format, GridSpacing};
use crate::error::{CliError, CliResult, UsageContext};
use crate::probes::ProbeSpec;

pub const DEFAULT_GAMMA_MIN: f64 = 1e-3;
pub const DEFAULT_GAMMA_MAX: f64 = 1.0 - 1e-3;
pub const DEFAULT_GAMMA_COUNT: usize = 60;

/// Flags merged with the config file and defaults applied.
#[derive(Debug, Clone)]
pub struct Settings {
    pub nbar: f64,
    pub grid: Vec<f64>,
    pub single_gamma: Option<f64>,
    pub nmax: usize,
    pub dim: Option<usize>,
    pub tail_tol: f64,
    pub opt: OptConfig,
    pub probes: Option<Vec<ProbeSpec>>,
    pub nbars: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub archive: Option<PathBuf>,
    pub format: Format,
}

impl Settings {
    pub fn resolve(flags: Common) -> CliResult<Self> {
        let common = match &flags.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::usage(format!("cannot read config {}: {e}", path.display()))
                })?;
                let file: Common = serde_json::from_str(&text).map_err(|e| {
                    CliError::usage(format!("invalid config {}: {e}", path.display()))
                })?;
                flags.merged_with(file)
            }
            None => flags,
        };

        let nbar = common.nbar.unwrap_or(2.0);
        if !(nbar >= 0.0 && nbar.is_finite()) {
            return Err(CliError::usage(format!(
                "--nbar must be finite and ≥ 0, got {nbar}"
            )));
        }
        let grid = match common.gamma {
            Some(g) => gamma_grid(g, g, 1, Spacing::Linear).or_usage()?,
            None => {
                let spacing = match common.gamma_spacing.unwrap_or(GridSpacing::Log) {
                    GridSpacing::Log => Spacing::Log,
                    GridSpacing::Linear => Spacing::Linear,
                };
                gamma_grid(
                    common.gamma_min.unwrap_or(DEFAULT_GAMMA_MIN),
                    common.gamma_max.unwrap_or(DEFAULT_GAMMA_MAX),
                    common.gamma_count.unwrap_or(DEFAULT_GAMMA_COUNT),
                    spacing,
                )
                .or_usage()?
            }
        };
        let nmax = common.nmax.unwrap_or(10);
        let tail_tol = common.tail_tol.unwrap_or(DEFAULT_TAIL_TOL);
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(CliError::usage(format!(
                "--tail-tol must lie in (0, 1), got {tail_tol}"
            )));
        }
        if common.dim == Some(0) {
            return Err(CliError::usage("--dim must be positive"));
        }

        let defaults = OptConfig::default();
        let opt = OptConfig {
            nbar,
            nmax,
            seed: common.seed.unwrap_or(defaults.seed),
            restarts: common.restarts.unwrap_or(defaults.restarts),
            generations: common.generations.unwrap_or(defaults.generations),
            population: common.population.unwrap_or(defaults.population),
            ..defaults
        };

        let probes = common
            .probes
            .map(|list| {
                list.iter()
                    .map(|s| s.parse::<ProbeSpec>())
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()
            .or_usage()?;
        if let Some(nbars) = &common.nbars {
            if nbars.is_empty() || nbars.iter().any(|n| !(*n >= 0.0 && n.is_finite())) {
                return Err(CliError::usage("--nbars needs finite values ≥ 0"));
            }
        }

        Ok(Settings {
            nbar,
            grid,
            single_gamma: common.gamma,
            nmax,
            dim: common.dim,
            tail_tol,
            opt,
            probes,
            nbars: common.nbars,
            out: common.out,
            archive: common.archive,
            format: common.format.unwrap_or(Format::Csv),
        })
    }

    /// Optimizer settings at one grid point.
    pub fn opt_config(&self, nbar: f64, gamma_cap: f64) -> OptConfig {
        OptConfig {
            nbar,
            gamma_cap,
            ..self.opt.clone()
        }
    }

    /// Rejects optimizer settings before any work starts.
    pub fn check_optimizer(&self, nbar: f64) -> CliResult<()> {
        self.opt_config(nbar, self.grid[0]).validate().or_usage()
    }
}
