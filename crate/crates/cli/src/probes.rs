use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use tpa_core::fock::{
    coherent_dim, make_coherent, make_dv, make_fock, make_on, make_squeezed_vacuum,
    squeezed_vacuum_dim, FockState,
};
use tpa_core::probe_opt::{on_scan, optimize_probe};

use crate::error::{CliError, CliResult, UsageContext};
use crate::settings::Settings;

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeSpec {
    Fock(usize),
    Coherent,
    Squeezed,
    On(usize),
    OnBest,
    Opt,
    Dv(PathBuf),
}

impl FromStr for ProbeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let level = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| format!("probe '{s}': '{v}' is not a photon number"))
        };
        match s.split_once(':') {
            None => match s {
                "coherent" => Ok(ProbeSpec::Coherent),
                "sv" => Ok(ProbeSpec::Squeezed),
                "opt" => Ok(ProbeSpec::Opt),
                _ => Err(format!(
                    "unknown probe '{s}' (expected fock:n, coherent, sv, on:N, on:best, opt, dv:FILE)"
                )),
            },
            Some(("fock", v)) => Ok(ProbeSpec::Fock(level(v)?)),
            Some(("on", "best")) => Ok(ProbeSpec::OnBest),
            Some(("on", v)) => Ok(ProbeSpec::On(level(v)?)),
            Some(("dv", v)) if !v.is_empty() => Ok(ProbeSpec::Dv(PathBuf::from(v))),
            _ => Err(format!("malformed probe spec '{s}'")),
        }
    }
}

impl fmt::Display for ProbeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeSpec::Fock(n) => write!(f, "fock:{n}"),
            ProbeSpec::Coherent => write!(f, "coherent"),
            ProbeSpec::Squeezed => write!(f, "sv"),
            ProbeSpec::On(n) => write!(f, "on:{n}"),
            ProbeSpec::OnBest => write!(f, "on:best"),
            ProbeSpec::Opt => write!(f, "opt"),
            ProbeSpec::Dv(p) => write!(f, "dv:{}", p.display()),
        }
    }
}

/// A probe ready for evaluation at a given mean photon number. States that
/// do not depend on `Γ` are built once.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub spec: ProbeSpec,
    nbar: f64,
    fixed: Option<FockState>,
}

impl Prepared {
    pub fn id(&self) -> String {
        self.spec.to_string()
    }

    pub fn state_at(&self, settings: &Settings, gamma_cap: f64) -> CliResult<FockState> {
        if let Some(state) = &self.fixed {
            return Ok(state.clone());
        }
        let nmax = settings.nmax;
        match self.spec {
            ProbeSpec::OnBest => {
                let scan = on_scan(self.nbar, gamma_cap, nmax)?;
                Ok(make_on(self.nbar, scan.n_best, nmax + 1)?)
            }
            ProbeSpec::Opt => {
                let result = optimize_probe(&settings.opt_config(self.nbar, gamma_cap))?;
                let amps: Vec<f64> = result
                    .populations
                    .iter()
                    .map(|p| p.max(0.0).sqrt())
                    .collect();
                Ok(make_dv(&amps, nmax + 1)?)
            }
            _ => unreachable!("Γ-independent probes are built in prepare"),
        }
    }
}

pub fn prepare(specs: &[ProbeSpec], settings: &Settings, nbar: f64) -> CliResult<Vec<Prepared>> {
    specs
        .iter()
        .map(|spec| prepare_one(spec, settings, nbar))
        .collect()
}

fn prepare_one(spec: &ProbeSpec, settings: &Settings, nbar: f64) -> CliResult<Prepared> {
    let tol = settings.tail_tol;
    let fixed = match spec {
        ProbeSpec::Fock(n) => Some(make_fock(*n, settings.dim.unwrap_or(n + 1)).or_usage()?),
        ProbeSpec::Coherent => {
            let dim = match settings.dim {
                Some(d) => d,
                None => coherent_dim(nbar, tol).or_usage()?,
            };
            Some(make_coherent(nbar, dim, tol).or_usage()?)
        }
        ProbeSpec::Squeezed => {
            let dim = match settings.dim {
                Some(d) => d,
                None => squeezed_vacuum_dim(nbar, tol).or_usage()?,
            };
            Some(make_squeezed_vacuum(nbar, dim, tol).or_usage()?)
        }
        ProbeSpec::On(n) => Some(make_on(nbar, *n, settings.dim.unwrap_or(n + 1)).or_usage()?),
        ProbeSpec::OnBest => {
            if nbar > settings.nmax as f64 {
                return Err(CliError::usage(format!(
                    "n̄ = {nbar} exceeds --nmax {}",
                    settings.nmax
                )));
            }
            None
        }
        ProbeSpec::Opt => {
            settings.check_optimizer(nbar)?;
            None
        }
        ProbeSpec::Dv(path) => Some(load_dv(path, settings.dim)?),
    };
    Ok(Prepared {
        spec: spec.clone(),
        nbar,
        fixed,
    })
}

/// Reads a JSON array of real coefficients, a state object, or the output
/// of `tpa probe --format json` (first record).
fn load_dv(path: &PathBuf, dim: Option<usize>) -> CliResult<FockState> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let bad = |e: String| CliError::usage(format!("{}: {e}", path.display()));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let state = match &value {
        serde_json::Value::Array(items) if items.iter().all(|v| v.is_number()) => {
            let coeffs: Vec<f64> = items.iter().filter_map(|v| v.as_f64()).collect();
            make_dv(&coeffs, dim.unwrap_or(coeffs.len())).map_err(|e| bad(e.to_string()))?
        }
        serde_json::Value::Array(items) => {
            let inner = items
                .first()
                .and_then(|r| r.get("state"))
                .ok_or_else(|| bad("expected coefficients or probe records".into()))?;
            FockState::from_json(&inner.to_string()).map_err(|e| bad(e.to_string()))?
        }
        _ => FockState::from_json(&text).map_err(|e| bad(e.to_string()))?,
    };
    match dim {
        Some(d) if d != state.dim() => state.padded(d).map_err(|e| bad(e.to_string())),
        _ => Ok(state),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints_specs() {
        for s in [
            "fock:3",
            "coherent",
            "sv",
            "on:4",
            "on:best",
            "opt",
            "dv:state.json",
        ] {
            assert_eq!(s.parse::<ProbeSpec>().unwrap().to_string(), s);
        }
        for s in ["fock", "fock:x", "on:", "squeezed", "dv:", "fock:-1"] {
            assert!(s.parse::<ProbeSpec>().is_err(), "{s}");
        }
    }
}
