use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use tpa_core::channel::TpaChannel;
use tpa_core::fock::{mean_photon, photon_distribution, FockState};
use tpa_core::metrology::{fi_photon_counting, pn_efficiency, qfi, quantum_advantage};
use tpa_core::probe_opt::{optimize_probe, OptResult};

use crate::args::Format;
use crate::error::{CliError, CliResult};
use crate::output::{emit, json, num, render, text_field, Row};
use crate::probes::{prepare, Prepared, ProbeSpec};
use crate::settings::Settings;

#[derive(Debug, Serialize)]
pub struct QfiRow {
    pub gamma: f64,
    pub probe_id: String,
    pub nbar: f64,
    pub qfi: f64,
    pub fi_pn: f64,
}

impl Row for QfiRow {
    const HEADER: &'static str = "gamma,probe_id,nbar,qfi,fi_pn";
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{}",
            num(self.gamma),
            text_field(&self.probe_id),
            num(self.nbar),
            num(self.qfi),
            num(self.fi_pn)
        )
    }
}

#[derive(Debug, Serialize)]
pub struct AdvantageRow {
    pub gamma: f64,
    pub probe_id: String,
    pub nbar: f64,
    pub qfi: f64,
    pub qfi_coherent: f64,
    pub qa: f64,
}

impl Row for AdvantageRow {
    const HEADER: &'static str = "gamma,probe_id,nbar,qfi,qfi_coherent,qa";
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            num(self.gamma),
            text_field(&self.probe_id),
            num(self.nbar),
            num(self.qfi),
            num(self.qfi_coherent),
            num(self.qa)
        )
    }
}

#[derive(Debug, Serialize)]
pub struct EfficiencyRow {
    pub gamma: f64,
    pub probe_id: String,
    pub nbar: f64,
    pub qfi: f64,
    pub fi_pn: f64,
    pub eta_pn: f64,
}

impl Row for EfficiencyRow {
    const HEADER: &'static str = "gamma,probe_id,nbar,qfi,fi_pn,eta_pn";
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            num(self.gamma),
            text_field(&self.probe_id),
            num(self.nbar),
            num(self.qfi),
            num(self.fi_pn),
            num(self.eta_pn)
        )
    }
}

#[derive(Debug, Serialize)]
pub struct PopulationRow {
    pub gamma: f64,
    pub j: usize,
    pub p_j: f64,
}

impl Row for PopulationRow {
    const HEADER: &'static str = "gamma,j,p_j";
    fn csv(&self) -> String {
        format!("{},{},{}", num(self.gamma), self.j, num(self.p_j))
    }
}

#[derive(Debug, Serialize)]
pub struct EvolveRow {
    pub gamma: f64,
    pub probe_id: String,
    pub n: usize,
    pub p_n: f64,
}

impl Row for EvolveRow {
    const HEADER: &'static str = "gamma,probe_id,n,p_n";
    fn csv(&self) -> String {
        format!(
            "{},{},{},{}",
            num(self.gamma),
            text_field(&self.probe_id),
            self.n,
            num(self.p_n)
        )
    }
}

#[derive(Debug, Serialize)]
pub struct AmplitudeRow {
    pub probe_id: String,
    pub j: usize,
    pub re: f64,
    pub im: f64,
    pub p_j: f64,
}

impl Row for AmplitudeRow {
    const HEADER: &'static str = "probe_id,j,re,im,p_j";
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{}",
            text_field(&self.probe_id),
            self.j,
            num(self.re),
            num(self.im),
            num(self.p_j)
        )
    }
}

fn default_probes(settings: &Settings, with_coherent: bool) -> Vec<ProbeSpec> {
    let mut specs = Vec::new();
    if with_coherent {
        specs.push(ProbeSpec::Coherent);
    }
    specs.push(ProbeSpec::Squeezed);
    let n = settings.nbar;
    if n.fract() == 0.0 && n >= 1.0 {
        specs.push(ProbeSpec::Fock(n as usize));
    }
    if n <= settings.nmax as f64 {
        specs.push(ProbeSpec::OnBest);
    }
    specs
}

fn specs_or(
    settings: &Settings,
    default: impl FnOnce() -> Vec<ProbeSpec>,
) -> CliResult<Vec<ProbeSpec>> {
    let specs = settings.probes.clone().unwrap_or_else(default);
    if specs.is_empty() {
        return Err(CliError::usage("no probes given"));
    }
    Ok(specs)
}

/// Evaluates `f` for every (Γ, probe) pair, grid points in parallel, rows
/// in grid-then-probe order.
fn sweep<R, F>(settings: &Settings, probes: &[Prepared], f: F) -> CliResult<Vec<R>>
where
    R: Send,
    F: Fn(f64, &Prepared, &FockState) -> CliResult<Vec<R>> + Sync,
{
    let per_gamma: Vec<CliResult<Vec<R>>> = settings
        .grid
        .par_iter()
        .map(|&g| {
            let mut rows = Vec::new();
            for p in probes {
                let state = p.state_at(settings, g)?;
                rows.extend(f(g, p, &state)?);
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for chunk in per_gamma {
        rows.extend(chunk?);
    }
    Ok(rows)
}

fn fisher(state: &FockState, g: f64) -> CliResult<(f64, f64, f64)> {
    let rho = state.to_density();
    Ok((
        mean_photon(&rho),
        qfi(&rho, g)?,
        fi_photon_counting(&rho, g)?,
    ))
}

fn write_rows<R: Row>(rows: &[R], settings: &Settings) -> CliResult<()> {
    emit(&render(rows, settings.format)?, settings.out.as_deref())
}

pub fn qfi_cmd(settings: &Settings) -> CliResult<()> {
    let specs = specs_or(settings, || default_probes(settings, true))?;
    let probes = prepare(&specs, settings, settings.nbar)?;
    let rows = sweep(settings, &probes, |g, p, state| {
        let (nbar, q, f) = fisher(state, g)?;
        Ok(vec![QfiRow {
            gamma: g,
            probe_id: p.id(),
            nbar,
            qfi: q,
            fi_pn: f,
        }])
    })?;
    write_rows(&rows, settings)
}

pub fn advantage_cmd(settings: &Settings) -> CliResult<()> {
    let specs = specs_or(settings, || default_probes(settings, false))?;
    let probes = prepare(&specs, settings, settings.nbar)?;
    let rows = sweep(settings, &probes, |g, p, state| {
        let rho = state.to_density();
        let nbar = mean_photon(&rho);
        let q = qfi(&rho, g)?;
        let coherent = prepare(&[ProbeSpec::Coherent], settings, nbar)?[0].state_at(settings, g)?;
        let qc = qfi(&coherent, g)?;
        Ok(vec![AdvantageRow {
            gamma: g,
            probe_id: p.id(),
            nbar,
            qfi: q,
            qfi_coherent: qc,
            qa: quantum_advantage(q, qc)?,
        }])
    })?;
    write_rows(&rows, settings)
}

pub fn efficiency_cmd(settings: &Settings) -> CliResult<()> {
    let specs = specs_or(settings, || default_probes(settings, true))?;
    let probes = prepare(&specs, settings, settings.nbar)?;
    let rows = sweep(settings, &probes, |g, p, state| {
        let (nbar, q, f) = fisher(state, g)?;
        let eta = if q > 0.0 {
            pn_efficiency(f, q)?
        } else {
            f64::NAN
        };
        Ok(vec![EfficiencyRow {
            gamma: g,
            probe_id: p.id(),
            nbar,
            qfi: q,
            fi_pn: f,
            eta_pn: eta,
        }])
    })?;
    write_rows(&rows, settings)
}

pub const DEFAULT_SCALING_GAMMA: f64 = 0.01;

pub fn scaling_cmd(settings: &Settings) -> CliResult<()> {
    let specs = specs_or(settings, || {
        vec![ProbeSpec::Coherent, ProbeSpec::Squeezed, ProbeSpec::OnBest]
    })?;
    let g = settings.single_gamma.unwrap_or(DEFAULT_SCALING_GAMMA);
    let nbars = settings
        .nbars
        .clone()
        .unwrap_or_else(|| (1..=10).map(|k| 0.5 * k as f64).collect());
    let prepared = nbars
        .iter()
        .map(|&n| prepare(&specs, settings, n))
        .collect::<CliResult<Vec<_>>>()?;
    let per_nbar: Vec<CliResult<Vec<QfiRow>>> = prepared
        .par_iter()
        .map(|probes| {
            probes
                .iter()
                .map(|p| {
                    let (nbar, q, f) = fisher(&p.state_at(settings, g)?, g)?;
                    Ok(QfiRow {
                        gamma: g,
                        probe_id: p.id(),
                        nbar,
                        qfi: q,
                        fi_pn: f,
                    })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for chunk in per_nbar {
        rows.extend(chunk?);
    }
    write_rows(&rows, settings)
}

/// Archive path for `optimize`: `--archive`, else the CSV path with a `.json` extension.
fn archive_path(settings: &Settings) -> Option<PathBuf> {
    if let Some(p) = &settings.archive {
        return Some(p.clone());
    }
    let out = settings.out.as_ref()?;
    let candidate = out.with_extension("json");
    Some(if &candidate == out {
        out.with_extension("archive.json")
    } else {
        candidate
    })
}

pub fn optimize_cmd(settings: &Settings) -> CliResult<()> {
    settings.check_optimizer(settings.nbar)?;
    let results = settings
        .grid
        .par_iter()
        .map(|&g| optimize_probe(&settings.opt_config(settings.nbar, g)))
        .collect::<Result<Vec<OptResult>, _>>()?;
    match settings.format {
        Format::Json => emit(&json(&results)?, settings.out.as_deref()),
        Format::Csv => {
            let rows: Vec<PopulationRow> = results
                .iter()
                .flat_map(|r| {
                    r.populations
                        .iter()
                        .enumerate()
                        .map(|(j, &p)| PopulationRow {
                            gamma: r.gamma,
                            j,
                            p_j: p,
                        })
                })
                .collect();
            write_rows(&rows, settings)?;
            match archive_path(settings) {
                Some(path) => emit(&json(&results)?, Some(&path)),
                None => Ok(()),
            }
        }
    }
}

pub fn evolve_cmd(settings: &Settings) -> CliResult<()> {
    let specs = specs_or(settings, || default_probes(settings, true))?;
    let probes = prepare(&specs, settings, settings.nbar)?;
    let rows = sweep(settings, &probes, |g, p, state| {
        let out = TpaChannel::at(state.dim(), tpa_core::channel::ChannelPoint::from_gamma(g)?)?
            .apply(&state.to_density())?;
        Ok(photon_distribution(&out)
            .into_iter()
            .enumerate()
            .map(|(n, p_n)| EvolveRow {
                gamma: g,
                probe_id: p.id(),
                n,
                p_n,
            })
            .collect())
    })?;
    write_rows(&rows, settings)
}

#[derive(Serialize)]
struct ProbeRecord {
    probe_id: String,
    state: serde_json::Value,
}

pub fn probe_cmd(settings: &Settings) -> CliResult<()> {
    let specs = specs_or(settings, || default_probes(settings, true))?;
    let probes = prepare(&specs, settings, settings.nbar)?;
    let needs_gamma = specs
        .iter()
        .any(|s| matches!(s, ProbeSpec::OnBest | ProbeSpec::Opt));
    let g = match settings.single_gamma {
        Some(g) => g,
        None if needs_gamma => return Err(CliError::usage("on:best and opt probes need --gamma")),
        None => f64::NAN,
    };
    let states = probes
        .iter()
        .map(|p| Ok((p.id(), p.state_at(settings, g)?)))
        .collect::<CliResult<Vec<_>>>()?;
    let text = match settings.format {
        Format::Csv => {
            let rows: Vec<AmplitudeRow> = states
                .iter()
                .flat_map(|(id, s)| {
                    s.amplitudes()
                        .iter()
                        .enumerate()
                        .map(move |(j, c)| AmplitudeRow {
                            probe_id: id.clone(),
                            j,
                            re: c.re,
                            im: c.im,
                            p_j: c.norm_sqr(),
                        })
                })
                .collect();
            render(&rows, Format::Csv)?
        }
        Format::Json => {
            let records = states
                .iter()
                .map(|(id, s)| {
                    let state = serde_json::from_str(&s.to_json()?).map_err(anyhow::Error::from)?;
                    Ok(ProbeRecord {
                        probe_id: id.clone(),
                        state,
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            json(&records)?
        }
    };
    emit(&text, settings.out.as_deref())
}
