//! QFI maximization over real, nonnegative superpositions of `|0⟩ … |N_max⟩`
//! at fixed mean photon number.
//!
//! The search variable is the population vector `p_j = c_j²`, on which both
//! constraints are linear. A global evolution strategy (Gaussian mutation,
//! elitist truncation selection, projection repair) seeds a projected
//! finite-difference gradient ascent. Restarts draw from independent ChaCha
//! streams, so serial and parallel execution agree bit for bit.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{lindblad_apply_matrix, ChannelPoint, TpaChannel};
use crate::error::{Result, TpaError};
use crate::fock::make_on;
use crate::metrology::{qfi, qfi_spectral};

/// Optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptConfig {
    pub nbar: f64,
    pub nmax: usize,
    pub gamma_cap: f64,
    pub population: usize,
    pub generations: usize,
    pub mutation_sigma: f64,
    pub sigma_decay: f64,
    pub elite_fraction: f64,
    pub local_iters: usize,
    pub local_step: f64,
    pub fd_step: f64,
    pub local_tol: f64,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            nbar: 2.0,
            nmax: 10,
            gamma_cap: 0.5,
            population: 64,
            generations: 200,
            mutation_sigma: 0.3,
            sigma_decay: 0.985,
            elite_fraction: 0.25,
            local_iters: 500,
            local_step: 1e-2,
            fd_step: 1e-5,
            local_tol: 1e-9,
            seed: 0,
            restarts: 8,
        }
    }
}

impl OptConfig {
    pub fn new(nbar: f64, gamma_cap: f64) -> Self {
        Self {
            nbar,
            gamma_cap,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nbar >= 0.0) || self.nbar > self.nmax as f64 {
            return Err(TpaError::InfeasibleMean(format!(
                "n̄ = {} must lie in [0, N_max = {}]",
                self.nbar, self.nmax
            )));
        }
        if !(self.gamma_cap > 0.0 && self.gamma_cap < 1.0) {
            return Err(TpaError::Domain(format!(
                "Γ must lie in (0, 1), got {}",
                self.gamma_cap
            )));
        }
        if self.population < 2 || self.restarts == 0 {
            return Err(TpaError::Domain(
                "population ≥ 2 and restarts ≥ 1 required".into(),
            ));
        }
        if !(self.local_step > 0.0 && self.fd_step > 0.0 && self.mutation_sigma >= 0.0) {
            return Err(TpaError::Domain("step sizes must be positive".into()));
        }
        Ok(())
    }
}

/// A runner-up optimum from another restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalOptimum {
    pub populations: Vec<f64>,
    pub qfi: f64,
}

/// Best probe found, with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub gamma: f64,
    pub nbar: f64,
    pub nmax: usize,
    pub seed: u64,
    pub populations: Vec<f64>,
    pub qfi: f64,
    pub converged: bool,
    pub local_optima: Vec<LocalOptimum>,
    /// Best-so-far objective after each generation and accepted local step
    /// of the winning restart.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

impl OptResult {
    /// Indices with population above `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        self.populations
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > threshold)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Objective maximized over feasible population vectors.
pub trait Objective: Sync {
    fn value(&self, populations: &[f64]) -> f64;
}

/// QFI of `Σ √p_j |j⟩` at a fixed `Γ`, with the channel precomputed.
#[derive(Debug, Clone)]
pub struct QfiObjective {
    channel: TpaChannel,
    inv_one_minus_gamma: f64,
}

impl QfiObjective {
    pub fn new(nmax: usize, gamma_cap: f64) -> Result<Self> {
        if !(gamma_cap > 0.0 && gamma_cap < 1.0) {
            return Err(TpaError::Domain(format!(
                "Γ must lie in (0, 1), got {gamma_cap}"
            )));
        }
        let point = ChannelPoint::from_gamma(gamma_cap)?;
        Ok(Self {
            channel: TpaChannel::at(nmax + 1, point)?,
            inv_one_minus_gamma: 1.0 / (1.0 - gamma_cap),
        })
    }
}

impl Objective for QfiObjective {
    fn value(&self, populations: &[f64]) -> f64 {
        let d = self.channel.dim();
        let amps: Vec<f64> = populations.iter().map(|&p| p.max(0.0).sqrt()).collect();
        let norm2: f64 = populations.iter().map(|&p| p.max(0.0)).sum();
        let rho0 = DMatrix::from_fn(d, d, |i, j| amps[i] * amps[j] / norm2);
        let out = self.channel.apply_matrix(&rho0);
        let drho = lindblad_apply_matrix(&out) * self.inv_one_minus_gamma;
        qfi_spectral(&out, &drho)
    }
}

/// Euclidean projection onto `{p ≥ 0, Σ p_j = 1, Σ j p_j = n̄}`.
///
/// The KKT point is `p_j = max(0, q_j − μ − ν j)`. For fixed `ν` the
/// multiplier `μ` is the simplex-projection threshold; the mean residual is
/// monotone in `ν`, which is bisected. The active set found this way is then
/// solved exactly for `(μ, ν)`.
pub fn project_constraints(p: &[f64], nbar: f64) -> Result<Vec<f64>> {
    if p.is_empty() {
        return Err(TpaError::Dimension(
            "population vector must be non-empty".into(),
        ));
    }
    let nmax = p.len() - 1;
    if !(nbar >= 0.0) || nbar > nmax as f64 {
        return Err(TpaError::InfeasibleMean(format!(
            "n̄ = {nbar} is outside [0, N_max = {nmax}]"
        )));
    }
    if p.iter().any(|x| !x.is_finite()) {
        return Err(TpaError::Domain(
            "population vector has non-finite entries".into(),
        ));
    }
    if nbar == 0.0 || nbar == nmax as f64 {
        let mut out = vec![0.0; p.len()];
        out[if nbar == 0.0 { 0 } else { nmax }] = 1.0;
        return Ok(out);
    }

    let mean_residual = |nu: f64| -> (f64, f64) {
        let mu = simplex_threshold(p, nu);
        let m: f64 = p
            .iter()
            .enumerate()
            .map(|(j, &q)| j as f64 * (q - nu * j as f64 - mu).max(0.0))
            .sum();
        (m - nbar, mu)
    };

    let (mut lo, mut hi) = (-1.0, 1.0);
    while mean_residual(lo).0 < 0.0 {
        lo *= 2.0;
    }
    while mean_residual(hi).0 > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mean_residual(mid).0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let nu = 0.5 * (lo + hi);
    let (_, mu) = mean_residual(nu);
    let bisected: Vec<f64> = p
        .iter()
        .enumerate()
        .map(|(j, &q)| (q - nu * j as f64 - mu).max(0.0))
        .collect();

    let support: Vec<usize> = (0..p.len()).filter(|&j| bisected[j] > 0.0).collect();
    if let Some(exact) = solve_on_support(p, nbar, &support) {
        return Ok(exact);
    }
    Ok(bisected)
}

/// Threshold `μ` with `Σ max(0, q_j − ν j − μ) = 1`.
fn simplex_threshold(q: &[f64], nu: f64) -> f64 {
    let mut y: Vec<f64> = q
        .iter()
        .enumerate()
        .map(|(j, &x)| x - nu * j as f64)
        .collect();
    y.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut mu = y[0] - 1.0;
    for (k, &v) in y.iter().enumerate() {
        cumsum += v;
        let candidate = (cumsum - 1.0) / (k + 1) as f64;
        if v - candidate > 0.0 {
            mu = candidate;
        } else {
            break;
        }
    }
    mu
}

fn solve_on_support(q: &[f64], nbar: f64, support: &[usize]) -> Option<Vec<f64>> {
    let (mut s0, mut s1, mut s2, mut sq, mut sjq) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &j in support {
        let jf = j as f64;
        s0 += 1.0;
        s1 += jf;
        s2 += jf * jf;
        sq += q[j];
        sjq += jf * q[j];
    }
    let det = s0 * s2 - s1 * s1;
    if det.abs() < 1e-12 {
        return None;
    }
    let (r0, r1) = (sq - 1.0, sjq - nbar);
    let mu = (r0 * s2 - r1 * s1) / det;
    let nu = (s0 * r1 - s1 * r0) / det;
    let mut out = vec![0.0; q.len()];
    for (j, x) in out.iter_mut().enumerate() {
        let v = q[j] - mu - nu * j as f64;
        if support.contains(&j) {
            if v < -1e-12 {
                return None;
            }
            *x = v.max(0.0);
        } else if v > 1e-12 {
            return None;
        }
    }
    Some(out)
}

/// Vertices of the feasible polytope: two-point supports `{i, j}` with
/// `i ≤ n̄ ≤ j`, and `|n̄⟩` itself when `n̄` is an integer.
pub fn feasible_vertices(nbar: f64, nmax: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for i in 0..=nmax {
        for j in i..=nmax {
            let (fi, fj) = (i as f64, j as f64);
            if fi > nbar || fj < nbar {
                continue;
            }
            let mut p = vec![0.0; nmax + 1];
            if i == j {
                p[i] = 1.0;
            } else {
                p[i] = (fj - nbar) / (fj - fi);
                p[j] = (nbar - fi) / (fj - fi);
            }
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

struct RestartOutcome {
    populations: Vec<f64>,
    qfi: f64,
    converged: bool,
    trace: Vec<f64>,
}

fn project_or_keep(x: &[f64], nbar: f64) -> Vec<f64> {
    project_constraints(x, nbar).expect("feasibility checked before the search")
}

fn random_feasible(rng: &mut ChaCha8Rng, len: usize, nbar: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    project_or_keep(&w.iter().map(|x| x / total).collect::<Vec<_>>(), nbar)
}

fn run_restart<O: Objective + ?Sized>(
    cfg: &OptConfig,
    objective: &O,
    restart: usize,
    vertices: &[Vec<f64>],
) -> RestartOutcome {
    let len = cfg.nmax + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);

    let mut pop: Vec<Vec<f64>> = vertices
        .iter()
        .skip(restart)
        .step_by(cfg.restarts)
        .take(cfg.population)
        .cloned()
        .collect();
    while pop.len() < cfg.population {
        pop.push(random_feasible(&mut rng, len, cfg.nbar));
    }
    let mut fit: Vec<f64> = pop.iter().map(|p| objective.value(p)).collect();

    let mut best_idx = argmax(&fit);
    let mut best = (pop[best_idx].clone(), fit[best_idx]);
    let mut trace = vec![best.1];

    let n_elite =
        ((cfg.population as f64 * cfg.elite_fraction).round() as usize).clamp(1, cfg.population);
    let mut sigma = cfg.mutation_sigma;
    for _ in 0..cfg.generations {
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]));
        let elites: Vec<(Vec<f64>, f64)> = order[..n_elite]
            .iter()
            .map(|&i| (pop[i].clone(), fit[i]))
            .collect();

        let mut next_pop = Vec::with_capacity(cfg.population);
        let mut next_fit = Vec::with_capacity(cfg.population);
        for (p, f) in &elites {
            next_pop.push(p.clone());
            next_fit.push(*f);
        }
        while next_pop.len() < cfg.population {
            let parent = &elites[rng.gen_range(0..n_elite)].0;
            let mutated: Vec<f64> = parent
                .iter()
                .map(|&x| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x + sigma * z
                })
                .collect();
            let child = project_or_keep(&mutated, cfg.nbar);
            next_fit.push(objective.value(&child));
            next_pop.push(child);
        }
        pop = next_pop;
        fit = next_fit;
        best_idx = argmax(&fit);
        if fit[best_idx] > best.1 {
            best = (pop[best_idx].clone(), fit[best_idx]);
        }
        trace.push(best.1);
        sigma *= cfg.sigma_decay;
    }

    let (populations, qfi, converged) = local_ascent(cfg, objective, best.0, best.1, &mut trace);
    RestartOutcome {
        populations,
        qfi,
        converged,
        trace,
    }
}

/// Projected gradient ascent with central differences and backtracking.
fn local_ascent<O: Objective + ?Sized>(
    cfg: &OptConfig,
    objective: &O,
    mut p: Vec<f64>,
    mut f: f64,
    trace: &mut Vec<f64>,
) -> (Vec<f64>, f64, bool) {
    let h = cfg.fd_step;
    for _ in 0..cfg.local_iters {
        let grad: Vec<f64> = (0..p.len())
            .map(|j| {
                let mut up = p.clone();
                up[j] += h;
                let mut down = p.clone();
                down[j] -= h;
                let fp = objective.value(&project_or_keep(&up, cfg.nbar));
                let fm = objective.value(&project_or_keep(&down, cfg.nbar));
                (fp - fm) / (2.0 * h)
            })
            .collect();
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !(gnorm > 0.0) {
            return (p, f, true);
        }
        let mut step = cfg.local_step;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = p
                .iter()
                .zip(&grad)
                .map(|(x, g)| x + step * g / gnorm)
                .collect();
            let cand = project_or_keep(&trial, cfg.nbar);
            let fc = objective.value(&cand);
            if fc > f {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            return (p, f, true);
        };
        let rel = (fc - f) / f.abs().max(f64::MIN_POSITIVE);
        p = cand;
        f = fc;
        trace.push(f);
        if rel < cfg.local_tol {
            return (p, f, true);
        }
    }
    (p, f, false)
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Maximizes the QFI of `Σ √p_j |j⟩` at `cfg.gamma_cap`.
pub fn optimize_probe(cfg: &OptConfig) -> Result<OptResult> {
    cfg.validate()?;
    let objective = QfiObjective::new(cfg.nmax, cfg.gamma_cap)?;
    optimize_with(cfg, &objective)
}

/// Runs the nested search against an arbitrary objective.
pub fn optimize_with<O: Objective + ?Sized>(cfg: &OptConfig, objective: &O) -> Result<OptResult> {
    cfg.validate()?;
    let vertices = feasible_vertices(cfg.nbar, cfg.nmax);
    let outcomes: Vec<RestartOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_restart(cfg, objective, r, &vertices))
        .collect();

    let mut order: Vec<usize> = (0..outcomes.len()).collect();
    order.sort_by(|&a, &b| outcomes[b].qfi.total_cmp(&outcomes[a].qfi));
    let winner = &outcomes[order[0]];

    let mut local_optima: Vec<LocalOptimum> = Vec::new();
    for &i in &order[1..] {
        let o = &outcomes[i];
        let distinct = l1(&o.populations, &winner.populations) > 0.05
            && local_optima
                .iter()
                .all(|lo| l1(&lo.populations, &o.populations) > 0.05);
        if distinct {
            local_optima.push(LocalOptimum {
                populations: o.populations.clone(),
                qfi: o.qfi,
            });
        }
    }

    Ok(OptResult {
        gamma: cfg.gamma_cap,
        nbar: cfg.nbar,
        nmax: cfg.nmax,
        seed: cfg.seed,
        populations: winner.populations.clone(),
        qfi: winner.qfi,
        converged: winner.converged,
        local_optima,
        trace: winner.trace.clone(),
    })
}

/// QFI of every feasible ON state `ON(n̄, N)`, `N = max(1, ⌈n̄⌉) … N_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnScan {
    pub n_best: usize,
    pub qfi_by_n: Vec<(usize, f64)>,
}

impl OnScan {
    pub fn best_qfi(&self) -> f64 {
        self.qfi_by_n
            .iter()
            .find(|(n, _)| *n == self.n_best)
            .map_or(0.0, |(_, q)| *q)
    }
}

pub fn on_scan(nbar: f64, gamma_cap: f64, nmax: usize) -> Result<OnScan> {
    if !(nbar >= 0.0) || nbar > nmax as f64 {
        return Err(TpaError::InfeasibleMean(format!(
            "n̄ = {nbar} exceeds N_max = {nmax}"
        )));
    }
    let first = (nbar.ceil() as usize).max(1);
    let mut qfi_by_n = Vec::new();
    for big_n in first..=nmax {
        let state = make_on(nbar, big_n, nmax + 1)?;
        qfi_by_n.push((big_n, qfi(&state, gamma_cap)?));
    }
    let mut n_best = first;
    let mut best = f64::NEG_INFINITY;
    for &(n, q) in &qfi_by_n {
        if q > best {
            best = q;
            n_best = n;
        }
    }
    Ok(OnScan { n_best, qfi_by_n })
}
