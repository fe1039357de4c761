//! Runtime self-checks shared by `tpa validate` and the acceptance suite.
//!
//! Each check returns a one-line summary on success or a diagnostic on
//! failure. Quick checks cover the closed forms, limits, channel oracle and
//! measurement properties; the full level adds the optimizer sweep.

use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{
    default_ode_steps, gamma_grid, propagate_exact, propagate_ode, Spacing, TpaChannel,
};
use crate::error::TpaError;
use crate::fock::{
    coherent_dim, make_coherent, make_fock, make_on, make_squeezed_vacuum, mean_photon,
    photon_distribution, squeezed_vacuum_dim, DensityMatrix, FockState, DEFAULT_TAIL_TOL,
};
use crate::metrology::{
    fi_photon_counting, pn_efficiency, qfi, qfi_diagonal, qfi_eps, rotate_probe, PN_EFFICIENCY_TOL,
};
use crate::probe_opt::{on_scan, optimize_probe, project_constraints, OptConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Quick,
    Full,
}

/// A check failure with a human-readable reason.
#[derive(Debug)]
pub struct Fail(pub String);

impl From<TpaError> for Fail {
    fn from(e: TpaError) -> Self {
        Fail(e.to_string())
    }
}

pub type Outcome = std::result::Result<String, Fail>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), Fail> {
    if cond {
        Ok(())
    } else {
        Err(Fail(msg()))
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub struct Check {
    pub id: &'static str,
    pub title: &'static str,
    pub level: Level,
    pub run: fn() -> Outcome,
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

/// Every check, in report order.
pub fn checks() -> Vec<Check> {
    vec![
        Check {
            id: "fock-closed-forms",
            title: "Fock |2>, |3> closed forms",
            level: Level::Quick,
            run: fock_closed_forms,
        },
        Check {
            id: "coherent-limit",
            title: "coherent small-Γ limit",
            level: Level::Quick,
            run: coherent_limit,
        },
        Check {
            id: "asymptotic-scaling",
            title: "Fock and ON small-Γ scaling",
            level: Level::Quick,
            run: asymptotic_scaling,
        },
        Check {
            id: "channel-oracle",
            title: "exact channel vs RK4 and invariants",
            level: Level::Quick,
            run: channel_oracle,
        },
        Check {
            id: "phase-invariance",
            title: "phase invariance of QFI and F_PN",
            level: Level::Quick,
            run: phase_invariance,
        },
        Check {
            id: "pn-optimality",
            title: "photon-counting efficiency",
            level: Level::Quick,
            run: pn_optimality,
        },
        Check {
            id: "even-odd-limits",
            title: "even/odd Fock behaviour near Γ = 1",
            level: Level::Quick,
            run: even_odd_limits,
        },
        Check {
            id: "fisher-invariants",
            title: "measurement bound, chain rule, fast path",
            level: Level::Quick,
            run: fisher_invariants,
        },
        Check {
            id: "probe-ordering",
            title: "squeezed vs coherent vs Fock ordering",
            level: Level::Quick,
            run: probe_ordering,
        },
        Check {
            id: "optimizer-determinism",
            title: "optimizer is seed-deterministic",
            level: Level::Quick,
            run: optimizer_determinism,
        },
        Check {
            id: "optimizer-sweep",
            title: "optimal probes and dominance, n̄ = 2",
            level: Level::Full,
            run: optimizer_sweep,
        },
    ]
}

pub fn find(id: &str) -> Option<Check> {
    checks().into_iter().find(|c| c.id == id)
}

/// Runs one check, turning a panic into a failure.
pub fn run_check(check: &Check) -> CheckOutcome {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(check.run));
    let (passed, detail) = match result {
        Ok(Ok(s)) => (true, s),
        Ok(Err(Fail(s))) => (false, s),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            (false, format!("panicked: {msg}"))
        }
    };
    CheckOutcome {
        id: check.id,
        title: check.title,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run(level: Level) -> Vec<CheckOutcome> {
    checks()
        .iter()
        .filter(|c| c.level <= level)
        .map(run_check)
        .collect()
}

pub fn report_table(outcomes: &[CheckOutcome]) -> String {
    let width = outcomes.iter().map(|o| o.id.len()).max().unwrap_or(0);
    let mut out = String::new();
    for o in outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(
            out,
            "{status}  {:<width$}  {:>7.2}s  {}",
            o.id, o.seconds, o.detail
        );
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let _ = writeln!(out, "{} checks, {} failed", outcomes.len(), failed);
    out
}

fn qfi_fock2(g: f64) -> f64 {
    1.0 / (g * (1.0 - g))
}

fn qfi_fock3(g: f64) -> f64 {
    let q = 1.0 - g;
    9.0 * q + 9.0 * q.powi(4) / (1.0 - q.powi(3))
}

fn coherent(nbar: f64) -> std::result::Result<FockState, Fail> {
    Ok(make_coherent(
        nbar,
        coherent_dim(nbar, DEFAULT_TAIL_TOL)?,
        DEFAULT_TAIL_TOL,
    )?)
}

fn squeezed(nbar: f64) -> std::result::Result<FockState, Fail> {
    Ok(make_squeezed_vacuum(
        nbar,
        squeezed_vacuum_dim(nbar, DEFAULT_TAIL_TOL)?,
        DEFAULT_TAIL_TOL,
    )?)
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> std::result::Result<FockState, Fail> {
    let amps = (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    Ok(FockState::from_amplitudes(amps, 0.0)?)
}

pub fn fock_closed_forms() -> Outcome {
    let grid = gamma_grid(0.02, 0.98, 20, Spacing::Linear)?;
    let f2 = make_fock(2, 3)?;
    let f3 = make_fock(3, 4)?;
    let mut worst: f64 = 0.0;
    for &g in &grid {
        let e2 = rel(qfi(&f2, g)?, qfi_fock2(g));
        let e3 = rel(qfi(&f3, g)?, qfi_fock3(g));
        ensure(e2 < 1e-8 && e3 < 1e-8, || {
            format!("Γ = {g}: rel errors {e2:.2e}, {e3:.2e}")
        })?;
        worst = worst.max(e2).max(e3);
    }
    Ok(format!("20 points, max rel error {worst:.1e}"))
}

pub fn coherent_limit() -> Outcome {
    let g = 1e-3;
    let mut worst: f64 = 0.0;
    for nbar in [1.0, 2.0, 3.0] {
        let state = coherent(nbar)?;
        let target = nbar.powi(3) + nbar * nbar / 2.0;
        let eq = rel(qfi(&state, g)?, target);
        let ep = rel(fi_photon_counting(&state, g)?, target);
        ensure(eq < 0.02 && ep < 0.02, || {
            format!("n̄ = {nbar}: QFI off by {eq:.3}, F_PN off by {ep:.3}")
        })?;
        worst = worst.max(eq).max(ep);
    }
    Ok(format!("max rel deviation from n̄³ + n̄²/2: {worst:.2e}"))
}

pub fn asymptotic_scaling() -> Outcome {
    let g = 1e-4;
    let mut worst_fock: f64 = 0.0;
    for n in 2..=6usize {
        let scaled = g * qfi(&make_fock(n, n + 1)?, g)?;
        let e = rel(scaled, (n * (n - 1)) as f64 / 2.0);
        ensure(e < 0.01, || {
            format!("|{n}>: Γ·F = {scaled}, rel error {e:.3}")
        })?;
        worst_fock = worst_fock.max(e);
    }
    let nbar = 2.0;
    let mut worst_on: f64 = 0.0;
    for big_n in [4usize, 6, 8, 10] {
        let scaled = g * qfi(&make_on(nbar, big_n, big_n + 1)?, g)?;
        let e = rel(scaled, nbar * (big_n as f64 - 1.0) / 2.0);
        ensure(e < 0.02, || {
            format!("ON N = {big_n}: Γ·F = {scaled}, rel error {e:.3}")
        })?;
        worst_on = worst_on.max(e);
    }
    Ok(format!(
        "Fock max rel {worst_fock:.1e}, ON max rel {worst_on:.1e}"
    ))
}

fn max_abs_diff(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    (a.elements() - b.elements())
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

fn parity_mass(p: &[f64]) -> f64 {
    p.iter().step_by(2).sum()
}

pub fn channel_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7fa);
    let eps_set = [0.1, 0.5, 1.0, 3.0];
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let dim = rng.gen_range(2..=12);
        let rho0 = random_state(&mut rng, dim)?.to_density();
        let even0 = parity_mass(&photon_distribution(&rho0));
        let mut last_mean = mean_photon(&rho0);
        for &eps in &eps_set {
            let exact = propagate_exact(&rho0, eps)?;
            let ode = propagate_ode(&rho0, eps, default_ode_steps(eps))?;
            let diff = max_abs_diff(&exact, &ode);
            ensure(diff < 1e-8, || {
                format!("case {case}, D = {dim}, ε = {eps}: |Δ| = {diff:.2e}")
            })?;
            worst = worst.max(diff);

            exact
                .validate()
                .map_err(|e| Fail(format!("case {case}, ε = {eps}: {e}")))?;
            let even = parity_mass(&photon_distribution(&exact));
            ensure((even - even0).abs() < 1e-10, || {
                format!(
                    "case {case}, ε = {eps}: even-parity mass moved by {:.2e}",
                    even - even0
                )
            })?;
            let mean = mean_photon(&exact);
            ensure(mean <= last_mean + 1e-12, || {
                format!("case {case}, ε = {eps}: mean photon rose from {last_mean} to {mean}")
            })?;
            last_mean = mean;
        }
        let (a, b) = (0.3, 0.9);
        let two_step = TpaChannel::new(dim, b)?.apply(&TpaChannel::new(dim, a)?.apply(&rho0)?)?;
        let one_step = TpaChannel::new(dim, a + b)?.apply(&rho0)?;
        let sg = max_abs_diff(&two_step, &one_step);
        ensure(sg < 1e-12, || {
            format!("case {case}: semigroup defect {sg:.2e}")
        })?;
    }
    Ok(format!("50 states x 4 ε, max |exact − RK4| = {worst:.1e}"))
}

pub fn phase_invariance() -> Outcome {
    let probes = [("coherent", coherent(2.0)?), ("squeezed", squeezed(2.0)?)];
    let mut worst: f64 = 0.0;
    for (name, probe) in &probes {
        let rho = probe.to_density();
        for g in [0.01, 0.3, 0.9] {
            let q0 = qfi(&rho, g)?;
            let f0 = fi_photon_counting(&rho, g)?;
            for phi in [0.3, 1.0, 2.2] {
                let rotated = rotate_probe(&rho, phi);
                let eq = rel(qfi(&rotated, g)?, q0);
                let ef = rel(fi_photon_counting(&rotated, g)?, f0);
                ensure(eq < 1e-8 && ef < 1e-8, || {
                    format!("{name}, Γ = {g}, φ = {phi}: QFI rel {eq:.1e}, F_PN rel {ef:.1e}")
                })?;
                worst = worst.max(eq).max(ef);
            }
        }
    }
    Ok(format!("max rel change {worst:.1e}"))
}

fn efficiency(state: &FockState, g: f64) -> std::result::Result<f64, Fail> {
    Ok(pn_efficiency(
        fi_photon_counting(state, g)?,
        qfi(state, g)?,
    )?)
}

pub fn pn_optimality() -> Outcome {
    let nbar = 2.0;
    for g in [0.05, 0.3, 0.7] {
        for n in 2..=6usize {
            let eta = efficiency(&make_fock(n, n + 1)?, g)?;
            ensure((eta - 1.0).abs() <= PN_EFFICIENCY_TOL, || {
                format!("|{n}>, Γ = {g}: η = {eta}")
            })?;
        }
        for big_n in [3usize, 5, 7, 9] {
            let eta = efficiency(&make_on(nbar, big_n, big_n + 1)?, g)?;
            ensure((eta - 1.0).abs() <= PN_EFFICIENCY_TOL, || {
                format!("ON N = {big_n}, Γ = {g}: η = {eta}")
            })?;
        }
    }
    let g = 0.7;
    let etas = [4usize, 6, 8]
        .iter()
        .map(|&n| efficiency(&make_on(nbar, n, n + 1)?, g))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    ensure(etas.iter().all(|&e| e <= 1.0 + PN_EFFICIENCY_TOL), || {
        format!("even ON η above 1: {etas:?}")
    })?;
    ensure(etas.windows(2).all(|w| w[1] > w[0]), || {
        format!("even ON η not increasing in N: {etas:?}")
    })?;
    Ok(format!(
        "η = 1 for Fock and odd ON; even ON at Γ = 0.7: {:.6}, {:.9}, {:.12}",
        etas[0], etas[1], etas[2]
    ))
}

pub fn even_odd_limits() -> Outcome {
    let f2 = make_fock(2, 3)?;
    let f3 = make_fock(3, 4)?;
    let q3 = qfi(&f3, 0.999)?;
    let q2 = qfi(&f2, 0.999)?;
    ensure(q3 < 0.1, || format!("QFI(|3>, 0.999) = {q3}"))?;
    ensure(q2 > 100.0, || format!("QFI(|2>, 0.999) = {q2}"))?;
    let (a3, a2) = (qfi(&f3, 0.05)?, qfi(&f2, 0.05)?);
    ensure(a3 > a2, || format!("Γ = 0.05: |3> {a3} ≤ |2> {a2}"))?;
    let (b3, b2) = (qfi(&f3, 0.9)?, qfi(&f2, 0.9)?);
    ensure(b2 > b3, || format!("Γ = 0.9: |2> {b2} ≤ |3> {b3}"))?;
    let rising = gamma_grid(0.61, 0.99, 20, Spacing::Linear)?
        .iter()
        .map(|&g| qfi(&f2, g))
        .collect::<crate::Result<Vec<_>>>()?;
    ensure(rising.windows(2).all(|w| w[1] > w[0]), || {
        "QFI(|2>) not increasing above Γ = 0.6".into()
    })?;
    Ok(format!(
        "QFI(|3>, 0.999) = {q3:.2e}, QFI(|2>, 0.999) = {q2:.1}"
    ))
}

pub fn fisher_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xf15);
    let mut checked = 0;
    for case in 0..20 {
        let dim = rng.gen_range(3..=12);
        let g = rng.gen_range(0.01..0.95);
        let state = random_state(&mut rng, dim)?;
        let q = qfi(&state, g)?;
        let f = fi_photon_counting(&state, g)?;
        ensure(f <= q * (1.0 + 1e-6), || {
            format!("case {case}: F_PN {f} > QFI {q}")
        })?;
        let chain = qfi_eps(&state, crate::channel::gamma_to_eps(g)?)? / (1.0 - g).powi(2);
        ensure(rel(chain, q) < 1e-10, || {
            format!("case {case}: chain rule off by {:.1e}", rel(chain, q))
        })?;

        let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = p.iter().sum();
        let p: Vec<f64> = p.iter().map(|x| x / total).collect();
        let rho = DensityMatrix::from_populations(&p)?;
        let fast = qfi_diagonal(&p, g)?;
        let full = qfi(&rho, g)?;
        ensure(rel(fast, full) < 1e-9, || {
            format!("case {case}: fast path {fast} vs {full}")
        })?;
        let pn = fi_photon_counting(&rho, g)?;
        ensure(rel(pn, full) < 1e-9, || {
            format!("case {case}: diagonal F_PN {pn} vs QFI {full}")
        })?;

        let raw: Vec<f64> = (0..11)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let proj = project_constraints(&raw, 2.0)?;
        let s: f64 = proj.iter().sum();
        let m: f64 = proj.iter().enumerate().map(|(j, x)| j as f64 * x).sum();
        ensure(
            proj.iter().all(|&x| x >= 0.0) && (s - 1.0).abs() < 1e-10 && (m - 2.0).abs() < 1e-10,
            || {
                format!(
                    "case {case}: projection residuals {:.1e}, {:.1e}",
                    s - 1.0,
                    m - 2.0
                )
            },
        )?;
        checked += 1;
    }
    Ok(format!(
        "{checked} random probes, populations and projections"
    ))
}

pub fn probe_ordering() -> Outcome {
    let sv = squeezed(2.0)?;
    let coh = coherent(2.0)?;
    let f2 = make_fock(2, 3)?;
    let (s_small, c_small) = (qfi(&sv, 1e-3)?, qfi(&coh, 1e-3)?);
    ensure(s_small > c_small, || {
        format!("Γ = 1e-3: squeezed {s_small} ≤ coherent {c_small}")
    })?;
    let (f_mid, s_mid) = (qfi(&f2, 0.3)?, qfi(&sv, 0.3)?);
    ensure(f_mid > s_mid, || {
        format!("Γ = 0.3: |2> {f_mid} ≤ squeezed {s_mid}")
    })?;
    Ok(format!(
        "Γ = 1e-3: {s_small:.1} > {c_small:.3}; Γ = 0.3: {f_mid:.4} > {s_mid:.4}"
    ))
}

pub fn optimizer_determinism() -> Outcome {
    let cfg = OptConfig::new(2.0, 0.3);
    let a = serde_json::to_string(&optimize_probe(&cfg)?).map_err(|e| Fail(e.to_string()))?;
    let b = serde_json::to_string(&optimize_probe(&cfg)?).map_err(|e| Fail(e.to_string()))?;
    ensure(a == b, || "two runs with seed 0 differ".into())?;
    Ok(format!("{} bytes identical", a.len()))
}

/// Largest-weight occupied level other than the vacuum.
fn dominant_level(p: &[f64]) -> usize {
    (1..p.len())
        .max_by(|&a, &b| p[a].total_cmp(&p[b]))
        .unwrap_or(0)
}

pub fn optimizer_sweep() -> Outcome {
    let nbar = 2.0;
    let nmax = 10;

    let g = 0.6;
    let r = optimize_probe(&OptConfig::new(nbar, g))?;
    ensure(r.populations[2] > 0.99, || {
        format!("Γ = 0.6: p_2 = {}", r.populations[2])
    })?;
    let e = rel(r.qfi, qfi_fock2(g));
    ensure(e < 1e-3, || {
        format!("Γ = 0.6: QFI {} vs Fock {}", r.qfi, qfi_fock2(g))
    })?;

    let g = 1e-2;
    let r = optimize_probe(&OptConfig::new(nbar, g))?;
    let support = r.support(1e-6);
    let scan = on_scan(nbar, g, nmax)?;
    ensure(support.len() == 2 && support[0] == 0, || {
        format!("Γ = 0.01: support {support:?}")
    })?;
    let big_n = support[1];
    ensure(
        (r.populations[big_n] - nbar / big_n as f64).abs() < 0.02,
        || format!("Γ = 0.01: p_{big_n} = {}", r.populations[big_n]),
    )?;
    ensure(big_n == scan.n_best, || {
        format!("Γ = 0.01: N = {big_n}, ON scan best {}", scan.n_best)
    })?;

    let coh = coherent(nbar)?;
    let sv = squeezed(nbar)?;
    let f2 = make_fock(2, 3)?;
    let grid = gamma_grid(1e-3, 1.0 - 1e-3, 30, Spacing::Log)?;
    let mut levels = Vec::with_capacity(grid.len());
    let mut non_on = 0;
    for &g in &grid {
        let r = optimize_probe(&OptConfig::new(nbar, g))?;
        let scan = on_scan(nbar, g, nmax)?;
        let baseline = [qfi(&coh, g)?, qfi(&sv, g)?, qfi(&f2, g)?, scan.best_qfi()]
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        ensure(r.qfi >= baseline * (1.0 - 1e-6), || {
            format!("Γ = {g}: optimizer {} < baseline {baseline}", r.qfi)
        })?;
        let support = r.support(1e-6);
        let on_form = support.len() == 1 || (support.len() == 2 && support[0] == 0);
        if !on_form {
            // A wider support is only acceptable where it beats every ON state.
            ensure(r.qfi > scan.best_qfi() * (1.0 + 1e-6), || {
                format!("Γ = {g}: support {support:?} without beating the ON scan")
            })?;
            non_on += 1;
        }
        levels.push(dominant_level(&r.populations));
    }
    ensure(levels.windows(2).all(|w| w[1] <= w[0]), || {
        format!("N(Γ) not non-increasing: {levels:?}")
    })?;
    Ok(format!(
        "30-point sweep dominant, N(Γ) = {levels:?}, {non_on} non-ON optima"
    ))
}
