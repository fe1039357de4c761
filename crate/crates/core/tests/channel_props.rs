use num_complex::Complex64;
use proptest::prelude::*;

use tpa_core::channel::{
    default_ode_steps, klimov_coefficient, klimov_coefficient_series, propagate_exact,
    propagate_ode, TpaChannel,
};
use tpa_core::fock::{mean_photon, photon_distribution, DensityMatrix, FockState};

fn state_strategy() -> impl Strategy<Value = DensityMatrix> {
    (2usize..=10)
        .prop_flat_map(|d| prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d))
        .prop_filter("nonzero", |v| {
            v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3)
        })
        .prop_map(|v| {
            let amps = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            FockState::from_amplitudes(amps, 0.0).unwrap().to_density()
        })
}

fn max_abs_diff(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    (a.elements() - b.elements())
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn output_is_a_state(rho in state_strategy(), eps in 0.0f64..6.0) {
        let out = propagate_exact(&rho, eps).unwrap();
        prop_assert!(out.validate().is_ok());
        prop_assert!((out.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parity_is_conserved(rho in state_strategy(), eps in 0.0f64..6.0) {
        let even = |r: &DensityMatrix| photon_distribution(r).iter().step_by(2).sum::<f64>();
        let out = propagate_exact(&rho, eps).unwrap();
        prop_assert!((even(&out) - even(&rho)).abs() < 1e-12);
    }

    #[test]
    fn energy_decreases(rho in state_strategy(), a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let m_lo = mean_photon(&propagate_exact(&rho, lo).unwrap());
        let m_hi = mean_photon(&propagate_exact(&rho, hi).unwrap());
        prop_assert!(m_hi <= m_lo + 1e-12);
    }

    #[test]
    fn semigroup(rho in state_strategy(), a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let d = rho.dim();
        let two = TpaChannel::new(d, b).unwrap().apply(&TpaChannel::new(d, a).unwrap().apply(&rho).unwrap()).unwrap();
        let one = TpaChannel::new(d, a + b).unwrap().apply(&rho).unwrap();
        prop_assert!(max_abs_diff(&two, &one) < 1e-12);
    }

    #[test]
    fn klimov_forms_agree(n in 0usize..12, dn in 0usize..6, eps in 0.05f64..4.0) {
        let np = n + dn;
        for k in 0..=n / 2 {
            let a = klimov_coefficient(n, np, k, eps).unwrap();
            let s = klimov_coefficient_series(n, np, k, eps).unwrap();
            prop_assert!((a - s).abs() <= 1e-9 * a.abs().max(1e-12), "k={}: {} vs {}", k, a, s);
        }
    }
}

#[test]
fn exact_matches_rk4_on_sample() {
    let mut amps = Vec::new();
    for j in 0..9 {
        amps.push(Complex64::new(
            (j as f64 * 0.7).sin(),
            (j as f64 * 1.3).cos() * 0.5,
        ));
    }
    let rho = FockState::from_amplitudes(amps, 0.0).unwrap().to_density();
    for eps in [0.1, 0.5, 1.0, 3.0] {
        let exact = propagate_exact(&rho, eps).unwrap();
        let ode = propagate_ode(&rho, eps, default_ode_steps(eps)).unwrap();
        assert!(max_abs_diff(&exact, &ode) < 1e-8);
    }
}
