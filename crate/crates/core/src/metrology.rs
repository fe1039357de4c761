//! Fisher information for the TPA parameter.
//!
//! All public QFI values are per shot and taken with respect to `Γ`; the
//! `ε`-based value follows from `F_Γ = F_ε / (1 − Γ)²`.

use std::borrow::Cow;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{lindblad_apply, ChannelPoint, TpaChannel};
use crate::error::{Result, TpaError};
use crate::fock::{photon_distribution, DensityMatrix, FockState};
use crate::linalg::hermitian_eigen;

/// Relative floor on `λ_k + λ_l` in the SLD sum.
pub const SLD_REL_CUTOFF: f64 = 1e-12;
/// Populations below this are skipped in the photon-counting FI.
pub const PN_FLOOR: f64 = 1e-300;
/// Slack allowed on `F_PN ≤ F_Q` before an efficiency is reported above 1.
pub const PN_EFFICIENCY_TOL: f64 = 1e-6;

/// Anything that can be turned into an input density matrix.
pub trait Probe {
    fn density(&self) -> Cow<'_, DensityMatrix>;
}

impl Probe for DensityMatrix {
    fn density(&self) -> Cow<'_, DensityMatrix> {
        Cow::Borrowed(self)
    }
}

impl Probe for FockState {
    fn density(&self) -> Cow<'_, DensityMatrix> {
        Cow::Owned(self.to_density())
    }
}

fn interior_point(gamma_cap: f64) -> Result<ChannelPoint> {
    if !(gamma_cap > 0.0 && gamma_cap < 1.0) {
        return Err(TpaError::Domain(format!(
            "Γ must lie in (0, 1), got {gamma_cap}"
        )));
    }
    ChannelPoint::from_gamma(gamma_cap)
}

/// `dρ/dΓ = 𝓛ρ_ε / (1 − Γ)`.
pub fn drho_dgamma(rho_eps: &DensityMatrix, point: ChannelPoint) -> Result<DMatrix<Complex64>> {
    let one_minus = 1.0 - point.gamma_cap();
    if !(one_minus > 0.0) {
        return Err(TpaError::Domain("dρ/dΓ is undefined at Γ = 1".into()));
    }
    Ok(lindblad_apply(rho_eps) / Complex64::new(one_minus, 0.0))
}

/// Spectral form of the symmetric logarithmic derivative.
#[derive(Debug, Clone)]
pub struct SldDecomposition {
    pub eigvals: Vec<f64>,
    pub eigvecs: DMatrix<Complex64>,
    pub sld: DMatrix<Complex64>,
    pub cutoff: f64,
}

impl SldDecomposition {
    /// `Tr[ρ L²]`.
    pub fn qfi(&self) -> f64 {
        let d = self.eigvals.len();
        // In the eigenbasis ρ is diagonal, so Tr[ρL²] = Σ_k λ_k Σ_l |L_lk|².
        let l_eig = self.eigvecs.adjoint() * &self.sld * &self.eigvecs;
        (0..d)
            .map(|k| self.eigvals[k] * (0..d).map(|l| l_eig[(l, k)].norm_sqr()).sum::<f64>())
            .sum()
    }
}

/// `L = 2 Σ_{λ_k+λ_l > cutoff} ⟨λ_l|∂ρ|λ_k⟩ / (λ_k+λ_l) |λ_l⟩⟨λ_k|`.
pub fn sld(
    rho: &DensityMatrix,
    drho: &DMatrix<Complex64>,
    cutoff: f64,
) -> Result<SldDecomposition> {
    if drho.shape() != rho.elements().shape() {
        return Err(TpaError::Dimension("ρ and ∂ρ shapes differ".into()));
    }
    let (eigvals, u) = hermitian_eigen(rho.elements());
    let d_eig = u.adjoint() * drho * &u;
    let d = eigvals.len();
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    let mut any = false;
    for k in 0..d {
        for l in 0..d {
            let s = eigvals[k] + eigvals[l];
            if s > cutoff {
                m[(l, k)] = d_eig[(l, k)] * Complex64::new(2.0 / s, 0.0);
                any = true;
            }
        }
    }
    if !any {
        return Err(TpaError::Degenerate(format!(
            "no eigenvalue pair exceeds the SLD cutoff {cutoff:e}"
        )));
    }
    let sld = &u * m * u.adjoint();
    Ok(SldDecomposition {
        eigvals,
        eigvecs: u,
        sld,
        cutoff,
    })
}

/// [`sld`] with the default relative cutoff `1e−12 · max λ`.
pub fn sld_default(rho: &DensityMatrix, drho: &DMatrix<Complex64>) -> Result<SldDecomposition> {
    let max_ev = rho.eigenvalues().last().copied().unwrap_or(0.0);
    sld(rho, drho, SLD_REL_CUTOFF * max_ev)
}

/// `Σ_{λ_k+λ_l > cutoff} 2|⟨λ_l|∂ρ|λ_k⟩|² / (λ_k+λ_l)`, real or complex.
pub(crate) fn qfi_spectral<T>(rho: &DMatrix<T>, drho: &DMatrix<T>) -> f64
where
    T: ComplexField<RealField = f64> + Copy,
{
    let (lambda, u) = hermitian_eigen(rho);
    let d_eig = u.adjoint() * drho * &u;
    let cutoff = SLD_REL_CUTOFF * lambda.iter().copied().fold(0.0, f64::max);
    let d = lambda.len();
    let mut total = 0.0;
    for k in 0..d {
        for l in 0..d {
            let s = lambda[k] + lambda[l];
            if s > cutoff {
                total += 2.0 * d_eig[(l, k)].modulus_squared() / s;
            }
        }
    }
    total
}

/// QFI with respect to `ε` of the channel output.
pub fn qfi_eps<P: Probe + ?Sized>(probe: &P, eps: f64) -> Result<f64> {
    let rho0 = probe.density();
    let out = TpaChannel::new(rho0.dim(), eps)?.apply(&rho0)?;
    let drho = lindblad_apply(&out);
    Ok(qfi_of_output(&out, &drho))
}

fn qfi_of_output(out: &DensityMatrix, drho: &DMatrix<Complex64>) -> f64 {
    if out.is_real() && drho.iter().all(|c| c.im == 0.0) {
        let re = out.elements().map(|c| c.re);
        qfi_spectral(&re, &drho.map(|c| c.re))
    } else {
        qfi_spectral(out.elements(), drho)
    }
}

/// Per-shot QFI with respect to `Γ ∈ (0, 1)`.
pub fn qfi<P: Probe + ?Sized>(probe: &P, gamma_cap: f64) -> Result<f64> {
    let point = interior_point(gamma_cap)?;
    let rho0 = probe.density();
    let out = TpaChannel::at(rho0.dim(), point)?.apply(&rho0)?;
    let drho = drho_dgamma(&out, point)?;
    Ok(qfi_of_output(&out, &drho))
}

/// QFI of a Fock-diagonal probe from its populations alone.
///
/// The output stays diagonal, so `F = Σ_m (∂_Γ p_m)² / p_m` with
/// `p_m = Σ_k A_k(m+2k, m+2k) p_0(m+2k)`.
pub fn qfi_diagonal(populations: &[f64], gamma_cap: f64) -> Result<f64> {
    let point = interior_point(gamma_cap)?;
    check_populations(populations)?;
    let out = TpaChannel::at(populations.len(), point)?.apply_diagonal(populations)?;
    let dp = population_rates(&out);
    let scale = 1.0 - point.gamma_cap();
    let cutoff = SLD_REL_CUTOFF * out.iter().copied().fold(0.0, f64::max);
    Ok(out
        .iter()
        .zip(&dp)
        .filter(|(p, _)| 2.0 * **p > cutoff)
        .map(|(p, d)| (d / scale).powi(2) / p)
        .sum())
}

fn check_populations(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(TpaError::Dimension("populations must be non-empty".into()));
    }
    if p.iter().any(|&x| !(x >= 0.0)) {
        return Err(TpaError::Domain("populations must be nonnegative".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(TpaError::Domain(format!(
            "populations sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// `∂_ε p(n) = ½(n+1)(n+2) p(n+2) − ½ n(n−1) p(n)`.
fn population_rates(p: &[f64]) -> Vec<f64> {
    let d = p.len();
    (0..d)
        .map(|n| {
            let nf = n as f64;
            let gain = if n + 2 < d {
                (nf + 1.0) * (nf + 2.0) * p[n + 2]
            } else {
                0.0
            };
            0.5 * (gain - nf * (nf - 1.0) * p[n])
        })
        .collect()
}

/// Photon-counting FI with respect to `ε`, from the output distribution.
///
/// `F_PN = Σ_n [(n+1)(n+2) p(n+2) − n(n−1) p(n)]² / (4 p(n))`. Returns the
/// value and whether a skipped level had a non-negligible numerator.
pub fn fi_pn_from_distribution(p: &[f64]) -> (f64, bool) {
    let d = p.len();
    let mut total = 0.0;
    let mut flagged = false;
    for n in 0..d {
        let nf = n as f64;
        let gain = if n + 2 < d {
            (nf + 1.0) * (nf + 2.0) * p[n + 2]
        } else {
            0.0
        };
        let numer = gain - nf * (nf - 1.0) * p[n];
        if p[n] < PN_FLOOR {
            flagged |= numer.abs() > 1e-12;
            continue;
        }
        total += numer * numer / (4.0 * p[n]);
    }
    (total, flagged)
}

/// Per-shot photon-counting FI with respect to `Γ ∈ (0, 1)`.
pub fn fi_photon_counting<P: Probe + ?Sized>(probe: &P, gamma_cap: f64) -> Result<f64> {
    let point = interior_point(gamma_cap)?;
    let rho0 = probe.density();
    let out = TpaChannel::at(rho0.dim(), point)?.apply(&rho0)?;
    let (f_eps, _) = fi_pn_from_distribution(&photon_distribution(&out));
    Ok(f_eps / (1.0 - gamma_cap).powi(2))
}

fn positive_gamma(gamma_cap: f64) -> Result<()> {
    if !(gamma_cap > 0.0) {
        return Err(TpaError::Domain(format!(
            "asymptotic forms need Γ > 0, got {gamma_cap}"
        )));
    }
    Ok(())
}

/// Leading small-`Γ` QFI of `|n⟩`: `n(n−1) / (2Γ)`.
pub fn asymptotic_qfi_fock(n: usize, gamma_cap: f64) -> Result<f64> {
    positive_gamma(gamma_cap)?;
    let nf = n as f64;
    Ok(nf * (nf - 1.0).max(0.0) / (2.0 * gamma_cap))
}

/// Leading small-`Γ` QFI of the ON state: `n̄(N−1) / (2Γ)`.
pub fn asymptotic_qfi_on(nbar: f64, big_n: usize, gamma_cap: f64) -> Result<f64> {
    positive_gamma(gamma_cap)?;
    Ok(nbar * (big_n as f64 - 1.0).max(0.0) / (2.0 * gamma_cap))
}

/// `(F_probe − F_coh) / F_coh`.
pub fn quantum_advantage(qfi_probe: f64, qfi_coherent: f64) -> Result<f64> {
    if !(qfi_coherent > 0.0) {
        return Err(TpaError::Domain(format!(
            "coherent QFI must be > 0, got {qfi_coherent}"
        )));
    }
    Ok((qfi_probe - qfi_coherent) / qfi_coherent)
}

/// `F_PN / F_Q`, reported as 1 when it exceeds 1 by less than the tolerance.
pub fn pn_efficiency(fi_pn: f64, qfi: f64) -> Result<f64> {
    if !(qfi > 0.0) {
        return Err(TpaError::Domain(format!("QFI must be > 0, got {qfi}")));
    }
    let eta = fi_pn / qfi;
    Ok(if eta > 1.0 && eta <= 1.0 + PN_EFFICIENCY_TOL {
        1.0
    } else {
        eta
    })
}

/// `e^{−iφn̂} ρ e^{iφn̂}`.
pub fn rotate_probe(rho: &DensityMatrix, phi: f64) -> DensityMatrix {
    let d = rho.dim();
    let rotated = DMatrix::from_fn(d, d, |n, np| {
        rho.get(n, np) * Complex64::from_polar(1.0, -phi * (n as f64 - np as f64))
    });
    DensityMatrix::new_unchecked(rotated).expect("rotation preserves shape")
}

/// QFI, photon-counting FI and derived figures of merit at one `Γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherReport {
    pub gamma: f64,
    pub probe_id: String,
    pub nbar: f64,
    pub qfi: f64,
    pub fi_pn: f64,
    pub qa: f64,
    pub eta_pn: f64,
}

impl FisherReport {
    /// Evaluates `probe` and compares it against a coherent-state QFI at the same `Γ`.
    pub fn evaluate<P: Probe + ?Sized>(
        probe: &P,
        probe_id: impl Into<String>,
        gamma_cap: f64,
        qfi_coherent: f64,
    ) -> Result<Self> {
        let rho0 = probe.density();
        let point = interior_point(gamma_cap)?;
        let out = TpaChannel::at(rho0.dim(), point)?.apply(&rho0)?;
        let drho = drho_dgamma(&out, point)?;
        let qfi = qfi_of_output(&out, &drho);
        let (f_eps, _) = fi_pn_from_distribution(&photon_distribution(&out));
        let fi_pn = f_eps / (1.0 - gamma_cap).powi(2);
        let eta_pn = if qfi > 0.0 {
            pn_efficiency(fi_pn, qfi)?
        } else {
            0.0
        };
        Ok(Self {
            gamma: gamma_cap,
            probe_id: probe_id.into(),
            nbar: crate::fock::mean_photon(&rho0),
            qfi,
            fi_pn,
            qa: quantum_advantage(qfi, qfi_coherent)?,
            eta_pn,
        })
    }

    pub const CSV_HEADER: &'static str = "gamma,probe_id,nbar,qfi,fi_pn,qa,eta_pn";

    pub fn csv_row(&self) -> String {
        use crate::fmt_sig;
        format!(
            "{},{},{},{},{},{},{}",
            fmt_sig(self.gamma),
            self.probe_id,
            fmt_sig(self.nbar),
            fmt_sig(self.qfi),
            fmt_sig(self.fi_pn),
            fmt_sig(self.qa),
            fmt_sig(self.eta_pn)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::propagate_exact;
    use crate::fock::{
        coherent_dim, make_coherent, make_dv, make_fock, make_on, make_squeezed_vacuum,
        squeezed_vacuum_dim,
    };
    use approx::assert_relative_eq;

    fn fock2(g: f64) -> f64 {
        1.0 / (g * (1.0 - g))
    }

    fn fock3(g: f64) -> f64 {
        let s = 1.0 - g;
        9.0 * s + 9.0 * s.powi(4) / (1.0 - s.powi(3))
    }

    #[test]
    fn fock3_closed_form() {
        let f3 = make_fock(3, 4).unwrap();
        for g in [0.05, 0.25, 0.5, 0.8, 0.99] {
            let q = qfi(&f3, g).unwrap();
            assert!((q - fock3(g)).abs() < 1e-10 * fock3(g), "Γ = {g}: {q}");
        }
    }

    #[test]
    fn drho_examples() {
        let point = ChannelPoint::from_gamma(0.5).unwrap();
        let vac = make_fock(0, 3).unwrap().to_density();
        assert!(drho_dgamma(&vac, point)
            .unwrap()
            .iter()
            .all(|c| c.norm() == 0.0));

        let out = propagate_exact(&make_fock(2, 3).unwrap().to_density(), point.eps()).unwrap();
        let d = drho_dgamma(&out, point).unwrap();
        assert_relative_eq!(d[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(d[(2, 2)].re, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn drho_matches_central_difference() {
        let rho0 = make_coherent(1.5, 24, 1e-10).unwrap().to_density();
        let g = 0.35;
        let h = 1e-5;
        let at =
            |g: f64| propagate_exact(&rho0, ChannelPoint::from_gamma(g).unwrap().eps()).unwrap();
        let fd = (at(g + h).elements() - at(g - h).elements()) / Complex64::new(2.0 * h, 0.0);
        let point = ChannelPoint::from_gamma(g).unwrap();
        let d = drho_dgamma(&at(g), point).unwrap();
        let err = (&fd - &d).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn sld_examples() {
        let g = 0.3;
        let rho = DensityMatrix::from_populations(&[g, 0.0, 1.0 - g]).unwrap();
        let mut drho = DMatrix::zeros(3, 3);
        drho[(0, 0)] = Complex64::new(1.0, 0.0);
        drho[(2, 2)] = Complex64::new(-1.0, 0.0);
        let dec = sld_default(&rho, &drho).unwrap();
        assert_relative_eq!(dec.sld[(0, 0)].re, 1.0 / g, epsilon = 1e-12);
        assert_relative_eq!(dec.sld[(2, 2)].re, -1.0 / (1.0 - g), epsilon = 1e-12);
        assert_relative_eq!(dec.qfi(), fock2(g), epsilon = 1e-12);

        // ½(Lρ + ρL) reproduces ∂ρ on the support
        let lr = &dec.sld * rho.elements();
        let anti = (&lr + lr.adjoint()) * Complex64::new(0.5, 0.0);
        assert!((&anti - &drho).iter().all(|c| c.norm() < 1e-8));

        let zero = sld_default(&rho, &DMatrix::zeros(3, 3)).unwrap();
        assert!(zero.sld.iter().all(|c| c.norm() == 0.0));

        assert!(matches!(
            sld(&rho, &drho, 10.0),
            Err(TpaError::Degenerate(_))
        ));
    }

    #[test]
    fn sld_trace_is_basis_invariant() {
        let g = 0.4;
        let rho = DensityMatrix::from_populations(&[1.0 - g, g]).unwrap();
        let mut drho = DMatrix::zeros(2, 2);
        drho[(0, 0)] = Complex64::new(-1.0, 0.0);
        drho[(1, 1)] = Complex64::new(1.0, 0.0);
        let a = sld_default(&rho, &drho).unwrap().qfi();
        let swapped = DensityMatrix::from_populations(&[g, 1.0 - g]).unwrap();
        let mut d2 = DMatrix::zeros(2, 2);
        d2[(0, 0)] = Complex64::new(1.0, 0.0);
        d2[(1, 1)] = Complex64::new(-1.0, 0.0);
        let b = sld_default(&swapped, &d2).unwrap().qfi();
        assert_relative_eq!(a, b, max_relative = 1e-14);
    }

    #[test]
    fn qfi_closed_forms() {
        assert_relative_eq!(
            qfi(&make_fock(2, 3).unwrap(), 0.5).unwrap(),
            4.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            qfi(&make_fock(3, 4).unwrap(), 0.5).unwrap(),
            36.0 / 7.0,
            max_relative = 1e-12
        );
        assert!(qfi(&make_fock(2, 3).unwrap(), 0.0).is_err());
        assert!(qfi(&make_fock(2, 3).unwrap(), 1.0).is_err());
    }

    #[test]
    fn coherent_small_gamma_limit() {
        let c = make_coherent(2.0, coherent_dim(2.0, 1e-10).unwrap(), 1e-10).unwrap();
        let q = qfi(&c, 1e-3).unwrap();
        assert!((q / 10.0 - 1.0).abs() < 0.02, "{q}");
        let f = fi_photon_counting(&c, 1e-3).unwrap();
        assert!((f / 10.0 - 1.0).abs() < 0.02, "{f}");
    }

    #[test]
    fn diagonal_examples() {
        assert_relative_eq!(
            qfi_diagonal(&[0.0, 0.0, 1.0], 0.5).unwrap(),
            4.0,
            max_relative = 1e-12
        );
        let expect = 9.0 * 0.75 + 9.0 * 0.75f64.powi(4) / (1.0 - 0.75f64.powi(3));
        // = 432/37
        assert_relative_eq!(expect, 432.0 / 37.0, max_relative = 1e-14);
        assert_relative_eq!(
            qfi_diagonal(&[0.0, 0.0, 0.0, 1.0], 0.25).unwrap(),
            expect,
            max_relative = 1e-12
        );
        assert_eq!(qfi_diagonal(&[1.0, 0.0, 0.0], 0.4).unwrap(), 0.0);
        assert!(qfi_diagonal(&[0.5, 0.2], 0.4).is_err());
    }

    #[test]
    fn photon_counting_examples() {
        assert_relative_eq!(
            fi_photon_counting(&make_fock(2, 3).unwrap(), 0.5).unwrap(),
            4.0,
            max_relative = 1e-12
        );
        assert_eq!(
            fi_photon_counting(&make_fock(0, 3).unwrap(), 0.5).unwrap(),
            0.0
        );
    }

    #[test]
    fn asymptotic_examples() {
        assert_relative_eq!(
            asymptotic_qfi_fock(2, 0.01).unwrap(),
            100.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            asymptotic_qfi_on(2.0, 6, 0.01).unwrap(),
            500.0,
            max_relative = 1e-14
        );
        assert_eq!(asymptotic_qfi_fock(1, 0.3).unwrap(), 0.0);
        assert!(asymptotic_qfi_fock(2, 0.0).is_err());
        assert!(asymptotic_qfi_on(2.0, 4, -1.0).is_err());
    }

    #[test]
    fn advantage_and_efficiency() {
        assert_eq!(quantum_advantage(10.0, 10.0).unwrap(), 0.0);
        assert_eq!(quantum_advantage(30.0, 10.0).unwrap(), 2.0);
        assert_eq!(quantum_advantage(5.0, 10.0).unwrap(), -0.5);
        assert!(quantum_advantage(5.0, 0.0).is_err());

        assert_eq!(pn_efficiency(0.0, 3.0).unwrap(), 0.0);
        assert_eq!(pn_efficiency(1.0 + 1e-8, 1.0).unwrap(), 1.0);
        assert!(pn_efficiency(1.0, 0.0).is_err());

        let f2 = make_fock(2, 3).unwrap();
        for &g in &[0.1, 0.5, 0.9] {
            let eta =
                pn_efficiency(fi_photon_counting(&f2, g).unwrap(), qfi(&f2, g).unwrap()).unwrap();
            assert_relative_eq!(eta, 1.0, max_relative = 1e-9);
        }
        let on = make_on(2.0, 3, 4).unwrap();
        let eta = pn_efficiency(
            fi_photon_counting(&on, 0.3).unwrap(),
            qfi(&on, 0.3).unwrap(),
        )
        .unwrap();
        assert!((eta - 1.0).abs() < 1e-6, "{eta}");
    }

    #[test]
    fn rotation_examples() {
        let c = make_coherent(2.0, 26, 1e-10).unwrap().to_density();
        assert_eq!(rotate_probe(&c, 0.0), c);
        let diag = DensityMatrix::from_populations(&[0.2, 0.5, 0.3]).unwrap();
        assert_eq!(rotate_probe(&diag, 1.3), diag);
        let q0 = qfi(&c, 0.3).unwrap();
        let q1 = qfi(&rotate_probe(&c, 0.7), 0.3).unwrap();
        assert_relative_eq!(q0, q1, max_relative = 1e-8);
    }

    #[test]
    fn chain_rule_between_parametrisations() {
        let s = make_squeezed_vacuum(1.0, squeezed_vacuum_dim(1.0, 1e-10).unwrap(), 1e-10).unwrap();
        for &g in &[0.05, 0.4, 0.8] {
            let eps = crate::channel::gamma_to_eps(g).unwrap();
            let via_eps = qfi_eps(&s, eps).unwrap() / (1.0 - g).powi(2);
            assert_relative_eq!(via_eps, qfi(&s, g).unwrap(), max_relative = 1e-10);
        }
    }

    #[test]
    fn report_row() {
        let f2 = make_fock(2, 3).unwrap();
        let r = FisherReport::evaluate(&f2, "fock:2", 0.5, 2.0).unwrap();
        assert_relative_eq!(r.qfi, 4.0, max_relative = 1e-12);
        assert_relative_eq!(r.qa, 1.0, max_relative = 1e-12);
        assert_eq!(r.eta_pn, 1.0);
        assert_eq!(r.csv_row().split(',').count(), 7);
    }

    #[test]
    fn dv_pn_never_exceeds_qfi() {
        let s = make_dv(&[0.4, 0.1, 0.7, 0.2, 0.5], 5).unwrap();
        for &g in &[0.02, 0.3, 0.7, 0.95] {
            let q = qfi(&s, g).unwrap();
            let f = fi_photon_counting(&s, g).unwrap();
            assert!(f <= q * (1.0 + 1e-6), "Γ={g}: {f} > {q}");
        }
    }
}
