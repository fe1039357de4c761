//! Single-mode bosonic states in a truncated Fock basis.
//!
//! Pure probes are stored as [`FockState`] amplitude vectors over
//! `|0⟩ … |D−1⟩`; mixed states as [`DensityMatrix`]. Gaussian constructors
//! build the photon-number amplitudes in log space, record the probability
//! discarded by truncation, renormalize, and refuse to build if the
//! discarded mass exceeds the caller's tolerance.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TpaError};

/// Default bound on probability discarded by truncating a Gaussian state.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-10;
const MAX_AUTO_DIM: usize = 1 << 14;

/// Pure state `Σ c_n |n⟩` on a truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    amplitudes: Vec<Complex64>,
    tail_mass: f64,
}

impl FockState {
    /// Builds a state from raw amplitudes, normalizing them.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>, tail_mass: f64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(TpaError::Dimension("state must have dimension ≥ 1".into()));
        }
        if !(tail_mass >= 0.0) {
            return Err(TpaError::Domain(format!(
                "tail mass must be ≥ 0, got {tail_mass}"
            )));
        }
        let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(TpaError::Domain(
                "amplitude vector has zero or non-finite norm".into(),
            ));
        }
        let amplitudes = amplitudes.into_iter().map(|c| c / norm).collect();
        Ok(Self {
            amplitudes,
            tail_mass,
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Probability removed by truncation before renormalization.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn to_density(&self) -> DensityMatrix {
        to_density(self)
    }

    /// Same state embedded in a larger basis.
    pub fn padded(&self, dim: usize) -> Result<Self> {
        if dim < self.dim() {
            return Err(TpaError::Dimension(format!(
                "cannot pad a dimension-{} state down to {dim}",
                self.dim()
            )));
        }
        let mut amplitudes = self.amplitudes.clone();
        amplitudes.resize(dim, Complex64::new(0.0, 0.0));
        Ok(Self {
            amplitudes,
            tail_mass: self.tail_mass,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&FockStateJson::from(self))
            .map_err(|e| TpaError::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: FockStateJson =
            serde_json::from_str(text).map_err(|e| TpaError::Serialization(e.to_string()))?;
        raw.try_into()
    }
}

/// Wire form of a [`FockState`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FockStateJson {
    pub dim: usize,
    pub amplitudes_re: Vec<f64>,
    pub amplitudes_im: Vec<f64>,
    pub tail_mass: f64,
}

impl From<&FockState> for FockStateJson {
    fn from(state: &FockState) -> Self {
        Self {
            dim: state.dim(),
            amplitudes_re: state.amplitudes.iter().map(|c| c.re).collect(),
            amplitudes_im: state.amplitudes.iter().map(|c| c.im).collect(),
            tail_mass: state.tail_mass,
        }
    }
}

impl TryFrom<FockStateJson> for FockState {
    type Error = TpaError;

    fn try_from(raw: FockStateJson) -> Result<Self> {
        if raw.amplitudes_re.len() != raw.dim || raw.amplitudes_im.len() != raw.dim {
            return Err(TpaError::Serialization(format!(
                "amplitude arrays must both have length dim = {}",
                raw.dim
            )));
        }
        let amplitudes = raw
            .amplitudes_re
            .iter()
            .zip(&raw.amplitudes_im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        FockState::from_amplitudes(amplitudes, raw.tail_mass)
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix `⟨n|ρ|n′⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elements: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity before wrapping `elements`.
    pub fn new(elements: DMatrix<Complex64>) -> Result<Self> {
        let dm = Self::new_unchecked(elements)?;
        dm.validate()?;
        Ok(dm)
    }

    /// Wraps a square matrix without checking the density-matrix invariants.
    pub fn new_unchecked(elements: DMatrix<Complex64>) -> Result<Self> {
        if elements.nrows() != elements.ncols() || elements.nrows() == 0 {
            return Err(TpaError::Dimension(format!(
                "density matrix must be square and non-empty, got {}×{}",
                elements.nrows(),
                elements.ncols()
            )));
        }
        Ok(Self { elements })
    }

    /// Diagonal state with the given photon-number populations.
    pub fn from_populations(populations: &[f64]) -> Result<Self> {
        if populations.is_empty() {
            return Err(TpaError::Dimension("populations must be non-empty".into()));
        }
        if populations.iter().any(|&p| !(p >= 0.0)) {
            return Err(TpaError::Domain("populations must be nonnegative".into()));
        }
        let total: f64 = populations.iter().sum();
        if !(total > 0.0) {
            return Err(TpaError::Domain("populations sum to zero".into()));
        }
        let diag: Vec<Complex64> = populations
            .iter()
            .map(|&p| Complex64::new(p / total, 0.0))
            .collect();
        Ok(Self {
            elements: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)),
        })
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn into_elements(self) -> DMatrix<Complex64> {
        self.elements
    }

    pub fn get(&self, n: usize, nprime: usize) -> Complex64 {
        self.elements[(n, nprime)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|n| self.elements[(n, n)].re).sum()
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.elements + self.elements.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// True if every entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.elements.iter().all(|c| c.im == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        for i in 0..d {
            for j in i..d {
                let delta = (self.elements[(i, j)] - self.elements[(j, i)].conj()).norm();
                if delta > HERMITIAN_TOL {
                    return Err(TpaError::Domain(format!(
                        "matrix not Hermitian at ({i},{j}): |ρ−ρ†| = {delta:.3e}"
                    )));
                }
            }
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(TpaError::Domain(format!("trace {tr} differs from 1")));
        }
        let min_ev = self.eigenvalues()[0];
        if min_ev < -POSITIVITY_TOL {
            return Err(TpaError::Domain(format!(
                "negative eigenvalue {min_ev:.3e}"
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&DensityMatrixJson::from(self))
            .map_err(|e| TpaError::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: DensityMatrixJson =
            serde_json::from_str(text).map_err(|e| TpaError::Serialization(e.to_string()))?;
        raw.try_into()
    }
}

impl From<&FockState> for DensityMatrix {
    fn from(state: &FockState) -> Self {
        to_density(state)
    }
}

/// Wire form of a [`DensityMatrix`], row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub dim: usize,
    pub elements_re: Vec<Vec<f64>>,
    pub elements_im: Vec<Vec<f64>>,
}

impl From<&DensityMatrix> for DensityMatrixJson {
    fn from(rho: &DensityMatrix) -> Self {
        let d = rho.dim();
        let rows = |f: fn(&Complex64) -> f64| {
            (0..d)
                .map(|i| (0..d).map(|j| f(&rho.elements[(i, j)])).collect())
                .collect()
        };
        Self {
            dim: d,
            elements_re: rows(|c| c.re),
            elements_im: rows(|c| c.im),
        }
    }
}

impl TryFrom<DensityMatrixJson> for DensityMatrix {
    type Error = TpaError;

    fn try_from(raw: DensityMatrixJson) -> Result<Self> {
        let d = raw.dim;
        let well_formed = raw.elements_re.len() == d
            && raw.elements_im.len() == d
            && raw
                .elements_re
                .iter()
                .chain(&raw.elements_im)
                .all(|row| row.len() == d);
        if !well_formed {
            return Err(TpaError::Serialization(format!(
                "element arrays must be {d}×{d}"
            )));
        }
        let elements = DMatrix::from_fn(d, d, |i, j| {
            Complex64::new(raw.elements_re[i][j], raw.elements_im[i][j])
        });
        DensityMatrix::new(elements)
    }
}

/// Fixed mean photon number shared by a family of probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanConstraint {
    nbar: f64,
}

impl MeanConstraint {
    pub fn new(nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return Err(TpaError::Domain(format!(
                "mean photon number must be ≥ 0, got {nbar}"
            )));
        }
        Ok(Self { nbar })
    }

    pub fn nbar(&self) -> f64 {
        self.nbar
    }

    /// Checks that a basis of dimension `dim` can hold this mean.
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if dim == 0 || self.nbar >= (dim - 1) as f64 && self.nbar > 0.0 {
            return Err(TpaError::InfeasibleMean(format!(
                "n̄ = {} needs dimension > {}",
                self.nbar,
                self.nbar + 1.0
            )));
        }
        Ok(())
    }
}

fn real_state(amps: Vec<f64>, tail_mass: f64) -> Result<FockState> {
    FockState::from_amplitudes(
        amps.into_iter().map(|a| Complex64::new(a, 0.0)).collect(),
        tail_mass,
    )
}

/// Number state `|n⟩` in dimension `dim`.
pub fn make_fock(n: usize, dim: usize) -> Result<FockState> {
    if n >= dim {
        return Err(TpaError::Dimension(format!(
            "|{n}⟩ does not fit in dimension {dim}"
        )));
    }
    let mut amps = vec![0.0; dim];
    amps[n] = 1.0;
    real_state(amps, 0.0)
}

fn check_nbar(nbar: f64) -> Result<()> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(TpaError::Domain(format!(
            "mean photon number must be finite and ≥ 0, got {nbar}"
        )));
    }
    Ok(())
}

/// Photon-number weights of a Gaussian family, evaluated lazily in log space.
trait Weights {
    /// `ln p_n`, or `None` if `p_n` is exactly zero.
    fn ln_weight(&self, n: usize) -> Option<f64>;
    /// Index after which weights are monotonically decreasing.
    fn mode(&self) -> usize;
}

struct Poisson {
    nbar: f64,
}

impl Weights for Poisson {
    fn ln_weight(&self, n: usize) -> Option<f64> {
        if self.nbar == 0.0 {
            return (n == 0).then_some(0.0);
        }
        Some(-self.nbar + n as f64 * self.nbar.ln() - ln_factorial(n))
    }

    fn mode(&self) -> usize {
        self.nbar.floor() as usize
    }
}

struct SqueezedVacuum {
    r: f64,
}

impl Weights for SqueezedVacuum {
    fn ln_weight(&self, n: usize) -> Option<f64> {
        if n % 2 == 1 {
            return None;
        }
        if self.r == 0.0 {
            return (n == 0).then_some(0.0);
        }
        let m = n / 2;
        // (2m)!/(2^m m!)² = Π_{i<m} (2i+1)/(2i+2)
        let ratio: f64 = (0..m)
            .map(|i| ((2 * i + 1) as f64 / (2 * i + 2) as f64).ln())
            .sum();
        Some(-self.r.cosh().ln() + 2.0 * m as f64 * self.r.tanh().ln() + ratio)
    }

    fn mode(&self) -> usize {
        0
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Probability and first moment carried by indices `≥ dim`, by direct summation.
fn tail_of(w: &dyn Weights, dim: usize) -> (f64, f64) {
    let mut mass = 0.0;
    let mut energy = 0.0;
    let mut n = dim;
    loop {
        if let Some(lw) = w.ln_weight(n) {
            let p = lw.exp();
            mass += p;
            energy += n as f64 * p;
            if n > w.mode() && (p == 0.0 || p * (n as f64 + 1.0) < 1e-20 * mass.max(1e-300)) {
                break;
            }
        }
        n += 1;
        if n > dim + 1_000_000 {
            break;
        }
    }
    (mass, energy)
}

fn gaussian_state(
    w: &dyn Weights,
    dim: usize,
    tail_tol: f64,
    sign: impl Fn(usize) -> f64,
) -> Result<FockState> {
    if dim == 0 {
        return Err(TpaError::Dimension("dimension must be ≥ 1".into()));
    }
    let (tail_mass, _) = tail_of(w, dim);
    if tail_mass > tail_tol {
        return Err(TpaError::Truncation {
            tail_mass,
            tol: tail_tol,
            dim,
        });
    }
    let amps = (0..dim)
        .map(|n| w.ln_weight(n).map_or(0.0, |lw| sign(n) * (0.5 * lw).exp()))
        .collect();
    real_state(amps, tail_mass)
}

/// Smallest dimension whose discarded probability and discarded energy both
/// stay below `tail_tol`; doubling search followed by bisection.
fn auto_dim(w: &dyn Weights, tail_tol: f64) -> Result<usize> {
    let ok = |d: usize| {
        let (mass, energy) = tail_of(w, d);
        mass <= tail_tol && energy <= tail_tol
    };
    let mut hi = 2;
    while !ok(hi) {
        hi *= 2;
        if hi > MAX_AUTO_DIM {
            return Err(TpaError::Dimension(format!(
                "no dimension ≤ {MAX_AUTO_DIM} meets tail tolerance {tail_tol:e}"
            )));
        }
    }
    let mut lo = hi / 2;
    if lo >= 1 && ok(lo) {
        return Ok(lo);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Coherent state `|α⟩` with real `α = √n̄`.
pub fn make_coherent(nbar: f64, dim: usize, tail_tol: f64) -> Result<FockState> {
    check_nbar(nbar)?;
    gaussian_state(&Poisson { nbar }, dim, tail_tol, |_| 1.0)
}

/// Smallest dimension at which [`make_coherent`] meets `tail_tol`.
pub fn coherent_dim(nbar: f64, tail_tol: f64) -> Result<usize> {
    check_nbar(nbar)?;
    auto_dim(&Poisson { nbar }, tail_tol)
}

/// Squeezed vacuum `Ŝ(r)|0⟩` with real `r = asinh √n̄`.
///
/// Amplitudes follow `c_{2m} = (−tanh r)^m √((2m)!) / (2^m m! √cosh r)`;
/// the alternating sign is a phase convention only.
pub fn make_squeezed_vacuum(nbar: f64, dim: usize, tail_tol: f64) -> Result<FockState> {
    check_nbar(nbar)?;
    let r = nbar.sqrt().asinh();
    gaussian_state(&SqueezedVacuum { r }, dim, tail_tol, |n| {
        if (n / 2) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    })
}

/// Smallest dimension at which [`make_squeezed_vacuum`] meets `tail_tol`.
pub fn squeezed_vacuum_dim(nbar: f64, tail_tol: f64) -> Result<usize> {
    check_nbar(nbar)?;
    auto_dim(
        &SqueezedVacuum {
            r: nbar.sqrt().asinh(),
        },
        tail_tol,
    )
}

/// `√(1−n̄/N)|0⟩ + √(n̄/N)|N⟩`.
pub fn make_on(nbar: f64, big_n: usize, dim: usize) -> Result<FockState> {
    check_nbar(nbar)?;
    if big_n == 0 {
        return Err(TpaError::Domain("ON state needs N ≥ 1".into()));
    }
    if big_n >= dim {
        return Err(TpaError::Dimension(format!(
            "|{big_n}⟩ does not fit in dimension {dim}"
        )));
    }
    if nbar > big_n as f64 {
        return Err(TpaError::InfeasibleMean(format!(
            "n̄ = {nbar} exceeds N = {big_n}"
        )));
    }
    let weight = nbar / big_n as f64;
    let mut amps = vec![0.0; dim];
    amps[0] = (1.0 - weight).sqrt();
    amps[big_n] = weight.sqrt();
    real_state(amps, 0.0)
}

/// Real, nonnegative superposition `Σ c_j |j⟩`, normalized.
pub fn make_dv(coeffs: &[f64], dim: usize) -> Result<FockState> {
    if coeffs.len() > dim {
        return Err(TpaError::Dimension(format!(
            "{} coefficients do not fit in dimension {dim}",
            coeffs.len()
        )));
    }
    if let Some(c) = coeffs.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
        return Err(TpaError::Domain(format!(
            "coefficients must be finite and ≥ 0, got {c}"
        )));
    }
    if coeffs.iter().all(|&c| c == 0.0) {
        return Err(TpaError::Domain("coefficient vector is zero".into()));
    }
    let mut amps = coeffs.to_vec();
    amps.resize(dim, 0.0);
    real_state(amps, 0.0)
}

pub fn to_density(state: &FockState) -> DensityMatrix {
    let psi = nalgebra::DVector::from_column_slice(state.amplitudes());
    DensityMatrix {
        elements: &psi * psi.adjoint(),
    }
}

pub fn photon_distribution(rho: &DensityMatrix) -> Vec<f64> {
    (0..rho.dim()).map(|n| rho.elements[(n, n)].re).collect()
}

pub fn mean_photon(rho: &DensityMatrix) -> f64 {
    photon_distribution(rho)
        .iter()
        .enumerate()
        .map(|(n, p)| n as f64 * p)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn probs(s: &FockState) -> Vec<f64> {
        s.amplitudes().iter().map(|c| c.norm_sqr()).collect()
    }

    #[test]
    fn fock_basis_vectors() {
        assert_eq!(probs(&make_fock(0, 4).unwrap()), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(probs(&make_fock(2, 4).unwrap()), vec![0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(make_fock(4, 3), Err(TpaError::Dimension(_))));
    }

    #[test]
    fn coherent_examples() {
        let vac = make_coherent(0.0, 4, 1e-10).unwrap();
        assert_eq!(probs(&vac), vec![1.0, 0.0, 0.0, 0.0]);

        let s = make_coherent(2.0, 40, 1e-10).unwrap();
        assert_abs_diff_eq!(probs(&s)[0], (-2.0f64).exp(), epsilon = 1e-12);

        // Poisson(2) mass above n = 4 by direct summation is ≈ 0.0527.
        match make_coherent(2.0, 5, 1e-10) {
            Err(TpaError::Truncation { tail_mass, .. }) => {
                let direct: f64 = (5..200)
                    .map(|n| (-2.0 + n as f64 * 2f64.ln() - ln_factorial(n)).exp())
                    .sum();
                assert_abs_diff_eq!(tail_mass, direct, epsilon = 1e-15);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn squeezed_vacuum_examples() {
        let vac = make_squeezed_vacuum(0.0, 4, 1e-10).unwrap();
        assert_eq!(probs(&vac), vec![1.0, 0.0, 0.0, 0.0]);

        let dim = squeezed_vacuum_dim(2.0, 1e-10).unwrap();
        let s = make_squeezed_vacuum(2.0, dim, 1e-10).unwrap();
        let p = probs(&s);
        assert_abs_diff_eq!(p[0], 1.0 / 3f64.sqrt(), epsilon = 1e-9);
        // tanh²r / (2 cosh r) with r = asinh √2
        let r = 2f64.sqrt().asinh();
        let expected = r.tanh().powi(2) / (2.0 * r.cosh());
        assert_abs_diff_eq!(expected, 1.0 / (3.0 * 3f64.sqrt()), epsilon = 1e-15);
        assert_abs_diff_eq!(p[2], expected, epsilon = 1e-9);
        assert!(s
            .amplitudes()
            .iter()
            .skip(1)
            .step_by(2)
            .all(|c| *c == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn squeezed_vacuum_at_dim_60_is_truncated_too_hard() {
        assert!(matches!(
            make_squeezed_vacuum(2.0, 60, 1e-10),
            Err(TpaError::Truncation { .. })
        ));
        let loose = make_squeezed_vacuum(2.0, 60, 1e-5).unwrap();
        assert_abs_diff_eq!(probs(&loose)[0], 1.0 / 3f64.sqrt(), epsilon = 1e-5);
    }

    #[test]
    fn on_examples() {
        assert_eq!(
            probs(&make_on(2.0, 2, 4).unwrap()),
            vec![0.0, 0.0, 1.0, 0.0]
        );
        let s = make_on(2.0, 4, 6).unwrap();
        let a = s.amplitudes();
        assert_abs_diff_eq!(a[0].re, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(a[4].re, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(mean_photon(&s.to_density()), 2.0, epsilon = 1e-14);
        assert!(matches!(
            make_on(3.0, 2, 4),
            Err(TpaError::InfeasibleMean(_))
        ));
    }

    #[test]
    fn dv_examples() {
        assert_eq!(
            probs(&make_dv(&[1.0, 0.0, 0.0], 3).unwrap()),
            vec![1.0, 0.0, 0.0]
        );
        let s = make_dv(&[2.0, 0.0, 2.0], 3).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[2].re, 0.5f64.sqrt(), epsilon = 1e-15);
        assert!(matches!(make_dv(&[1.0, -1.0], 2), Err(TpaError::Domain(_))));
        assert!(matches!(make_dv(&[0.0, 0.0], 2), Err(TpaError::Domain(_))));
    }

    #[test]
    fn density_interrogation() {
        assert_eq!(mean_photon(&make_fock(2, 4).unwrap().to_density()), 2.0);
        let sv =
            make_squeezed_vacuum(2.0, squeezed_vacuum_dim(2.0, 1e-10).unwrap(), 1e-10).unwrap();
        let p = photon_distribution(&sv.to_density());
        assert_abs_diff_eq!(p[0], 1.0 / 3f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        sv.to_density().validate().unwrap();
    }

    #[test]
    fn constructors_hit_requested_mean() {
        for &nbar in &[0.3, 1.0, 2.0, 3.0, 5.5] {
            let dc = coherent_dim(nbar, DEFAULT_TAIL_TOL).unwrap();
            let c = make_coherent(nbar, dc, DEFAULT_TAIL_TOL).unwrap();
            assert_abs_diff_eq!(mean_photon(&c.to_density()), nbar, epsilon = 1e-9);
            assert!(c.tail_mass() <= DEFAULT_TAIL_TOL);

            let ds = squeezed_vacuum_dim(nbar, DEFAULT_TAIL_TOL).unwrap();
            let s = make_squeezed_vacuum(nbar, ds, DEFAULT_TAIL_TOL).unwrap();
            assert_abs_diff_eq!(mean_photon(&s.to_density()), nbar, epsilon = 1e-9);
        }
    }

    #[test]
    fn auto_dim_is_smallest() {
        let d = coherent_dim(2.0, 1e-10).unwrap();
        assert!(make_coherent(2.0, d, 1e-10).is_ok());
        let (mass, energy) = tail_of(&Poisson { nbar: 2.0 }, d - 1);
        assert!(mass > 1e-10 || energy > 1e-10);
    }

    #[test]
    fn mean_constraint_bounds() {
        let c = MeanConstraint::new(2.0).unwrap();
        assert!(c.check_dim(4).is_ok());
        assert!(matches!(c.check_dim(3), Err(TpaError::InfeasibleMean(_))));
        assert!(MeanConstraint::new(-1.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = make_coherent(1.3, 30, 1e-10).unwrap();
        let back = FockState::from_json(&s.to_json().unwrap()).unwrap();
        for (a, b) in s.amplitudes().iter().zip(back.amplitudes()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-15);
        }
        assert_eq!(s.tail_mass(), back.tail_mass());
        let rho = s.to_density();
        let back = DensityMatrix::from_json(&rho.to_json().unwrap()).unwrap();
        assert_eq!(rho, back);
    }
}
