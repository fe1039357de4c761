//! Exact two-photon-absorption channel.
//!
//! The generator with jump operator `â²/√2` maps `|n⟩⟨n′|` only onto
//! `|n−2⟩⟨n′−2|`, so the matrix elements split into independent chains
//! `(m+2j, m′+2j)`, `j = 0, 1, …`. On each chain the dynamics is an upper
//! bidiagonal linear system
//!
//! ```text
//! ∂ε x_j = −d_j x_j + g_j x_{j+1}
//! d_j = ¼[(m+2j)(m+2j−1) + (m′+2j)(m′+2j−1)]
//! g_j = ½√((m+2j+1)(m+2j+2)(m′+2j+1)(m′+2j+2))
//! ```
//!
//! whose propagator entries are the Klimov weights `A_k(n, n′; ε)`. The
//! closed form is an alternating sum over exponentials (see
//! [`klimov_coefficient_series`]) which cancels catastrophically for small
//! `ε` and large `k`. [`TpaChannel`] instead evaluates the chain exponential
//! by scaling and squaring a shifted, entrywise nonnegative matrix, so every
//! weight is computed to full relative precision.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::error::{Result, TpaError};
use crate::fock::DensityMatrix;

/// Estimand point `(Γ, ε)` with `Γ = 1 − e^{−ε}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPoint {
    gamma_cap: f64,
    eps: f64,
}

impl ChannelPoint {
    pub fn from_gamma(gamma_cap: f64) -> Result<Self> {
        let eps = gamma_to_eps(gamma_cap)?;
        Ok(Self { gamma_cap, eps })
    }

    pub fn from_eps(eps: f64) -> Result<Self> {
        let gamma_cap = eps_to_gamma(eps)?;
        Ok(Self { gamma_cap, eps })
    }

    pub fn gamma_cap(&self) -> f64 {
        self.gamma_cap
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

pub fn gamma_to_eps(gamma_cap: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma_cap) {
        return Err(TpaError::Domain(format!(
            "Γ must lie in [0, 1), got {gamma_cap}"
        )));
    }
    Ok(-(-gamma_cap).ln_1p())
}

pub fn eps_to_gamma(eps: f64) -> Result<f64> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(TpaError::Domain(format!(
            "ε must be finite and ≥ 0, got {eps}"
        )));
    }
    Ok(-(-eps).exp_m1())
}

/// Spacing of a Γ grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Linear,
}

/// `count` values of `Γ` from `min` to `max` inclusive, all inside `(0, 1)`.
pub fn gamma_grid(min: f64, max: f64, count: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(TpaError::Domain("Γ grid needs at least one point".into()));
    }
    let inside = |g: f64| g > 0.0 && g < 1.0;
    if !inside(min) || !inside(max) || min > max {
        return Err(TpaError::Domain(format!(
            "Γ grid bounds must satisfy 0 < min ≤ max < 1, got [{min}, {max}]"
        )));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let t = |i: usize| i as f64 / (count - 1) as f64;
    let grid = match spacing {
        Spacing::Linear => (0..count).map(|i| min + (max - min) * t(i)).collect(),
        Spacing::Log => {
            let (a, b) = (min.ln(), max.ln());
            (0..count).map(|i| (a + (b - a) * t(i)).exp()).collect()
        }
    };
    let mut grid: Vec<f64> = grid;
    grid[0] = min;
    grid[count - 1] = max;
    Ok(grid)
}

/// Decay rate of `|n⟩⟨n′|`.
#[inline]
pub(crate) fn decay_rate(n: usize, nprime: usize) -> f64 {
    let (n, np) = (n as f64, nprime as f64);
    0.25 * (n * (n - 1.0) + np * (np - 1.0))
}

/// Feed rate from `|n+2⟩⟨n′+2|` into `|n⟩⟨n′|`.
#[inline]
pub(crate) fn feed_rate(n: usize, nprime: usize) -> f64 {
    let (n, np) = (n as f64, nprime as f64);
    0.5 * ((n + 1.0) * (n + 2.0) * (np + 1.0) * (np + 2.0)).sqrt()
}

/// `dρ/dε` for the TPA generator, on any square matrix.
pub fn lindblad_apply(rho: &DensityMatrix) -> DMatrix<Complex64> {
    lindblad_apply_matrix(rho.elements())
}

pub(crate) fn lindblad_apply_matrix<T>(rho: &DMatrix<T>) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let d = rho.nrows();
    DMatrix::from_fn(d, d, |n, np| {
        let mut out = rho[(n, np)] * T::from_real(-decay_rate(n, np));
        if n + 2 < d && np + 2 < d {
            out += rho[(n + 2, np + 2)] * T::from_real(feed_rate(n, np));
        }
        out
    })
}

/// Propagator of one chain starting at `(m, m′)`, stored row-major,
/// upper triangular: `weights[i * len + j]` carries chain element `j` to `i`.
#[derive(Debug, Clone)]
struct Chain {
    m: usize,
    mprime: usize,
    len: usize,
    weights: Vec<f64>,
}

impl Chain {
    fn new(m: usize, mprime: usize, len: usize, eps: f64) -> Self {
        let decay: Vec<f64> = (0..len)
            .map(|j| decay_rate(m + 2 * j, mprime + 2 * j))
            .collect();
        let feed: Vec<f64> = (0..len.saturating_sub(1))
            .map(|j| feed_rate(m + 2 * j, mprime + 2 * j))
            .collect();
        let weights = metzler_bidiagonal_exp(&decay, &feed, eps);
        Self {
            m,
            mprime,
            len,
            weights,
        }
    }

    #[inline]
    fn weight(&self, to: usize, from: usize) -> f64 {
        self.weights[to * self.len + from]
    }
}

/// `exp(ε G)` for `G = −diag(decay) + superdiag(feed)` with nonnegative
/// rates. `G` is Metzler, so after shifting by the largest decay the scaled
/// matrix is entrywise nonnegative: its Taylor series and the subsequent
/// squarings involve no cancellation.
fn metzler_bidiagonal_exp(decay: &[f64], feed: &[f64], eps: f64) -> Vec<f64> {
    let len = decay.len();
    let mut out = vec![0.0; len * len];
    if len == 0 {
        return out;
    }
    let d_max = decay.iter().copied().fold(0.0, f64::max);
    let f_max = feed.iter().copied().fold(0.0, f64::max);
    let norm = eps * (d_max + f_max);
    let mut squarings = 0u32;
    while norm / 2f64.powi(squarings as i32) > 0.5 {
        squarings += 1;
    }
    let scale = eps / 2f64.powi(squarings as i32);
    let shift = scale * d_max;

    // B = scale·G + shift·I ≥ 0
    let mut b = vec![0.0; len * len];
    for i in 0..len {
        b[i * len + i] = shift - scale * decay[i];
        if i + 1 < len {
            b[i * len + i + 1] = scale * feed[i];
        }
    }

    // Σ B^k / k!
    let mut term = vec![0.0; len * len];
    for i in 0..len {
        out[i * len + i] = 1.0;
        term[i * len + i] = 1.0;
    }
    let mut next = vec![0.0; len * len];
    for k in 1..60 {
        upper_mul(&term, &b, &mut next, len);
        let inv_k = 1.0 / k as f64;
        let mut largest = 0.0f64;
        for (t, nx) in term.iter_mut().zip(&next) {
            *t = nx * inv_k;
            largest = largest.max(*t);
        }
        let mut grew = false;
        for (o, t) in out.iter_mut().zip(&term) {
            let before = *o;
            *o += t;
            grew |= *o != before;
        }
        if largest == 0.0 || !grew {
            break;
        }
    }
    let damp = (-shift).exp();
    out.iter_mut().for_each(|x| *x *= damp);

    for _ in 0..squarings {
        upper_mul(&out, &out, &mut next, len);
        std::mem::swap(&mut out, &mut next);
    }
    out
}

/// `c = a·b` for row-major upper-triangular `len × len` matrices.
fn upper_mul(a: &[f64], b: &[f64], c: &mut [f64], len: usize) {
    for i in 0..len {
        for j in 0..len {
            let v = if j < i {
                0.0
            } else {
                (i..=j).map(|r| a[i * len + r] * b[r * len + j]).sum()
            };
            c[i * len + j] = v;
        }
    }
}

/// The TPA channel at a fixed `ε`, precomputed for one truncation dimension.
///
/// Photon number never increases, so the truncated channel is exact.
#[derive(Debug, Clone)]
pub struct TpaChannel {
    dim: usize,
    eps: f64,
    chains: Vec<Chain>,
}

impl TpaChannel {
    pub fn new(dim: usize, eps: f64) -> Result<Self> {
        if dim == 0 {
            return Err(TpaError::Dimension("channel dimension must be ≥ 1".into()));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(TpaError::Domain(format!(
                "ε must be finite and ≥ 0, got {eps}"
            )));
        }
        let mut chains = Vec::new();
        // Chains of the upper triangle n ≤ n′ start at m ∈ {0, 1}, m′ ≥ m.
        for m in 0..dim.min(2) {
            for mprime in m..dim {
                let len = (dim - 1 - mprime) / 2 + 1;
                chains.push(Chain::new(m, mprime, len, eps));
            }
        }
        Ok(Self { dim, eps, chains })
    }

    pub fn at(dim: usize, point: ChannelPoint) -> Result<Self> {
        Self::new(dim, point.eps())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.check_dim(rho.dim())?;
        if self.eps == 0.0 {
            return Ok(rho.clone());
        }
        DensityMatrix::new_unchecked(self.apply_matrix(rho.elements()))
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim {
            return Err(TpaError::Dimension(format!(
                "channel built for dimension {}, state has dimension {dim}",
                self.dim
            )));
        }
        Ok(())
    }

    /// Applies the channel to a Hermitian matrix: the upper triangle is
    /// propagated chain by chain and mirrored.
    pub(crate) fn apply_matrix<T>(&self, rho: &DMatrix<T>) -> DMatrix<T>
    where
        T: ComplexField<RealField = f64> + Copy,
    {
        let d = self.dim;
        let mut out = DMatrix::<T>::zeros(d, d);
        for chain in &self.chains {
            let (m, mp) = (chain.m, chain.mprime);
            for i in 0..chain.len {
                let mut acc = T::zero();
                for j in i..chain.len {
                    let w = chain.weight(i, j);
                    if w != 0.0 {
                        acc += rho[(m + 2 * j, mp + 2 * j)] * T::from_real(w);
                    }
                }
                out[(m + 2 * i, mp + 2 * i)] = acc;
                if m != mp {
                    out[(mp + 2 * i, m + 2 * i)] = acc.conjugate();
                }
            }
        }
        out
    }

    /// Output photon-number distribution for a Fock-diagonal input.
    pub fn apply_diagonal(&self, populations: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(populations.len())?;
        let mut out = vec![0.0; self.dim];
        for chain in self.chains.iter().filter(|c| c.m == c.mprime) {
            for i in 0..chain.len {
                out[chain.m + 2 * i] = (i..chain.len)
                    .map(|j| chain.weight(i, j) * populations[chain.m + 2 * j])
                    .sum();
            }
        }
        Ok(out)
    }
}

/// `A_k(n, n′; ε)`: weight of `|n−2k⟩⟨n′−2k|` in the image of `|n⟩⟨n′|`.
pub fn klimov_coefficient(n: usize, nprime: usize, k: usize, eps: f64) -> Result<f64> {
    check_klimov_args(n, nprime, k, eps)?;
    if eps == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let chain = Chain::new(n - 2 * k, nprime - 2 * k, k + 1, eps);
    Ok(chain.weight(0, k))
}

fn check_klimov_args(n: usize, nprime: usize, k: usize, eps: f64) -> Result<()> {
    if 2 * k > n.min(nprime) {
        return Err(TpaError::Domain(format!(
            "transition order k = {k} needs 2k ≤ min(n, n′) = {}",
            n.min(nprime)
        )));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(TpaError::Domain(format!(
            "ε must be finite and ≥ 0, got {eps}"
        )));
    }
    Ok(())
}

/// `A_k` from the superoperator-eigenvalue series
///
/// ```text
/// A_k = √(n!/(n−2k)!) √(n′!/(n′−2k)!) Σ_l (−1)^l / ((k−l)! l!)
///       · exp[−(ε/4) K_l] / Π_{j≠l} J_{j,l}
/// K_l   = (m+2l)(m+2l−1) + (m′+2l)(m′+2l−1)
/// J_{j,l} = (2m+2j+2l−1) + (2m′+2j+2l−1),   m = n−2k, m′ = n′−2k
/// ```
///
/// summed with Neumaier compensation. Loses relative accuracy when
/// `ε · K_k` is small and `k` is large; [`klimov_coefficient`] does not.
pub fn klimov_coefficient_series(n: usize, nprime: usize, k: usize, eps: f64) -> Result<f64> {
    check_klimov_args(n, nprime, k, eps)?;
    if eps == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let (m, mp) = ((n - 2 * k) as f64, (nprime - 2 * k) as f64);
    // √(n!/(n−2k)!) √(n′!/(n′−2k)!) as a product of ratios
    let prefactor: f64 = (0..2 * k)
        .map(|i| (((n - i) * (nprime - i)) as f64).sqrt())
        .product();
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut binom_like = 1.0 / (1..=k).map(|i| i as f64).product::<f64>(); // 1/(k!·0!)
    for l in 0..=k {
        if l > 0 {
            // 1/((k−l)! l!) from 1/((k−l+1)! (l−1)!)
            binom_like *= (k - l + 1) as f64 / l as f64;
        }
        let lf = l as f64;
        let k_eig = (m + 2.0 * lf) * (m + 2.0 * lf - 1.0) + (mp + 2.0 * lf) * (mp + 2.0 * lf - 1.0);
        let j_prod: f64 = (0..=k)
            .filter(|&j| j != l)
            .map(|j| {
                let jf = j as f64;
                (2.0 * m + 2.0 * jf + 2.0 * lf - 1.0) + (2.0 * mp + 2.0 * jf + 2.0 * lf - 1.0)
            })
            .product();
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * binom_like * (-0.25 * eps * k_eig).exp() / j_prod;
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    Ok(prefactor * (sum + comp))
}

/// Exact output state at `ε`.
pub fn propagate_exact(rho0: &DensityMatrix, eps: f64) -> Result<DensityMatrix> {
    if eps == 0.0 {
        return Ok(rho0.clone());
    }
    TpaChannel::new(rho0.dim(), eps)?.apply(rho0)
}

/// Step count used for the RK4 oracle.
pub fn default_ode_steps(eps: f64) -> usize {
    1000usize.max((eps * 2000.0).ceil() as usize)
}

/// Fixed-step classical RK4 integration of `dρ/dε = 𝓛ρ`.
pub fn propagate_ode(rho0: &DensityMatrix, eps: f64, steps: usize) -> Result<DensityMatrix> {
    if steps == 0 {
        return Err(TpaError::Domain("RK4 needs at least one step".into()));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(TpaError::Domain(format!(
            "ε must be finite and ≥ 0, got {eps}"
        )));
    }
    if eps == 0.0 {
        return Ok(rho0.clone());
    }
    let h = eps / steps as f64;
    let half = Complex64::new(0.5 * h, 0.0);
    let full = Complex64::new(h, 0.0);
    let sixth = Complex64::new(h / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    let mut rho = rho0.elements().clone();
    for _ in 0..steps {
        let k1 = lindblad_apply_matrix(&rho);
        let k2 = lindblad_apply_matrix(&(&rho + &k1 * half));
        let k3 = lindblad_apply_matrix(&(&rho + &k2 * half));
        let k4 = lindblad_apply_matrix(&(&rho + &k3 * full));
        rho += (k1 + k2 * two + k3 * two + k4) * sixth;
    }
    DensityMatrix::new_unchecked(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{make_coherent, make_dv, make_fock, mean_photon, photon_distribution};
    use approx::assert_abs_diff_eq;

    fn proj(n: usize, dim: usize) -> DensityMatrix {
        make_fock(n, dim).unwrap().to_density()
    }

    fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        (a - b).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn gamma_grids() {
        let g = gamma_grid(1e-3, 1.0 - 1e-3, 60, Spacing::Log).unwrap();
        assert_eq!(g.len(), 60);
        assert_eq!((g[0], g[59]), (1e-3, 1.0 - 1e-3));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_abs_diff_eq!(g[1] / g[0], g[2] / g[1], epsilon = 1e-12);
        let l = gamma_grid(0.1, 0.5, 5, Spacing::Linear).unwrap();
        assert_abs_diff_eq!(l[2], 0.3, epsilon = 1e-15);
        assert_eq!(gamma_grid(0.2, 0.9, 1, Spacing::Log).unwrap(), vec![0.2]);
        assert!(gamma_grid(0.1, 0.5, 0, Spacing::Log).is_err());
        assert!(gamma_grid(0.0, 0.5, 3, Spacing::Log).is_err());
        assert!(gamma_grid(0.6, 0.5, 3, Spacing::Linear).is_err());
        assert!(gamma_grid(0.1, 1.0, 3, Spacing::Linear).is_err());
    }

    #[test]
    fn reparametrisation() {
        assert_eq!(gamma_to_eps(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(eps_to_gamma(2f64.ln()).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(gamma_to_eps(0.99).unwrap(), 100f64.ln(), epsilon = 1e-13);
        assert!(gamma_to_eps(1.0).is_err());
        assert!(gamma_to_eps(-0.1).is_err());
        assert!(eps_to_gamma(-0.1).is_err());
        for &g in &[1e-9, 1e-4, 0.3, 0.77, 0.999] {
            let back = eps_to_gamma(gamma_to_eps(g).unwrap()).unwrap();
            assert!((back - g).abs() <= 1e-14 * g.max(1e-300) + 1e-16);
        }
        let p = ChannelPoint::from_gamma(0.25).unwrap();
        assert_abs_diff_eq!(p.gamma_cap(), 1.0 - (-p.eps()).exp(), epsilon = 1e-14);
    }

    #[test]
    fn generator_examples() {
        let zero = lindblad_apply(&proj(0, 4));
        assert!(zero.iter().all(|c| c.norm() == 0.0));
        assert!(lindblad_apply(&proj(1, 4)).iter().all(|c| c.norm() == 0.0));

        let g2 = lindblad_apply(&proj(2, 4));
        let mut expect = DMatrix::zeros(4, 4);
        expect[(0, 0)] = Complex64::new(1.0, 0.0);
        expect[(2, 2)] = Complex64::new(-1.0, 0.0);
        assert_abs_diff_eq!(max_abs_diff(&g2, &expect), 0.0, epsilon = 1e-15);

        let g3 = lindblad_apply(&proj(3, 5));
        let mut expect = DMatrix::zeros(5, 5);
        expect[(1, 1)] = Complex64::new(3.0, 0.0);
        expect[(3, 3)] = Complex64::new(-3.0, 0.0);
        assert_abs_diff_eq!(max_abs_diff(&g3, &expect), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn klimov_examples() {
        for &eps in &[0.0, 0.01, 0.3, 1.0, 4.0] {
            assert_abs_diff_eq!(
                klimov_coefficient(2, 2, 0, eps).unwrap(),
                (-eps).exp(),
                epsilon = 1e-13
            );
            assert_abs_diff_eq!(
                klimov_coefficient(2, 2, 1, eps).unwrap(),
                -(-eps).exp_m1(),
                epsilon = 1e-13
            );
        }
        for n in 0..8 {
            for np in 0..8 {
                for k in 0..=n.min(np) / 2 {
                    let expect = if k == 0 { 1.0 } else { 0.0 };
                    assert_eq!(klimov_coefficient(n, np, k, 0.0).unwrap(), expect);
                }
            }
        }
        assert!(klimov_coefficient(3, 5, 2, 0.1).is_err());
    }

    #[test]
    fn series_and_chain_exponential_agree() {
        for &eps in &[0.05, 0.3, 1.0, 2.5] {
            for n in 0..14 {
                for np in n..14 {
                    for k in 0..=n / 2 {
                        let a = klimov_coefficient(n, np, k, eps).unwrap();
                        let b = klimov_coefficient_series(n, np, k, eps).unwrap();
                        assert!(
                            (a - b).abs() <= 1e-9 * a.abs().max(1e-6),
                            "n={n} n'={np} k={k} ε={eps}: {a} vs {b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn small_eps_weights_keep_leading_order() {
        // A_k(n, n; ε) ≈ ε^k Π_{j<k} g_j / k! as ε → 0
        let eps = 1e-6;
        let n = 12;
        for k in 1..=6 {
            let lead: f64 = (0..k)
                .map(|j| 2.0 * feed_rate(n - 2 * k + 2 * j, n - 2 * k + 2 * j))
                .product::<f64>()
                / 2f64.powi(k as i32)
                * eps.powi(k as i32)
                / (1..=k).map(|i| i as f64).product::<f64>();
            let a = klimov_coefficient(n, n, k, eps).unwrap();
            assert!((a / lead - 1.0).abs() < 1e-3, "k={k}: {a} vs {lead}");
        }
    }

    #[test]
    fn propagate_examples() {
        let rho = make_coherent(1.5, 24, 1e-10).unwrap().to_density();
        assert_eq!(propagate_exact(&rho, 0.0).unwrap(), rho);

        for &eps in &[0.1, 1.0, 3.0] {
            let out = propagate_exact(&proj(2, 4), eps).unwrap();
            let p = photon_distribution(&out);
            assert_abs_diff_eq!(p[2], (-eps).exp(), epsilon = 1e-13);
            assert_abs_diff_eq!(p[0], 1.0 - (-eps).exp(), epsilon = 1e-13);

            let out = propagate_exact(&proj(3, 5), eps).unwrap();
            let p = photon_distribution(&out);
            assert_abs_diff_eq!(p[3], (-3.0 * eps).exp(), epsilon = 1e-13);
            assert_abs_diff_eq!(p[1], 1.0 - (-3.0 * eps).exp(), epsilon = 1e-13);
        }
    }

    #[test]
    fn ode_examples() {
        let out = propagate_ode(&proj(2, 4), 1.0, 1000).unwrap();
        let p = photon_distribution(&out);
        assert_abs_diff_eq!(p[2], (-1f64).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(p[0], 1.0 - (-1f64).exp(), epsilon = 1e-10);

        let rho = make_coherent(2.0, 24, 1e-10).unwrap().to_density();
        assert_eq!(propagate_ode(&rho, 0.0, 17).unwrap(), rho);
        let exact = propagate_exact(&rho, 0.7).unwrap();
        let ode = propagate_ode(&rho, 0.7, 2000).unwrap();
        assert!(max_abs_diff(exact.elements(), ode.elements()) < 1e-8);
        assert!(propagate_ode(&rho, 0.7, 0).is_err());
    }

    #[test]
    fn generator_is_derivative_of_exact_solution() {
        let rho = make_dv(&[0.3, 0.1, 0.5, 0.2, 0.4, 0.3], 6)
            .unwrap()
            .to_density();
        let h = 1e-6;
        let fd = (propagate_exact(&rho, h).unwrap().elements() - rho.elements())
            / Complex64::new(h, 0.0);
        let gen = lindblad_apply(&rho);
        let scale = gen.iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(max_abs_diff(&fd, &gen) <= 1e-4 * scale);
    }

    #[test]
    fn semigroup_and_fixed_points() {
        let rho = make_dv(&[0.2, 0.5, 0.1, 0.6, 0.3, 0.2, 0.4], 7)
            .unwrap()
            .to_density();
        let two_step = propagate_exact(&propagate_exact(&rho, 0.4).unwrap(), 0.9).unwrap();
        let one_step = propagate_exact(&rho, 1.3).unwrap();
        assert!(max_abs_diff(two_step.elements(), one_step.elements()) < 1e-10);

        for n in 0..2 {
            let out = propagate_exact(&proj(n, 5), 2.0).unwrap();
            assert!(max_abs_diff(out.elements(), proj(n, 5).elements()) < 1e-15);
        }
    }

    #[test]
    fn diagonal_fast_path_matches_full_apply() {
        let pops = [0.1, 0.2, 0.05, 0.3, 0.15, 0.2];
        let ch = TpaChannel::new(6, 0.8).unwrap();
        let fast = ch.apply_diagonal(&pops).unwrap();
        let full = ch
            .apply(&DensityMatrix::from_populations(&pops).unwrap())
            .unwrap();
        for (a, b) in fast.iter().zip(photon_distribution(&full)) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert!(ch.apply_diagonal(&pops[..5]).is_err());
    }

    #[test]
    fn energy_never_increases() {
        let rho = make_coherent(3.0, 30, 1e-10).unwrap().to_density();
        let mut last = mean_photon(&rho);
        for i in 1..40 {
            let e = mean_photon(&propagate_exact(&rho, 0.25 * i as f64).unwrap());
            assert!(e <= last + 1e-12);
            last = e;
        }
    }
}
