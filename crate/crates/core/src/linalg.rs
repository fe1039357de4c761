//! Hermitian eigendecomposition.

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};

/// Eigenpairs of the Hermitian part of `m`.
///
/// nalgebra 0.33 can attach eigenvalues to the wrong columns when the input
/// has decoupled blocks, so each value is recomputed as the Rayleigh
/// quotient of its own eigenvector.
pub(crate) fn hermitian_eigen<T>(m: &DMatrix<T>) -> (Vec<f64>, DMatrix<T>)
where
    T: ComplexField<RealField = f64> + Copy,
{
    let herm = (m + m.adjoint()) * T::from_real(0.5);
    let u = SymmetricEigen::new(herm.clone()).eigenvectors;
    let hu = &herm * &u;
    let vals = (0..u.ncols())
        .map(|k| u.column(k).dotc(&hu.column(k)).real())
        .collect();
    (vals, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelPoint, TpaChannel};

    #[test]
    fn block_matrix_pairs_are_consistent() {
        // Channel output for a three-level probe at Γ = 0.6; plain
        // SymmetricEigen mislabels two eigenpairs here.
        let p = [
            0.0037194153677981324,
            0.0,
            0.9952178945271165,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0010626901050852051,
            0.0,
        ];
        let a: Vec<f64> = p.iter().map(|x: &f64| x.sqrt()).collect();
        let norm: f64 = p.iter().sum();
        let rho0 = DMatrix::from_fn(11, 11, |i, j| a[i] * a[j] / norm);
        let ch = TpaChannel::at(11, ChannelPoint::from_gamma(0.6).unwrap()).unwrap();
        let m = ch.apply_matrix(&rho0);
        let (vals, u) = hermitian_eigen(&m);
        for (k, &val) in vals.iter().enumerate() {
            let v = u.column(k);
            let res = (&m * v - v * val).norm();
            assert!(res < 1e-14, "pair {k}: residual {res:e}");
        }
    }
}
