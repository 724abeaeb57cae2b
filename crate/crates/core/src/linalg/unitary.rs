use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{eigh, ComplexMatrix, HermitianMatrix, Matrix};
use crate::error::{Error, Result};

/// Largest admissible `||U*U - I||` for unitary input.
pub const UNITARY_TOL: f64 = 1e-8;

/// Eigenvalues of the real part closer than this are resolved jointly with
/// the imaginary part.
const CLUSTER_TOL: f64 = 1e-6;

/// `||U*U - I||` in the operator norm.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let gram = u.adjoint().matmul(u).expect("adjoint product is conformable");
    gram.try_sub(&ComplexMatrix::identity(u.rows()))
        .expect("same shape")
        .norm_2()
}

/// Eigenphases `θ ∈ [0, 2π)` of a unitary matrix, ascending, one entry per
/// eigenvalue counted with multiplicity.
///
/// A unitary matrix is normal, so its Hermitian parts `(U+U*)/2` and
/// `(U-U*)/2i` commute. The first is diagonalized; inside each cluster of
/// (nearly) equal cosines the second is diagonalized on the compressed
/// subspace, separating `θ` from `-θ`.
pub fn eig_unitary(u: &ComplexMatrix) -> Result<Vec<f64>> {
    if !u.is_square() {
        return Err(Error::NotSquare {
            rows: u.rows(),
            cols: u.cols(),
        });
    }
    let defect = unitarity_defect(u);
    if !(defect <= UNITARY_TOL) {
        return Err(Error::NotUnitary { defect });
    }
    let n = u.rows();
    let adj = u.adjoint();
    let cos_part = HermitianMatrix::symmetrized(u)?;
    let i2 = Complex64::new(0.0, 0.5);
    let sin_part = HermitianMatrix::symmetrized(&Matrix::from_fn(n, n, |r, c| {
        (u[(r, c)] - adj[(r, c)]) / i2 * 0.25
    }))?;
    let cos_eig = eigh(&cos_part)?;

    let mut phases = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && cos_eig.values[end] - cos_eig.values[end - 1] <= CLUSTER_TOL {
            end += 1;
        }
        let basis = Matrix::from_fn(n, end - start, |r, c| cos_eig.vectors[(r, start + c)]);
        let compressed = basis
            .adjoint()
            .matmul(&sin_part.matrix().matmul(&basis)?)?;
        let sin_eig = eigh(&HermitianMatrix::symmetrized(&compressed)?)?;
        let vectors = basis.matmul(&sin_eig.vectors)?;
        for (j, &s) in sin_eig.values.iter().enumerate() {
            let x = vectors.column(j);
            let hx = cos_part.matrix().mul_vec(&x)?;
            let c: f64 = x.iter().zip(&hx).map(|(a, b)| (a.conj() * b).re).sum();
            phases.push(wrap_phase(s.atan2(c)));
        }
        start = end;
    }
    phases.sort_by(f64::total_cmp);
    Ok(phases)
}

/// Maps an angle to `[0, 2π)`.
pub(crate) fn wrap_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{determinant, eigh};
    use crate::random::SeededRng;
    use std::f64::consts::PI;

    #[test]
    fn identity_has_zero_phases() {
        let p = eig_unitary(&ComplexMatrix::identity(5)).unwrap();
        assert!(p.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn minus_one_scalar() {
        let u = ComplexMatrix::from_diagonal(&[Complex64::new(-1.0, 0.0)]);
        let p = eig_unitary(&u).unwrap();
        assert!((p[0] - PI).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_unitary() {
        let u = ComplexMatrix::from_diagonal(&[Complex64::new(1.1, 0.0), Complex64::new(1.0, 0.0)]);
        assert!(matches!(eig_unitary(&u), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn exponential_of_hermitian() {
        let mut rng = SeededRng::new(21, 0);
        let h = rng.hermitian_with_spectrum(&[-2.9, -1.0, -1.0, 0.3, 1.7, 3.0]);
        let e = eigh(&h).unwrap();
        let u = {
            let mut acc = ComplexMatrix::zeros(6, 6);
            for (k, &lam) in e.values.iter().enumerate() {
                let ph = Complex64::from_polar(1.0, lam);
                for i in 0..6 {
                    for j in 0..6 {
                        acc[(i, j)] += ph * e.vectors[(i, k)] * e.vectors[(j, k)].conj();
                    }
                }
            }
            acc
        };
        let phases = eig_unitary(&u).unwrap();
        let mut expected: Vec<f64> = e.values.iter().map(|&x| wrap_phase(x)).collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in phases.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        let prod = phases
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &t| acc * Complex64::from_polar(1.0, t));
        assert!((prod - determinant(&u).unwrap()).norm() < 1e-8);
    }
}
