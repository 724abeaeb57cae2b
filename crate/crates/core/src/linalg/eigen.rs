use super::tridiagonal::implicit_ql;
use super::{HermitianMatrix, Matrix, Scalar};
use crate::error::{Error, Result};

/// Default gap tolerance for "λ on spectrum" rejections.
pub const GAP_TOL: f64 = 1e-9;

/// Ascending eigenvalues and orthonormal eigenvectors (as columns).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition<T> {
    pub values: Vec<f64>,
    pub vectors: Matrix<T>,
}

impl<T: Scalar> EigenDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V diag(f(λ)) V*`.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64) -> Matrix<T> {
        let weights: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        self.weighted_outer(&weights)
    }

    /// Eigenvalues strictly below `lambda`.
    pub fn count_below(&self, lambda: f64) -> usize {
        self.values.partition_point(|&x| x < lambda)
    }

    fn weighted_outer(&self, weights: &[f64]) -> Matrix<T> {
        let n = self.dim();
        let vt = self.vectors.transpose();
        let mut out = Matrix::zeros(n, n);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let col = vt.row(k);
            for i in 0..n {
                let a = col[i].scale(w);
                let row = out.row_mut(i);
                for (o, &b) in row.iter_mut().zip(col) {
                    *o += a * b.conj();
                }
            }
        }
        out
    }

    /// Largest `|M v_i - λ_i v_i|` over all pairs.
    pub fn max_residual(&self, m: &HermitianMatrix<T>) -> f64 {
        let mv = m
            .matrix()
            .matmul(&self.vectors)
            .expect("conformable by construction");
        let mut worst = 0.0_f64;
        for (j, &lam) in self.values.iter().enumerate() {
            let r: f64 = (0..self.dim())
                .map(|i| (mv[(i, j)] - self.vectors[(i, j)].scale(lam)).abs2())
                .sum();
            worst = worst.max(r.sqrt());
        }
        worst
    }
}

/// Householder vector `v` (with `v[0] = 1` implied) and scalar `tau`
/// such that `(I - tau v v*)* [alpha; x] = [beta; 0]` with `beta` real.
fn householder<T: Scalar>(alpha: T, x: &mut [T]) -> (T, f64) {
    let xnorm2: f64 = x.iter().map(|v| v.abs2()).sum();
    if xnorm2 == 0.0 && alpha.im() == 0.0 {
        return (T::zero(), alpha.re());
    }
    let (ar, ai) = (alpha.re(), alpha.im());
    let beta = -(ar * ar + ai * ai + xnorm2).sqrt().copysign(ar);
    let tau = (T::from_real(beta) - alpha).scale(1.0 / beta);
    let inv = T::one() / (alpha - T::from_real(beta));
    for v in x.iter_mut() {
        *v = *v * inv;
    }
    (tau, beta)
}

struct Tridiagonalized<T> {
    diag: Vec<f64>,
    off: Vec<f64>,
    reflectors: Vec<(Vec<T>, T)>,
}

/// Reduces a Hermitian matrix to real symmetric tridiagonal form
/// `A = Q T Q*`, with `Q` a product of Householder reflectors.
fn tridiagonalize<T: Scalar>(a: &HermitianMatrix<T>, keep_reflectors: bool) -> Tridiagonalized<T> {
    let n = a.dim();
    let mut m = a.matrix().clone();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    let mut reflectors = Vec::new();
    let mut x = vec![T::zero(); n];
    for i in 0..n.saturating_sub(1) {
        // column i below the diagonal, read via the (Hermitian) row
        let len = n - i - 1;
        let alpha = m[(i + 1, i)];
        let mut tail: Vec<T> = (i + 2..n).map(|r| m[(r, i)]).collect();
        let (tau, beta) = householder(alpha, &mut tail);
        off[i] = beta;
        diag[i] = m[(i, i)].re();
        if tau != T::zero() {
            let mut v = Vec::with_capacity(len);
            v.push(T::one());
            v.extend_from_slice(&tail);
            // x = tau * A22 v
            let x = &mut x[..len];
            for (j, xj) in x.iter_mut().enumerate() {
                let row = &m.row(i + 1 + j)[i + 1..];
                let mut acc = T::zero();
                for (&a, &vl) in row.iter().zip(&v) {
                    acc += a * vl;
                }
                *xj = tau * acc;
            }
            // alpha2 = -1/2 tau (x* v)
            let mut xv = T::zero();
            for (&xj, &vj) in x.iter().zip(&v) {
                xv += xj.conj() * vj;
            }
            let alpha2 = (tau * xv).scale(-0.5);
            for (xj, &vj) in x.iter_mut().zip(&v) {
                *xj += alpha2 * vj;
            }
            // A22 -= v x* + x v*
            for j in 0..len {
                let (vj, xj) = (v[j], x[j]);
                let row = &mut m.row_mut(i + 1 + j)[i + 1..];
                for ((a, &vl), &xl) in row.iter_mut().zip(&v).zip(x.iter()) {
                    *a -= vj * xl.conj() + xj * vl.conj();
                }
            }
            if keep_reflectors {
                reflectors.push((v, tau));
            }
        } else if keep_reflectors {
            reflectors.push((Vec::new(), T::zero()));
        }
    }
    if n > 0 {
        diag[n - 1] = m[(n - 1, n - 1)].re();
    }
    Tridiagonalized {
        diag,
        off,
        reflectors,
    }
}

/// Builds `Qᵀ` (transpose, not adjoint) from the stored reflectors, so that
/// QL rotations act on contiguous rows.
fn accumulate_qt<T: Scalar>(n: usize, reflectors: &[(Vec<T>, T)]) -> Matrix<T> {
    let mut qt = Matrix::identity(n);
    let mut y = vec![T::zero(); n];
    for (i, (v, tau)) in reflectors.iter().enumerate().rev() {
        if v.is_empty() {
            continue;
        }
        let start = i + 1;
        // Qt[:, start..] -= tau (Qt[:, start..] conj(v)) vᵀ, rows below `start` vanish
        for r in start..n {
            let row = &qt.row(r)[start..];
            let mut acc = T::zero();
            for (&q, &vc) in row.iter().zip(v) {
                acc += q * vc.conj();
            }
            y[r] = *tau * acc;
        }
        for r in start..n {
            let yr = y[r];
            let row = &mut qt.row_mut(r)[start..];
            for (q, &vc) in row.iter_mut().zip(v) {
                *q -= yr * vc;
            }
        }
    }
    qt
}

/// Eigenvalues and eigenvectors of a Hermitian matrix: Householder
/// tridiagonalization followed by implicit QL.
pub fn eigh<T: Scalar>(m: &HermitianMatrix<T>) -> Result<EigenDecomposition<T>> {
    let n = m.dim();
    let tri = tridiagonalize(m, true);
    let mut zt = accumulate_qt(n, &tri.reflectors);
    let (mut d, mut e) = (tri.diag, tri.off);
    implicit_ql(&mut d, &mut e, Some(&mut zt))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| zt[(order[c], r)]);
    Ok(EigenDecomposition { values, vectors })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh<T: Scalar>(m: &HermitianMatrix<T>) -> Result<Vec<f64>> {
    let tri = tridiagonalize(m, false);
    let (mut d, mut e) = (tri.diag, tri.off);
    implicit_ql::<T>(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Orthogonal projection onto the eigenvectors with eigenvalue strictly
/// below `lambda`. Rejects `lambda` within `gap_tol` of the spectrum.
pub fn spectral_projection<T: Scalar>(
    m: &HermitianMatrix<T>,
    lambda: f64,
    gap_tol: f64,
) -> Result<HermitianMatrix<T>> {
    let eig = eigh(m)?;
    projection_from_eigen(&eig, lambda, gap_tol)
}

pub(crate) fn check_off_spectrum(values: &[f64], lambda: f64, gap_tol: f64) -> Result<()> {
    if let Some(&near) = values
        .iter()
        .min_by(|a, b| (*a - lambda).abs().total_cmp(&(*b - lambda).abs()))
    {
        if (near - lambda).abs() <= gap_tol {
            return Err(Error::OnSpectrum {
                lambda,
                eigenvalue: near,
                tol: gap_tol,
            });
        }
    }
    Ok(())
}

pub(crate) fn projection_from_eigen<T: Scalar>(
    eig: &EigenDecomposition<T>,
    lambda: f64,
    gap_tol: f64,
) -> Result<HermitianMatrix<T>> {
    check_off_spectrum(&eig.values, lambda, gap_tol)?;
    let p = eig.apply_function(|x| if x < lambda { 1.0 } else { 0.0 });
    Ok(HermitianMatrix::from_matrix_unchecked(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ComplexMatrix, RealMatrix};
    use crate::random::SeededRng;
    use num_complex::Complex64;

    #[test]
    fn identity_eigenvalues() {
        let m = HermitianMatrix::<Complex64>::from_matrix_unchecked(ComplexMatrix::identity(4));
        let e = eigh(&m).unwrap();
        assert!(e.values.iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn diagonal_reorders() {
        let m = HermitianMatrix::<f64>::from_real_diagonal(&[3.0, 1.0, 2.0]);
        assert_eq!(eigh(&m).unwrap().values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn random_hermitian_reconstruction() {
        let mut rng = SeededRng::new(7, 0);
        let m = rng.hermitian(20);
        let e = eigh(&m).unwrap();
        let recon = e.apply_function(|x| x);
        let resid = recon.try_sub(m.matrix()).unwrap().norm_2();
        let scale = m.matrix().norm_2().max(1.0);
        assert!(resid <= 1e-10 * scale, "residual {resid}");
        let gram = e.vectors.adjoint().matmul(&e.vectors).unwrap();
        let defect = gram.try_sub(&ComplexMatrix::identity(20)).unwrap().max_abs();
        assert!(defect < 1e-10);
        assert!(e.max_residual(&m) <= 1e-10 * scale);
    }

    #[test]
    fn eigvalsh_matches_eigh_bitwise() {
        let mut rng = SeededRng::new(11, 0);
        let m = rng.hermitian(15);
        assert_eq!(eigvalsh(&m).unwrap(), eigvalsh(&m).unwrap());
        let a = eigvalsh(&m).unwrap();
        let b = eigh(&m).unwrap().values;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_examples() {
        let m = HermitianMatrix::<f64>::from_real_diagonal(&[0.0, 2.0]);
        let p = spectral_projection(&m, 1.0, GAP_TOL).unwrap();
        assert_eq!(p.matrix(), &RealMatrix::from_diagonal(&[1.0, 0.0]));
        let p0 = spectral_projection(&m, -5.0, GAP_TOL).unwrap();
        assert_eq!(p0.matrix().max_abs(), 0.0);
        assert!(matches!(
            spectral_projection(&m, 2.0, GAP_TOL),
            Err(Error::OnSpectrum { .. })
        ));
    }

    #[test]
    fn projection_rank_matches_count() {
        let mut rng = SeededRng::new(3, 0);
        let m = rng.hermitian(18);
        let vals = eigvalsh(&m).unwrap();
        let mid = 0.5 * (vals[8] + vals[9]);
        let p = spectral_projection(&m, mid, GAP_TOL).unwrap();
        assert!((p.trace() - 9.0).abs() < 1e-10);
        let p2 = p.matrix().matmul(p.matrix()).unwrap();
        assert!(p2.try_sub(p.matrix()).unwrap().max_abs() < 1e-10);
    }
}
