//! Pairs of orthogonal projections: spectrum of the difference, the
//! Fredholm index, and the finite-dimensional index function Ξ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigvalsh, spectral_projection, HermitianMatrix, Matrix, Scalar, GAP_TOL};

/// Default absolute window around ±1 used to detect the kernels of `P-Q∓I`.
pub const DEFAULT_EIG_TOL: f64 = 1e-6;

/// Tolerance on `P² = P` and `P* = P`.
pub const PROJECTION_TOL: f64 = 1e-8;

/// Slack allowed on `σ(P-Q) ⊂ [-1, 1]`.
const SPECTRUM_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPair<T = num_complex::Complex64> {
    pub p: HermitianMatrix<T>,
    pub q: HermitianMatrix<T>,
    /// Eigenvalues of `P - Q`, ascending.
    pub difference_spectrum: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexResult {
    pub index: i64,
    pub dim_ker_plus: usize,
    pub dim_ker_minus: usize,
    /// Distance from the remaining spectrum to `{-1, +1}` (1 when empty).
    pub gap_to_one: f64,
}

/// `(||P² - P||_max, ||P - P*||_max)`.
pub fn projection_defects<T: Scalar>(p: &Matrix<T>) -> (f64, f64) {
    let sq = p.matmul(p).expect("square");
    let idem = sq.try_sub(p).expect("same shape").max_abs();
    let adj = p.try_sub(&p.adjoint()).expect("same shape").max_abs();
    (idem, adj)
}

fn check_projection<T: Scalar>(p: &HermitianMatrix<T>) -> Result<()> {
    let (idempotency, adjointness) = projection_defects(p.matrix());
    if idempotency > PROJECTION_TOL || adjointness > PROJECTION_TOL {
        return Err(Error::NotProjection {
            idempotency,
            adjointness,
        });
    }
    Ok(())
}

/// Validates both projections and diagonalizes `P - Q`.
pub fn pair_spectrum<T: Scalar>(
    p: &HermitianMatrix<T>,
    q: &HermitianMatrix<T>,
) -> Result<ProjectionPair<T>> {
    check_projection(p)?;
    check_projection(q)?;
    let diff = p.try_sub(q)?;
    let mut spectrum = eigvalsh(&diff)?;
    for mu in &mut spectrum {
        if mu.abs() > 1.0 + SPECTRUM_SLACK {
            return Err(Error::NotProjection {
                idempotency: mu.abs() - 1.0,
                adjointness: 0.0,
            });
        }
        *mu = mu.clamp(-1.0, 1.0);
    }
    Ok(ProjectionPair {
        p: p.clone(),
        q: q.clone(),
        difference_spectrum: spectrum,
    })
}

/// Index from the spectrum of `P - Q`, counting eigenvalues within `eig_tol`
/// of ±1. Requires the separation band `[1-2·eig_tol, 1-eig_tol)` (and its
/// mirror) to be empty.
pub fn index_from_spectrum(spectrum: &[f64], eig_tol: f64) -> Result<IndexResult> {
    if !(eig_tol > 0.0 && eig_tol < 0.25) {
        return Err(Error::InvalidArgument(format!(
            "eig_tol = {eig_tol} must lie in (0, 0.25)"
        )));
    }
    let mut plus = 0;
    let mut minus = 0;
    let mut gap = f64::INFINITY;
    for &mu in spectrum {
        let in_plus_band = mu >= 1.0 - 2.0 * eig_tol && mu < 1.0 - eig_tol;
        let in_minus_band = mu <= -1.0 + 2.0 * eig_tol && mu > -1.0 + eig_tol;
        if in_plus_band || in_minus_band {
            return Err(Error::NonFredholm {
                eigenvalue: mu,
                eig_tol,
            });
        }
        if mu >= 1.0 - eig_tol {
            plus += 1;
        } else if mu <= -1.0 + eig_tol {
            minus += 1;
        } else {
            gap = gap.min(1.0 - mu.abs());
        }
    }
    Ok(IndexResult {
        index: plus as i64 - minus as i64,
        dim_ker_plus: plus,
        dim_ker_minus: minus,
        gap_to_one: gap.min(1.0),
    })
}

pub fn fredholm_index<T: Scalar>(
    p: &HermitianMatrix<T>,
    q: &HermitianMatrix<T>,
    eig_tol: f64,
) -> Result<IndexResult> {
    let pair = pair_spectrum(p, q)?;
    index_from_spectrum(&pair.difference_spectrum, eig_tol)
}

/// `|Tr(P - Q) - index(P, Q)|`.
pub fn trace_identity_check<T: Scalar>(
    p: &HermitianMatrix<T>,
    q: &HermitianMatrix<T>,
) -> Result<f64> {
    let idx = fredholm_index(p, q, DEFAULT_EIG_TOL)?;
    Ok((p.trace() - q.trace() - idx.index as f64).abs())
}

/// Outcome of the `μ ↔ -μ` multiplicity test on `σ(P-Q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryCheck {
    pub symmetric: bool,
    pub positive: usize,
    pub negative: usize,
    /// Largest `|μ_i + μ'_i|` over matched pairs.
    pub max_mismatch: f64,
}

/// Checks that eigenvalues with `tau < |μ| < 1 - tau` come in `±μ` pairs
/// of equal multiplicity (multiplicities resolved within `tau`).
pub fn check_symmetry(spectrum: &[f64], tau: f64) -> SymmetryCheck {
    let inside = |m: f64| m.abs() > tau && m.abs() < 1.0 - tau;
    let mut pos: Vec<f64> = spectrum.iter().copied().filter(|&m| m > 0.0 && inside(m)).collect();
    let mut neg: Vec<f64> = spectrum
        .iter()
        .filter(|&&m| m < 0.0 && inside(m))
        .map(|m| -m)
        .collect();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let max_mismatch = pos
        .iter()
        .zip(&neg)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    SymmetryCheck {
        symmetric: pos.len() == neg.len() && max_mismatch <= tau,
        positive: pos.len(),
        negative: neg.len(),
        max_mismatch,
    }
}

/// Ξ(λ) in finite dimension: the index of `(E_A(λ), E_B(λ))`.
pub fn xi_finite<T: Scalar>(a: &HermitianMatrix<T>, b: &HermitianMatrix<T>, lambda: f64) -> Result<i64> {
    let ea = spectral_projection(a, lambda, GAP_TOL)?;
    let eb = spectral_projection(b, lambda, GAP_TOL)?;
    Ok(fredholm_index(&ea, &eb, DEFAULT_EIG_TOL)?.index)
}
