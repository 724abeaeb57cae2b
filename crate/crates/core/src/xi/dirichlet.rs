use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Verdict, COLLISION_SHIFT, COLLISION_TOL};
use crate::error::{Error, Result};
use crate::linalg::{eigvalsh, HermitianMatrix, RealMatrix};
use crate::scattering::{check_band, s_matrix, s_matrix_stationary, LatticePotential, BAND_MARGIN};

/// Spectrum of `D_L = E_{B,L}(λ) - E_{A,L}(λ)` for Dirichlet boxes on
/// `-L..=L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletSpectrum {
    pub l: usize,
    pub lambda: f64,
    /// Probe actually used; differs from `lambda` after a collision shift.
    pub lambda_used: f64,
    pub shifted: bool,
    /// `N_{A,L}(λ)`, `N_{B,L}(λ)`.
    pub count_a: usize,
    pub count_b: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

impl DirichletSpectrum {
    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

fn free_eigenvalue(j: usize, n: usize) -> f64 {
    2.0 * (PI * j as f64 / (n + 1) as f64).cos()
}

fn distance_to(values: &[f64], x: f64) -> f64 {
    values.iter().fold(f64::INFINITY, |m, v| m.min((v - x).abs()))
}

/// Eigenvalues of `D_L`. A probe within `1e-9` of a box eigenvalue is moved
/// up by `1e-6` (repeatedly if needed) and the shift is recorded.
pub fn truncated_projection_difference(pot: &LatticePotential, lambda: f64, l: usize) -> Result<DirichletSpectrum> {
    let min = pot.min_box();
    if l < min {
        return Err(Error::BoxTooSmall { l, min });
    }
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("λ = {lambda} is not finite")));
    }
    let n = 2 * l + 1;
    let (eb, vb) = pot.box_operator(l)?.eigenpairs()?;
    let ea: Vec<f64> = (1..=n).map(|j| free_eigenvalue(j, n)).collect();

    let mut probe = lambda;
    for _ in 0..8 {
        if distance_to(&ea, probe) > COLLISION_TOL && distance_to(&eb, probe) > COLLISION_TOL {
            break;
        }
        probe += COLLISION_SHIFT;
    }
    if distance_to(&ea, probe) <= COLLISION_TOL || distance_to(&eb, probe) <= COLLISION_TOL {
        return Err(Error::OnSpectrum {
            lambda,
            eigenvalue: probe,
            tol: COLLISION_TOL,
        });
    }

    let mut d = RealMatrix::zeros(n, n);
    let count_b = eb.iter().filter(|&&e| e < probe).count();
    for r in 0..count_b {
        add_outer(&mut d, vb.row(r), 1.0);
    }
    // Free box: φ_j(i) = √(2/(n+1)) sin(πj(i+1)/(n+1)), eigenvalue 2cos(πj/(n+1)).
    let count_a = ea.iter().filter(|&&e| e < probe).count();
    let norm = (2.0 / (n + 1) as f64).sqrt();
    let mut phi = vec![0.0; n];
    for j in (n - count_a + 1)..=n {
        for (i, x) in phi.iter_mut().enumerate() {
            *x = norm * (PI * (j * (i + 1)) as f64 / (n + 1) as f64).sin();
        }
        add_outer(&mut d, &phi, -1.0);
    }
    for i in 0..n {
        for j in 0..i {
            d[(j, i)] = d[(i, j)];
        }
    }
    let eigenvalues = eigvalsh(&HermitianMatrix::from_matrix_unchecked(d))?;
    Ok(DirichletSpectrum {
        l,
        lambda,
        lambda_used: probe,
        shifted: probe != lambda,
        count_a,
        count_b,
        eigenvalues,
    })
}

fn add_outer(d: &mut RealMatrix, v: &[f64], sign: f64) {
    // Lower triangle only.
    for i in 0..v.len() {
        let a = sign * v[i];
        let row = &mut d.row_mut(i)[..=i];
        for (x, &b) in row.iter_mut().zip(v) {
            *x += a * b;
        }
    }
}

/// Hausdorff distance between `{μ : |μ| ≤ α + δ}` and `[-α, α]`.
/// Infinite when no eigenvalue is selected.
pub fn hausdorff_defect(eigenvalues: &[f64], alpha: f64, delta: f64) -> f64 {
    let mut sel: Vec<f64> = eigenvalues.iter().copied().filter(|m| m.abs() <= alpha + delta).collect();
    if sel.is_empty() {
        return f64::INFINITY;
    }
    sel.sort_by(f64::total_cmp);
    let excess = sel.iter().fold(0.0_f64, |m, x| m.max(x.abs() - alpha));
    let mut pts: Vec<f64> = sel.iter().map(|x| x.clamp(-alpha, alpha)).collect();
    pts.push(-alpha);
    pts.push(alpha);
    pts.sort_by(f64::total_cmp);
    let half_gap = pts.windows(2).fold(0.0_f64, |m, w| m.max(0.5 * (w[1] - w[0])));
    let ends = distance_to(&sel, -alpha).max(distance_to(&sel, alpha));
    excess.max(half_gap).max(ends)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm0Point {
    pub l: usize,
    pub lambda_used: f64,
    pub shifted: bool,
    pub count_a: usize,
    pub count_b: usize,
    pub selected: usize,
    pub hausdorff_defect: f64,
    pub spectrum: Vec<f64>,
}

/// Essential-spectrum check of `D_L` against `[-α(λ), α(λ)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm0Report {
    pub lambda: f64,
    /// From the transfer route.
    pub alpha: f64,
    /// From the stationary route.
    pub alpha_stationary: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub points: Vec<Thm0Point>,
    pub verdict: Verdict,
}

/// Defect tolerance at the largest box.
pub const THM0_TOL: f64 = 0.05;

/// Runs the sweep in the given order. Pass: defect at the last `L` within
/// `0.05` and non-increasing along the sweep.
pub fn verify_thm0(pot: &LatticePotential, lambda: f64, l_sweep: &[usize]) -> Result<Thm0Report> {
    check_band(lambda, BAND_MARGIN)?;
    if l_sweep.is_empty() {
        return Err(Error::InvalidArgument("empty L sweep".into()));
    }
    let alpha = s_matrix(pot, lambda)?.alpha;
    let s2 = s_matrix_stationary(pot, lambda)?;
    let alpha_stationary = super::verify::alpha_from(&s2);
    let delta = (1.0 - alpha) / 4.0;
    let mut points = Vec::with_capacity(l_sweep.len());
    for &l in l_sweep {
        let sp = truncated_projection_difference(pot, lambda, l)?;
        let selected = sp.eigenvalues.iter().filter(|m| m.abs() <= alpha + delta).count();
        points.push(Thm0Point {
            l,
            lambda_used: sp.lambda_used,
            shifted: sp.shifted,
            count_a: sp.count_a,
            count_b: sp.count_b,
            selected,
            hausdorff_defect: hausdorff_defect(&sp.eigenvalues, alpha, delta),
            spectrum: sp.eigenvalues,
        });
    }
    let monotone = points.windows(2).all(|w| w[1].hausdorff_defect <= w[0].hausdorff_defect);
    let last = points.last().expect("nonempty").hausdorff_defect;
    let routes_agree = (alpha - alpha_stationary).abs() <= 1e-8;
    let verdict = if !routes_agree {
        Verdict::Indeterminate(format!("α routes disagree: {alpha} vs {alpha_stationary}"))
    } else {
        Verdict::from_bool(monotone && last <= THM0_TOL)
    };
    Ok(Thm0Report {
        lambda,
        alpha,
        alpha_stationary,
        delta,
        tolerance: THM0_TOL,
        points,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_potential_gives_zero_difference() {
        let sp = truncated_projection_difference(&LatticePotential::zero(), 0.3, 30).unwrap();
        assert!(sp.eigenvalues.iter().all(|m| m.abs() < 1e-12));
        assert_eq!(sp.count_a, sp.count_b);
    }

    #[test]
    fn below_band_trace_is_count_difference() {
        let pot = LatticePotential::new(vec![-1, 1], vec![-2.5, 0.4]).unwrap();
        let sp = truncated_projection_difference(&pot, -2.4, 40).unwrap();
        assert_eq!(sp.count_a, 0);
        assert_eq!(sp.count_b, 1);
        assert!((sp.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spectrum_inside_unit_interval_and_symmetric() {
        let pot = LatticePotential::single(0, 2.0);
        let sp = truncated_projection_difference(&pot, 0.5, 60).unwrap();
        assert!(sp.eigenvalues.iter().all(|m| m.abs() <= 1.0 + 1e-10));
        let check = crate::projections::check_symmetry(&sp.eigenvalues, 1e-8);
        assert!(check.symmetric, "{check:?}");
    }

    #[test]
    fn collision_is_shifted() {
        // 2cos(π j/(n+1)) with n = 21, j = 6 lies exactly in the free box spectrum.
        let pot = LatticePotential::single(0, 0.5);
        let hit = free_eigenvalue(6, 21);
        let sp = truncated_projection_difference(&pot, hit, 10).unwrap();
        assert!(sp.shifted);
        assert!((sp.lambda_used - hit - COLLISION_SHIFT).abs() < 1e-15);
    }

    #[test]
    fn defect_examples() {
        assert_eq!(hausdorff_defect(&[0.0; 5], 0.0, 0.1), 0.0);
        let grid: Vec<f64> = (0..=10).map(|i| -0.5 + 0.1 * i as f64).collect();
        assert!((hausdorff_defect(&grid, 0.5, 0.1) - 0.05).abs() < 1e-12);
        assert!((hausdorff_defect(&[0.55, -0.5], 0.5, 0.1) - 0.5).abs() < 1e-12);
        assert!(hausdorff_defect(&[0.9], 0.5, 0.1).is_infinite());
    }

    #[test]
    fn weak_potential_stays_near_zero() {
        let pot = LatticePotential::single(0, 1e-3);
        let r = verify_thm0(&pot, 0.5, &[60]).unwrap();
        let spec = &r.points[0].spectrum;
        assert!(spec.iter().all(|m| m.abs() <= r.alpha + 0.05));
    }
}
