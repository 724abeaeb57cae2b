//! Compression of the infinite-volume difference `E_A(λ) - E_B(λ)` to the
//! window of sites `-ℓ..=ℓ`.
//!
//! Below `λ` the spectrum of `B` consists of the bound states and the part
//! of the band with momenta `k' ∈ (k_λ, π)`, so
//!
//! `E_B(λ) = Σ_{E_b<λ} ψ_b ψ_b* + ∫_{k_λ}^{π} dk'/2π (ψ₊ψ₊* + ψ₋ψ₋*)`.
//!
//! Outside the support hull the generalized eigenfunctions are plane waves,
//! and the difference with the free kernel reduces to one-dimensional
//! Hankel and Toeplitz integrals in `n + m` and `n - m`. Only rows inside
//! the hull need the full eigenfunctions.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{HermitianMatrix, RealMatrix};
use crate::quadrature::GaussLegendre;
use crate::scattering::transfer::s_from_momentum;
use crate::scattering::{bound_states, momentum, scattering_states, LatticePotential};

const GL_NODES: usize = 16;

/// Window compression of `E_A(λ) - E_B(λ)`.
#[derive(Debug, Clone)]
pub struct WindowDifference {
    pub ell: usize,
    pub lambda: f64,
    pub matrix: HermitianMatrix<f64>,
    /// Bound-state energies taken into account (those counted on the
    /// relevant side of `λ`).
    pub bound_energies: Vec<f64>,
    /// Quadrature nodes used for the band integral.
    pub quadrature_nodes: usize,
}

/// Normalized bound states restricted to the window, with their energies.
pub(crate) fn bound_state_vectors(pot: &LatticePotential, ell: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    if pot.is_zero() {
        return Ok(Vec::new());
    }
    let probe = bound_states(pot, pot.min_box().max(100))?;
    let mut out = Vec::new();
    for state in &probe.states {
        let kappa = (0.5 * state.energy.abs()).acosh();
        let pad = (40.0 / kappa).ceil() as usize + 10;
        let big = ell.max(pot.min_box()) + pad;
        let op = pot.box_operator(big)?;
        let energy = op
            .eigenvalues()?
            .into_iter()
            .min_by(|a, b| (a - state.energy).abs().total_cmp(&(b - state.energy).abs()))
            .expect("nonempty box");
        let v = op.inverse_iteration(energy)?;
        let start = big - ell;
        out.push((energy, v[start..start + 2 * ell + 1].to_vec()));
    }
    Ok(out)
}

/// Free kernel of `E_A(λ)` on the window for `λ` inside the band:
/// `δ_{nm} - sin(k(n-m)) / (π(n-m))`, diagonal `1 - k/π`.
pub fn free_projection_kernel(k: f64, d: i64) -> f64 {
    if d == 0 {
        1.0 - k / PI
    } else {
        -(k * d as f64).sin() / (PI * d as f64)
    }
}

/// Quadrature rule on `[k_λ, π]` resolving oscillations up to frequency
/// `max_freq` with about one period per 16-point panel.
fn band_rule(k: f64, max_freq: usize) -> Vec<(f64, f64)> {
    let length = PI - k;
    let panels = ((max_freq as f64 * length) / (2.0 * PI)).ceil() as usize + 2;
    GaussLegendre::new(GL_NODES).composite(k, PI, panels)
}

/// `χ(E_A(λ) - E_B(λ))χ` for the window `χ` of sites `-ell..=ell`.
pub fn window_difference(pot: &LatticePotential, lambda: f64, ell: usize) -> Result<WindowDifference> {
    let (a, b) = pot.hull();
    let min = a.unsigned_abs().max(b.unsigned_abs()) as usize;
    if ell < min {
        return Err(Error::BoxTooSmall { l: ell, min });
    }
    if lambda.abs() == 2.0 || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "λ = {lambda} at a band edge; the projection difference is not defined there"
        )));
    }
    let n = 2 * ell + 1;
    let li = ell as i64;
    let bound = bound_state_vectors(pot, ell)?;
    let mut d = RealMatrix::zeros(n, n);
    let mut used = Vec::new();
    let mut nodes = 0;

    if lambda.abs() > 2.0 {
        // Below the band E_A = 0 and E_B = bound states below λ; above it
        // E_A = I and E_B = I - bound states above λ.
        let sign = if lambda < -2.0 { -1.0 } else { 1.0 };
        for (e, v) in &bound {
            let counted = if lambda < -2.0 { *e < lambda } else { *e > lambda };
            if counted {
                add_outer(&mut d, v, sign);
                used.push(*e);
            }
        }
    } else {
        let k_lam = momentum(lambda)?;
        let (n0, n1) = if pot.is_zero() { (0, 0) } else { pot.hull() };
        let right0 = n1.max(n0 + 1);
        let span = li + n0.abs().max(n1.abs());
        let rule = band_rule(k_lam, 2 * span as usize + 4);
        nodes = rule.len();

        // Hankel parts: hr over s = n + m ∈ [2·right0, 2ℓ], hl over
        // s ∈ [-2ℓ, 2·n0]; Toeplitz part g over d = n - m ∈ [right0 - n0, 2ℓ].
        let hr_lo = 2 * right0;
        let hl_lo = -2 * li;
        let g_lo = right0 - n0;
        let hr_len = (2 * li - hr_lo + 1).max(0) as usize;
        let hl_len = (2 * n0 - hl_lo + 1).max(0) as usize;
        let g_len = (2 * li - g_lo + 1).max(0) as usize;
        let mut hr = vec![0.0; hr_len];
        let mut hl = vec![0.0; hl_len];
        let mut g = vec![Complex64::new(0.0, 0.0); g_len];
        let interior: Vec<i64> = (n0 + 1..n1).collect();
        let mut inner = vec![vec![0.0; n]; interior.len()];

        if !pot.is_zero() {
            for &(k, wq) in &rule {
                let s = s_from_momentum(pot, k)?;
                let (t, r_right, r_left, tp) = (s[(0, 0)], s[(1, 0)], s[(0, 1)], s[(1, 1)]);
                let step = Complex64::from_polar(1.0, -k);
                let mut ph = Complex64::from_polar(1.0, -k * hr_lo as f64);
                for h in hr.iter_mut() {
                    *h += wq / PI * (r_right * ph).re;
                    ph *= step;
                }
                let step = Complex64::from_polar(1.0, k);
                let mut ph = Complex64::from_polar(1.0, k * hl_lo as f64);
                for h in hl.iter_mut() {
                    *h += wq / PI * (r_left * ph).re;
                    ph *= step;
                }
                let mut ph = Complex64::from_polar(1.0, k * g_lo as f64);
                let a = t.conj() - 1.0;
                let b = tp - 1.0;
                for gd in g.iter_mut() {
                    *gd += wq / (2.0 * PI) * (a * ph + b * ph.conj());
                    ph *= step;
                }
                if !interior.is_empty() {
                    let st = scattering_states(pot, k, -li, li)?;
                    for (row, &site) in inner.iter_mut().zip(&interior) {
                        let i = (site + li) as usize;
                        let (p, m) = (st.plus[i], st.minus[i]);
                        for (c, out) in row.iter_mut().enumerate() {
                            *out += wq / (2.0 * PI) * (p * st.plus[c].conj() + m * st.minus[c].conj()).re;
                        }
                    }
                }
            }
        }

        // Assemble K = E_B - E_A (band part), then D = -K - bound states below λ.
        for i in 0..n {
            let ni = i as i64 - li;
            for j in 0..=i {
                let nj = j as i64 - li;
                let kval = if ni >= right0 && nj >= right0 {
                    hr[(ni + nj - hr_lo) as usize]
                } else if ni <= n0 && nj <= n0 {
                    hl[(ni + nj - hl_lo) as usize]
                } else if ni >= right0 && nj <= n0 {
                    g[(ni - nj - g_lo) as usize].re
                } else if nj >= right0 && ni <= n0 {
                    g[(nj - ni - g_lo) as usize].re
                } else {
                    continue;
                };
                d[(i, j)] = -kval;
                d[(j, i)] = -kval;
            }
        }
        for (row, &site) in inner.iter().zip(&interior) {
            let i = (site + li) as usize;
            for (c, &val) in row.iter().enumerate() {
                let kval = val - free_projection_kernel(k_lam, site - (c as i64 - li));
                d[(i, c)] = -kval;
                d[(c, i)] = -kval;
            }
        }
        for (e, v) in &bound {
            if *e < lambda {
                add_outer(&mut d, v, -1.0);
                used.push(*e);
            }
        }
    }
    Ok(WindowDifference {
        ell,
        lambda,
        matrix: HermitianMatrix::symmetrized(&d)?,
        bound_energies: used,
        quadrature_nodes: nodes,
    })
}

fn add_outer(d: &mut RealMatrix, v: &[f64], sign: f64) {
    let n = v.len();
    for i in 0..n {
        let a = sign * v[i];
        if a == 0.0 {
            continue;
        }
        let row = d.row_mut(i);
        for (x, &b) in row.iter_mut().zip(v) {
            *x += a * b;
        }
    }
}
