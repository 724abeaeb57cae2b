use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::window::window_difference;
use super::{SweepPoint, Verdict, XiEstimate, ALPHA_MARGIN, COLLISION_TOL, DEFAULT_L_SWEEP};
use crate::error::{Error, Result};
use crate::linalg::{eigvalsh, ComplexMatrix};
use crate::scattering::transfer::alpha_of;
use crate::scattering::{bound_states, check_band, free_box, s_matrix, LatticePotential, BAND_MARGIN};
use crate::specflow::{naive_crossing_count, FlowOptions, FlowResult, UnitaryFamily};

/// Detection windows used in the gaps, where there is no `α`.
pub const GAP_DELTA_SWEEP: [f64; 2] = [0.1, 0.25];

/// Smallest box for the smoothed SSF.
pub const SSF_MIN_L: usize = 400;

/// Defect tolerance for the Birman–Krein comparison.
pub const BK_TOL: f64 = 0.05;

pub(crate) fn alpha_from(s: &ComplexMatrix) -> f64 {
    alpha_of(s).min(1.0)
}

fn bound_energies(pot: &LatticePotential) -> Result<Vec<f64>> {
    if pot.is_zero() {
        return Ok(Vec::new());
    }
    Ok(bound_states(pot, pot.min_box().max(100))?.energies())
}

/// `Ξ(λ)` from the window compressions of `E_A(λ) - E_B(λ)`, counting
/// eigenvalues in `[1 - δ, 1]` minus those in `[-1, -1 + δ]` for every
/// `(L, δ)` in the sweep.
///
/// Inside the band the default windows are `(1-α)/4` and `(1-α)/2`, and
/// every `δ` must stay below `1 - α`; `α` itself must be below `1 - 0.05`.
/// In the gaps the windows default to `0.1` and `0.25`.
pub fn xi_truncated(
    pot: &LatticePotential,
    lambda: f64,
    l_sweep: &[usize],
    delta_sweep: Option<&[f64]>,
) -> Result<XiEstimate> {
    if l_sweep.is_empty() {
        return Err(Error::InvalidArgument("empty L sweep".into()));
    }
    let min = pot.min_box();
    if let Some(&l) = l_sweep.iter().find(|&&l| l < min) {
        return Err(Error::BoxTooSmall { l, min });
    }
    let in_band = lambda.abs() < 2.0;
    let alpha = if in_band {
        check_band(lambda, BAND_MARGIN)?;
        let a = s_matrix(pot, lambda)?.alpha;
        if a >= 1.0 - ALPHA_MARGIN {
            return Err(Error::PredictedNonFredholm {
                lambda,
                alpha: a,
                limit: 1.0 - ALPHA_MARGIN,
            });
        }
        Some(a)
    } else {
        if let Some(e) = bound_energies(pot)?.into_iter().find(|e| (e - lambda).abs() <= COLLISION_TOL) {
            return Err(Error::OnSpectrum {
                lambda,
                eigenvalue: e,
                tol: COLLISION_TOL,
            });
        }
        None
    };
    let deltas: Vec<f64> = match (delta_sweep, alpha) {
        (Some(d), _) => d.to_vec(),
        (None, Some(a)) => vec![(1.0 - a) / 4.0, (1.0 - a) / 2.0],
        (None, None) => GAP_DELTA_SWEEP.to_vec(),
    };
    if deltas.is_empty() {
        return Err(Error::InvalidArgument("empty δ sweep".into()));
    }
    let limit = 1.0 - alpha.unwrap_or(0.0);
    if let Some(&d) = deltas.iter().find(|&&d| !(d > 0.0 && d < limit)) {
        return Err(match alpha {
            Some(a) if d > 0.0 && d < 1.0 => Error::PredictedNonFredholm {
                lambda,
                alpha: a,
                limit: 1.0 - d,
            },
            _ => Error::InvalidArgument(format!("δ = {d} must lie in (0, {limit})")),
        });
    }

    let mut sweep = Vec::with_capacity(l_sweep.len() * deltas.len());
    for &l in l_sweep {
        let w = window_difference(pot, lambda, l)?;
        let mu = eigvalsh(&w.matrix)?;
        for &delta in &deltas {
            let plus = mu.iter().filter(|&&m| m >= 1.0 - delta).count();
            let minus = mu.iter().filter(|&&m| m <= -1.0 + delta).count();
            let bulk_edge = mu
                .iter()
                .map(|m| m.abs())
                .filter(|&m| m < 1.0 - delta)
                .fold(0.0, f64::max);
            sweep.push(SweepPoint {
                l,
                delta,
                plus,
                minus,
                value: plus as i64 - minus as i64,
                bulk_edge,
            });
        }
    }
    let value = sweep[0].value;
    let stable = sweep.iter().all(|p| p.value == value);
    Ok(XiEstimate {
        lambda,
        alpha,
        value,
        sweep,
        stable,
    })
}

/// Settings for [`verify_e1`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct E1Options {
    pub l_sweep: Vec<usize>,
    pub delta_sweep: Option<Vec<f64>>,
    pub flow: FlowOptions,
    /// Endpoints need `α(λ) < 1 - alpha_margin`.
    pub alpha_margin: f64,
}

impl Default for E1Options {
    fn default() -> Self {
        Self {
            l_sweep: DEFAULT_L_SWEEP.to_vec(),
            delta_sweep: None,
            flow: FlowOptions::default(),
            alpha_margin: ALPHA_MARGIN,
        }
    }
}

/// Jump of the truncated index against the flow of `S` through `-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct E1Report {
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub xi1: Option<XiEstimate>,
    pub xi2: Option<XiEstimate>,
    pub delta_xi: Option<i64>,
    pub flow: Option<FlowResult>,
    /// Crossing count straight from the node phases, for comparison.
    pub naive_flow: Option<i64>,
    pub verdict: Verdict,
}

/// Compares `Ξ(λ₂) - Ξ(λ₁)` with `-flow(-1)` of `λ ↦ S(λ)` on `[λ₁, λ₂]`.
///
/// Both endpoints must lie in the band. A tripped gate (endpoint too close
/// to `-1 ∈ σ(S)`, an unstable index, a flow failure) gives an
/// `Indeterminate` verdict naming it.
pub fn verify_e1(pot: &LatticePotential, lambda1: f64, lambda2: f64, opts: &E1Options) -> Result<E1Report> {
    check_band(lambda1, BAND_MARGIN)?;
    check_band(lambda2, BAND_MARGIN)?;
    if !(lambda1 < lambda2) {
        return Err(Error::InvalidArgument(format!("need λ₁ < λ₂ (got {lambda1}, {lambda2})")));
    }
    let alpha1 = s_matrix(pot, lambda1)?.alpha;
    let alpha2 = s_matrix(pot, lambda2)?.alpha;
    let mut report = E1Report {
        lambda1,
        lambda2,
        alpha1,
        alpha2,
        xi1: None,
        xi2: None,
        delta_xi: None,
        flow: None,
        naive_flow: None,
        verdict: Verdict::Pass,
    };
    let limit = 1.0 - opts.alpha_margin;
    for (name, a) in [("λ₁", alpha1), ("λ₂", alpha2)] {
        if a >= limit {
            report.verdict = Verdict::Indeterminate(format!("hypothesis: α({name}) = {a} not below {limit}"));
            return Ok(report);
        }
    }

    let mut family = UnitaryFamily::new(lambda1, lambda2, opts.flow.initial_nodes, |l| Ok(s_matrix(pot, l)?.s))?;
    match family.spectral_flow(PI, &opts.flow) {
        Ok(f) => {
            report.naive_flow = Some(naive_crossing_count(family.sample(), PI));
            report.flow = Some(f);
        }
        Err(e) => {
            report.verdict = Verdict::Indeterminate(format!("flow: {e}"));
            return Ok(report);
        }
    }

    let deltas = opts.delta_sweep.as_deref();
    for (name, lambda) in [("λ₁", lambda1), ("λ₂", lambda2)] {
        match xi_truncated(pot, lambda, &opts.l_sweep, deltas) {
            Ok(x) => {
                if name == "λ₁" {
                    report.xi1 = Some(x);
                } else {
                    report.xi2 = Some(x);
                }
            }
            Err(e) => {
                report.verdict = Verdict::Indeterminate(format!("Ξ({name}): {e}"));
                return Ok(report);
            }
        }
    }
    let (x1, x2) = (report.xi1.as_ref().expect("set"), report.xi2.as_ref().expect("set"));
    report.delta_xi = Some(x2.value - x1.value);
    report.verdict = if !x1.stable {
        Verdict::Indeterminate("Ξ(λ₁) unstable across the sweep".into())
    } else if !x2.stable {
        Verdict::Indeterminate("Ξ(λ₂) unstable across the sweep".into())
    } else {
        let flow = report.flow.as_ref().expect("set").flow;
        Verdict::from_bool(x2.value - x1.value == -flow)
    };
    Ok(report)
}

/// Truncated index in a spectral gap against direct bound-state counting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub lambda1: f64,
    pub lambda2: f64,
    pub bound_energies: Vec<f64>,
    pub xi1: XiEstimate,
    pub xi2: XiEstimate,
    pub expected1: i64,
    pub expected2: i64,
    pub delta_xi: i64,
    pub verdict: Verdict,
}

/// Exact value of the index outside the band: minus the bound states
/// below `λ` under the band, plus those above `λ` over it.
fn gap_index(energies: &[f64], lambda: f64) -> i64 {
    if lambda < -2.0 {
        -(energies.iter().filter(|&&e| e < lambda).count() as i64)
    } else {
        energies.iter().filter(|&&e| e > lambda).count() as i64
    }
}

/// Control run for two energies outside the band, where `Ξ` reduces to
/// counting bound states.
pub fn verify_gap(pot: &LatticePotential, lambda1: f64, lambda2: f64, l_sweep: &[usize]) -> Result<GapReport> {
    for l in [lambda1, lambda2] {
        if !(l.abs() > 2.0) || !l.is_finite() {
            return Err(Error::InvalidArgument(format!("λ = {l} is not in a spectral gap")));
        }
    }
    let energies = bound_energies(pot)?;
    let xi1 = xi_truncated(pot, lambda1, l_sweep, None)?;
    let xi2 = xi_truncated(pot, lambda2, l_sweep, None)?;
    let expected1 = gap_index(&energies, lambda1);
    let expected2 = gap_index(&energies, lambda2);
    let verdict = if !(xi1.stable && xi2.stable) {
        Verdict::Indeterminate("gap index unstable across the sweep".into())
    } else {
        Verdict::from_bool(xi1.value == expected1 && xi2.value == expected2)
    };
    Ok(GapReport {
        lambda1,
        lambda2,
        bound_energies: energies,
        delta_xi: xi2.value - xi1.value,
        xi1,
        xi2,
        expected1,
        expected2,
        verdict,
    })
}

fn check_smoothing(pot: &LatticePotential, lambda: f64, l: usize, w: f64) -> Result<()> {
    if !(w > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("smoothing half-width w = {w} must be positive")));
    }
    let (lo, hi) = (lambda - w, lambda + w);
    let inside = lo > -2.0 && hi < 2.0;
    let gap = hi < -2.0 || lo > 2.0;
    if !(inside || gap) {
        return Err(Error::OutsideBand { lambda, margin: w });
    }
    let min = pot.min_box().max(SSF_MIN_L);
    if l < min {
        return Err(Error::BoxTooSmall { l, min });
    }
    Ok(())
}

fn box_spectra(pot: &LatticePotential, l: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((free_box(l).eigenvalues()?, pot.box_operator(l)?.eigenvalues()?))
}

/// Average of `N_{A,L} - N_{B,L}` over `[λ - w, λ + w]`, integrated exactly
/// (each eigenvalue contributes the length of the window above it).
pub fn ssf_smoothed(pot: &LatticePotential, lambda: f64, l: usize, w: f64) -> Result<f64> {
    check_smoothing(pot, lambda, l, w)?;
    let (ea, eb) = box_spectra(pot, l)?;
    let hi = lambda + w;
    let mass = |e: &[f64]| e.iter().map(|x| (hi - x).clamp(0.0, 2.0 * w)).sum::<f64>();
    Ok((mass(&ea) - mass(&eb)) / (2.0 * w))
}

/// Same average on a midpoint grid of `points ≥ 200` probes, skipping
/// probes within `1e-9` of a box eigenvalue.
pub fn ssf_smoothed_grid(pot: &LatticePotential, lambda: f64, l: usize, w: f64, points: usize) -> Result<f64> {
    check_smoothing(pot, lambda, l, w)?;
    if points < 200 {
        return Err(Error::InvalidArgument(format!("grid needs at least 200 points (got {points})")));
    }
    let (ea, eb) = box_spectra(pot, l)?;
    let below = |e: &[f64], t: f64| e.partition_point(|&x| x < t) as f64;
    let near = |e: &[f64], t: f64| {
        let i = e.partition_point(|&x| x < t);
        [i.wrapping_sub(1), i]
            .iter()
            .filter_map(|&j| e.get(j))
            .any(|x| (x - t).abs() <= COLLISION_TOL)
    };
    let (mut sum, mut used) = (0.0, 0usize);
    for j in 0..points {
        let t = lambda - w + (j as f64 + 0.5) * 2.0 * w / points as f64;
        if near(&ea, t) || near(&eb, t) {
            continue;
        }
        sum += below(&ea, t) - below(&eb, t);
        used += 1;
    }
    if used == 0 {
        return Err(Error::InvalidArgument("every grid probe collided with a box eigenvalue".into()));
    }
    Ok(sum / used as f64)
}

/// Smoothed truncation estimate of `ξ(λ)` against the eigenphase sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BkReport {
    pub lambda: f64,
    pub l: usize,
    pub w: f64,
    pub xi_est: f64,
    /// Grid-rule average, as a cross-check of `xi_est`.
    pub xi_grid: f64,
    /// Eigenphases of `S(λ)` in `(-π, π]`.
    pub phases: Vec<f64>,
    pub phase_sum: f64,
    pub defect_mod1: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Distance on `ℝ/ℤ`.
pub fn distance_mod1(a: f64, b: f64) -> f64 {
    let x = a - b;
    (x - x.round()).abs()
}

pub fn verify_bk(pot: &LatticePotential, lambda: f64, l: usize, w: f64) -> Result<BkReport> {
    check_band(lambda, BAND_MARGIN)?;
    let xi_est = ssf_smoothed(pot, lambda, l, w)?;
    let xi_grid = ssf_smoothed_grid(pot, lambda, l, w, 400)?;
    let phases = s_matrix(pot, lambda)?.folded_phases();
    let phase_sum = -phases.iter().sum::<f64>() / TAU;
    let defect_mod1 = distance_mod1(xi_est, phase_sum);
    Ok(BkReport {
        lambda,
        l,
        w,
        xi_est,
        xi_grid,
        phases,
        phase_sum,
        defect_mod1,
        tolerance: BK_TOL,
        verdict: Verdict::from_bool(defect_mod1 <= BK_TOL),
    })
}
