//! Truncation estimates of `Ξ(λ)` on the continuous spectrum and the
//! verification harnesses built on them.
//!
//! Two finite-volume realizations are used. [`truncated_projection_difference`]
//! diagonalizes `E_{B,L}(λ) - E_{A,L}(λ)` for Dirichlet boxes; its spectrum
//! is what the essential-spectrum check inspects. [`xi_truncated`] counts
//! eigenvalues near `±1` of the window compression of the infinite-volume
//! difference (see [`window_difference`]), which does not suffer from the
//! box-level jitter of the Dirichlet counts.

mod dirichlet;
mod verify;
mod window;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scattering::LatticePotential;

pub use dirichlet::{hausdorff_defect, THM0_TOL, truncated_projection_difference, verify_thm0, DirichletSpectrum, Thm0Point, Thm0Report};
pub use verify::{
    distance_mod1, ssf_smoothed, ssf_smoothed_grid, BK_TOL, GAP_DELTA_SWEEP, SSF_MIN_L, verify_bk, verify_e1, verify_gap, xi_truncated, BkReport, E1Options, E1Report,
    GapReport,
};
pub use window::{free_projection_kernel, window_difference, WindowDifference};

/// Default half-widths for truncation sweeps.
pub const DEFAULT_L_SWEEP: [usize; 3] = [200, 400, 800];

/// Required distance of `α(λ)` below 1 for a probe to count as Fredholm.
pub const ALPHA_MARGIN: f64 = 0.05;

/// Probe shift applied when `λ` collides with a box eigenvalue.
pub const COLLISION_SHIFT: f64 = 1e-6;

/// Distance to a box eigenvalue treated as a collision.
pub const COLLISION_TOL: f64 = 1e-9;

/// Box half-width, energy and detection window for one truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub l: usize,
    pub lambda: f64,
    pub delta: f64,
}

impl TruncationSpec {
    pub fn new(pot: &LatticePotential, l: usize, lambda: f64, delta: f64) -> Result<Self> {
        let min = pot.min_box();
        if l < min {
            return Err(Error::BoxTooSmall { l, min });
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("δ = {delta} must lie in (0, 1)")));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("λ = {lambda} is not finite")));
        }
        Ok(Self { l, lambda, delta })
    }

    pub fn dim(&self) -> usize {
        2 * self.l + 1
    }
}

/// Outcome of a check. `Indeterminate` names the gate that tripped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate(String),
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    /// Combined verdict: any indeterminate part wins, then any failure.
    pub fn all<'a>(parts: impl IntoIterator<Item = &'a Verdict>) -> Verdict {
        let mut out = Verdict::Pass;
        for v in parts {
            match (v, &out) {
                (Verdict::Indeterminate(_), Verdict::Indeterminate(_)) => {}
                (Verdict::Indeterminate(r), _) => out = Verdict::Indeterminate(r.clone()),
                (Verdict::Fail, Verdict::Pass) => out = Verdict::Fail,
                _ => {}
            }
        }
        out
    }
}

/// One `(L, δ)` evaluation of the truncated index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub l: usize,
    pub delta: f64,
    /// Eigenvalues in `[1 - δ, 1]`.
    pub plus: usize,
    /// Eigenvalues in `[-1, -1 + δ]`.
    pub minus: usize,
    pub value: i64,
    /// Largest `|μ|` below the detection windows; how close the bulk gets
    /// to `±1`.
    pub bulk_edge: f64,
}

/// Truncated index with its full sweep record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiEstimate {
    pub lambda: f64,
    /// `α(λ)` for `λ` in the band, `None` in the gaps.
    pub alpha: Option<f64>,
    /// Value at the first sweep point.
    pub value: i64,
    pub sweep: Vec<SweepPoint>,
    pub stable: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_combination() {
        let p = Verdict::Pass;
        let f = Verdict::Fail;
        let i = Verdict::Indeterminate("gate".into());
        assert_eq!(Verdict::all([&p, &p]), Verdict::Pass);
        assert_eq!(Verdict::all([&p, &f]), Verdict::Fail);
        assert_eq!(Verdict::all([&f, &i, &p]), i);
        let json = serde_json::to_string(&i).unwrap();
        assert_eq!(json, r#"{"status":"indeterminate","reason":"gate"}"#);
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"{"status":"pass"}"#);
    }

    #[test]
    fn spec_validation() {
        let pot = LatticePotential::new(vec![0, 4], vec![1.0, 1.0]).unwrap();
        assert!(matches!(TruncationSpec::new(&pot, 49, 0.5, 0.1), Err(Error::BoxTooSmall { min: 50, .. })));
        assert!(TruncationSpec::new(&pot, 50, 0.5, 1.0).is_err());
        assert_eq!(TruncationSpec::new(&pot, 50, 0.5, 0.1).unwrap().dim(), 101);
    }
}
