use serde::{Deserialize, Serialize};

use super::LatticePotential;
use crate::error::{Error, Result};

/// Largest admissible movement of a bound-state energy when `L` doubles.
pub const BOUND_STABILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub energy: f64,
    /// Movement between the boxes of half-width `L` and `2L`.
    pub drift: f64,
    /// False when `drift` exceeds [`BOUND_STABILITY_TOL`]; such values are
    /// likely band-edge resonances rather than localized states.
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStates {
    pub l: usize,
    pub states: Vec<BoundState>,
}

impl BoundStates {
    pub fn energies(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.energy).collect()
    }

    pub fn all_stable(&self) -> bool {
        self.states.iter().all(|s| s.stable)
    }

    /// Number of stable bound states strictly below `lambda`.
    pub fn count_below(&self, lambda: f64) -> usize {
        self.states.iter().filter(|s| s.energy < lambda).count()
    }
}

fn outside_band(pot: &LatticePotential, l: usize) -> Result<Vec<f64>> {
    Ok(pot
        .box_operator(l)?
        .eigenvalues()?
        .into_iter()
        .filter(|e| e.abs() > 2.0)
        .collect())
}

/// Eigenvalues of the box operator `B_L` outside the band, each checked
/// against the box of half-width `2L`.
///
/// Dirichlet box eigenvalues of the free chain lie strictly inside `(-2, 2)`,
/// so every eigenvalue outside the closed band is produced by `V`. Weakly
/// bound states whose localization length is comparable to `L` show up as
/// unstable under doubling.
pub fn bound_states(pot: &LatticePotential, l: usize) -> Result<BoundStates> {
    let min = pot.min_box();
    if l < min {
        return Err(Error::BoxTooSmall { l, min });
    }
    let coarse = outside_band(pot, l)?;
    let fine = outside_band(pot, 2 * l)?;
    let states = coarse
        .iter()
        .map(|&e| {
            let drift = fine
                .iter()
                .map(|f| (f - e).abs())
                .fold(f64::INFINITY, f64::min);
            BoundState {
                energy: e,
                drift,
                stable: drift <= BOUND_STABILITY_TOL,
            }
        })
        .collect();
    Ok(BoundStates { l, states })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_potential_has_none() {
        assert!(bound_states(&LatticePotential::zero(), 100).unwrap().states.is_empty());
    }

    #[test]
    fn single_site_closed_form() {
        // A single site of strength v binds at ±sqrt(v² + 4).
        for v in [-3.0, 3.0, 0.8] {
            let b = bound_states(&LatticePotential::single(0, v), 200).unwrap();
            assert_eq!(b.states.len(), 1);
            let expected = v.signum() * (v * v + 4.0).sqrt();
            assert!((b.states[0].energy - expected).abs() < 1e-10);
            assert!(b.all_stable());
        }
    }

    #[test]
    fn rejects_small_box() {
        let p = LatticePotential::new(vec![0, 9], vec![1.0, 1.0]).unwrap();
        assert!(matches!(bound_states(&p, 50), Err(Error::BoxTooSmall { .. })));
    }
}
