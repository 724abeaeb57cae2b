//! Scattering on the integer lattice.
//!
//! `A` is the adjacency operator `(Au)(n) = u(n+1) + u(n-1)` with band
//! `[-2, 2]` and dispersion `λ = 2 cos k`, `k ∈ (0, π)`. `B = A + V` for a
//! finitely supported real potential `V`.
//!
//! Channel convention for the fiber `ℂ²`: component 0 (`+`) is the plane
//! wave `e^{+ikn}`, component 1 (`-`) is `e^{-ikn}`. Both `Z(λ)` and `S(λ)`
//! use this ordering.

mod bound;
mod stationary;
pub(crate) mod transfer;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymTridiagonal;

pub use bound::{bound_states, BoundState, BoundStates};
pub use stationary::{free_resolvent_kernel, s_matrix_stationary, smooth_kernel_z, STATIONARY_MAX_CONDITION};
pub use transfer::{
    s_matrix, scattering_states, transfer_matrix, Mat2, ScatteringPoint, ScatteringStates,
};

/// Default distance kept from the band edges by band operations.
pub const BAND_MARGIN: f64 = 1e-3;

/// Finitely supported real potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialSpec", into = "PotentialSpec")]
pub struct LatticePotential {
    sites: Vec<i64>,
    values: Vec<f64>,
}

/// Wire format `{"sites": [...], "values": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub sites: Vec<i64>,
    pub values: Vec<f64>,
}

impl TryFrom<PotentialSpec> for LatticePotential {
    type Error = Error;
    fn try_from(s: PotentialSpec) -> Result<Self> {
        LatticePotential::new(s.sites, s.values)
    }
}

impl From<LatticePotential> for PotentialSpec {
    fn from(p: LatticePotential) -> Self {
        PotentialSpec {
            sites: p.sites,
            values: p.values,
        }
    }
}

impl LatticePotential {
    /// Sites must be strictly increasing, values finite, lengths equal.
    pub fn new(sites: Vec<i64>, values: Vec<f64>) -> Result<Self> {
        if sites.len() != values.len() {
            return Err(Error::InvalidPotential(format!(
                "{} sites but {} values",
                sites.len(),
                values.len()
            )));
        }
        if let Some(w) = sites.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPotential(format!(
                "sites not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential(format!("non-finite value {v}")));
        }
        Ok(Self { sites, values })
    }

    pub fn zero() -> Self {
        Self {
            sites: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn single(site: i64, value: f64) -> Self {
        Self {
            sites: vec![site],
            values: vec![value],
        }
    }

    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// True when every value vanishes.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn value_at(&self, n: i64) -> f64 {
        match self.sites.binary_search(&n) {
            Ok(i) => self.values[i],
            Err(_) => 0.0,
        }
    }

    /// `[min site, max site]`, or `[0, 0]` without sites.
    pub fn hull(&self) -> (i64, i64) {
        match (self.sites.first(), self.sites.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (0, 0),
        }
    }

    pub fn diameter(&self) -> usize {
        let (a, b) = self.hull();
        (b - a) as usize
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            sites: self.sites.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Smallest admissible box half-width, `10·(diameter + 1)`, also large
    /// enough to contain the support.
    pub fn min_box(&self) -> usize {
        let (a, b) = self.hull();
        (10 * (self.diameter() + 1)).max(a.unsigned_abs() as usize).max(b.unsigned_abs() as usize)
    }

    /// Dirichlet restriction of `A + V` to sites `-l..=l` (index `i` is site
    /// `i - l`).
    pub fn box_operator(&self, l: usize) -> Result<SymTridiagonal> {
        let (a, b) = self.hull();
        let li = l as i64;
        if !self.is_empty() && (a < -li || b > li) {
            return Err(Error::BoxTooSmall {
                l,
                min: a.unsigned_abs().max(b.unsigned_abs()) as usize,
            });
        }
        let n = 2 * l + 1;
        let mut diag = vec![0.0; n];
        for (&s, &v) in self.sites.iter().zip(&self.values) {
            diag[(s + li) as usize] += v;
        }
        SymTridiagonal::new(diag, vec![1.0; n - 1])
    }
}

/// Free Dirichlet box `A_L` on `-l..=l`.
pub fn free_box(l: usize) -> SymTridiagonal {
    let n = 2 * l + 1;
    SymTridiagonal::new(vec![0.0; n], vec![1.0; n - 1]).expect("consistent lengths")
}

/// Momentum `k = arccos(λ/2) ∈ (0, π)` for `λ` in the open band.
pub fn momentum(lambda: f64) -> Result<f64> {
    if !(lambda.abs() < 2.0) {
        return Err(Error::OutsideBand { lambda, margin: 0.0 });
    }
    Ok((0.5 * lambda).acos())
}

/// Rejects `λ` closer than `margin` to a band edge.
pub fn check_band(lambda: f64, margin: f64) -> Result<()> {
    if !(lambda.abs() <= 2.0 - margin) {
        return Err(Error::OutsideBand { lambda, margin });
    }
    Ok(())
}

/// `Δ = [a, b]` compactly inside the band with a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandInterval {
    pub a: f64,
    pub b: f64,
    pub grid: Vec<f64>,
}

impl BandInterval {
    /// `points ≥ 2` equally spaced samples including both ends.
    pub fn new(a: f64, b: f64, points: usize) -> Result<Self> {
        check_band(a, BAND_MARGIN)?;
        check_band(b, BAND_MARGIN)?;
        if !(a < b) || points < 2 {
            return Err(Error::InvalidArgument(format!(
                "band interval needs a < b and at least 2 points (got [{a}, {b}], {points})"
            )));
        }
        let grid = (0..points)
            .map(|j| {
                if j + 1 == points {
                    b
                } else {
                    a + (b - a) * j as f64 / (points - 1) as f64
                }
            })
            .collect();
        Ok(Self { a, b, grid })
    }
}

/// Largest difference quotient `||F(λ_j+1) - F(λ_j)|| / |λ_j+1 - λ_j|` over
/// adjacent grid points.
pub fn lipschitz_estimate(
    grid: &[f64],
    mut f: impl FnMut(f64) -> Result<crate::linalg::ComplexMatrix>,
) -> Result<f64> {
    let mut prev: Option<(f64, crate::linalg::ComplexMatrix)> = None;
    let mut worst = 0.0_f64;
    for &x in grid {
        let m = f(x)?;
        if let Some((x0, m0)) = &prev {
            let q = m.try_sub(m0)?.norm_2() / (x - x0).abs();
            worst = worst.max(q);
        }
        prev = Some((x, m));
    }
    Ok(worst)
}
