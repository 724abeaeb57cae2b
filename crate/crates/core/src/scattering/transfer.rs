use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_band, momentum, smooth_kernel_z, LatticePotential, BAND_MARGIN};
use crate::error::{Error, Result};
use crate::linalg::{eig_unitary, ComplexMatrix};

/// Real 2×2 matrix, row-major.
pub type Mat2 = [[f64; 2]; 2];

fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// Product `T_{n1} ⋯ T_{n0}` over the support hull of the one-site matrices
/// `[[λ - v(n), -1], [1, 0]]`, mapping `(u(n0), u(n0-1))` to
/// `(u(n1+1), u(n1))`.
pub fn transfer_matrix(pot: &LatticePotential, lambda: f64) -> Mat2 {
    let (n0, n1) = pot.hull();
    let mut t: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
    for n in n0..=n1 {
        let step = [[lambda - pot.value_at(n), -1.0], [1.0, 0.0]];
        t = mul2(&step, &t);
    }
    t
}

fn apply(t: &Mat2, x: [Complex64; 2]) -> [Complex64; 2] {
    [
        x[0] * t[0][0] + x[1] * t[0][1],
        x[0] * t[1][0] + x[1] * t[1][1],
    ]
}

fn inverse(t: &Mat2) -> Mat2 {
    // Unimodular.
    [[t[1][1], -t[0][1]], [-t[1][0], t[0][0]]]
}

fn plane(k: f64, n: i64) -> Complex64 {
    Complex64::from_polar(1.0, k * n as f64)
}

/// Coefficients `(a, b)` with `u(m) = a e^{ikm} + b e^{-ikm}` at `m = n, n+1`.
fn decompose(k: f64, n: i64, un: Complex64, un1: Complex64) -> (Complex64, Complex64) {
    let det = Complex64::new(0.0, -2.0 * k.sin());
    let a = (un * plane(-k, n + 1) - un1 * plane(-k, n)) / det;
    let b = (un1 * plane(k, n) - un * plane(k, n + 1)) / det;
    (a, b)
}

/// `S` from plane-wave matching at momentum `k` (no band-margin check).
///
/// `ψ_+` equals `S₊₊ e^{ikn}` left of the support and `e^{ikn} + S₋₊ e^{-ikn}`
/// right of it; `ψ_-` equals `e^{-ikn} + S₊₋ e^{ikn}` on the left and
/// `S₋₋ e^{-ikn}` on the right.
pub(crate) fn s_from_momentum(pot: &LatticePotential, k: f64) -> Result<ComplexMatrix> {
    if pot.is_zero() {
        return Ok(ComplexMatrix::identity(2));
    }
    let lambda = 2.0 * k.cos();
    let (n0, n1) = pot.hull();
    let t = transfer_matrix(pot, lambda);

    let right = apply(&t, [plane(k, n0), plane(k, n0 - 1)]);
    let (a, b) = decompose(k, n1, right[1], right[0]);
    let left = apply(&inverse(&t), [plane(-k, n1 + 1), plane(-k, n1)]);
    let (c, d) = decompose(k, n0 - 1, left[1], left[0]);

    let s = [[a.inv(), c / d], [b / a, d.inv()]];
    if s.iter().flatten().any(|z| !z.is_finite()) {
        return Err(Error::Singular {
            condition: f64::INFINITY,
        });
    }
    Ok(ComplexMatrix::from_fn(2, 2, |i, j| s[i][j]))
}

/// Scattering data at one energy inside the band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringPoint {
    pub lambda: f64,
    pub k: f64,
    /// 2×2 scattering matrix in the `(+, -)` channel basis.
    pub s: ComplexMatrix,
    /// Eigenphases of `S` in `[0, 2π)`, ascending.
    pub phases: Vec<f64>,
    /// `2 × m` smoothness kernel, `m` = number of potential sites.
    pub z: ComplexMatrix,
    /// `||S - I|| / 2`.
    pub alpha: f64,
}

impl ScatteringPoint {
    pub fn transmission(&self) -> Complex64 {
        self.s[(0, 0)]
    }

    /// Eigenphases folded to `(-π, π]`.
    pub fn folded_phases(&self) -> Vec<f64> {
        self.phases
            .iter()
            .map(|&t| if t > std::f64::consts::PI { t - std::f64::consts::TAU } else { t })
            .collect()
    }

    pub fn unitarity_defect(&self) -> f64 {
        crate::linalg::unitarity_defect(&self.s)
    }
}

pub(crate) fn alpha_of(s: &ComplexMatrix) -> f64 {
    0.5 * s
        .try_sub(&ComplexMatrix::identity(s.rows()))
        .expect("square")
        .norm_2()
}

/// Transfer-matrix route for `S(λ)` with its eigenphases, `Z(λ)` and `α(λ)`.
pub fn s_matrix(pot: &LatticePotential, lambda: f64) -> Result<ScatteringPoint> {
    check_band(lambda, BAND_MARGIN)?;
    let k = momentum(lambda)?;
    let s = s_from_momentum(pot, k)?;
    let phases = eig_unitary(&s)?;
    let alpha = alpha_of(&s).min(1.0);
    Ok(ScatteringPoint {
        lambda,
        k,
        z: smooth_kernel_z(pot, lambda)?,
        phases,
        alpha,
        s,
    })
}

/// Generalized eigenfunctions `ψ_±` on the sites `lo..=hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringStates {
    pub lo: i64,
    pub plus: Vec<Complex64>,
    pub minus: Vec<Complex64>,
}

/// `ψ_±` at momentum `k` (see [`s_matrix`] for the asymptotics), exact
/// plane waves outside the support hull and recursion inside it.
pub fn scattering_states(pot: &LatticePotential, k: f64, lo: i64, hi: i64) -> Result<ScatteringStates> {
    let s = s_from_momentum(pot, k)?;
    let lambda = 2.0 * k.cos();
    let (n0, n1) = pot.hull();
    let (t, r_right) = (s[(0, 0)], s[(1, 0)]);
    let (tp, r_left) = (s[(1, 1)], s[(0, 1)]);
    let plus_at = |n: i64| -> Option<Complex64> {
        if n <= n0 {
            Some(t * plane(k, n))
        } else if n >= n1 {
            Some(plane(k, n) + r_right * plane(-k, n))
        } else {
            None
        }
    };
    let minus_at = |n: i64| -> Option<Complex64> {
        if n <= n0 {
            Some(plane(-k, n) + r_left * plane(k, n))
        } else if n >= n1 {
            Some(tp * plane(-k, n))
        } else {
            None
        }
    };
    // Interior values by forward recursion from (n0 - 1, n0).
    let interior = |f: &dyn Fn(i64) -> Option<Complex64>| -> Vec<Complex64> {
        let mut prev = f(n0 - 1).expect("exterior");
        let mut cur = f(n0).expect("exterior");
        let mut out = Vec::new();
        for n in n0..n1 - 1 {
            let next = cur * (lambda - pot.value_at(n)) - prev;
            out.push(next);
            prev = cur;
            cur = next;
        }
        out
    };
    let plus_in = interior(&plus_at);
    let minus_in = interior(&minus_at);
    let pick = |n: i64, f: &dyn Fn(i64) -> Option<Complex64>, inner: &[Complex64]| {
        f(n).unwrap_or_else(|| inner[(n - n0 - 1) as usize])
    };
    Ok(ScatteringStates {
        lo,
        plus: (lo..=hi).map(|n| pick(n, &plus_at, &plus_in)).collect(),
        minus: (lo..=hi).map(|n| pick(n, &minus_at, &minus_in)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_defect;

    fn close(a: &Mat2, b: &Mat2) -> bool {
        a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).abs() < 1e-15)
    }

    #[test]
    fn transfer_examples() {
        let free = transfer_matrix(&LatticePotential::zero(), 0.0);
        assert!(close(&free, &[[0.0, -1.0], [1.0, 0.0]]));
        let one = transfer_matrix(&LatticePotential::single(0, 1.0), 0.0);
        assert!(close(&one, &[[-1.0, -1.0], [1.0, 0.0]]));
        let p = LatticePotential::new(vec![-2, 0, 3], vec![1.3, -0.4, 2.2]).unwrap();
        let t = transfer_matrix(&p, 0.77);
        assert!((t[0][0] * t[1][1] - t[0][1] * t[1][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_potential_is_identity() {
        let sp = s_matrix(&LatticePotential::zero(), 0.3).unwrap();
        assert_eq!(sp.s, ComplexMatrix::identity(2));
        assert_eq!(sp.alpha, 0.0);
    }

    #[test]
    fn single_site_closed_form() {
        // S = I - β J with β = iv / (2 sin k + iv), J the all-ones matrix.
        for (v, lambda) in [(1.0, 0.5), (-2.5, -1.2), (0.3, 1.7)] {
            let sp = s_matrix(&LatticePotential::single(0, v), lambda).unwrap();
            let sk = sp.k.sin();
            let beta = Complex64::new(0.0, v) / Complex64::new(2.0 * sk, v);
            for i in 0..2 {
                for j in 0..2 {
                    let expected = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) } - beta;
                    assert!((sp.s[(i, j)] - expected).norm() < 1e-13);
                }
            }
            assert!(unitarity_defect(&sp.s) < 1e-13);
        }
    }

    #[test]
    fn states_solve_the_equation() {
        let p = LatticePotential::new(vec![-1, 0, 2], vec![1.0, -2.0, 0.5]).unwrap();
        let k: f64 = 1.1;
        let lambda = 2.0 * k.cos();
        let st = scattering_states(&p, k, -8, 8).unwrap();
        for psi in [&st.plus, &st.minus] {
            for i in 1..psi.len() - 1 {
                let n = st.lo + i as i64;
                let lhs = psi[i + 1] + psi[i - 1] + psi[i] * p.value_at(n);
                assert!((lhs - psi[i] * lambda).norm() < 1e-12, "site {n}");
            }
        }
    }
}
