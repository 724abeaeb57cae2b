//! Eigenvalue counting functions, the finite-dimensional spectral shift
//! function and the Lifshits–Krein trace formula.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::check_off_spectrum;
use crate::linalg::{eigh, eigvalsh, HermitianMatrix, Scalar, GAP_TOL};

/// `N(λ) = #{eigenvalues < λ}` as a step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingFunction {
    eigenvalues: Vec<f64>,
}

impl CountingFunction {
    pub fn new<T: Scalar>(m: &HermitianMatrix<T>) -> Result<Self> {
        Ok(Self {
            eigenvalues: eigvalsh(m)?,
        })
    }

    /// From eigenvalues in any order.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        Self { eigenvalues }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Rejects `λ` within [`GAP_TOL`] of an eigenvalue.
    pub fn eval(&self, lambda: f64) -> Result<usize> {
        check_off_spectrum(&self.eigenvalues, lambda, GAP_TOL)?;
        Ok(self.eval_unchecked(lambda))
    }

    /// Count without the on-spectrum check.
    pub fn eval_unchecked(&self, lambda: f64) -> usize {
        self.eigenvalues.partition_point(|&x| x < lambda)
    }
}

pub fn counting<T: Scalar>(m: &HermitianMatrix<T>, lambda: f64) -> Result<usize> {
    CountingFunction::new(m)?.eval(lambda)
}

/// `ξ(λ) = N_A(λ) - N_B(λ)`.
pub fn ssf_finite<T: Scalar>(a: &HermitianMatrix<T>, b: &HermitianMatrix<T>, lambda: f64) -> Result<i64> {
    Ok(counting(a, lambda)? as i64 - counting(b, lambda)? as i64)
}

/// Built-in smooth test functions with exact derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `exp(-1/(1-t²))`, `t = (x-center)/radius`, compactly supported.
    Bump { center: f64, radius: f64 },
    /// `exp(-u²/2)`, `u = (x-center)/width`.
    Gaussian { center: f64, width: f64 },
    /// `(1-t²)^power` on `|t| < 1`.
    PolynomialBump { center: f64, radius: f64, power: u32 },
    /// `exp(-u²/2) cos(ωu)`.
    ModulatedGaussian { center: f64, width: f64, omega: f64 },
    /// `(tanh((x-lo)/s) - tanh((x-hi)/s))/2`.
    SmoothPlateau { lo: f64, hi: f64, softness: f64 },
}

/// Gaussian-type functions are treated as supported within this many widths.
const GAUSSIAN_REACH: f64 = 10.0;
const PLATEAU_REACH: f64 = 40.0;

impl TestFunction {
    /// The five built-in shapes, each covering `[lo, hi]` with margin.
    pub fn family(lo: f64, hi: f64) -> [TestFunction; 5] {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo) + 1.0;
        [
            TestFunction::Bump {
                center: c,
                radius: 1.5 * h,
            },
            TestFunction::Gaussian {
                center: c + 0.1 * h,
                width: 0.3 * h,
            },
            TestFunction::PolynomialBump {
                center: c,
                radius: 1.2 * h,
                power: 4,
            },
            TestFunction::ModulatedGaussian {
                center: c,
                width: 0.3 * h,
                omega: 2.0,
            },
            TestFunction::SmoothPlateau {
                lo: c - 0.5 * h,
                hi: c + 0.5 * h,
                softness: 0.02 * h,
            },
        ]
    }

    /// Interval outside which φ vanishes (or is below 1e-20).
    pub fn support(&self) -> (f64, f64) {
        match *self {
            TestFunction::Bump { center, radius } | TestFunction::PolynomialBump { center, radius, .. } => {
                (center - radius, center + radius)
            }
            TestFunction::Gaussian { center, width }
            | TestFunction::ModulatedGaussian { center, width, .. } => {
                (center - GAUSSIAN_REACH * width, center + GAUSSIAN_REACH * width)
            }
            TestFunction::SmoothPlateau { lo, hi, softness } => {
                (lo - PLATEAU_REACH * softness, hi + PLATEAU_REACH * softness)
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Bump { center, radius } => {
                let t = (x - center) / radius;
                if t.abs() >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - t * t)).exp()
                }
            }
            TestFunction::Gaussian { center, width } => {
                let u = (x - center) / width;
                (-0.5 * u * u).exp()
            }
            TestFunction::PolynomialBump {
                center,
                radius,
                power,
            } => {
                let t = (x - center) / radius;
                if t.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - t * t).powi(power as i32)
                }
            }
            TestFunction::ModulatedGaussian {
                center,
                width,
                omega,
            } => {
                let u = (x - center) / width;
                (-0.5 * u * u).exp() * (omega * u).cos()
            }
            TestFunction::SmoothPlateau { lo, hi, softness } => {
                0.5 * (((x - lo) / softness).tanh() - ((x - hi) / softness).tanh())
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Bump { center, radius } => {
                let t = (x - center) / radius;
                if t.abs() >= 1.0 {
                    0.0
                } else {
                    let s = 1.0 - t * t;
                    (-1.0 / s).exp() * (-2.0 * t / (s * s)) / radius
                }
            }
            TestFunction::Gaussian { center, width } => {
                let u = (x - center) / width;
                -u * (-0.5 * u * u).exp() / width
            }
            TestFunction::PolynomialBump {
                center,
                radius,
                power,
            } => {
                let t = (x - center) / radius;
                if t.abs() >= 1.0 || power == 0 {
                    0.0
                } else {
                    let p = power as f64;
                    p * (1.0 - t * t).powi(power as i32 - 1) * (-2.0 * t) / radius
                }
            }
            TestFunction::ModulatedGaussian {
                center,
                width,
                omega,
            } => {
                let u = (x - center) / width;
                (-0.5 * u * u).exp() * (-u * (omega * u).cos() - omega * (omega * u).sin()) / width
            }
            TestFunction::SmoothPlateau { lo, hi, softness } => {
                let sech2 = |z: f64| 1.0 / z.cosh().powi(2);
                0.5 * (sech2((x - lo) / softness) - sech2((x - hi) / softness)) / softness
            }
        }
    }
}

/// Both sides of the trace formula and the two routes for the integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFormulaReport {
    /// `Tr(φ(B) - φ(A))` from the functional calculus.
    pub trace_side: f64,
    /// `∫ φ' ξ` summed exactly over the steps of `ξ`.
    pub exact_integral: f64,
    /// `∫ φ' ξ` by composite trapezoid between consecutive jumps.
    pub quadrature_integral: f64,
    pub residual: f64,
    pub quadrature_residual: f64,
}

/// Lifshits–Krein check for a finite pair.
pub fn trace_formula<T: Scalar>(
    a: &HermitianMatrix<T>,
    b: &HermitianMatrix<T>,
    phi: &TestFunction,
    quadrature_points: usize,
) -> Result<TraceFormulaReport> {
    if quadrature_points < 1000 {
        return Err(Error::InvalidArgument(format!(
            "quadrature_points = {quadrature_points} below 1000"
        )));
    }
    let ea = eigh(a)?;
    let eb = eigh(b)?;
    let spec_lo = ea.values[0].min(eb.values[0]);
    let spec_hi = ea.values[ea.dim() - 1].max(eb.values[eb.dim() - 1]);
    let (lo, hi) = phi.support();
    if spec_lo <= lo || spec_hi >= hi {
        return Err(Error::SupportTooSmall {
            support_lo: lo,
            support_hi: hi,
            spec_lo,
            spec_hi,
        });
    }

    let f = |x: f64| phi.value(x);
    let trace_side = ea_trace(&eb, &f) - ea_trace(&ea, &f);

    // ξ jumps by +1 at eigenvalues of A and by -1 at those of B; with φ = 0
    // outside the support, ∫φ'ξ = Σ φ(b_j) - Σ φ(a_i).
    let exact_integral: f64 =
        eb.values.iter().map(|&x| f(x)).sum::<f64>() - ea.values.iter().map(|&x| f(x)).sum::<f64>();

    let na = CountingFunction::from_eigenvalues(ea.values.clone());
    let nb = CountingFunction::from_eigenvalues(eb.values.clone());
    let mut cuts: Vec<f64> = ea.values.iter().chain(&eb.values).copied().collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let width = hi - lo;
    let mut quadrature_integral = 0.0;
    for w in cuts.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        if x1 <= x0 {
            continue;
        }
        let mid = 0.5 * (x0 + x1);
        let xi = na.eval_unchecked(mid) as f64 - nb.eval_unchecked(mid) as f64;
        if xi == 0.0 {
            continue;
        }
        let n = ((quadrature_points as f64) * (x1 - x0) / width).ceil().max(2.0) as usize;
        let h = (x1 - x0) / n as f64;
        let mut s = 0.5 * (phi.derivative(x0) + phi.derivative(x1));
        for j in 1..n {
            s += phi.derivative(x0 + j as f64 * h);
        }
        quadrature_integral += xi * s * h;
    }

    Ok(TraceFormulaReport {
        trace_side,
        exact_integral,
        quadrature_integral,
        residual: (trace_side - exact_integral).abs(),
        quadrature_residual: (trace_side - quadrature_integral).abs(),
    })
}

fn ea_trace<T: Scalar>(e: &crate::linalg::EigenDecomposition<T>, f: &impl Fn(f64) -> f64) -> f64 {
    e.apply_function(f).trace().re()
}

/// `|Tr(φ(B) - φ(A)) - ∫ φ'(t) ξ(t) dt|` with the exact step integral.
pub fn trace_formula_residual<T: Scalar>(
    a: &HermitianMatrix<T>,
    b: &HermitianMatrix<T>,
    phi: &TestFunction,
    quadrature_points: usize,
) -> Result<f64> {
    Ok(trace_formula(a, b, phi, quadrature_points)?.residual)
}
