use std::f64::consts::PI;

use num_complex::Complex64;

use super::{check_band, momentum, LatticePotential, BAND_MARGIN};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, LuFactors};

/// Condition estimate above which the support system `I + R₀V` is treated as
/// singular.
pub const STATIONARY_MAX_CONDITION: f64 = 1e12;

/// Kernel of `(A - λ - iε)⁻¹` at `(n, m)`.
///
/// For `ε > 0` the kernel is `e^{iq|n-m|} / (2i sin q)` with `2 cos q = λ + iε`,
/// `Im q > 0`. At `ε = 0` the boundary value from the upper half-plane is
/// `i e^{-ik|n-m|} / (2 sin k)`, `λ = 2 cos k`.
pub fn free_resolvent_kernel(lambda: f64, eps: f64, n: i64, m: i64) -> Result<Complex64> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("ε = {eps} must be non-negative")));
    }
    let d = (n - m).unsigned_abs() as f64;
    if eps == 0.0 {
        let k = momentum(lambda)?;
        return Ok(Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, -k * d) / (2.0 * k.sin()));
    }
    let z = Complex64::new(lambda, eps);
    let q = -(z * 0.5).acos();
    let i = Complex64::new(0.0, 1.0);
    Ok((i * q * d).exp() / (2.0 * i * q.sin()))
}

/// Channel weight `w(λ) = (4π sin k)^{-1/2}`.
pub(crate) fn channel_weight(k: f64) -> f64 {
    (4.0 * PI * k.sin()).powf(-0.5)
}

/// `Z(λ)_{±,n} = w(λ) e^{∓ikn} |v(n)|^{1/2}`, one column per potential site.
pub fn smooth_kernel_z(pot: &LatticePotential, lambda: f64) -> Result<ComplexMatrix> {
    check_band(lambda, BAND_MARGIN)?;
    let k = momentum(lambda)?;
    let w = channel_weight(k);
    let sites = pot.sites();
    let values = pot.values();
    Ok(ComplexMatrix::from_fn(2, sites.len(), |c, j| {
        let sign = if c == 0 { -1.0 } else { 1.0 };
        Complex64::from_polar(w * values[j].abs().sqrt(), sign * k * sites[j] as f64)
    }))
}

/// Stationary route: `S = I - 2πi Γ V (I + R₀V)⁻¹ Γ*` over the support,
/// `Γ_{±,n} = w e^{∓ikn}`, `R₀ = (A - λ - i0)⁻¹`.
pub fn s_matrix_stationary(pot: &LatticePotential, lambda: f64) -> Result<ComplexMatrix> {
    check_band(lambda, BAND_MARGIN)?;
    let k = momentum(lambda)?;
    let sites = pot.sites();
    let values = pot.values();
    let m = sites.len();
    if m == 0 || pot.is_zero() {
        return Ok(ComplexMatrix::identity(2));
    }
    let w = channel_weight(k);
    let mut system = ComplexMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let r = free_resolvent_kernel(lambda, 0.0, sites[i], sites[j])?;
            system[(i, j)] = r * values[j] + if i == j { 1.0 } else { 0.0 };
        }
    }
    let gamma = ComplexMatrix::from_fn(2, m, |c, j| {
        let sign = if c == 0 { -1.0 } else { 1.0 };
        Complex64::from_polar(w, sign * k * sites[j] as f64)
    });
    let lu = LuFactors::new(&system)?;
    let condition = lu.condition();
    if !(condition <= STATIONARY_MAX_CONDITION) {
        return Err(Error::Singular { condition });
    }
    let y = lu.solve(&gamma.adjoint())?;
    let gv = ComplexMatrix::from_fn(2, m, |c, j| gamma[(c, j)] * values[j]);
    let t = gv.matmul(&y)?;
    let coef = Complex64::new(0.0, -2.0 * PI);
    let s = ComplexMatrix::from_fn(2, 2, |i, j| {
        (if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }) + coef * t[(i, j)]
    });
    Ok(s)
}
