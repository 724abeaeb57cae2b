//! Independent oracles for the scattering module: a large absorbing box for
//! the resolvent and the S-matrix, a closed-form Parseval identity for the
//! channel weight, and grid-refinement stability of the Lipschitz estimate.

use std::f64::consts::PI;

use bkflow_core::quadrature::GaussLegendre;
use bkflow_core::scattering::{lipschitz_estimate, smooth_kernel_z};
use bkflow_core::{free_resolvent_kernel, momentum, s_matrix, ComplexMatrix, LatticePotential, SeededRng};
use num_complex::Complex64;

/// Column `m` of `(A_L + V - z)⁻¹` on sites `-l..=l` by the Thomas algorithm.
fn box_resolvent_column(l: usize, diag: &[f64], z: Complex64, m: i64) -> Vec<Complex64> {
    let n = 2 * l + 1;
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    d[(m + l as i64) as usize] = Complex64::new(1.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut prev_c = Complex64::new(0.0, 0.0);
    let mut prev_d = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let b = Complex64::new(diag[i], 0.0) - z;
        let denom = b - prev_c;
        c[i] = one / denom;
        d[i] = (d[i] - prev_d) / denom;
        prev_c = c[i];
        prev_d = d[i];
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[test]
fn free_resolvent_matches_absorbing_box() {
    let l = 20_000;
    let diag = vec![0.0; 2 * l + 1];
    for (lambda, eps) in [(0.5, 1e-3), (-1.3, 2e-3), (1.7, 1e-3)] {
        let col = box_resolvent_column(l, &diag, Complex64::new(lambda, eps), 3);
        for n in [-7, 0, 3, 12, 40] {
            let exact = free_resolvent_kernel(lambda, eps, n, 3).unwrap();
            let boxed = col[(n + l as i64) as usize];
            assert!((exact - boxed).norm() < 1e-6, "λ = {lambda}, n = {n}: {exact} vs {boxed}");
        }
    }
}

/// `S` from the stationary formula with the resolvent of a large box at
/// `λ + iε` in place of the boundary value.
fn absorbing_box_s(pot: &LatticePotential, lambda: f64, eps: f64, l: usize) -> ComplexMatrix {
    let k = momentum(lambda).unwrap();
    let w = (4.0 * PI * k.sin()).powf(-0.5);
    let sites = pot.sites();
    let values = pot.values();
    let m = sites.len();
    let diag = vec![0.0; 2 * l + 1];
    let z = Complex64::new(lambda, eps);
    let cols: Vec<Vec<Complex64>> = sites.iter().map(|&s| box_resolvent_column(l, &diag, z, s)).collect();
    let mut system = ComplexMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let r = cols[j][(sites[i] + l as i64) as usize];
            system[(i, j)] = r * values[j] + if i == j { 1.0 } else { 0.0 };
        }
    }
    let gamma = ComplexMatrix::from_fn(2, m, |c, j| {
        let sign = if c == 0 { -1.0 } else { 1.0 };
        Complex64::from_polar(w, sign * k * sites[j] as f64)
    });
    let y = bkflow_core::linalg::solve(&system, &gamma.adjoint(), 1e12).unwrap();
    let gv = ComplexMatrix::from_fn(2, m, |c, j| gamma[(c, j)] * values[j]);
    let t = gv.matmul(&y).unwrap();
    ComplexMatrix::from_fn(2, 2, |i, j| {
        Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0) + Complex64::new(0.0, -2.0 * PI) * t[(i, j)]
    })
}

#[test]
fn s_matrix_matches_absorbing_box() {
    for (pot, lambda) in [
        (LatticePotential::single(0, 1.0), 0.5),
        (LatticePotential::new(vec![-2, 1, 3], vec![1.5, -0.7, 2.0]).unwrap(), -0.9),
        (LatticePotential::new(vec![0, 4], vec![2.0, 2.0]).unwrap(), 1.3),
    ] {
        let exact = s_matrix(&pot, lambda).unwrap().s;
        let boxed = absorbing_box_s(&pot, lambda, 1e-3, 20_000);
        let err = exact.try_sub(&boxed).unwrap().max_abs();
        assert!(err < 5e-3, "λ = {lambda}: {err}");
    }
}

#[test]
fn channel_weight_parseval() {
    // With unit potential on the sites, Z(λ) f is Γ(λ) f, and
    // ∫ ||Γ(λ) f||² dλ over the band equals ||f||². The band edges are cut
    // at momentum a; the truncated integral has a closed form.
    let sites = vec![-3, 0, 1, 5];
    let f = [0.4, -1.2, 0.7, 0.25];
    let pot = LatticePotential::new(sites.clone(), vec![1.0; 4]).unwrap();
    let a = 0.05;
    let mut integral = 0.0;
    for (k, wk) in GaussLegendre::new(16).composite(a, PI - a, 24) {
        let lambda = 2.0 * k.cos();
        let z = smooth_kernel_z(&pot, lambda).unwrap();
        let gf = z.mul_vec(&f.map(|x| Complex64::new(x, 0.0))).unwrap();
        let norm2: f64 = gf.iter().map(|c| c.norm_sqr()).sum();
        integral += wk * 2.0 * k.sin() * norm2;
    }
    let mut expected = 0.0;
    for (i, &si) in sites.iter().enumerate() {
        for (j, &sj) in sites.iter().enumerate() {
            let d = (si - sj) as f64;
            let kernel = if d == 0.0 {
                (PI - 2.0 * a) / PI
            } else {
                (((PI - a) * d).sin() - (a * d).sin()) / (PI * d)
            };
            expected += f[i] * f[j] * kernel;
        }
    }
    assert!((integral - expected).abs() < 1e-12, "{integral} vs {expected}");
    let full: f64 = f.iter().map(|x| x * x).sum();
    assert!((expected - full).abs() < 0.05 * full);
}

#[test]
fn lipschitz_estimate_stable_under_refinement() {
    let mut rng = SeededRng::new(77, 0);
    for _ in 0..3 {
        let pot = rng.potential(5, 6, 3.0);
        let grid = |n: usize| (0..n).map(|j| -1.5 + 3.0 * j as f64 / (n - 1) as f64).collect::<Vec<_>>();
        let coarse = lipschitz_estimate(&grid(200), |l| smooth_kernel_z(&pot, l)).unwrap();
        let fine = lipschitz_estimate(&grid(2000), |l| smooth_kernel_z(&pot, l)).unwrap();
        assert!(coarse.is_finite() && fine.is_finite());
        assert!((fine - coarse).abs() < 0.05 * fine, "{coarse} vs {fine}");
        let s_lip = lipschitz_estimate(&grid(400), |l| Ok(s_matrix(&pot, l)?.s)).unwrap();
        assert!(s_lip.is_finite());
    }
}

#[test]
fn bound_states_match_single_site_formula() {
    for v in [-3.0, 0.5, 2.2] {
        let bs = bkflow_core::bound_states(&LatticePotential::single(0, v), 100).unwrap();
        let expected = v.signum() * (v * v + 4.0_f64).sqrt();
        assert_eq!(bs.states.len(), 1);
        assert!((bs.states[0].energy - expected).abs() < 1e-10);
    }
}
