use std::f64::consts::{PI, TAU};

use bkflow_core::linalg::unitarity_defect;
use bkflow_core::projections::DEFAULT_EIG_TOL;
use bkflow_core::specflow::counting_between_phases;
use bkflow_core::xi::window_difference;
use bkflow_core::{
    eig_unitary, eigvalsh, fredholm_index, s_matrix, s_matrix_stationary, ssf_finite, trace_identity_check, xi_finite,
    LatticePotential, SeededRng,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn s_matrix_unitary_and_reciprocal(seed in any::<u64>(), lambda in -1.9f64..1.9) {
        let pot = SeededRng::new(seed, 0).potential(5, 8, 4.0);
        let sp = s_matrix(&pot, lambda).unwrap();
        prop_assert!(sp.unitarity_defect() < 1e-10);
        // Real potentials: equal transmission in both directions.
        prop_assert!((sp.s[(0, 0)] - sp.s[(1, 1)]).norm() < 1e-10);
        prop_assert!(sp.alpha <= 1.0 && sp.alpha >= 0.0);
        let st = s_matrix_stationary(&pot, lambda).unwrap();
        prop_assert!(sp.s.try_sub(&st).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn index_laws(seed in any::<u64>(), n in 1usize..10) {
        let mut rng = SeededRng::new(seed, 1);
        let (rp, rq) = (rng.index(n + 1), rng.index(n + 1));
        let p = rng.projection(n, rp);
        let q = rng.projection(n, rq);
        let idx = fredholm_index(&p, &q, DEFAULT_EIG_TOL).unwrap().index;
        prop_assert_eq!(idx, rp as i64 - rq as i64);
        prop_assert_eq!(fredholm_index(&q, &p, DEFAULT_EIG_TOL).unwrap().index, -idx);
        prop_assert!(trace_identity_check(&p, &q).unwrap() < 1e-8);
    }

    #[test]
    fn finite_xi_equals_ssf(seed in any::<u64>(), t in 0.0f64..1.0) {
        let mut rng = SeededRng::new(seed, 2);
        let a = rng.hermitian(8);
        let b = a.try_add(&rng.low_rank_hermitian(8, 2)).unwrap();
        let ev = eigvalsh(&a).unwrap();
        let lambda = ev[0] - 1.0 + t * (ev[7] - ev[0] + 2.0);
        if let (Ok(x), Ok(s)) = (xi_finite(&a, &b, lambda), ssf_finite(&a, &b, lambda)) {
            prop_assert_eq!(x, s);
        }
    }

    #[test]
    fn unitary_phases_reproduce_determinant(seed in any::<u64>(), n in 1usize..7) {
        let u = SeededRng::new(seed, 3).unitary(n);
        prop_assert!(unitarity_defect(&u) < 1e-12);
        let phases = eig_unitary(&u).unwrap();
        prop_assert_eq!(phases.len(), n);
        let det = bkflow_core::linalg::determinant(&u).unwrap();
        let arg: f64 = phases.iter().sum();
        let diff = (det.arg() - arg).rem_euclid(2.0 * PI);
        prop_assert!(diff.min(2.0 * PI - diff) < 1e-8);
    }

    #[test]
    fn arc_counts_are_additive(seed in any::<u64>(), a in 0.0f64..TAU, b in 0.0f64..TAU, c in 0.0f64..TAU) {
        let phases = eig_unitary(&SeededRng::new(seed, 4).unitary(5)).unwrap();
        let tol = 1e-12;
        let near = |x: f64| phases.iter().any(|p| (p - x).abs() < 1e-9);
        prop_assume!(!near(a) && !near(b) && !near(c));
        let ab = counting_between_phases(&phases, a, b, tol).unwrap();
        let bc = counting_between_phases(&phases, b, c, tol).unwrap();
        let ac = counting_between_phases(&phases, a, c, tol).unwrap();
        prop_assert_eq!(ab + bc, ac);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn window_difference_spectrum_in_unit_interval(seed in any::<u64>(), lambda in -1.8f64..1.8) {
        let pot = SeededRng::new(seed, 5).potential(3, 3, 2.5);
        let w = window_difference(&pot, lambda, 25).unwrap();
        let mu = eigvalsh(&w.matrix).unwrap();
        prop_assert!(mu[0] >= -1.0 - 1e-9);
        prop_assert!(mu[mu.len() - 1] <= 1.0 + 1e-9);
    }
}

#[test]
fn potential_spec_round_trip() {
    let p = LatticePotential::new(vec![-2, 0, 5], vec![1.0, -0.5, 2.0]).unwrap();
    let json = serde_json::to_string(&p).unwrap();
    assert_eq!(json, r#"{"sites":[-2,0,5],"values":[1.0,-0.5,2.0]}"#);
    let back: LatticePotential = serde_json::from_str(&json).unwrap();
    assert_eq!(back, p);
    assert!(serde_json::from_str::<LatticePotential>(r#"{"sites":[1,1],"values":[0,0]}"#).is_err());
    assert!(serde_json::from_str::<LatticePotential>(r#"{"sites":[1],"values":[0],"extra":1}"#).is_err());
}
