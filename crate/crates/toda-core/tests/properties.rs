//! Property tests for invariants that hold for any admissible input.

use num_rational::Ratio;
use proptest::prelude::*;
use toda_core::circle_spectral::{circle_exp, circle_log, ein, harmonic, winding_number, LaurentSeries};
use toda_core::deformed_connection::{c_entry, exponent, monodromy_data, Zeta};
use toda_core::frobenius_geometry::{
    cotangent_product_triple, eta_cotangent, eta_flat_triple, eta_sharp_triple, window_indices, M0Point,
};
use toda_core::lax_manifold::{LaxPoint, Triple};
use toda_core::C64;

const N: usize = 24;

fn c64(bound: f64) -> impl Strategy<Value = C64> {
    (-bound..bound, -bound..bound).prop_map(|(a, b)| C64::new(a, b))
}

/// Series with modes in `[-k, k]` decaying like `0.5^|j|`.
fn series(k: i32) -> impl Strategy<Value = LaurentSeries> {
    prop::collection::vec(c64(1.0), (2 * k + 1) as usize).prop_map(move |v| {
        let terms: Vec<(i32, C64)> = v.into_iter().enumerate().map(|(i, c)| (i as i32 - k, c * 0.5f64.powi((i as i32 - k).abs()))).collect();
        LaurentSeries::from_terms(N, &terms)
    })
}

fn triple() -> impl Strategy<Value = Triple> {
    (series(5), c64(1.0), c64(1.0)).prop_map(|(z, v, u)| Triple::new(z, v, u))
}

/// Small perturbations of `λ = z + 0.1`, `λ̄ = 0.25/z`; all lie in `M0`.
fn m0_point() -> impl Strategy<Value = M0Point> {
    (c64(0.05), c64(0.03), c64(0.05), c64(0.02)).prop_map(|(a0, am, b0, b1)| {
        let l = LaurentSeries::from_terms(N, &[(1, C64::new(1.0, 0.0)), (0, C64::new(0.1, 0.0) + a0), (-1, am)]);
        let b = LaurentSeries::from_terms(N, &[(-1, C64::new(0.25, 0.0)), (0, b0), (1, b1)]);
        M0Point::new(LaxPoint::new(l, b).unwrap()).unwrap()
    })
}

fn flat_index() -> impl Strategy<Value = toda_core::toda_hierarchy::AlphaHat> {
    use toda_core::toda_hierarchy::AlphaHat;
    prop_oneof![(-8i32..=8).prop_map(AlphaHat::Int), Just(AlphaHat::V), Just(AlphaHat::U)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projections_partition(f in series(N as i32 / 2), k in -10i32..10) {
        prop_assert!((&f.plus() + &f.minus()).max_diff(&f) < 1e-14);
        prop_assert!((&f.project(..k) + &f.project(k..)).max_diff(&f) < 1e-14);
        prop_assert!(f.plus().plus().max_diff(&f.plus()) == 0.0);
        prop_assert!(f.minus().plus().max_abs() == 0.0);
    }

    #[test]
    fn product_is_commutative_and_distributive(a in series(6), b in series(6), d in series(6)) {
        prop_assert!(a.mul(&b).max_diff(&b.mul(&a)) < 1e-13);
        let lhs = a.mul(&(&b + &d));
        let rhs = &a.mul(&b) + &a.mul(&d);
        prop_assert!(lhs.max_diff(&rhs) < 1e-13);
    }

    #[test]
    fn z_derivative_is_a_derivation(a in series(6), b in series(6)) {
        let lhs = a.mul(&b).z_deriv();
        let rhs = &a.z_deriv().mul(&b) + &a.mul(&b.z_deriv());
        prop_assert!(lhs.max_diff(&rhs) < 1e-12);
    }

    #[test]
    fn log_inverts_exp_with_winding(g in series(4), k in -3i32..=3) {
        let g = &g * 0.3;
        let f = circle_exp(&g).shift(k);
        prop_assert_eq!(winding_number(&f).unwrap().value(), k);
        let (h, w) = circle_log(&f).unwrap();
        prop_assert_eq!(w.value(), k);
        prop_assert!(circle_exp(&h).shift(k).max_diff(&f) < 1e-12);
    }

    #[test]
    fn ein_satisfies_its_ode(x in c64(6.0)) {
        // x Ein'(x) = 1 - e^{-x}
        let h = 1e-5;
        let d = (ein(x + h).unwrap() - ein(x - h).unwrap()) / (2.0 * h);
        let expected = if x.norm() < 1e-12 { C64::new(1.0, 0.0) } else { (C64::new(1.0, 0.0) - (-x).exp()) / x };
        prop_assert!((d - expected).norm() < 1e-6 * (1.0 + expected.norm()));
    }

    #[test]
    fn harmonic_steps(p in 1i32..40) {
        prop_assert_eq!(harmonic(p).unwrap() - harmonic(p - 1).unwrap(), Ratio::new(1, i64::from(p)));
    }

    #[test]
    fn eta_is_symmetric_and_invertible(pt in m0_point(), a in triple(), b in triple()) {
        let ab = eta_cotangent(&a, &b, &pt);
        let ba = eta_cotangent(&b, &a, &pt);
        prop_assert!((ab - ba).norm() < 1e-11 * (1.0 + ab.norm()));
        let back = eta_flat_triple(&eta_sharp_triple(&a, &pt), &pt);
        prop_assert!(back.max_diff(&a) < 1e-11);
    }

    #[test]
    fn product_is_commutative(pt in m0_point(), a in triple(), b in triple()) {
        let ab = cotangent_product_triple(&a, &b, &pt);
        prop_assert!(ab.max_diff(&cotangent_product_triple(&b, &a, &pt)) < 1e-10);
    }

    #[test]
    fn zeta_powers_and_loops(r in 0.05f64..0.7, t in -3.0f64..3.0, s1 in -2.0f64..2.0, s2 in -2.0f64..2.0, k in -2i32..=2) {
        let z = Zeta::new(C64::from_polar(r, t)).unwrap();
        prop_assert!((z.pow(s1 + s2) - z.pow(s1) * z.pow(s2)).norm() < 1e-12 * z.pow(s1 + s2).norm());
        let w = z.around_origin(k, 64);
        prop_assert!((w.value() - z.value()).norm() < 1e-13);
        prop_assert!((w.log() - z.log() - C64::new(0.0, 2.0 * std::f64::consts::PI * f64::from(k))).norm() < 1e-11);
    }

    #[test]
    fn c_matrix_raises_exponents(g in flat_index(), a in flat_index()) {
        // C^γ_α ≠ 0 only for e_γ - e_α a non-negative integer
        if c_entry(g, a) != 0.0 {
            let gap = exponent(g) - exponent(a);
            prop_assert!(gap.is_integer() && gap >= Ratio::from_integer(0));
        }
    }

    #[test]
    fn monodromy_invariants_hold(window in 2i32..16) {
        prop_assert!(monodromy_data(window).check().all());
        prop_assert_eq!(window_indices(window).len(), (2 * window + 3) as usize);
    }
}
