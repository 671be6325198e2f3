use std::f64::consts::PI;

use ndpo_core::absorber::expand_absorber_power;
use ndpo_core::analytic::{log_rate_above_asymptotic, rate_below, table1_rate, visibility_below_closed_form};
use ndpo_core::engine::{f_decomposition_rate, MomentModel, RateEngine};
use ndpo_core::opa::{opa_visibility, r_from_gain};
use ndpo_core::fringe::phase_grid;
use ndpo_core::DerivedParams;
use proptest::prelude::*;

proptest! {
    #[test]
    fn closed_form_matches_table(p in 1u32..=6, r in 0.0f64..0.99, phi in -7.0f64..7.0) {
        let a = rate_below(p, r, phi).unwrap();
        let b = table1_rate(p, r, phi).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
    }

    #[test]
    fn rate_is_even_and_pi_periodic(p in 1u32..=6, r in 0.01f64..0.99, phi in -4.0f64..4.0) {
        let a = rate_below(p, r, phi).unwrap();
        prop_assert!((a - rate_below(p, r, -phi).unwrap()).abs() <= 1e-12 * a);
        prop_assert!((a - rate_below(p, r, phi + PI).unwrap()).abs() <= 1e-12 * a);
    }

    #[test]
    fn decomposition_matches_closed_form(p in 1u32..=6, r in 0.05f64..0.95, phi in 0.0f64..PI) {
        let a = rate_below(p, r, phi).unwrap();
        let b = f_decomposition_rate(p, r, phi).unwrap();
        prop_assert!(((a - b) / a).abs() < 1e-10);
    }

    #[test]
    fn absorber_expansion_matches_direct_product(
        p in 1u32..=5,
        u in proptest::array::uniform4(-2.0f64..2.0),
        phi in -4.0f64..4.0,
    ) {
        // α3α3*/(r√(2n0)) = C²(u1²−u2²) + S²(u3²−u4²) + 2iCS(u2u3 − u1u4)
        let poly = expand_absorber_power(p).unwrap();
        let got = poly.evaluate(u, phi);
        let (c, s) = ((phi / 2.0).cos(), (phi / 2.0).sin());
        let prod = c * c * (u[0] * u[0] - u[1] * u[1]) + s * s * (u[2] * u[2] - u[3] * u[3]);
        let cross = 2.0 * c * s * (u[1] * u[2] - u[0] * u[3]);
        let want = num_complex::Complex64::new(prod, cross).powu(p);
        prop_assert!((got - want).norm() <= 1e-9 * want.norm().max(1.0));
    }

    #[test]
    fn closed_form_visibility_is_a_fraction(p in 2u32..=6, r in 0.0f64..0.999) {
        let v = visibility_below_closed_form(p, r).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn above_shape_is_pump_independent(p in 2u32..=6, r1 in 1.01f64..3.0, r2 in 1.01f64..3.0, phi in 0.0f64..PI) {
        let d1 = DerivedParams::from_scaled(1e6, r1).unwrap();
        let d2 = DerivedParams::from_scaled(1e8, r2).unwrap();
        let l1 = log_rate_above_asymptotic(p, &d1, phi).unwrap() - log_rate_above_asymptotic(p, &d1, 0.0).unwrap();
        let l2 = log_rate_above_asymptotic(p, &d2, phi).unwrap() - log_rate_above_asymptotic(p, &d2, 0.0).unwrap();
        prop_assert!((l1.exp() - l2.exp()).abs() < 1e-12);
    }
}

#[test]
fn engines_agree_below_threshold() {
    let d = DerivedParams::from_scaled(1e6, 0.5).unwrap();
    for p in 1..=6 {
        let e = RateEngine::new(p, &d, MomentModel::Factorized).unwrap();
        for phi in [0.0, 0.3, 1.0, 2.0] {
            let a = rate_below(p, 0.5, phi).unwrap();
            assert!(((e.rate(phi) - a) / a).abs() < 1e-10, "p={p} phi={phi}");
        }
    }
}

#[test]
fn opa_floor() {
    assert!(r_from_gain(3.0).unwrap() < 1.0);
    let v = opa_visibility(2, 6.0, phase_grid(720)).unwrap();
    assert!((v - 0.2).abs() < 0.005);
}
