use proptest::prelude::*;
use sbl_core::bounds::{
    cheeger_lambda1, eigenvalue_sum_bound, growth_constants, in_alpha_lower_bound, lambda1_lower_bound,
    lambda_k_lower_bound, sobolev_constants, volume_ratio_bound, BoundChain, GeometricHypotheses, VolumeComparison,
};
use sbl_core::LogScalar;
use std::f64::consts::PI;

fn hyp(m: u32, k: f64, l: f64, d: f64, v: f64) -> GeometricHypotheses {
    GeometricHypotheses::new(m, k, l, d, Some(v)).unwrap()
}

fn arb_hypotheses() -> impl Strategy<Value = GeometricHypotheses> {
    (2u32..=6, 0.0..3.0f64, 0.0..3.0f64, 0.1..10.0f64, 0.1..100.0f64).prop_map(|(m, k, l, d, v)| hyp(m, k, l, d, v))
}

#[test]
fn sphere_chain_constants() {
    let chain = BoundChain::evaluate(&hyp(2, 0.0, 0.0, PI, 4.0 * PI)).unwrap();
    assert!((chain.c0.value() - 3.957_858_736_028_819e-8).abs() < 1e-20);
    assert!((chain.in_alpha.log_value() - (-7.829_341_613_517_327)).abs() < 1e-12);
    assert!((chain.sobolev.geometric_factor.value() - 1.0 / (800.0 * PI)).abs() < 1e-16);
}

#[test]
fn hypotheses_serialize_with_symbol_names() {
    let json = serde_json::to_string(&hyp(3, 0.5, 0.25, 2.0, 8.0)).unwrap();
    assert_eq!(json, r#"{"m":3,"K":0.5,"L":0.25,"D":2.0,"V":8.0}"#);
}

#[test]
fn growth_constant_bounded_by_first_eigenvalue_bound() {
    for m in 2..=5 {
        let h = hyp(m, 0.3, 0.2, 2.0, 5.0);
        let (_, c) = growth_constants(&h).unwrap();
        assert!(c.log_value() <= lambda1_lower_bound(&h).unwrap().log_value());
        assert_eq!(lambda_k_lower_bound(&h, 1).unwrap(), lambda1_lower_bound(&h).unwrap());
    }
}

#[test]
fn volume_ratio_is_one_without_curvature_or_drift() {
    let h = hyp(3, 0.0, 0.0, 1.0, 1.0);
    assert_eq!(volume_ratio_bound(&h, 0.1, 0.5, VolumeComparison::BallVolume).unwrap(), 1.0);
    assert!(volume_ratio_bound(&h, 0.5, 0.5, VolumeComparison::BallVolume).is_err());
    let area = volume_ratio_bound(&h, 0.1, 0.5, VolumeComparison::AreaElement).unwrap();
    assert!((area - 25.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn cheeger_of_isoperimetric_is_c0(h in arb_hypotheses()) {
        let in1 = in_alpha_lower_bound(&h, 1.0, h.diameter_upper, h.volume.unwrap()).unwrap();
        let composed = cheeger_lambda1(in1);
        let c0 = lambda1_lower_bound(&h).unwrap();
        prop_assert!((composed.log_value() - c0.log_value()).abs() <= 1e-12 * c0.log_value().abs());
    }

    #[test]
    fn bounds_decrease_in_curvature_and_drift(h in arb_hypotheses(), dk in 0.01..1.0f64, dl in 0.01..1.0f64) {
        let worse = GeometricHypotheses { curvature_bound: h.curvature_bound + dk, gradient_bound: h.gradient_bound + dl, ..h };
        prop_assert!(lambda1_lower_bound(&worse).unwrap() < lambda1_lower_bound(&h).unwrap());
        let s = sobolev_constants(&h).unwrap();
        let sw = sobolev_constants(&worse).unwrap();
        prop_assert!(sw.geometric_factor < s.geometric_factor);
    }

    #[test]
    fn sobolev_factor_is_critical_isoperimetric_bound(h in arb_hypotheses()) {
        let m = h.dimension as f64;
        let alpha = if h.dimension >= 3 { m / (m - 1.0) } else { 4.0 / 3.0 };
        let iso = in_alpha_lower_bound(&h, alpha, h.diameter_upper, 1.0).unwrap();
        let s = sobolev_constants(&h).unwrap();
        prop_assert!(s.geometric_factor.approx_eq(iso, 1e-12));
        prop_assert!(s.c2.approx_eq(s.c1 * LogScalar::from_value(s.raw_dim_c2), 1e-12));
    }

    #[test]
    fn isoperimetric_bound_vanishes_above_critical_exponent(h in arb_hypotheses(), extra in 0.01..2.0f64) {
        let m = h.dimension as f64;
        let z = in_alpha_lower_bound(&h, m / (m - 1.0) + extra, 1.0, 1.0).unwrap();
        prop_assert!(z.is_zero());
    }

    #[test]
    fn sum_bound_exceeds_trivial_sum(h in arb_hypotheses(), lambda in 0.01..1e3f64) {
        // the sum of k eigenvalues up to lambda_k is at most k lambda_k, and the bound is far above
        let bound = eigenvalue_sum_bound(&h, lambda).unwrap();
        prop_assert!(bound.log_value() > lambda.ln());
    }

    #[test]
    fn lambda_k_bound_is_increasing_in_k(h in arb_hypotheses(), k in 2u32..200) {
        let a = lambda_k_lower_bound(&h, k).unwrap();
        let b = lambda_k_lower_bound(&h, k + 1).unwrap();
        prop_assert!(a < b);
    }
}
