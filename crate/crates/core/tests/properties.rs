use proptest::prelude::*;
use tmfrac::functionals::phi_p;
use tmfrac::measure::{grad_norm_pow, lq_norm_pow, DEFAULT_PANEL_ORDER};
use tmfrac::profiles::{critical_transform, normalize_subcritical, project_non_increasing, rescale};
use tmfrac::{Interpolation, RadialGrid, RadialProfile, WeightParams};

fn profile(jumps: &[f64], log_linear: bool) -> RadialProfile {
    let n = jumps.len() + 1;
    let grid = RadialGrid::log_uniform(1e-5, 5.0, n).unwrap();
    let mut values = vec![0.0; n];
    for i in (0..n - 1).rev() {
        values[i] = values[i + 1] + jumps[i];
    }
    let interp = if log_linear { Interpolation::LogLinear } else { Interpolation::Linear };
    RadialProfile::new(grid, values, interp).unwrap()
}

fn params_strategy() -> impl Strategy<Value = WeightParams> {
    (prop_oneof![Just(2.0), Just(3.0), 2.0f64..4.0], 0.0f64..3.0).prop_map(|(p, t)| WeightParams::new(p, t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dilation_laws(
        jumps in prop::collection::vec(0.01f64..1.0, 20..40),
        ll in any::<bool>(),
        params in params_strategy(),
        zeta in 0.1f64..10.0,
        tau in 0.05f64..20.0,
    ) {
        let u = profile(&jumps, ll);
        let v = rescale(&u, zeta, tau).unwrap();
        let (p, theta) = (params.p(), params.theta());
        let g = grad_norm_pow(&v, &params);
        let g_want = zeta.powf(p) * tau.powf(p - params.alpha() - 1.0) * grad_norm_pow(&u, &params);
        prop_assert!((g - g_want).abs() <= 1e-9 * g_want);
        let l = lq_norm_pow(&v, p, theta, DEFAULT_PANEL_ORDER).unwrap();
        let l_want = zeta.powf(p) * tau.powf(-(theta + 1.0)) * lq_norm_pow(&u, p, theta, DEFAULT_PANEL_ORDER).unwrap();
        prop_assert!((l - l_want).abs() <= 1e-9 * l_want);
    }

    #[test]
    fn bi_normalization_hits_both_units(
        jumps in prop::collection::vec(0.01f64..1.0, 20..40),
        ll in any::<bool>(),
        params in params_strategy(),
    ) {
        let v = normalize_subcritical(&profile(&jumps, ll), &params).unwrap();
        prop_assert!((grad_norm_pow(&v, &params) - 1.0).abs() < 1e-9);
        let l = lq_norm_pow(&v, params.p(), params.theta(), DEFAULT_PANEL_ORDER).unwrap();
        prop_assert!((l - 1.0).abs() < 1e-9);
    }

    #[test]
    fn critical_transform_pins_both_norms(
        jumps in prop::collection::vec(0.01f64..1.0, 20..40),
        params in params_strategy(),
        ratio in 0.01f64..0.99,
    ) {
        let sigma = 0.7 * params.mu_star();
        let mu = ratio * sigma;
        let w = critical_transform(&profile(&jumps, true), mu, sigma, &params).unwrap();
        let rho = ratio.powf(params.p() - 1.0);
        prop_assert!((grad_norm_pow(&w, &params) - rho).abs() < 1e-9);
        let l = lq_norm_pow(&w, params.p(), params.theta(), DEFAULT_PANEL_ORDER).unwrap();
        prop_assert!((l - (1.0 - rho)).abs() < 1e-9);
    }

    #[test]
    fn projection_is_non_increasing_and_idempotent(values in prop::collection::vec(-5.0f64..5.0, 1..60)) {
        let once = project_non_increasing(&values);
        prop_assert_eq!(once.len(), values.len());
        prop_assert!(once.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        let twice = project_non_increasing(&once);
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let s0: f64 = values.iter().sum();
        let s1: f64 = once.iter().sum();
        prop_assert!((s0 - s1).abs() < 1e-9 * (1.0 + s0.abs()));
    }

    #[test]
    fn phi_is_super_homogeneous(
        params in params_strategy(),
        t in 1e-6f64..50.0,
        rho in 1.0f64..10.0,
    ) {
        let lhs = phi_p(rho * t, &params).unwrap();
        let rhs = rho.powi(params.k0() as i32) * phi_p(t, &params).unwrap();
        prop_assert!(lhs >= rhs * (1.0 - 1e-12));
    }
}
