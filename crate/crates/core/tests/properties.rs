use proptest::prelude::*;

use trimerlab::analysis::{
    alpha2_from_mass_ratio, alpha_d2, alpha_eff2, fit_fermion_tail, fit_subcritical_tail, fit_threshold_tail,
    mass_ratio_map, predict_spectrum,
};
use trimerlab::hyperangular::log_grid;
use trimerlab::hyperradial::{solve_bound_states, BoundOptions, PotentialSource, TailModel};
use trimerlab::model::TWO_MU;

fn sub_w(r: &[f64], beta: f64, delta: f64, r0: f64) -> Vec<f64> {
    r.iter().map(|v| -(beta * (v / r0).ln() + delta).sqrt() / (TWO_MU * v * v)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subcritical_fit_is_exact_on_model_data(beta in 1e-3f64..0.5, delta in -0.1f64..1.0) {
        let r = log_grid(1e2, 1e6, 10).unwrap();
        let w = sub_w(&r, beta, delta, 1.0);
        let f = fit_subcritical_tail(&r, &w, (1e2, 1e6), 1.0).unwrap();
        prop_assert!((f.param("beta") - beta).abs() < 1e-8 * beta.max(1e-2));
        prop_assert!((f.param("delta") - delta).abs() < 1e-7);
    }

    #[test]
    fn rescaling_r0_shifts_delta(beta in 1e-3f64..0.5, delta in 0.05f64..1.0, s in 0.2f64..5.0) {
        // Same data, lengths measured in units of s: beta is unchanged and
        // delta absorbs beta ln s.
        let r = log_grid(1e2, 1e6, 10).unwrap();
        let w = sub_w(&r, beta, delta, 1.0);
        let a = fit_subcritical_tail(&r, &w, (1e2, 1e6), 1.0).unwrap();
        let b = fit_subcritical_tail(&r, &w, (1e2, 1e6), s).unwrap();
        prop_assert!((a.param("beta") - b.param("beta")).abs() < 1e-8);
        prop_assert!((b.param("delta") - (a.param("delta") + a.param("beta") * s.ln())).abs() < 1e-7);
    }

    #[test]
    fn threshold_fit_is_exact_on_model_data(a in 0.0f64..5.0, e in -1.0f64..-1e-12) {
        let r = log_grid(1e2, 1e4, 10).unwrap();
        let w: Vec<f64> = r.iter().map(|v| e - (a + 0.25) / (TWO_MU * v * v)).collect();
        let f = fit_threshold_tail(&r, &w, Some(e), (1e2, 1e4), 1.0).unwrap();
        prop_assert!((f.param("alpha_eff2") - a).abs() < 1e-6 * (1.0 + a));
    }

    #[test]
    fn fermion_fit_is_exact_on_model_data(a in 0.5f64..10.0, g in -1.5f64..5.0) {
        let r = log_grid(10.0, 1e6, 10).unwrap();
        let w: Vec<f64> = r.iter().map(|v| -(a + 0.25 + g / v.ln()) / (TWO_MU * v * v)).collect();
        let f = fit_fermion_tail(&r, &w, (10.0, 1e6), 1.0).unwrap();
        prop_assert!((f.param("alpha_eff2") - a).abs() < 1e-8 * a);
        prop_assert!((f.param("gamma") - g).abs() < 1e-7);
    }

    #[test]
    fn dimer_threshold_strength_is_marginal(l in 0u32..6) {
        prop_assert!(alpha_eff2(alpha_d2(l), l).abs() < 1e-12);
    }

    #[test]
    fn mass_ratio_map_is_monotone(a in 0.05f64..1.95, d in 0.01f64..0.05) {
        let lo = mass_ratio_map(a).unwrap();
        let hi = mass_ratio_map(a + d).unwrap();
        prop_assert!(hi > lo);
        prop_assert!((alpha2_from_mass_ratio(lo).unwrap() - a).abs() < 1e-6);
    }

    #[test]
    fn predicted_ladder_ratios_grow(beta in 0.005f64..0.05, rm in 10.0f64..1e3) {
        prop_assume!(beta * rm.ln() > 1.0 / 16.0 + 0.01);
        let p = predict_spectrum(beta, rm, -1e-3, 8).unwrap();
        // The attraction weakens with size, so successive ratios grow.
        let q: Vec<f64> = p.energies.windows(2).map(|w| w[1] / w[0]).collect();
        prop_assert!(p.energies.iter().all(|e| *e < 0.0));
        prop_assert!(q.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn moving_the_wall_inward_deepens_every_level(c in 3.0f64..12.0, wall in 1.0f64..20.0) {
        let tail = TailModel::PureInverseSquare { coefficient: c };
        let opts = BoundOptions { x_max: 12f64, ..Default::default() };
        let near = solve_bound_states(&PotentialSource::model(tail, 1.0, Some(wall)).unwrap(), 3, &opts).unwrap();
        let far = solve_bound_states(&PotentialSource::model(tail, 1.0, Some(0.5 * wall)).unwrap(), 3, &opts).unwrap();
        prop_assert!(far.states.len() >= near.states.len());
        for (a, b) in near.states.iter().zip(&far.states) {
            prop_assert!(b.e < a.e);
        }
    }
}
