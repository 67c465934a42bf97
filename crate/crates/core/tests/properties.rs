use proptest::prelude::*;

use subordinator_lab::harness::ExperimentConfig;
use subordinator_lab::limits::{wilson_interval, EmpiricalCdf};
use subordinator_lab::regvar::{potter_c_grid, potter_s_grid};
use subordinator_lab::{
    batch_passages, beta_cdf, beta_cdf_small_t_asymptote, dl_theoretical, ks_distance, lde_target, phi,
    potter_check, SlowVaryingFn, SubordinatorSpec, TruncationPolicy,
};

fn any_spec() -> impl Strategy<Value = SubordinatorSpec> {
    prop_oneof![
        (0.05..0.95f64, 0.1..10.0f64).prop_map(|(a, c)| SubordinatorSpec::stable(a, c).unwrap()),
        (0.05..0.95f64, 0.01..5.0f64, 0.1..10.0f64)
            .prop_map(|(a, t, c)| SubordinatorSpec::tempered_stable(a, t, c).unwrap()),
        (0.1..10.0f64, 0.1..10.0f64).prop_map(|(r, m)| SubordinatorSpec::compound_poisson_exp(r, m).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_is_nondecreasing(spec in any_spec(), lam in 1e-3..1e3f64, factor in 1.0..10.0f64, d in 0.0..2.0f64) {
        let spec = spec.with_drift(d).unwrap();
        let lo = phi(&spec, lam).unwrap();
        let hi = phi(&spec, lam * factor).unwrap();
        prop_assert!(lo >= 0.0);
        prop_assert!(hi >= lo * (1.0 - 1e-10), "Φ({}) = {} < Φ({}) = {}", lam * factor, hi, lam, lo);
    }

    #[test]
    fn beta_cdf_is_a_cdf(alpha in 0.02..0.98f64, t in 0.0..1.0f64, u in 0.0..1.0f64) {
        let (a, b) = if t <= u { (t, u) } else { (u, t) };
        let fa = beta_cdf(alpha, a).unwrap();
        let fb = beta_cdf(alpha, b).unwrap();
        prop_assert!((0.0..=1.0).contains(&fa) && (0.0..=1.0).contains(&fb));
        prop_assert!(fb >= fa - 1e-14);
        // Beta(α, 1−α) reflected is Beta(1−α, α)
        let refl = 1.0 - beta_cdf(1.0 - alpha, 1.0 - t).unwrap();
        prop_assert!((beta_cdf(alpha, t).unwrap() - refl).abs() < 1e-12);
    }

    #[test]
    fn constant_ell_target_is_the_asymptote(alpha in 0.05..0.95f64, s in 1.0..1e8f64, c in 1e-6..0.5f64, k in 0.1..10.0f64) {
        let got = lde_target(alpha, &SlowVaryingFn::constant(k), s, c).unwrap();
        let want = beta_cdf_small_t_asymptote(alpha, c);
        prop_assert!((got - want).abs() <= 1e-13 * want);
    }

    #[test]
    fn double_transform_bounds(spec in any_spec(), q in 0.01..10.0f64, lam in 0.01..10.0f64, factor in 1.0..5.0f64) {
        let v = dl_theoretical(&spec, q, lam).unwrap();
        let w = dl_theoretical(&spec, q, lam * factor).unwrap();
        prop_assert!(v > 0.0 && v <= (1.0 / q) * (1.0 + 1e-12));
        prop_assert!(w <= v * (1.0 + 1e-10));
    }

    #[test]
    fn wilson_interval_brackets_estimate(n in 1usize..100_000, frac in 0.0..=1.0f64) {
        let hits = ((n as f64) * frac).floor() as usize;
        let p = wilson_interval(hits, n);
        prop_assert!(0.0 <= p.ci_low && p.ci_low <= p.p_hat + 1e-15);
        prop_assert!(p.p_hat <= p.ci_high + 1e-15 && p.ci_high <= 1.0);
    }

    #[test]
    fn ks_distance_is_bounded(xs in prop::collection::vec(0.0..1.0f64, 1..200)) {
        let ecdf = EmpiricalCdf::new(xs).unwrap();
        let d = ks_distance(&ecdf, |x| x.clamp(0.0, 1.0)).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!(d >= 0.5 / ecdf.len() as f64 - 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn passages_satisfy_invariants(spec in any_spec(), s in 0.01..100.0f64, seed in any::<u64>()) {
        let samples = batch_passages(&spec, s, &TruncationPolicy::default(), 50, seed).unwrap();
        for p in &samples {
            prop_assert!(p.invariants_hold(), "{:?}", p);
        }
    }

    #[test]
    fn batches_are_reproducible(spec in any_spec(), s in 0.01..100.0f64, seed in any::<u64>()) {
        let policy = TruncationPolicy::default();
        prop_assert_eq!(
            batch_passages(&spec, s, &policy, 20, seed).unwrap(),
            batch_passages(&spec, s, &policy, 20, seed).unwrap()
        );
    }

    #[test]
    fn potter_is_monotone_in_epsilon(eps in 0.02..0.5f64, bump in 0.0..0.5f64, rho in 0.0..0.6f64) {
        let c = potter_c_grid();
        for ell in [SlowVaryingFn::log_shift(), SlowVaryingFn::iter_log(), SlowVaryingFn::power_probe(rho)] {
            let s = potter_s_grid(ell.varying_at);
            let small = potter_check(&ell, eps, &s, &c).unwrap();
            let large = potter_check(&ell, eps + bump, &s, &c).unwrap();
            prop_assert!(!small.holds || large.holds, "{} holds at ε={} but not at {}", ell.name(), eps, eps + bump);
        }
    }

    #[test]
    fn config_hash_ignores_key_order_and_output(seed in any::<u64>(), n in 1usize..1_000_000, s in 0.1..1e4f64) {
        let a = format!(
            r#"{{"experiment": "verify-dl", "spec": {{"drift": 0.0, "family": {{"kind": "stable", "alpha": 0.5, "scale": 1.0}}}}, "alpha": 0.5, "s_list": [{s}], "n": {n}, "seed": {seed}}}"#
        );
        let b = format!(
            r#"{{"seed": {seed}, "n": {n}, "output": "elsewhere.csv", "s_list": [{s}], "alpha": 0.5, "spec": {{"family": {{"scale": 1.0, "alpha": 0.5, "kind": "stable"}}, "drift": 0.0}}, "experiment": "verify-dl"}}"#
        );
        let ha = ExperimentConfig::from_json(&a).unwrap().hash();
        let hb = ExperimentConfig::from_json(&b).unwrap().hash();
        prop_assert_eq!(&ha, &hb);
        let c = a.replace(&format!("\"seed\": {seed}"), &format!("\"seed\": {}", seed ^ 1));
        prop_assert_ne!(ha, ExperimentConfig::from_json(&c).unwrap().hash());
    }
}
