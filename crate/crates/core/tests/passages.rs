//! Distributional checks on the first-passage sampler against closed forms.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use subordinator_lab::limits::{ks_two_sample, wilson_interval, EmpiricalCdf};
use subordinator_lab::{
    batch_passages, beta_cdf, ks_distance, PassageSample, SubordinatorSpec, TruncationPolicy,
};

fn ratios(samples: &[PassageSample]) -> EmpiricalCdf {
    EmpiricalCdf::from_samples(samples).unwrap()
}

#[test]
fn compound_poisson_zero_undershoot_mass() {
    // X_{T(s)−} = 0 exactly when the first Exp(1) jump exceeds s.
    let cp = SubordinatorSpec::compound_poisson_exp(1.0, 1.0).unwrap();
    for (s, seed) in [(1.0, 11), (2.5, 12)] {
        let samples = batch_passages(&cp, s, &TruncationPolicy::default(), 100_000, seed).unwrap();
        let hits = samples.iter().filter(|p| p.undershoot == 0.0).count();
        let p = wilson_interval(hits, samples.len());
        let want = (-s).exp();
        let half = (p.ci_high - p.ci_low) / 2.0;
        assert!((p.p_hat - want).abs() < 2.0 * half, "s={s}: {} vs {want}", p.p_hat);
        assert!(samples.iter().all(|p| !p.crept));
    }
}

#[test]
fn compound_poisson_undershoot_given_positive() {
    // With Exp(1) jumps at rate 1 the renewal measure is δ_0 + Lebesgue, so
    // P(X_{T(s)−} ∈ dy) = e^{−(s−y)} dy on (0, s), next to the atom e^{−s} at 0.
    let cp = SubordinatorSpec::compound_poisson_exp(1.0, 1.0).unwrap();
    let s = 2.0;
    let samples = batch_passages(&cp, s, &TruncationPolicy::default(), 100_000, 13).unwrap();
    let positive: Vec<f64> = samples.iter().filter(|p| p.undershoot > 0.0).map(|p| p.ratio()).collect();
    let atom = (-s).exp();
    let cdf = |u: f64| ((-(s - u * s)).exp() - atom) / (1.0 - atom);
    let d = ks_distance(&EmpiricalCdf::new(positive).unwrap(), cdf).unwrap();
    assert!(d < 0.007, "KS {d}");
}

#[test]
fn pure_drift_creeps() {
    let spec = SubordinatorSpec::pure_drift(2.0).unwrap();
    let samples = batch_passages(&spec, 3.0, &TruncationPolicy::default(), 10, 1).unwrap();
    for p in samples {
        assert!(p.crept);
        assert_eq!(p.undershoot, 3.0);
        assert_eq!(p.overshoot, 0.0);
        assert!((p.crossing_time - 1.5).abs() < 1e-12);
    }
}

#[test]
fn stable_undershoot_is_arcsine() {
    let st = SubordinatorSpec::stable(0.5, 1.0).unwrap();
    let samples = batch_passages(&st, 1.0, &TruncationPolicy::default(), 100_000, 21).unwrap();
    let mean = samples.iter().map(|p| p.ratio()).sum::<f64>() / samples.len() as f64;
    // Beta(1/2, 1/2): mean 1/2, sd 1/√8
    assert!((mean - 0.5).abs() < 4.0 * (0.125f64 / 1e5).sqrt(), "mean {mean}");
    let d = ks_distance(&ratios(&samples), |t| beta_cdf(0.5, t).unwrap()).unwrap();
    assert!(d < 0.01, "KS {d}");
}

#[test]
fn stable_ratio_law_does_not_depend_on_level() {
    let st = SubordinatorSpec::stable(0.3, 2.0).unwrap();
    let policy = TruncationPolicy::default();
    let a = batch_passages(&st, 1e-2, &policy, 50_000, 31).unwrap();
    let b = batch_passages(&st, 1e3, &policy, 50_000, 32).unwrap();
    let d = ks_two_sample(&ratios(&a), &ratios(&b)).unwrap();
    assert!(d < 0.012, "two-sample KS {d}");
    let e = ks_distance(&ratios(&a), |t| beta_cdf(0.3, t).unwrap()).unwrap();
    assert!(e < 0.01, "KS {e}");
}

#[test]
fn truncation_level_is_immaterial() {
    let st = SubordinatorSpec::stable(0.5, 1.0).unwrap();
    let coarse = batch_passages(&st, 1.0, &TruncationPolicy::new(1e-4, true).unwrap(), 100_000, 41).unwrap();
    let fine = batch_passages(&st, 1.0, &TruncationPolicy::new(1e-5, true).unwrap(), 100_000, 41).unwrap();
    let d = ks_two_sample(&ratios(&coarse), &ratios(&fine)).unwrap();
    assert!(d <= 0.01, "two-sample KS {d}");
}

#[test]
fn artificial_creep_vanishes_with_cutoff() {
    // The compensated process creeps with probability of order ε^{1−α}.
    let ts = SubordinatorSpec::tempered_stable(0.6, 1.0, 1.0).unwrap();
    let share = |eps: f64| {
        let s = batch_passages(&ts, 1.0, &TruncationPolicy::new(eps, true).unwrap(), 20_000, 43).unwrap();
        s.iter().filter(|p| p.crept).count() as f64 / s.len() as f64
    };
    let (a, b) = (share(1e-2), share(1e-4));
    let slope = (a / b).log10() / 2.0;
    assert!((slope - 0.4).abs() < 0.08, "shares {a} {b}, slope {slope}");
}

#[test]
fn wilson_interval_coverage() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (p, n, reps) = (0.07, 300, 4000);
    let covered = (0..reps)
        .filter(|_| {
            let hits = (0..n).filter(|_| rng.random::<f64>() < p).count();
            let ci = wilson_interval(hits, n);
            ci.ci_low <= p && p <= ci.ci_high
        })
        .count();
    let rate = covered as f64 / reps as f64;
    assert!((0.93..=0.97).contains(&rate), "coverage {rate}");
}
