//! End-to-end estimator checks against generators with a known dimension.

use lidscope::synthetic::{random_isometry, rotated_hypercube};
use lidscope::twonn::fit_dimension;
use lidscope::{
    fit_dimension_linfit, fit_dimension_mle, local_twonn, twonn_global, twonn_ratios, Estimator,
    FitOptions, PointCloud, RatioSample, SamplingConfig,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Inverse-CDF draws from Pareto(shape d) on [1, inf).
fn pareto(n: usize, d: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            (1.0 - u).powf(-1.0 / d)
        })
        .collect()
}

#[test]
fn pareto_samples_recover_shape() {
    let s5 = RatioSample::from_ratios(pareto(100_000, 5.0, 11)).unwrap();
    let d = fit_dimension_linfit(&s5, 0.1).unwrap();
    assert!((4.8..=5.2).contains(&d), "linfit {d}");
    let s3 = RatioSample::from_ratios(pareto(100_000, 3.0, 12)).unwrap();
    let d = fit_dimension_mle(&s3).unwrap();
    assert!((2.95..=3.05).contains(&d), "mle {d}");
}

fn both(cloud: &PointCloud) -> (f64, f64) {
    let r = twonn_ratios(cloud).unwrap();
    (
        fit_dimension(&r, Estimator::Linfit, 0.1).unwrap(),
        fit_dimension(&r, Estimator::Mle, 0.1).unwrap(),
    )
}

#[test]
fn known_manifolds_and_estimator_agreement() {
    let cases = [
        // (d, ambient, target, tolerance)
        (1, 10, 1.0, 0.1),
        (2, 128, 2.0, 0.1),
        (3, 32, 3.0, 0.3),
        (5, 128, 5.0, 0.5),
    ];
    for (d, ambient, target, tol) in cases {
        let cloud = rotated_hypercube(10_000, d, ambient, 40 + d as u64).unwrap();
        let (lin, mle) = both(&cloud);
        assert!((lin - target).abs() <= tol, "d={d}: linfit {lin}");
        assert!(
            (lin - mle).abs() / d as f64 <= 0.1,
            "d={d}: linfit {lin} vs mle {mle}"
        );
    }
}

#[test]
fn square_in_128_dims_within_five_percent() {
    let cloud = rotated_hypercube(10_000, 2, 128, 7).unwrap();
    let d = twonn_global(&cloud, Estimator::Linfit, 0.1).unwrap();
    assert!((1.9..=2.1).contains(&d), "{d}");
}

/// Kolmogorov-Smirnov statistic of `mus` against Pareto(shape d).
fn ks_pareto(mus: &[f64], d: f64) -> f64 {
    let mut v = mus.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &m)| {
            let f = 1.0 - m.powf(-d);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn square_ratios_pass_ks_against_pareto_two() {
    let mut passed = 0;
    for seed in 0..5 {
        let cloud = rotated_hypercube(10_000, 2, 2, 100 + seed).unwrap();
        let r = twonn_ratios(&cloud).unwrap();
        let stat = ks_pareto(r.mus(), 2.0);
        // alpha = 0.01 critical value
        if stat < 1.628 / (r.n_used() as f64).sqrt() {
            passed += 1;
        }
    }
    assert!(passed >= 3, "{passed}/5 seeds pass");
}

fn std(values: &[f64]) -> f64 {
    let m = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

#[test]
fn local_spread_shrinks_as_neighborhoods_grow() {
    let ls = [16, 32, 64, 128, 256];
    let mut monotone = 0;
    for seed in 0..5 {
        let cloud = rotated_hypercube(4000, 3, 8, 200 + seed).unwrap();
        let spreads: Vec<f64> = ls
            .iter()
            .map(|&l| {
                let cfg = SamplingConfig {
                    n_tokens: 4000,
                    n_neighbors: l,
                    ..Default::default()
                };
                std(&local_twonn(&cloud, &cfg, &FitOptions::default())
                    .unwrap()
                    .values)
            })
            .collect();
        if spreads.windows(2).all(|w| w[1] <= w[0]) {
            monotone += 1;
        }
    }
    assert!(monotone >= 3, "{monotone}/5 seeds monotone");
}

#[test]
fn saturated_neighborhoods_equal_global() {
    let cloud = rotated_hypercube(64, 3, 6, 5).unwrap();
    let cfg = SamplingConfig {
        n_tokens: 64,
        n_neighbors: 64,
        ..Default::default()
    };
    for estimator in [Estimator::Linfit, Estimator::Mle] {
        let opts = FitOptions {
            estimator,
            ..Default::default()
        };
        let global = twonn_global(&cloud, estimator, opts.discard_fraction).unwrap();
        let local = local_twonn(&cloud, &cfg, &opts).unwrap();
        for v in &local.values {
            assert!((v - global).abs() <= 1e-9 * global, "{v} vs {global}");
        }
    }
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            if x == y {
                0.0
            } else {
                (x - y).abs() / x.abs().max(y.abs())
            }
        })
        .fold(0.0, f64::max)
}

fn local(cloud: &PointCloud) -> Vec<f64> {
    let cfg = SamplingConfig {
        n_tokens: cloud.n_points(),
        n_neighbors: 24,
        ..Default::default()
    };
    local_twonn(cloud, &cfg, &FitOptions::default())
        .unwrap()
        .values
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scaling_leaves_local_estimates_unchanged(seed in any::<u64>(), exp in -3i32..=3) {
        let cloud = rotated_hypercube(200, 3, 10, seed).unwrap();
        let c = 10f64.powi(exp);
        let scaled = cloud.map_values(|_, v| v * c).unwrap();
        prop_assert!(max_rel(&local(&cloud), &local(&scaled)) <= 1e-9);
    }

    #[test]
    fn isometries_leave_local_estimates_unchanged(seed in any::<u64>()) {
        let cloud = rotated_hypercube(200, 3, 10, seed).unwrap();
        let moved = random_isometry(&cloud, seed ^ 0x5eed).unwrap();
        prop_assert!(max_rel(&local(&cloud), &local(&moved)) <= 1e-6);
    }
}
