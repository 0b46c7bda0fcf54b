//! Gaussian perturbation of point clouds and the resulting shift in
//! estimates, measured against the Hausdorff distance to the clean cloud.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::knn_between;
use crate::pipeline::sample_rows;
use crate::pointcloud::{shuffled_prefix, PointCloud, SamplingConfig};
use crate::rng::{self, Stream};
use crate::summary::{mean, sample_std};
use crate::twonn::{local_twonn, twonn_global, FitOptions};

/// Adds an independent `N(0, sigma^2)` draw to every coordinate. `sigma = 0`
/// returns a bit-identical copy.
pub fn add_gaussian_noise(cloud: &PointCloud, sigma: f64, seed: u64) -> Result<PointCloud> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::Argument(format!(
            "noise sigma must be finite and non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(cloud.clone());
    }
    let mut rng = rng::stream(seed, Stream::Noise);
    cloud.map_values(|_, v| {
        let z: f64 = StandardNormal.sample(&mut rng);
        v + sigma * z
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HausdorffDistance {
    pub value: f64,
    /// max over `a` of the distance to the nearest point of `b`
    pub a_to_b: f64,
    pub b_to_a: f64,
    /// Computed on seeded subsamples rather than the full sets.
    pub approximate: bool,
}

fn directed(from: &PointCloud, to: &PointCloud) -> Result<f64> {
    let g = knn_between(from, to, 1)?;
    Ok((0..from.n_points())
        .map(|q| g.distances(q)[0])
        .fold(0.0, f64::max))
}

/// Symmetric Hausdorff distance `max(h(a, b), h(b, a))`. Exact unless
/// `approx_subsample` is given, in which case both sides are reduced to a
/// seeded sample of that size first.
pub fn hausdorff(
    a: &PointCloud,
    b: &PointCloud,
    approx_subsample: Option<usize>,
    seed: u64,
) -> Result<HausdorffDistance> {
    if a.dim() != b.dim() {
        return Err(Error::Argument(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::Argument("Hausdorff distance of an empty set".into()));
    }
    let (a, b, approximate) = match approx_subsample {
        Some(0) => {
            return Err(Error::Argument(
                "Hausdorff subsample size must be >= 1".into(),
            ))
        }
        Some(n) if n < a.n_points() || n < b.n_points() => {
            let mut rng = rng::stream(seed, Stream::Hausdorff);
            let ia = shuffled_prefix(a.n_points(), n, &mut rng);
            let ib = shuffled_prefix(b.n_points(), n, &mut rng);
            (a.select(&ia), b.select(&ib), true)
        }
        _ => (a.clone(), b.clone(), false),
    };
    let a_to_b = directed(&a, &b)?;
    let b_to_a = directed(&b, &a)?;
    Ok(HausdorffDistance {
        value: a_to_b.max(b_to_a),
        a_to_b,
        b_to_a,
        approximate,
    })
}

/// One (sigma, seed) cell of a noise sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub sigma: f64,
    pub seed: u64,
    pub hausdorff: f64,
    pub hausdorff_approximate: bool,
    pub global_clean: f64,
    pub global_noisy: f64,
    pub mean_local_clean: f64,
    pub mean_local_noisy: f64,
    pub std_local_clean: f64,
    pub std_local_noisy: f64,
}

/// Perturbs the token sample of `cloud` (after de-duplication and
/// subsampling) for every `(sigma, seed)` pair and reports the Hausdorff
/// distance to the clean sample together with the global estimate and the
/// mean and spread of the local estimates. Rows come out sigma-major.
pub fn noise_sweep(
    cloud: &PointCloud,
    sigmas: &[f64],
    seeds: &[u64],
    config: &SamplingConfig,
    opts: &FitOptions,
    hausdorff_subsample: Option<usize>,
) -> Result<Vec<NoiseReport>> {
    if sigmas.is_empty() || seeds.is_empty() {
        return Err(Error::Argument(
            "noise sweep needs at least one sigma and one seed".into(),
        ));
    }
    if let Some(bad) = sigmas.iter().find(|s| s.is_nan() || **s < 0.0) {
        return Err(Error::Argument(format!("negative noise sigma {bad}")));
    }
    let (rows, _) = sample_rows(cloud, config)?;
    let clean = cloud.select(&rows);
    let global_clean = twonn_global(&clean, opts.estimator, opts.discard_fraction)?;
    let local_clean = local_twonn(&clean, config, opts)?;
    let mean_local_clean = mean(&local_clean.values);
    let std_local_clean = sample_std(&local_clean.values, mean_local_clean);

    let mut reports = Vec::with_capacity(sigmas.len() * seeds.len());
    for &sigma in sigmas {
        for &seed in seeds {
            let noisy = add_gaussian_noise(&clean, sigma, seed)?;
            let h = hausdorff(&clean, &noisy, hausdorff_subsample, seed)?;
            let global_noisy = twonn_global(&noisy, opts.estimator, opts.discard_fraction)?;
            let local = local_twonn(&noisy, config, opts)?;
            let m = mean(&local.values);
            reports.push(NoiseReport {
                sigma,
                seed,
                hausdorff: h.value,
                hausdorff_approximate: h.approximate,
                global_clean,
                global_noisy,
                mean_local_clean,
                mean_local_noisy: m,
                std_local_clean,
                std_local_noisy: sample_std(&local.values, m),
            });
        }
    }
    Ok(reports)
}
