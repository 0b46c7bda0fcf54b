//! TwoNN intrinsic dimension estimation, globally and per neighborhood.
//!
//! For each point with nearest and second-nearest distances `r1 <= r2`, the
//! ratio `mu = r2 / r1` is Pareto distributed with shape equal to the
//! intrinsic dimension `d`, i.e. `-ln(1 - F(mu)) = d ln(mu)`. The dimension is
//! read off either as the slope of a zero-intercept least-squares line through
//! the empirical CDF (`linfit`) or as the Pareto shape MLE (`mle`).

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::{euclidean, knn_exact};
use crate::pointcloud::{PointCloud, SamplingConfig};

/// Default fraction of largest ratios dropped before the linear fit.
pub const DEFAULT_DISCARD_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    #[default]
    Linfit,
    Mle,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Linfit => "linfit",
            Estimator::Mle => "mle",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linfit" => Ok(Estimator::Linfit),
            "mle" => Ok(Estimator::Mle),
            other => Err(Error::Argument(format!(
                "unknown estimator '{other}' (expected linfit or mle)"
            ))),
        }
    }
}

/// How a ratio sample is turned into a dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub estimator: Estimator,
    /// Fraction of largest ratios dropped by `linfit`; ignored by `mle`.
    pub discard_fraction: f64,
    /// Apply `discard_fraction` inside each local neighborhood fit as well.
    pub discard_in_neighborhoods: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            estimator: Estimator::Linfit,
            discard_fraction: DEFAULT_DISCARD_FRACTION,
            discard_in_neighborhoods: true,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.discard_fraction) {
            return Err(Error::Argument(format!(
                "discard fraction must lie in [0, 1), got {}",
                self.discard_fraction
            )));
        }
        Ok(())
    }

    fn local(&self) -> FitOptions {
        FitOptions {
            discard_fraction: if self.discard_in_neighborhoods {
                self.discard_fraction
            } else {
                0.0
            },
            ..*self
        }
    }
}

/// Second-to-first neighbor distance ratios of a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSample {
    mus: Vec<f64>,
    n_dropped: usize,
}

impl RatioSample {
    /// Builds a sample from `(r1, r2)` pairs, dropping points whose first
    /// neighbor distance is 0 or whose ratio is not finite.
    pub fn from_distances(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut mus = Vec::new();
        let mut n_dropped = 0;
        for (r1, r2) in pairs {
            let mu = r2 / r1;
            if r1 > 0.0 && mu.is_finite() {
                mus.push(mu);
            } else {
                n_dropped += 1;
            }
        }
        Self { mus, n_dropped }
    }

    /// Sample of ratios given directly; values must be finite and `>= 1`.
    pub fn from_ratios(mus: Vec<f64>) -> Result<Self> {
        if let Some(bad) = mus.iter().find(|m| !m.is_finite() || **m < 1.0 - 1e-12) {
            return Err(Error::Argument(format!("invalid ratio {bad}")));
        }
        Ok(Self { mus, n_dropped: 0 })
    }

    pub fn mus(&self) -> &[f64] {
        &self.mus
    }

    pub fn n_used(&self) -> usize {
        self.mus.len()
    }

    pub fn n_dropped(&self) -> usize {
        self.n_dropped
    }
}

pub fn twonn_ratios(cloud: &PointCloud) -> Result<RatioSample> {
    if cloud.n_points() < 3 {
        return Err(Error::Argument(format!(
            "TwoNN needs at least 3 points, got {}",
            cloud.n_points()
        )));
    }
    let graph = knn_exact(cloud, 2, false)?;
    let sample = RatioSample::from_distances((0..cloud.n_points()).map(|q| {
        let d = graph.distances(q);
        (d[0], d[1])
    }));
    if sample.n_used() == 0 {
        return Err(Error::Degenerate(
            "every point has a zero-distance nearest neighbor".into(),
        ));
    }
    if sample.n_dropped() > 0 {
        log::warn!(
            "dropped {} of {} points with zero nearest-neighbor distance",
            sample.n_dropped(),
            cloud.n_points()
        );
    }
    Ok(sample)
}

/// Number of largest ratios removed for a given fraction. The small slack
/// keeps products like `0.1 * 30` from rounding up past the intended count.
fn discard_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Slope of the zero-intercept least-squares fit of `-ln(1 - F)` against
/// `ln(mu)` over the sorted ratios, with `F(mu_(i)) = i / n` and the largest
/// `ceil(discard_fraction * n)` ratios removed. The `i = n` point is never used.
pub fn fit_dimension_linfit(sample: &RatioSample, discard_fraction: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&discard_fraction) {
        return Err(Error::Argument(format!(
            "discard fraction must lie in [0, 1), got {discard_fraction}"
        )));
    }
    let n = sample.n_used();
    let mut sorted = sample.mus().to_vec();
    sorted.sort_by(f64::total_cmp);
    let keep = (n - discard_count(n, discard_fraction).min(n)).min(n.saturating_sub(1));
    if keep < 3 {
        return Err(Error::Degenerate(format!(
            "{keep} ratios left for the linear fit, need at least 3"
        )));
    }
    let nf = n as f64;
    let (mut sxy, mut sxx) = (0.0f64, 0.0f64);
    for (i, mu) in sorted[..keep].iter().enumerate() {
        let x = mu.ln();
        let y = -(1.0 - (i + 1) as f64 / nf).ln();
        sxy += x * y;
        sxx += x * x;
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("all retained ratios equal 1".into()));
    }
    Ok(sxy / sxx)
}

/// Maximum-likelihood Pareto shape `n / sum(ln mu)`.
pub fn fit_dimension_mle(sample: &RatioSample) -> Result<f64> {
    let n = sample.n_used();
    if n < 2 {
        return Err(Error::Degenerate(format!("{n} ratios, need at least 2")));
    }
    let s: f64 = sample.mus().iter().map(|m| m.ln()).sum();
    if s == 0.0 {
        return Err(Error::Degenerate("all ratios equal 1".into()));
    }
    Ok(n as f64 / s)
}

pub fn fit_dimension(
    sample: &RatioSample,
    estimator: Estimator,
    discard_fraction: f64,
) -> Result<f64> {
    match estimator {
        Estimator::Linfit => fit_dimension_linfit(sample, discard_fraction),
        Estimator::Mle => fit_dimension_mle(sample),
    }
}

pub fn twonn_global(
    cloud: &PointCloud,
    estimator: Estimator,
    discard_fraction: f64,
) -> Result<f64> {
    let sample = twonn_ratios(cloud)?;
    fit_dimension(&sample, estimator, discard_fraction)
}

/// One estimate per point of a (subsampled) cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalEstimates {
    pub values: Vec<f64>,
    /// Row id of each value in the source dump; `0..n` when the estimates
    /// were computed on the cloud directly.
    pub rows: Vec<usize>,
    pub params: Option<SamplingConfig>,
    /// Positions (into `values`) whose neighborhood fit was degenerate and
    /// therefore reported as 0.
    pub degenerate: Vec<usize>,
}

impl LocalEstimates {
    pub fn from_values(values: Vec<f64>) -> Self {
        let rows = (0..values.len()).collect();
        Self {
            values,
            rows,
            params: None,
            degenerate: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// TwoNN ratios of the points of one neighborhood, using distances within
/// the neighborhood only.
fn neighborhood_ratios(cloud: &PointCloud, members: &[usize]) -> RatioSample {
    RatioSample::from_distances(members.iter().enumerate().map(|(i, &a)| {
        let (mut r1, mut r2) = (f64::INFINITY, f64::INFINITY);
        for (j, &b) in members.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = euclidean(cloud.row(a), cloud.row(b));
            if d < r1 {
                r2 = r1;
                r1 = d;
            } else if d < r2 {
                r2 = d;
            }
        }
        (r1, r2)
    }))
}

/// L-local TwoNN: for every point `v`, the TwoNN estimate of the L-point set
/// made of `v` and its `L - 1` nearest neighbors.
///
/// A neighborhood whose fit is degenerate yields 0 and is listed in
/// [`LocalEstimates::degenerate`]; it never fails the run.
pub fn local_twonn(
    cloud: &PointCloud,
    config: &SamplingConfig,
    opts: &FitOptions,
) -> Result<LocalEstimates> {
    opts.validate()?;
    let l = config.n_neighbors;
    if l < 3 {
        return Err(Error::Argument(format!("L must be at least 3, got {l}")));
    }
    if l > cloud.n_points() {
        return Err(Error::Argument(format!(
            "L = {l} exceeds the {} points in the cloud",
            cloud.n_points()
        )));
    }
    let graph = knn_exact(cloud, l - 1, false)?;
    let local = opts.local();

    let fits: Vec<Result<f64>> = (0..cloud.n_points())
        .into_par_iter()
        .map(|q| {
            let mut members = Vec::with_capacity(l);
            members.push(q);
            members.extend_from_slice(graph.indices(q));
            let sample = neighborhood_ratios(cloud, &members);
            if sample.n_dropped() > 0 {
                log::debug!(
                    "point {q}: dropped {} zero-distance ratios from its neighborhood",
                    sample.n_dropped()
                );
            }
            fit_dimension(&sample, local.estimator, local.discard_fraction)
        })
        .collect();

    let mut values = Vec::with_capacity(fits.len());
    let mut degenerate = Vec::new();
    for (q, fit) in fits.into_iter().enumerate() {
        match fit {
            Ok(v) if v.is_finite() && v >= 0.0 => values.push(v),
            Ok(v) => {
                log::debug!("point {q}: fit returned {v}, reporting 0");
                degenerate.push(q);
                values.push(0.0);
            }
            Err(e) => {
                log::debug!("point {q}: {e}");
                degenerate.push(q);
                values.push(0.0);
            }
        }
    }
    if !degenerate.is_empty() {
        log::warn!(
            "{} of {} neighborhoods had a degenerate fit and were set to 0",
            degenerate.len(),
            values.len()
        );
    }
    Ok(LocalEstimates {
        rows: (0..values.len()).collect(),
        values,
        params: Some(*config),
        degenerate,
    })
}
