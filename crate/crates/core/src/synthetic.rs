//! Point clouds with known intrinsic dimension, for checks and benchmarks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::pointcloud::{PointCloud, Precision};
use crate::rng::{self, Stream};

/// `cols` orthonormal vectors of length `ambient`, as a row-major
/// `cols x ambient` matrix (Gram-Schmidt on Gaussian draws).
pub fn orthonormal_frame(ambient: usize, cols: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    assert!(
        cols <= ambient,
        "cannot fit {cols} orthonormal vectors in R^{ambient}"
    );
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(cols);
    while frame.len() < cols {
        let mut v: Vec<f64> = (0..ambient).map(|_| rng.sample(StandardNormal)).collect();
        // twice is enough for numerical orthogonality
        for _ in 0..2 {
            for u in &frame {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                for (a, b) in v.iter_mut().zip(u) {
                    *a -= dot * b;
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        frame.push(v);
    }
    frame
}

/// Maps intrinsic coordinates through `frame` (one row per intrinsic axis)
/// and adds `offset`.
fn embed(intrinsic: &[Vec<f64>], frame: &[Vec<f64>], offset: &[f64]) -> Vec<f64> {
    let ambient = offset.len();
    let mut out = Vec::with_capacity(intrinsic.len() * ambient);
    for p in intrinsic {
        let mut row = offset.to_vec();
        for (c, axis) in p.iter().zip(frame) {
            for (r, a) in row.iter_mut().zip(axis) {
                *r += c * a;
            }
        }
        out.extend(row);
    }
    out
}

fn check(intrinsic: usize, ambient: usize) -> Result<()> {
    if intrinsic == 0 || intrinsic > ambient {
        return Err(Error::Argument(format!(
            "intrinsic dimension {intrinsic} must lie in 1..={ambient}"
        )));
    }
    Ok(())
}

/// `n` uniform points of the unit `d`-cube, isometrically placed in
/// `R^ambient` by a random orthonormal frame.
pub fn rotated_hypercube(n: usize, d: usize, ambient: usize, seed: u64) -> Result<PointCloud> {
    check(d, ambient)?;
    let mut rng = rng::stream(seed, Stream::Synthetic);
    let frame = orthonormal_frame(ambient, d, &mut rng);
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
        .collect();
    PointCloud::new(
        ambient,
        embed(&pts, &frame, &vec![0.0; ambient]),
        Precision::F64,
    )
}

/// A uniform sample of the unit `d`-ball in `R^d`.
pub fn uniform_ball_points(n: usize, d: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
            let r = rng.random::<f64>().powf(1.0 / d as f64);
            g.into_iter().map(|a| a * r / norm).collect()
        })
        .collect()
}

/// `n` uniform points of the unit `d`-ball placed in `R^ambient`.
pub fn rotated_ball(n: usize, d: usize, ambient: usize, seed: u64) -> Result<PointCloud> {
    check(d, ambient)?;
    let mut rng = rng::stream(seed, Stream::Synthetic);
    let frame = orthonormal_frame(ambient, d, &mut rng);
    let pts = uniform_ball_points(n, d, &mut rng);
    PointCloud::new(
        ambient,
        embed(&pts, &frame, &vec![0.0; ambient]),
        Precision::F64,
    )
}

/// Disjoint union of a 2-disk and a 5-ball (`n_each` points each, unit
/// radius) in `R^ambient`, the ball shifted far away along the first axis.
/// Returns the cloud and the true dimension of each row.
pub fn disk_and_ball(n_each: usize, ambient: usize, seed: u64) -> Result<(PointCloud, Vec<usize>)> {
    check(5, ambient)?;
    let mut rng = rng::stream(seed, Stream::Synthetic);
    let disk_frame = orthonormal_frame(ambient, 2, &mut rng);
    let ball_frame = orthonormal_frame(ambient, 5, &mut rng);
    let disk = uniform_ball_points(n_each, 2, &mut rng);
    let ball = uniform_ball_points(n_each, 5, &mut rng);
    let mut far = vec![0.0; ambient];
    far[0] = 100.0;
    let mut data = embed(&disk, &disk_frame, &vec![0.0; ambient]);
    data.extend(embed(&ball, &ball_frame, &far));
    let labels = std::iter::repeat_n(2, n_each)
        .chain(std::iter::repeat_n(5, n_each))
        .collect();
    Ok((PointCloud::new(ambient, data, Precision::F64)?, labels))
}

/// Applies one random rotation of `R^dim` followed by a random translation.
pub fn random_isometry(cloud: &PointCloud, seed: u64) -> Result<PointCloud> {
    let dim = cloud.dim();
    let mut rng = rng::stream(seed, Stream::Synthetic);
    let rot = orthonormal_frame(dim, dim, &mut rng);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect();
    let mut data = Vec::with_capacity(cloud.data().len());
    for row in cloud.rows() {
        for (axis, s) in rot.iter().zip(&shift) {
            data.push(axis.iter().zip(row).map(|(a, x)| a * x).sum::<f64>() + s);
        }
    }
    let out = PointCloud::new(dim, data, cloud.precision())?;
    match cloud.meta() {
        Some(m) => out.with_meta(m.to_vec()),
        None => Ok(out),
    }
}

/// Like [`rotated_hypercube`] but centered and scaled so that every
/// intrinsic coordinate has unit standard deviation (side `sqrt(12)`).
pub fn rotated_unit_std_hypercube(
    n: usize,
    d: usize,
    ambient: usize,
    seed: u64,
) -> Result<PointCloud> {
    check(d, ambient)?;
    let mut rng = rng::stream(seed, Stream::Synthetic);
    let frame = orthonormal_frame(ambient, d, &mut rng);
    let half = 3f64.sqrt();
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-half..half)).collect())
        .collect();
    PointCloud::new(
        ambient,
        embed(&pts, &frame, &vec![0.0; ambient]),
        Precision::F64,
    )
}
