//! Local intrinsic dimension estimation for contextual-embedding point clouds.
//!
//! The pipeline takes an embedding dump, optionally subsamples source
//! sequences, removes duplicate vectors, draws a seeded token sample, builds
//! exact L-nearest-neighbor neighborhoods and fits a TwoNN estimate inside
//! each one. [`analysis`] builds cohort comparisons, noise sweeps,
//! sensitivity sweeps, layer profiles and checkpoint series on top.

pub mod analysis;
pub mod error;
pub mod io;
pub mod knn;
pub mod pipeline;
pub mod pointcloud;
pub mod rng;
pub mod selftest;
pub mod summary;
pub mod synthetic;
pub mod twonn;

pub use error::{Error, Result};
pub use knn::{knn_exact, pairwise_distance, NeighborGraph};
pub use pipeline::{run_pipeline, PipelineOutput, StageCounts};
pub use pointcloud::{PointCloud, Precision, SamplingConfig, TokenMeta};
pub use summary::{summarize, EstimateSummary};
pub use twonn::{
    fit_dimension_linfit, fit_dimension_mle, local_twonn, twonn_global, twonn_ratios, Estimator,
    FitOptions, LocalEstimates, RatioSample,
};
