//! Experiment-level computations on top of local estimates.

mod compare;
mod layers;
mod noise;
mod sweep;
mod track;

pub use compare::{
    compare_cohorts, paired_token_compare, standardized_mean_difference, ComparisonReport,
    TokenDelta,
};
pub use layers::{layer_profile, LayerFailure, LayerProfile, LayerRow};
pub use noise::{add_gaussian_noise, hausdorff, noise_sweep, HausdorffDistance, NoiseReport};
pub use sweep::{sensitivity_sweep, sweep_cloud, SweepFailure, SweepGrid, SweepResult, SweepRow};
pub use track::{build_series, track_checkpoints, CheckpointPoint, CheckpointSeries, TrackOptions};
