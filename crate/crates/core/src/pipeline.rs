//! The end-to-end estimation pipeline: sequence subsample, de-duplication,
//! token subsample, neighborhoods, local TwoNN, summary.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pointcloud::{
    dedup_indices, sequence_subsample_indices, token_subsample_indices, PointCloud, SamplingConfig,
};
use crate::summary::{summarize, EstimateSummary};
use crate::twonn::{local_twonn, FitOptions, LocalEstimates};

/// Point counts after each sampling stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub input: usize,
    pub after_sequences: usize,
    pub after_dedup: usize,
    pub sampled: usize,
    /// True when N was at least the de-duplicated size, so the whole cloud
    /// was used.
    pub token_saturated: bool,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// The analyzed token sample, in sample order.
    pub sample: PointCloud,
    /// Estimates aligned with `sample`; `rows` refers to the input cloud.
    pub estimates: LocalEstimates,
    pub summary: EstimateSummary,
    pub counts: StageCounts,
}

/// Rows of `cloud` that make up the token sample for `config`, in sample
/// order, plus the stage counts.
pub fn sample_rows(
    cloud: &PointCloud,
    config: &SamplingConfig,
) -> Result<(Vec<usize>, StageCounts)> {
    config.validate()?;
    let seq_rows: Vec<usize> = match config.m_sequences {
        Some(m) => sequence_subsample_indices(cloud, m, config.seed)?,
        None => (0..cloud.n_points()).collect(),
    };
    let seq_cloud = cloud.select(&seq_rows);
    let unique: Vec<usize> = dedup_indices(&seq_cloud)
        .into_iter()
        .map(|i| seq_rows[i])
        .collect();
    let picks = token_subsample_indices(unique.len(), config.n_tokens, config.seed)?;
    let rows: Vec<usize> = picks.into_iter().map(|i| unique[i]).collect();
    let counts = StageCounts {
        input: cloud.n_points(),
        after_sequences: seq_rows.len(),
        after_dedup: unique.len(),
        sampled: rows.len(),
        token_saturated: config.n_tokens >= unique.len(),
    };
    Ok((rows, counts))
}

pub fn run_pipeline(
    cloud: &PointCloud,
    config: &SamplingConfig,
    opts: &FitOptions,
) -> Result<PipelineOutput> {
    opts.validate()?;
    let (rows, counts) = sample_rows(cloud, config)?;
    let sample = cloud.select(&rows);
    let mut estimates = local_twonn(&sample, config, opts)?;
    estimates.rows = rows;
    let summary = summarize(&estimates.values)?;
    Ok(PipelineOutput {
        sample,
        estimates,
        summary,
        counts,
    })
}
