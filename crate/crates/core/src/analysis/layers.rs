use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::pipeline::{run_pipeline, StageCounts};
use crate::pointcloud::{load_point_cloud, SamplingConfig};
use crate::summary::EstimateSummary;
use crate::twonn::FitOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRow {
    pub layer: i64,
    pub summary: EstimateSummary,
    pub counts: StageCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFailure {
    pub layer: i64,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LayerProfile {
    /// Ordered by layer index.
    pub rows: Vec<LayerRow>,
    pub missing: Vec<LayerFailure>,
}

/// Runs the pipeline with the same sampling configuration on one dump per
/// layer. Layers whose dump cannot be loaded or processed are reported in
/// `missing` and skipped.
pub fn layer_profile(
    dumps: &BTreeMap<i64, PathBuf>,
    config: &SamplingConfig,
    opts: &FitOptions,
) -> LayerProfile {
    let mut profile = LayerProfile::default();
    for (&layer, path) in dumps {
        let outcome = load_point_cloud(path).and_then(|c| run_pipeline(&c, config, opts));
        match outcome {
            Ok(out) => profile.rows.push(LayerRow {
                layer,
                summary: out.summary,
                counts: out.counts,
            }),
            Err(e) => {
                log::warn!("layer {layer}: {e}");
                profile.missing.push(LayerFailure {
                    layer,
                    error: e.to_string(),
                });
            }
        }
    }
    profile
}
