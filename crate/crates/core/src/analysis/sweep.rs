//! Hyperparameter sensitivity: the full pipeline over a grid of (M, N, L)
//! and sampling seeds.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{run_pipeline, StageCounts};
use crate::pointcloud::{load_point_cloud, PointCloud, SamplingConfig};
use crate::summary::EstimateSummary;
use crate::twonn::FitOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    /// Sequence subsample sizes; `None` means every sequence.
    pub m_sequences: Vec<Option<usize>>,
    pub n_tokens: Vec<usize>,
    pub n_neighbors: Vec<usize>,
    pub seeds: Vec<u64>,
}

impl SweepGrid {
    fn cells(&self) -> Result<Vec<SamplingConfig>> {
        if self.m_sequences.is_empty()
            || self.n_tokens.is_empty()
            || self.n_neighbors.is_empty()
            || self.seeds.is_empty()
        {
            return Err(Error::Argument(
                "every sweep grid axis needs at least one value".into(),
            ));
        }
        let mut cells = Vec::new();
        for &m in &self.m_sequences {
            for &n in &self.n_tokens {
                for &l in &self.n_neighbors {
                    for &seed in &self.seeds {
                        cells.push(SamplingConfig {
                            m_sequences: m,
                            n_tokens: n,
                            n_neighbors: l,
                            seed,
                        });
                    }
                }
            }
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub split: String,
    pub config: SamplingConfig,
    pub summary: EstimateSummary,
    pub counts: StageCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub split: String,
    pub config: Option<SamplingConfig>,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

/// Runs every grid cell on one in-memory cloud. Cells are independent and
/// run in parallel; results keep grid order.
pub fn sweep_cloud(
    split: &str,
    cloud: &PointCloud,
    grid: &SweepGrid,
    opts: &FitOptions,
) -> Result<SweepResult> {
    let cells = grid.cells()?;
    let outcomes: Vec<(SamplingConfig, Result<SweepRow>)> = cells
        .into_par_iter()
        .map(|config| {
            let row = run_pipeline(cloud, &config, opts).map(|out| SweepRow {
                split: split.to_string(),
                config,
                summary: out.summary,
                counts: out.counts,
            });
            (config, row)
        })
        .collect();
    let mut result = SweepResult::default();
    for (config, outcome) in outcomes {
        match outcome {
            Ok(row) => result.rows.push(row),
            Err(e) => {
                log::warn!("sweep cell {split} {config:?} failed: {e}");
                result.failures.push(SweepFailure {
                    split: split.to_string(),
                    config: Some(config),
                    error: e.to_string(),
                });
            }
        }
    }
    Ok(result)
}

/// [`sweep_cloud`] over several dumps keyed by split label. A dump that fails
/// to load is recorded as a failure and the sweep continues.
pub fn sensitivity_sweep(
    dumps: &BTreeMap<String, PathBuf>,
    grid: &SweepGrid,
    opts: &FitOptions,
) -> Result<SweepResult> {
    grid.cells()?;
    opts.validate()?;
    let mut result = SweepResult::default();
    for (split, path) in dumps {
        match load_point_cloud(path) {
            Ok(cloud) => {
                let part = sweep_cloud(split, &cloud, grid, opts)?;
                result.rows.extend(part.rows);
                result.failures.extend(part.failures);
            }
            Err(e) => result.failures.push(SweepFailure {
                split: split.clone(),
                config: None,
                error: e.to_string(),
            }),
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointcloud::save_point_cloud;
    use crate::synthetic::rotated_hypercube;

    fn grid(n: Vec<usize>, l: Vec<usize>, seeds: Vec<u64>) -> SweepGrid {
        SweepGrid {
            m_sequences: vec![None],
            n_tokens: n,
            n_neighbors: l,
            seeds,
        }
    }

    #[test]
    fn one_cell_one_row() {
        let c = rotated_hypercube(200, 2, 4, 0).unwrap();
        let r = sweep_cloud(
            "val",
            &c,
            &grid(vec![100], vec![16], vec![1]),
            &FitOptions::default(),
        )
        .unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.failures.is_empty());
        assert_eq!(r.rows[0].counts.sampled, 100);
    }

    #[test]
    fn failing_cells_are_recorded() {
        let c = rotated_hypercube(50, 2, 4, 0).unwrap();
        // L = 64 exceeds a 40-point sample
        let r = sweep_cloud(
            "val",
            &c,
            &grid(vec![40], vec![8, 64], vec![1, 2]),
            &FitOptions::default(),
        )
        .unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.failures.len(), 2);
        assert!(r
            .failures
            .iter()
            .all(|f| f.config.unwrap().n_neighbors == 64));
    }

    #[test]
    fn empty_axis_rejected() {
        let c = rotated_hypercube(50, 2, 4, 0).unwrap();
        assert!(sweep_cloud(
            "v",
            &c,
            &grid(vec![], vec![8], vec![1]),
            &FitOptions::default()
        )
        .is_err());
    }

    #[test]
    fn unloadable_dump_is_a_failure() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("train.lide");
        save_point_cloud(&rotated_hypercube(80, 2, 4, 1).unwrap(), &good).unwrap();
        let dumps = BTreeMap::from([
            ("missing".to_string(), dir.path().join("nope.lide")),
            ("train".to_string(), good),
        ]);
        let r = sensitivity_sweep(
            &dumps,
            &grid(vec![60], vec![8], vec![1, 2, 3]),
            &FitOptions::default(),
        )
        .unwrap();
        assert_eq!(r.rows.len(), 3);
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].split, "missing");
    }
}
