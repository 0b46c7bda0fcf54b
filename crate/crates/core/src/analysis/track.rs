//! Checkpoint series: mean local estimates over training steps, aligned with
//! externally logged metrics.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_estimates_csv, read_metrics_csv, MetricsByStep};
use crate::summary::{summarize, EstimateSummary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackOptions {
    /// Trailing window length for the stabilization rule.
    pub window: usize,
    /// Maximum relative range `(max - min) / |mean|` inside the window.
    pub tolerance: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self {
            window: 5,
            tolerance: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointPoint {
    pub step: u64,
    pub summary: EstimateSummary,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSeries {
    pub split_label: String,
    pub points: Vec<CheckpointPoint>,
    /// Step with the smallest mean estimate (earliest on ties).
    pub min_step: Option<u64>,
    /// First step whose trailing window satisfies the stabilization rule.
    pub stabilization_step: Option<u64>,
    pub options: TrackOptions,
}

fn stabilization_index(means: &[f64], opts: &TrackOptions) -> Option<usize> {
    if opts.window == 0 || means.len() < opts.window {
        return None;
    }
    (opts.window - 1..means.len()).find(|&end| {
        let w = &means[end + 1 - opts.window..=end];
        let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let center = (w.iter().sum::<f64>() / w.len() as f64).abs();
        let range = hi - lo;
        if center == 0.0 {
            range == 0.0
        } else {
            range / center < opts.tolerance
        }
    })
}

/// Assembles a series from per-step summaries; steps must be strictly
/// increasing. Metrics for steps without a summary are ignored.
pub fn build_series(
    summaries: Vec<(u64, EstimateSummary)>,
    metrics: &MetricsByStep,
    split_label: &str,
    opts: TrackOptions,
) -> Result<CheckpointSeries> {
    if opts.window == 0 || opts.tolerance.is_nan() || opts.tolerance < 0.0 {
        return Err(Error::Argument(format!(
            "stabilization window must be >= 1 and tolerance >= 0, got {} / {}",
            opts.window, opts.tolerance
        )));
    }
    if let Some(w) = summaries.windows(2).find(|w| w[1].0 <= w[0].0) {
        return Err(Error::Input(format!(
            "checkpoint steps must be strictly increasing, found {} then {}",
            w[0].0, w[1].0
        )));
    }
    let points: Vec<CheckpointPoint> = summaries
        .into_iter()
        .map(|(step, summary)| CheckpointPoint {
            step,
            summary,
            metrics: metrics.get(&step).cloned().unwrap_or_default(),
        })
        .collect();
    let means: Vec<f64> = points.iter().map(|p| p.summary.mean).collect();
    let min_step = points
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.summary.mean.total_cmp(&b.summary.mean).then(i.cmp(j)))
        .map(|(_, p)| p.step);
    let stabilization_step = stabilization_index(&means, &opts).map(|i| points[i].step);
    Ok(CheckpointSeries {
        split_label: split_label.to_string(),
        points,
        min_step,
        stabilization_step,
        options: opts,
    })
}

/// Loads one estimates CSV per checkpoint plus an optional metrics CSV and
/// builds the aligned series.
pub fn track_checkpoints(
    series: &[(u64, PathBuf)],
    metrics_file: Option<&Path>,
    split_label: &str,
    opts: TrackOptions,
) -> Result<CheckpointSeries> {
    if series.is_empty() {
        return Err(Error::Input("no checkpoints given".into()));
    }
    if let Some(w) = series.windows(2).find(|w| w[1].0 <= w[0].0) {
        return Err(Error::Input(format!(
            "checkpoint steps must be strictly increasing, found {} then {}",
            w[0].0, w[1].0
        )));
    }
    let mut summaries = Vec::with_capacity(series.len());
    for (step, path) in series {
        let est = read_estimates_csv(path)?;
        summaries.push((*step, summarize(&est.values)?));
    }
    let metrics = match metrics_file {
        Some(p) => read_metrics_csv(p)?,
        None => MetricsByStep::new(),
    };
    build_series(summaries, &metrics, split_label, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::write_estimates_csv;
    use crate::twonn::LocalEstimates;

    fn at(mean: f64) -> EstimateSummary {
        EstimateSummary {
            count: 1,
            mean,
            std: 0.0,
            median: mean,
            q1: mean,
            q3: mean,
        }
    }

    fn series(means: &[f64]) -> CheckpointSeries {
        let s = means
            .iter()
            .enumerate()
            .map(|(i, &m)| (i as u64 * 100, at(m)))
            .collect();
        build_series(s, &MetricsByStep::new(), "train", TrackOptions::default()).unwrap()
    }

    #[test]
    fn strictly_decreasing() {
        let s = series(&[12.0, 11.0, 10.0, 9.0, 8.0, 7.0]);
        assert_eq!(s.min_step, Some(500));
        assert_eq!(s.stabilization_step, None);
    }

    #[test]
    fn v_shape_vertex() {
        // constructed: |step - k| + 3 with vertex k = 4
        let means: Vec<f64> = (0..9).map(|i| (i as f64 - 4.0).abs() + 3.0).collect();
        assert_eq!(series(&means).min_step, Some(400));
    }

    #[test]
    fn plateau_flags_first_qualifying_step() {
        let s = series(&[10.0, 9.0, 8.0, 7.0, 7.02, 7.01, 7.03, 7.0, 7.02, 7.01]);
        // window ending at index 7 is [7.0, 7.02, 7.01, 7.03, 7.0]
        assert_eq!(s.stabilization_step, Some(700));
    }

    #[test]
    fn drop_then_rise() {
        // base, then a sharp drop after one epoch, then a slow rise
        let s = series(&[9.94, 7.25, 7.4, 7.55, 7.7, 7.8, 7.85, 7.9, 7.95, 8.0]);
        assert_eq!(s.min_step, Some(100));
    }

    #[test]
    fn non_monotone_steps_rejected() {
        let bad = vec![(5, at(1.0)), (5, at(2.0))];
        assert!(matches!(
            build_series(bad, &MetricsByStep::new(), "x", TrackOptions::default()),
            Err(Error::Input(_))
        ));
        let bad = vec![(5, at(1.0)), (3, at(2.0))];
        assert!(build_series(bad, &MetricsByStep::new(), "x", TrackOptions::default()).is_err());
    }

    #[test]
    fn sorting_a_permutation_is_stable() {
        let base: Vec<(u64, EstimateSummary)> = [(0, 5.0), (10, 4.0), (20, 4.5), (30, 4.4)]
            .iter()
            .map(|&(s, m)| (s, at(m)))
            .collect();
        let mut shuffled = vec![base[2], base[0], base[3], base[1]];
        shuffled.sort_by_key(|p| p.0);
        let a = build_series(base, &MetricsByStep::new(), "x", TrackOptions::default()).unwrap();
        let b = build_series(
            shuffled,
            &MetricsByStep::new(),
            "x",
            TrackOptions::default(),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn files_and_metrics_align() {
        let dir = tempfile::tempdir().unwrap();
        let mut cps = Vec::new();
        for (step, v) in [(0u64, 9.0), (1, 7.0), (2, 8.0)] {
            let p = dir.path().join(format!("e{step}.csv"));
            write_estimates_csv(&LocalEstimates::from_values(vec![v, v + 1.0]), &p).unwrap();
            cps.push((step, p));
        }
        let m = dir.path().join("metrics.csv");
        std::fs::write(&m, "step,f1\n0,0.1\n2,0.3\n7,0.9\n").unwrap();
        let s = track_checkpoints(&cps, Some(&m), "dev", TrackOptions::default()).unwrap();
        assert_eq!(s.points.len(), 3);
        assert_eq!(s.points[0].summary.mean, 9.5);
        assert_eq!(s.points[2].metrics["f1"], 0.3);
        assert!(s.points[1].metrics.is_empty());
        assert_eq!(s.min_step, Some(1));
    }
}
