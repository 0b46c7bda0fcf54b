//! Resolved run configuration: defaults, overlaid by an optional TOML file,
//! overlaid by command-line flags. Every run writes the result next to its
//! outputs so the run can be repeated with `--config`.

use std::fs;
use std::path::{Path, PathBuf};

use lidscope::twonn::DEFAULT_DISCARD_FRACTION;
use lidscope::{Estimator, FitOptions, SamplingConfig};
use serde::{Deserialize, Serialize};

use crate::args::{Command, CommonArgs};
use crate::UsageError;

pub const CONFIG_FILE: &str = "config.toml";

/// Noise levels used when `--sigmas` is not given.
pub const DEFAULT_SIGMAS: [f64; 6] = [0.0, 0.001, 0.002, 0.003, 0.004, 0.01];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    /// Sequence subsample size M; absent means every sequence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequences: Option<usize>,
    pub tokens: usize,
    pub neighbors: usize,
    pub seed: u64,
}

impl Default for SamplingSection {
    fn default() -> Self {
        let d = SamplingConfig::default();
        Self {
            sequences: d.m_sequences,
            tokens: d.n_tokens,
            neighbors: d.n_neighbors,
            seed: d.seed,
        }
    }
}

impl SamplingSection {
    pub fn to_config(&self) -> SamplingConfig {
        SamplingConfig {
            m_sequences: self.sequences,
            n_tokens: self.tokens,
            n_neighbors: self.neighbors,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub estimator: Estimator,
    pub discard_fraction: f64,
    pub discard_in_neighborhoods: bool,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            estimator: Estimator::Linfit,
            discard_fraction: DEFAULT_DISCARD_FRACTION,
            discard_in_neighborhoods: true,
        }
    }
}

impl FitSection {
    pub fn to_options(&self) -> FitOptions {
        FitOptions {
            estimator: self.estimator,
            discard_fraction: self.discard_fraction,
            discard_in_neighborhoods: self.discard_in_neighborhoods,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    #[serde(default)]
    pub save_neighbors: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub sigmas: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hausdorff_subsample: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Empty means a single "all sequences" value.
    #[serde(default)]
    pub sequences: Vec<usize>,
    pub tokens: Vec<usize>,
    pub neighbors: Vec<usize>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSection {
    pub label: String,
    pub window: usize,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    /// Input paths; `sweep`, `layers` and `track` take `key=path` entries.
    pub inputs: Vec<String>,
    pub out: PathBuf,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track: Option<TrackSection>,
}

impl RunConfig {
    fn empty(command: &str) -> Self {
        Self {
            command: command.to_string(),
            inputs: Vec::new(),
            out: PathBuf::from("."),
            sampling: SamplingSection::default(),
            fit: FitSection::default(),
            estimate: None,
            compare: None,
            noise: None,
            sweep: None,
            track: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    /// Builds the configuration for `command` from the optional `--config`
    /// file and the flags given on the command line.
    pub fn resolve(command: &Command) -> Result<Self, UsageError> {
        let common = command.common();
        let name = command.name();
        let mut cfg = match &common.config {
            Some(path) => {
                let cfg = Self::load(path)?;
                if cfg.command != name {
                    return Err(UsageError(format!(
                        "config {} is for '{}', not '{name}'",
                        path.display(),
                        cfg.command
                    )));
                }
                cfg
            }
            None => Self::empty(name),
        };
        cfg.apply_common(common);
        match command {
            Command::Estimate(a) => {
                let mut s = cfg.estimate.take().unwrap_or_default();
                s.save_neighbors |= a.save_neighbors;
                cfg.estimate = Some(s);
            }
            Command::Compare(a) => {
                let labels = match (&a.labels, cfg.compare.take()) {
                    (Some(l), _) => l.clone(),
                    (None, Some(s)) => s.labels,
                    (None, None) => vec!["a".to_string(), "b".to_string()],
                };
                cfg.compare = Some(CompareSection { labels });
            }
            Command::Noise(a) => {
                let prev = cfg.noise.take();
                let seed = cfg.sampling.seed;
                cfg.noise = Some(NoiseSection {
                    sigmas: pick(&a.sigmas, prev.as_ref().map(|p| &p.sigmas))
                        .unwrap_or_else(|| DEFAULT_SIGMAS.to_vec()),
                    seeds: pick(&a.noise_seeds, prev.as_ref().map(|p| &p.seeds))
                        .unwrap_or_else(|| vec![seed]),
                    hausdorff_subsample: a
                        .hausdorff_subsample
                        .or(prev.and_then(|p| p.hausdorff_subsample)),
                });
            }
            Command::Sweep(a) => {
                let prev = cfg.sweep.take();
                let s = &cfg.sampling;
                cfg.sweep = Some(SweepSection {
                    sequences: pick(&a.grid_sequences, prev.as_ref().map(|p| &p.sequences))
                        .unwrap_or_else(|| s.sequences.into_iter().collect()),
                    tokens: pick(&a.grid_tokens, prev.as_ref().map(|p| &p.tokens))
                        .unwrap_or_else(|| vec![s.tokens]),
                    neighbors: pick(&a.grid_neighbors, prev.as_ref().map(|p| &p.neighbors))
                        .unwrap_or_else(|| vec![s.neighbors]),
                    seeds: pick(&a.grid_seeds, prev.as_ref().map(|p| &p.seeds))
                        .unwrap_or_else(|| vec![s.seed]),
                });
            }
            Command::Layers(_) | Command::Selftest(_) => {}
            Command::Track(a) => {
                let prev = cfg.track.take();
                cfg.track = Some(TrackSection {
                    label: a
                        .label
                        .clone()
                        .or(prev.as_ref().map(|p| p.label.clone()))
                        .unwrap_or_else(|| "train".to_string()),
                    window: a.window.or(prev.as_ref().map(|p| p.window)).unwrap_or(5),
                    tolerance: a
                        .tolerance
                        .or(prev.as_ref().map(|p| p.tolerance))
                        .unwrap_or(0.02),
                    metrics: a.metrics.clone().or(prev.and_then(|p| p.metrics)),
                });
            }
        }
        if cfg.inputs.is_empty() {
            return Err(UsageError(format!("'{name}' needs at least one --input")));
        }
        Ok(cfg)
    }

    fn apply_common(&mut self, a: &CommonArgs) {
        if !a.input.is_empty() {
            self.inputs = a.input.clone();
        }
        if let Some(out) = &a.out {
            self.out = out.clone();
        }
        let s = &mut self.sampling;
        s.sequences = a.sequences.or(s.sequences);
        s.tokens = a.tokens.unwrap_or(s.tokens);
        s.neighbors = a.neighbors.unwrap_or(s.neighbors);
        s.seed = a.seed.unwrap_or(s.seed);
        let f = &mut self.fit;
        f.estimator = a.estimator.unwrap_or(f.estimator);
        f.discard_fraction = a.discard_fraction.unwrap_or(f.discard_fraction);
        if a.no_local_discard {
            f.discard_in_neighborhoods = false;
        }
    }
}

fn pick<T: Clone>(flag: &[T], file: Option<&Vec<T>>) -> Option<Vec<T>> {
    if !flag.is_empty() {
        Some(flag.to_vec())
    } else {
        file.cloned()
    }
}
