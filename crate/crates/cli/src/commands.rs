use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use lidscope::analysis::{
    compare_cohorts, layer_profile, noise_sweep, paired_token_compare, sensitivity_sweep,
    track_checkpoints, NoiseReport, SweepGrid, TrackOptions,
};
use lidscope::io::{read_estimates_csv, write_estimates_csv};
use lidscope::pointcloud::{load_point_cloud, EmbeddingMode};
use lidscope::selftest::{SelftestOptions, CHECKS};
use lidscope::summary::quantile_sorted;
use lidscope::{knn_exact, run_pipeline, EstimateSummary, LocalEstimates, TokenMeta};
use serde::Serialize;

use crate::args::SelftestArgs;
use crate::config::{RunConfig, CONFIG_FILE};
use crate::outputs::Outputs;
use crate::svg::{box_chart, line_chart, BoxStats, Marker, Panel, Series};
use crate::{CliError, UsageError};

/// Runs the command described by `cfg`, writing its outputs and the resolved
/// configuration into `cfg.out`. On failure every file written so far is
/// removed.
pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    check_input_count(cfg)?;
    let mut out = Outputs::create(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))
        .map_err(CliError::Failed)?;
    let result = match cfg.command.as_str() {
        "estimate" => estimate(cfg, &mut out),
        "compare" => compare(cfg, &mut out),
        "sweep" => sweep(cfg, &mut out),
        "noise" => noise(cfg, &mut out),
        "layers" => layers(cfg, &mut out),
        "track" => track(cfg, &mut out),
        other => Err(anyhow!("unknown command '{other}'")),
    }
    .and_then(|()| out.write_text(CONFIG_FILE, &cfg.to_toml()));
    match result {
        Ok(()) => {
            log::info!("outputs written to {}", out.dir().display());
            Ok(())
        }
        Err(e) => {
            out.discard();
            Err(CliError::Failed(e))
        }
    }
}

fn check_input_count(cfg: &RunConfig) -> Result<(), UsageError> {
    let n = cfg.inputs.len();
    let want = match cfg.command.as_str() {
        "estimate" | "noise" => Some(1),
        "compare" => Some(2),
        _ => None,
    };
    match want {
        Some(w) if w != n => Err(UsageError(format!(
            "'{}' takes {w} input(s), got {n}",
            cfg.command
        ))),
        _ => Ok(()),
    }
}

/// Splits `key=path` inputs. Without `=`, `default_key` derives the key from
/// the path, or the entry is rejected when it returns `None`.
fn keyed_inputs<K: std::str::FromStr + Ord>(
    inputs: &[String],
    what: &str,
    default_key: impl Fn(&Path) -> Option<K>,
) -> anyhow::Result<BTreeMap<K, PathBuf>> {
    let mut map = BTreeMap::new();
    for entry in inputs {
        let (key, path) = match entry.split_once('=') {
            Some((k, p)) => {
                let key = k
                    .trim()
                    .parse()
                    .map_err(|_| anyhow!("bad {what} '{k}' in input '{entry}'"))?;
                (key, PathBuf::from(p))
            }
            None => {
                let path = PathBuf::from(entry);
                let key = default_key(&path)
                    .ok_or_else(|| anyhow!("input '{entry}' needs the form {what}=PATH"))?;
                (key, path)
            }
        };
        if map.insert(key, path).is_some() {
            bail!("{what} given twice in inputs");
        }
    }
    Ok(map)
}

fn summary_record(s: &EstimateSummary) -> [String; 6] {
    [
        s.count.to_string(),
        s.mean.to_string(),
        s.std.to_string(),
        s.median.to_string(),
        s.q1.to_string(),
        s.q3.to_string(),
    ]
}

const SUMMARY_COLUMNS: [&str; 6] = ["count", "mean", "std", "median", "q1", "q3"];

#[derive(Serialize)]
struct EstimateReport<'a> {
    input: &'a str,
    summary: EstimateSummary,
    counts: lidscope::StageCounts,
    degenerate_neighborhoods: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

fn estimate(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let input = &cfg.inputs[0];
    let cloud = load_point_cloud(Path::new(input))?;
    let sampling = cfg.sampling.to_config();
    let run = run_pipeline(&cloud, &sampling, &cfg.fit.to_options())?;
    if !run.estimates.degenerate.is_empty() {
        log::warn!(
            "{} neighborhoods had a degenerate fit and were recorded as 0",
            run.estimates.degenerate.len()
        );
    }
    let note = run.counts.token_saturated.then(|| {
        format!(
            "N={} is at least the {} unique points; the whole cloud was used",
            sampling.n_tokens, run.counts.after_dedup
        )
    });
    write_estimates_csv(&run.estimates, &out.path("estimates.csv"))?;
    out.write_json(
        "summary.json",
        &EstimateReport {
            input,
            summary: run.summary,
            counts: run.counts,
            degenerate_neighborhoods: run.estimates.degenerate.len(),
            note,
        },
    )?;
    if cfg.estimate.as_ref().is_some_and(|e| e.save_neighbors) {
        let graph = knn_exact(&run.sample, sampling.n_neighbors - 1, false)?;
        let rows = &run.estimates.rows;
        let (_, mut w) = out.csv_writer("neighbors.csv")?;
        w.write_record(["row", "rank", "neighbor", "distance"])?;
        for q in 0..graph.n_queries() {
            for (rank, (&j, &d)) in graph.indices(q).iter().zip(graph.distances(q)).enumerate() {
                w.write_record([
                    rows[q].to_string(),
                    (rank + 1).to_string(),
                    rows[j].to_string(),
                    d.to_string(),
                ])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

/// A cohort read from an estimates CSV or computed from a dump.
fn load_cohort(
    path: &str,
    cfg: &RunConfig,
) -> anyhow::Result<(LocalEstimates, Option<Vec<TokenMeta>>)> {
    let p = Path::new(path);
    if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        return Ok((read_estimates_csv(p)?, None));
    }
    let cloud = load_point_cloud(p)?;
    let run = run_pipeline(&cloud, &cfg.sampling.to_config(), &cfg.fit.to_options())
        .with_context(|| format!("estimating {path}"))?;
    let meta = run.sample.meta().map(<[TokenMeta]>::to_vec);
    Ok((run.estimates, meta))
}

#[derive(Serialize)]
struct CompareOutput<'a> {
    labels: &'a [String],
    inputs: &'a [String],
    report: lidscope::analysis::ComparisonReport,
    paired: bool,
}

fn mode_name(m: EmbeddingMode) -> &'static str {
    match m {
        EmbeddingMode::Regular => "regular",
        EmbeddingMode::Masked => "masked",
    }
}

fn compare(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let labels = &cfg.compare.as_ref().expect("resolved").labels;
    if labels.len() != 2 {
        bail!("compare needs exactly two labels, got {}", labels.len());
    }
    let (a, meta_a) = load_cohort(&cfg.inputs[0], cfg)?;
    let (b, _) = load_cohort(&cfg.inputs[1], cfg)?;
    let report = compare_cohorts(&a, &b)?;

    let (_, mut w) = out.csv_writer("cohorts.csv")?;
    w.write_record(["model", "estimate"])?;
    for (label, est) in labels.iter().zip([&a, &b]) {
        for v in &est.values {
            w.write_record([label.as_str(), &v.to_string()])?;
        }
    }
    w.flush()?;

    let paired = match paired_token_compare(&a, &b, meta_a.as_deref()) {
        Ok(deltas) => {
            let (_, mut w) = out.csv_writer("deltas.csv")?;
            let mut header = vec!["row", "delta"];
            if meta_a.is_some() {
                header.extend(["seq_id", "pos", "token_text", "layer", "mode"]);
            }
            w.write_record(&header)?;
            for d in &deltas {
                let mut rec = vec![d.row.to_string(), d.delta.to_string()];
                if let Some(m) = &d.meta {
                    rec.extend([
                        m.seq_id.to_string(),
                        m.pos.to_string(),
                        m.token_text.clone(),
                        m.layer.to_string(),
                        mode_name(m.mode).to_string(),
                    ]);
                }
                w.write_record(&rec)?;
            }
            w.flush()?;
            true
        }
        Err(e) => {
            log::info!("no per-token deltas: {e}");
            false
        }
    };
    out.write_json(
        "comparison.json",
        &CompareOutput {
            labels,
            inputs: &cfg.inputs,
            report,
            paired,
        },
    )?;
    Ok(())
}

fn five_numbers(values: &[f64]) -> [f64; 5] {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    [
        v[0],
        quantile_sorted(&v, 0.25),
        quantile_sorted(&v, 0.5),
        quantile_sorted(&v, 0.75),
        v[v.len() - 1],
    ]
}

fn opt_string<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn sweep(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let s = cfg.sweep.as_ref().expect("resolved");
    let dumps: BTreeMap<String, PathBuf> = keyed_inputs(&cfg.inputs, "split", |p| {
        p.file_stem().map(|s| s.to_string_lossy().into_owned())
    })?;
    let grid = SweepGrid {
        m_sequences: if s.sequences.is_empty() {
            vec![None]
        } else {
            s.sequences.iter().map(|&m| Some(m)).collect()
        },
        n_tokens: s.tokens.clone(),
        n_neighbors: s.neighbors.clone(),
        seeds: s.seeds.clone(),
    };
    let result = sensitivity_sweep(&dumps, &grid, &cfg.fit.to_options())?;
    if result.rows.is_empty() {
        let first = result.failures.first().map(|f| f.error.as_str());
        bail!("every sweep cell failed: {}", first.unwrap_or("no cells"));
    }

    let (_, mut w) = out.csv_writer("sweep.csv")?;
    let mut header = vec!["split", "sequences", "tokens", "neighbors", "seed"];
    header.extend(SUMMARY_COLUMNS);
    header.extend(["after_dedup", "sampled", "token_saturated"]);
    w.write_record(&header)?;
    for r in &result.rows {
        let c = &r.config;
        let mut rec = vec![
            r.split.clone(),
            opt_string(c.m_sequences),
            c.n_tokens.to_string(),
            c.n_neighbors.to_string(),
            c.seed.to_string(),
        ];
        rec.extend(summary_record(&r.summary));
        rec.extend([
            r.counts.after_dedup.to_string(),
            r.counts.sampled.to_string(),
            r.counts.token_saturated.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    out.write_json("sweep.json", &result)?;
    out.write_json("failures.json", &result.failures)?;

    // One box per (split, M, N, L) over the per-seed means, in grid order.
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for r in &result.rows {
        let c = &r.config;
        let label = format!(
            "{} M={} N={} L={}",
            r.split,
            c.m_sequences.map_or("all".to_string(), |m| m.to_string()),
            c.n_tokens,
            c.n_neighbors
        );
        match groups.iter_mut().find(|g| g.0 == label) {
            Some(g) => g.1.push(r.summary.mean),
            None => groups.push((label, vec![r.summary.mean])),
        }
    }
    let boxes: Vec<BoxStats> = groups
        .into_iter()
        .map(|(label, means)| {
            let [min, q1, median, q3, max] = five_numbers(&means);
            BoxStats {
                label,
                min,
                q1,
                median,
                q3,
                max,
            }
        })
        .collect();
    out.write_text(
        "sweep.svg",
        &box_chart("Mean local estimate across seeds", "mean estimate", &boxes),
    )
}

fn noise(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let n = cfg.noise.as_ref().expect("resolved");
    let cloud = load_point_cloud(Path::new(&cfg.inputs[0]))?;
    let reports = noise_sweep(
        &cloud,
        &n.sigmas,
        &n.seeds,
        &cfg.sampling.to_config(),
        &cfg.fit.to_options(),
        n.hausdorff_subsample,
    )?;

    let (_, mut w) = out.csv_writer("noise.csv")?;
    w.write_record([
        "sigma",
        "seed",
        "hausdorff",
        "hausdorff_approximate",
        "global_clean",
        "global_noisy",
        "mean_local_clean",
        "mean_local_noisy",
        "std_local_clean",
        "std_local_noisy",
    ])?;
    for r in &reports {
        w.write_record([
            r.sigma.to_string(),
            r.seed.to_string(),
            r.hausdorff.to_string(),
            r.hausdorff_approximate.to_string(),
            r.global_clean.to_string(),
            r.global_noisy.to_string(),
            r.mean_local_clean.to_string(),
            r.mean_local_noisy.to_string(),
            r.std_local_clean.to_string(),
            r.std_local_noisy.to_string(),
        ])?;
    }
    w.flush()?;
    out.write_json("noise.json", &reports)?;

    let avg = |f: fn(&NoiseReport) -> f64| -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for sigma in &n.sigmas {
            let vals: Vec<f64> = reports
                .iter()
                .filter(|r| r.sigma == *sigma)
                .map(f)
                .collect();
            pts.push((*sigma, vals.iter().sum::<f64>() / vals.len() as f64));
        }
        pts
    };
    let series = |name: &str, points| Series {
        name: name.to_string(),
        points,
    };
    let panels = [
        Panel {
            y_label: "Hausdorff distance".into(),
            series: vec![series("clean vs noisy", avg(|r| r.hausdorff))],
        },
        Panel {
            y_label: "estimate".into(),
            series: vec![
                series("global", avg(|r| r.global_noisy)),
                series("mean local", avg(|r| r.mean_local_noisy)),
            ],
        },
        Panel {
            y_label: "std of local estimates".into(),
            series: vec![series("std local", avg(|r| r.std_local_noisy))],
        },
    ];
    out.write_text(
        "noise.svg",
        &line_chart("Gaussian noise", "sigma", &panels, &[]),
    )
}

fn layers(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let dumps: BTreeMap<i64, PathBuf> = keyed_inputs(&cfg.inputs, "layer", |_| None)?;
    let profile = layer_profile(&dumps, &cfg.sampling.to_config(), &cfg.fit.to_options());
    if profile.rows.is_empty() {
        let first = profile.missing.first().map(|f| f.error.as_str());
        bail!(
            "no layer could be processed: {}",
            first.unwrap_or("no inputs")
        );
    }

    let (_, mut w) = out.csv_writer("layers.csv")?;
    let mut header = vec!["layer"];
    header.extend(SUMMARY_COLUMNS);
    w.write_record(&header)?;
    for r in &profile.rows {
        let mut rec = vec![r.layer.to_string()];
        rec.extend(summary_record(&r.summary));
        w.write_record(&rec)?;
    }
    w.flush()?;
    out.write_json("layers.json", &profile)?;
    out.write_json("failures.json", &profile.missing)?;

    let points = |f: fn(&EstimateSummary) -> f64| -> Vec<(f64, f64)> {
        profile
            .rows
            .iter()
            .map(|r| (r.layer as f64, f(&r.summary)))
            .collect()
    };
    let panels = [Panel {
        y_label: "local estimate".into(),
        series: vec![
            Series {
                name: "mean".into(),
                points: points(|s| s.mean),
            },
            Series {
                name: "median".into(),
                points: points(|s| s.median),
            },
        ],
    }];
    out.write_text(
        "layers.svg",
        &line_chart("Local estimates by layer", "layer", &panels, &[]),
    )
}

fn track(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let t = cfg.track.as_ref().expect("resolved");
    let series: Vec<(u64, PathBuf)> = cfg
        .inputs
        .iter()
        .map(|entry| {
            let (step, path) = entry
                .split_once('=')
                .ok_or_else(|| anyhow!("input '{entry}' needs the form STEP=PATH"))?;
            let step: u64 = step
                .trim()
                .parse()
                .map_err(|_| anyhow!("bad step '{step}' in input '{entry}'"))?;
            Ok((step, PathBuf::from(path)))
        })
        .collect::<anyhow::Result<_>>()?;
    let opts = TrackOptions {
        window: t.window,
        tolerance: t.tolerance,
    };
    let result = track_checkpoints(&series, t.metrics.as_deref(), &t.label, opts)?;

    let names: Vec<String> = {
        let mut names: Vec<String> = result
            .points
            .iter()
            .flat_map(|p| p.metrics.keys().cloned())
            .collect();
        names.sort();
        names.dedup();
        names
    };
    let (_, mut w) = out.csv_writer("track.csv")?;
    let mut header: Vec<&str> = vec!["step"];
    header.extend(SUMMARY_COLUMNS);
    header.extend(names.iter().map(String::as_str));
    w.write_record(&header)?;
    for p in &result.points {
        let mut rec = vec![p.step.to_string()];
        rec.extend(summary_record(&p.summary));
        rec.extend(names.iter().map(|n| opt_string(p.metrics.get(n))));
        w.write_record(&rec)?;
    }
    w.flush()?;
    out.write_json("track.json", &result)?;

    let mut panels = vec![Panel {
        y_label: "mean local estimate".into(),
        series: vec![Series {
            name: result.split_label.clone(),
            points: result
                .points
                .iter()
                .map(|p| (p.step as f64, p.summary.mean))
                .collect(),
        }],
    }];
    if !names.is_empty() {
        panels.push(Panel {
            y_label: "metrics".into(),
            series: names
                .iter()
                .map(|n| Series {
                    name: n.clone(),
                    points: result
                        .points
                        .iter()
                        .filter_map(|p| p.metrics.get(n).map(|v| (p.step as f64, *v)))
                        .collect(),
                })
                .collect(),
        });
    }
    let mut markers = Vec::new();
    if let Some(s) = result.min_step {
        markers.push(Marker {
            x: s as f64,
            label: "min".into(),
        });
    }
    if let Some(s) = result.stabilization_step {
        markers.push(Marker {
            x: s as f64,
            label: "stable".into(),
        });
    }
    out.write_text(
        "track.svg",
        &line_chart("Checkpoint series", "step", &panels, &markers),
    )
}

pub fn selftest(args: &SelftestArgs) -> Result<(), CliError> {
    let mut opts = SelftestOptions {
        quick: args.quick,
        ..Default::default()
    };
    if let Some(e) = args.estimator {
        opts.fit.estimator = e;
    }
    if let Some(f) = args.discard_fraction {
        opts.fit.discard_fraction = f;
    }
    opts.fit.validate().map_err(|e| UsageError(e.to_string()))?;
    let mut failed = 0;
    for (_, check) in CHECKS {
        let o = check(&opts);
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("{status} {:<20} {}", o.name, o.detail);
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        return Err(CliError::Failed(anyhow!(
            "{failed} of {} checks failed",
            CHECKS.len()
        )));
    }
    println!("all {} checks passed", CHECKS.len());
    Ok(())
}
