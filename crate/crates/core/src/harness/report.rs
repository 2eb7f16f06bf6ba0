//! Per-seed metric files, across-seed aggregation and learning-curve plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::stats::summarize;
use crate::{Error, Result};

/// One evaluation point of a training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: u64,
    pub train_return: f64,
    pub test_return: f64,
    /// Main-agent transitions collected since the previous evaluation.
    pub d_ppo_transitions: u64,
    pub coverage: f64,
    pub entropy: f64,
}

pub fn metrics_file_name(seed: u64) -> String {
    format!("metrics_seed{seed}.csv")
}

/// Writes to a temporary sibling first so a crash never leaves a partial
/// file that would later count as finished.
pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp)?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Every `metrics_seed<N>.csv` in `dir`, ordered by seed.
pub fn read_metrics_dir(dir: &Path) -> Result<BTreeMap<u64, Vec<MetricsRow>>> {
    let mut runs = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(seed) = name.strip_prefix("metrics_seed").and_then(|s| s.strip_suffix(".csv")) else {
            continue;
        };
        if let Ok(seed) = seed.parse::<u64>() {
            runs.insert(seed, read_metrics(&path)?);
        }
    }
    Ok(runs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TrainReturn,
    TestReturn,
    Coverage,
    Entropy,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::TrainReturn, Metric::TestReturn, Metric::Coverage, Metric::Entropy];

    pub fn of(self, row: &MetricsRow) -> f64 {
        match self {
            Metric::TrainReturn => row.train_return,
            Metric::TestReturn => row.test_return,
            Metric::Coverage => row.coverage,
            Metric::Entropy => row.entropy,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::TrainReturn => "train_return",
            Metric::TestReturn => "test_return",
            Metric::Coverage => "coverage",
            Metric::Entropy => "entropy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub series: String,
    pub metric: Metric,
    pub step: u64,
    pub seeds: usize,
    pub mean: f64,
    /// Interval bounds; empty for a single seed.
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

/// Mean and interval at every step, over the seeds that reached it.
pub fn aggregate(series: &str, runs: &BTreeMap<u64, Vec<MetricsRow>>) -> Vec<AggregateRow> {
    let mut by_step: BTreeMap<u64, Vec<&MetricsRow>> = BTreeMap::new();
    for rows in runs.values() {
        for row in rows {
            by_step.entry(row.step).or_default().push(row);
        }
    }
    let mut out = Vec::new();
    for metric in Metric::ALL {
        for (&step, rows) in &by_step {
            let values: Vec<f64> = rows.iter().map(|r| metric.of(r)).collect();
            let s = summarize(&values).expect("at least one row per step");
            out.push(AggregateRow {
                series: series.to_string(),
                metric,
                step,
                seeds: s.n,
                mean: s.mean,
                ci_low: s.ci.map(|_| s.lower()),
                ci_high: s.ci.map(|_| s.upper()),
            });
        }
    }
    out
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Aggregates each directory as its own series, named after the directory.
/// Writes the CSV to `out` and the curves next to it as `curves.svg`.
pub fn aggregate_dirs(dirs: &[PathBuf], out: &Path) -> Result<Vec<AggregateRow>> {
    let mut rows = Vec::new();
    for dir in dirs {
        let runs = read_metrics_dir(dir)?;
        if runs.is_empty() {
            return Err(Error::Usage(format!("no metrics files in {}", dir.display())));
        }
        let name = dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned());
        rows.extend(aggregate(&name, &runs));
    }
    write_aggregate_csv(out, &rows)?;
    let svg = out.with_file_name("curves.svg");
    fs::write(&svg, render_curves_svg(&rows))?;
    Ok(rows)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Two side-by-side panels (train and test return) with one line per
/// series and a shaded interval band.
pub fn render_curves_svg(rows: &[AggregateRow]) -> String {
    let (pw, ph, margin) = (420.0, 300.0, 50.0);
    let width = 2.0 * pw + 3.0 * margin;
    let height = ph + 2.0 * margin + 30.0;
    let max_step = rows.iter().map(|r| r.step).max().unwrap_or(0).max(1) as f64;
    let mut series: Vec<&str> = rows.iter().map(|r| r.series.as_str()).collect();
    series.dedup();
    series.sort_unstable();
    series.dedup();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (p, metric) in [Metric::TrainReturn, Metric::TestReturn].into_iter().enumerate() {
        let x0 = margin + p as f64 * (pw + margin);
        let y0 = margin;
        let sx = |step: u64| x0 + step as f64 / max_step * pw;
        let sy = |v: f64| y0 + (1.0 - v.clamp(0.0, 1.0)) * ph;
        let _ = writeln!(svg, r#"<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, x0 + pw / 2.0, y0 - 10.0, metric.name());
        for tick in 0..=4 {
            let v = tick as f64 / 4.0;
            let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{v:.2}</text>"#, x0 - 4.0, sy(v) + 4.0);
        }
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, x0 + pw, y0 + ph + 16.0, max_step);
        let _ = writeln!(svg, r#"<text x="{x0}" y="{}">0</text>"#, y0 + ph + 16.0);
        for (i, name) in series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<&AggregateRow> = rows.iter().filter(|r| r.series == *name && r.metric == metric).collect();
            if pts.is_empty() {
                continue;
            }
            let band: Vec<&AggregateRow> = pts.iter().copied().filter(|r| r.ci_low.is_some()).collect();
            if band.len() == pts.len() {
                let mut d = String::new();
                for r in &band {
                    let _ = write!(d, "{:.2},{:.2} ", sx(r.step), sy(r.ci_high.unwrap_or(r.mean)));
                }
                for r in band.iter().rev() {
                    let _ = write!(d, "{:.2},{:.2} ", sx(r.step), sy(r.ci_low.unwrap_or(r.mean)));
                }
                let _ = writeln!(svg, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, d.trim_end());
            }
            let line: Vec<String> = pts.iter().map(|r| format!("{:.2},{:.2}", sx(r.step), sy(r.mean))).collect();
            let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" "));
        }
    }
    for (i, name) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let x = margin + i as f64 * 140.0;
        let y = height - 15.0;
        let _ = writeln!(svg, r#"<rect x="{x}" y="{}" width="14" height="4" fill="{color}"/>"#, y - 4.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{y}">{name}</text>"#, x + 20.0);
    }
    svg.push_str("</svg>\n");
    svg
}
