//! Per-repeat records and the aggregated report rows.
//!
//! Reports are a pure function of the raw records, and the raw TSV stores
//! every float in its shortest round-trip form, so `report` regenerates the
//! CSV and markdown byte for byte.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const BYTES_PER_MB: f64 = (1u64 << 20) as f64;

/// Outcome of one registration run.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatRecord {
    pub label: String,
    pub repeat: usize,
    pub intensity_error: f64,
    pub iterations: usize,
    /// Displacement RMSE against the clear run of the same cell.
    pub rmse_vs_clear: Option<f64>,
    /// Displacement RMSE against the fixture's ground truth.
    pub rmse_vs_truth: Option<f64>,
    pub party1_seconds: f64,
    pub party2_seconds: f64,
    pub party1_bytes: u64,
    pub party2_bytes: u64,
    pub rotations: u64,
    pub he_mults: u64,
    /// `None` on success, else the failure message.
    pub error: Option<String>,
}

impl RepeatRecord {
    pub fn failed(label: &str, repeat: usize, error: String) -> Self {
        Self {
            label: label.to_string(),
            repeat,
            intensity_error: 0.0,
            iterations: 0,
            rmse_vs_clear: None,
            rmse_vs_truth: None,
            party1_seconds: 0.0,
            party2_seconds: 0.0,
            party1_bytes: 0,
            party2_bytes: 0,
            rotations: 0,
            he_mults: 0,
            error: Some(error),
        }
    }
}

const RAW_HEADER: &str = "label\trepeat\tintensity_error\titerations\trmse_vs_clear\trmse_vs_truth\tparty1_seconds\tparty2_seconds\tparty1_bytes\tparty2_bytes\trotations\the_mults\terror";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Failures always occupy a nonempty field so they never read back as
/// successes.
fn error_field(e: &str) -> String {
    if e.is_empty() {
        "unspecified error".to_string()
    } else {
        clean(e)
    }
}

pub fn write_raw(records: &[RepeatRecord]) -> String {
    let mut out = String::from(RAW_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            clean(&r.label),
            r.repeat,
            r.intensity_error,
            r.iterations,
            opt(r.rmse_vs_clear),
            opt(r.rmse_vs_truth),
            r.party1_seconds,
            r.party2_seconds,
            r.party1_bytes,
            r.party2_bytes,
            r.rotations,
            r.he_mults,
            r.error.as_deref().map(error_field).unwrap_or_default()
        );
    }
    out
}

pub fn parse_raw(text: &str) -> Result<Vec<RepeatRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(RAW_HEADER) {
        return Err(Error::parse("raw records", "missing or unexpected header"));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split('\t').collect();
            let field = format!("raw records line {}", i + 2);
            if f.len() != 13 {
                return Err(Error::parse(field, format!("expected 13 columns, got {}", f.len())));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(field.clone(), format!("bad number {s:?}")))
            };
            let int = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| Error::parse(field.clone(), format!("bad integer {s:?}")))
            };
            let optf = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
            Ok(RepeatRecord {
                label: f[0].to_string(),
                repeat: int(f[1])? as usize,
                intensity_error: num(f[2])?,
                iterations: int(f[3])? as usize,
                rmse_vs_clear: optf(f[4])?,
                rmse_vs_truth: optf(f[5])?,
                party1_seconds: num(f[6])?,
                party2_seconds: num(f[7])?,
                party1_bytes: int(f[8])?,
                party2_bytes: int(f[9])?,
                rotations: int(f[10])?,
                he_mults: int(f[11])?,
                error: (!f[12].is_empty()).then(|| f[12].to_string()),
            })
        })
        .collect()
}

/// Mean and sample standard deviation (zero for a single value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: 0.0, sd: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}

/// One report line, aggregated over the successful repeats of a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub label: String,
    pub repeats: usize,
    pub failures: usize,
    pub intensity_error: Stat,
    pub iterations: Stat,
    pub rmse_vs_clear: Option<Stat>,
    pub rmse_vs_truth: Option<Stat>,
    /// Per-iteration means.
    pub party1_seconds: f64,
    pub party2_seconds: f64,
    pub party1_mb: f64,
    pub party2_mb: f64,
    /// Per-run means.
    pub rotations: f64,
    pub he_mults: f64,
}

/// Groups records by label, keeping first-appearance order.
pub fn aggregate(records: &[RepeatRecord]) -> Vec<MetricsRow> {
    let mut labels: Vec<&str> = Vec::new();
    for r in records {
        if !labels.contains(&r.label.as_str()) {
            labels.push(&r.label);
        }
    }
    labels
        .into_iter()
        .map(|label| {
            let all: Vec<&RepeatRecord> = records.iter().filter(|r| r.label == label).collect();
            let ok: Vec<&RepeatRecord> = all.iter().copied().filter(|r| r.error.is_none()).collect();
            let col = |f: &dyn Fn(&RepeatRecord) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<_>>();
            let per_iter =
                |f: &dyn Fn(&RepeatRecord) -> f64| Stat::of(&col(&|r| f(r) / r.iterations.max(1) as f64)).mean;
            let opt_stat = |f: &dyn Fn(&RepeatRecord) -> Option<f64>| {
                let v: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
                (!v.is_empty() && v.len() == ok.len()).then(|| Stat::of(&v))
            };
            MetricsRow {
                label: label.to_string(),
                repeats: ok.len(),
                failures: all.len() - ok.len(),
                intensity_error: Stat::of(&col(&|r| r.intensity_error)),
                iterations: Stat::of(&col(&|r| r.iterations as f64)),
                rmse_vs_clear: opt_stat(&|r| r.rmse_vs_clear),
                rmse_vs_truth: opt_stat(&|r| r.rmse_vs_truth),
                party1_seconds: per_iter(&|r| r.party1_seconds),
                party2_seconds: per_iter(&|r| r.party2_seconds),
                party1_mb: per_iter(&|r| r.party1_bytes as f64 / BYTES_PER_MB),
                party2_mb: per_iter(&|r| r.party2_bytes as f64 / BYTES_PER_MB),
                rotations: Stat::of(&col(&|r| r.rotations as f64)).mean,
                he_mults: Stat::of(&col(&|r| r.he_mults as f64)).mean,
            }
        })
        .collect()
}

const CSV_HEADER: &str = "solution,repeats,intensity_error_mean (intensity^2),intensity_error_sd (intensity^2),\
iterations_mean (count),iterations_sd (count),rmse_vs_clear_mean (voxel),rmse_vs_clear_sd (voxel),\
rmse_vs_truth_mean (voxel),rmse_vs_truth_sd (voxel),time_party1 (s/iter),time_party2 (s/iter),\
comm_party1 (MB/iter),comm_party2 (MB/iter),rotations (count/run),he_mults (count/run)";

fn csv_stat(s: Option<Stat>) -> String {
    s.map(|s| format!("{:.6e},{:.6e}", s.mean, s.sd))
        .unwrap_or_else(|| ",".into())
}

/// CSV of the rows with at least one successful repeat.
pub fn render_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows.iter().filter(|r| r.repeats > 0) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.1},{:.1}",
            r.label.replace(',', ";"),
            r.repeats,
            csv_stat(Some(r.intensity_error)),
            csv_stat(Some(r.iterations)),
            csv_stat(r.rmse_vs_clear),
            csv_stat(r.rmse_vs_truth),
            r.party1_seconds,
            r.party2_seconds,
            r.party1_mb,
            r.party2_mb,
            r.rotations,
            r.he_mults
        );
    }
    out
}

fn md_stat(s: Option<Stat>, prec: usize) -> String {
    s.map(|s| format!("{:.p$} ± {:.p$}", s.mean, s.sd, p = prec))
        .unwrap_or_else(|| "–".into())
}

pub fn render_markdown(title: &str, rows: &[MetricsRow], records: &[RepeatRecord]) -> String {
    let mut out = format!("# {title}\n\n");
    out.push_str(
        "| Solution | Intensity error | Iterations | RMSE vs clear (voxel) | RMSE vs truth (voxel) \
         | Time party 1 (s/iter) | Time party 2 (s/iter) | Comm party 1 (MB/iter) | Comm party 2 (MB/iter) \
         | Rotations | HE mults |\n",
    );
    out.push_str("|---|---|---|---|---|---|---|---|---|---|---|\n");
    for r in rows.iter().filter(|r| r.repeats > 0) {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.0} | {:.0} |",
            r.label,
            md_stat(Some(r.intensity_error), 4),
            md_stat(Some(r.iterations), 1),
            md_stat(r.rmse_vs_clear, 4),
            md_stat(r.rmse_vs_truth, 4),
            r.party1_seconds,
            r.party2_seconds,
            r.party1_mb,
            r.party2_mb,
            r.rotations,
            r.he_mults
        );
    }
    let failures: Vec<&RepeatRecord> = records.iter().filter(|r| r.error.is_some()).collect();
    if !failures.is_empty() {
        out.push_str("\n## Failures\n\n");
        for f in failures {
            let _ = writeln!(
                out,
                "- {} (repeat {}): {}",
                f.label,
                f.repeat,
                f.error.as_deref().unwrap_or("")
            );
        }
    }
    let _ = writeln!(
        out,
        "\nMean ± sample sd over repeats; time and communication are per-iteration means; 1 MB = 2^20 bytes."
    );
    out
}
