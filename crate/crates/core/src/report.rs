//! Run reports: canonical JSON archive, text tables and plot-ready CSV.
//!
//! Serialized numeric fields carry their unit in the key name (`_us`,
//! `_bytes`, `_percent`, `_per_sec`, ...). Counts of files, blocks and inodes
//! are named after what they count. In the text table, per-file times are
//! µs, phase totals are seconds, throughput is bytes/µs and byte totals are
//! decimal GB (10^9 bytes).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendCapabilities, MockConfig};
use crate::creator::CreatePhaseResult;
use crate::metrics::{DerivedMetrics, LatencyHistogram, LatencyTracker};
use crate::reader::ReadPhaseResult;
use crate::workload::{FileSizeDistribution, RunSchedule};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("report json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("unsupported report schema version {0}")]
    Schema(u32),
}

pub mod units {
    pub fn us_to_secs(us: u64) -> f64 {
        us as f64 / 1e6
    }

    pub fn secs_to_us(secs: f64) -> u64 {
        (secs * 1e6).round() as u64
    }

    pub fn bytes_to_gb(bytes: u64) -> f64 {
        bytes as f64 / 1e9
    }

    pub fn gb_to_bytes(gb: f64) -> u64 {
        (gb * 1e9).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunIdentity {
    pub label: String,
    pub backend: String,
    pub schedule: RunSchedule,
    pub distribution: FileSizeDistribution,
    pub started_us: u64,
    pub finished_us: u64,
    pub capabilities: BackendCapabilities,
    pub mock: Option<MockConfig>,
    pub timer_overhead_ns: u64,
    pub drop_cache_hint_requested: bool,
    pub drop_cache_applied: bool,
    pub durability_sync: bool,
    /// Effective configuration after defaults, config file and flags.
    pub config: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub complete: bool,
    pub identity: RunIdentity,
    pub write: Option<CreatePhaseResult>,
    pub read: Option<ReadPhaseResult>,
    pub derived: Option<DerivedMetrics>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn new(identity: RunIdentity) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            complete: false,
            identity,
            write: None,
            read: None,
            derived: None,
            warnings: Vec::new(),
        }
    }
}

/// Canonical JSON: sorted keys, two-space indent, shortest round-trip floats.
pub fn to_json(report: &RunReport) -> Result<String, ReportError> {
    let value = serde_json::to_value(report)?;
    let mut s = serde_json::to_string_pretty(&value)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<RunReport, ReportError> {
    let report: RunReport = serde_json::from_str(text)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(ReportError::Schema(report.schema_version));
    }
    Ok(report)
}

pub fn load_json(path: &Path) -> Result<RunReport, ReportError> {
    let text = fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_json(&text)
}

/// Write the canonical JSON; no partial file is left behind on failure.
pub fn emit_json(report: &RunReport, path: &Path) -> Result<(), ReportError> {
    let text = to_json(report)?;
    let tmp = path.with_extension("json.partial");
    let io_err = |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Err(e) = fs::write(&tmp, text).and_then(|_| fs::rename(&tmp, path)) {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(e));
    }
    Ok(())
}

fn latency_triple(t: &LatencyTracker) -> String {
    format!("{}, {}, {}", t.min_us, t.mean_us().floor(), t.max_us)
}

fn secs(us: u64) -> String {
    format!("{:.2}", units::us_to_secs(us))
}

fn gb(bytes: u64) -> String {
    format!("{:.2}", units::bytes_to_gb(bytes))
}

fn percent(p: f64) -> String {
    format!("{:.0}%", p)
}

fn render(title: &str, header: &[&str], row: &[String]) -> String {
    let widths: Vec<usize> = header
        .iter()
        .zip(row)
        .map(|(h, v)| h.chars().count().max(v.chars().count()))
        .collect();
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join(" | ")
    };
    let head = line(header.to_vec());
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "{head}");
    let _ = writeln!(out, "{}", "-".repeat(head.chars().count()));
    let _ = writeln!(out, "{}", line(row.iter().map(String::as_str).collect()));
    out
}

pub const WRITE_COLUMNS: [&str; 17] = [
    "Filesystem",
    "FWT(min,ave,max) us",
    "WTh B/us",
    "TFWT s",
    "TfWT s",
    "TWT s",
    "FWs k/s",
    "BkWs k/s",
    "TFCWT s",
    "FCWT us",
    "TByW GB",
    "TBkW blocks",
    "DSU GB",
    "DSUO",
    "Inodes",
    "Files",
    "Errors",
];

pub const READ_COLUMNS: [&str; 19] = [
    "Filesystem",
    "FRT(min,ave,max) us",
    "RTh B/us",
    "TFRT s",
    "TfRT s",
    "TRead s",
    "FRs k/s",
    "BkRs k/s",
    "TFORT s",
    "FORT us",
    "TByR GB",
    "TBkR blocks",
    "TRT_run s",
    "CPUO",
    "BkSize",
    "Files",
    "Missing",
    "Checksum failures",
    "Read errors",
];

pub fn write_row(report: &RunReport) -> Vec<String> {
    let c = report.write.clone().unwrap_or_default();
    let d = report.derived.unwrap_or_default();
    vec![
        report.identity.label.clone(),
        latency_triple(&c.file_write),
        format!("{}", d.write_throughput_bytes_per_us.floor()),
        secs(c.folder_create_total_us),
        secs(c.file_write_total_us),
        secs(d.total_write_us),
        (d.files_written_per_sec / 1000).to_string(),
        (d.blocks_written_per_sec / 1000).to_string(),
        secs(c.file_create_total_us),
        format!("{}", d.file_create_avg_us.floor()),
        gb(c.bytes_written),
        d.blocks_written.to_string(),
        gb(d.disk_space_used_bytes),
        percent(d.disk_space_overhead_percent),
        d.inodes_used.to_string(),
        c.files_written.to_string(),
        c.errors.to_string(),
    ]
}

pub fn read_row(report: &RunReport) -> Vec<String> {
    let r = report.read.clone().unwrap_or_default();
    let d = report.derived.unwrap_or_default();
    vec![
        report.identity.label.clone(),
        latency_triple(&r.file_read),
        format!("{}", d.read_throughput_bytes_per_us.floor()),
        secs(r.folder_search_total_us),
        secs(r.file_read_total_us),
        secs(d.total_read_us),
        (d.files_read_per_sec / 1000).to_string(),
        (d.blocks_read_per_sec / 1000).to_string(),
        secs(r.file_open_total_us),
        format!("{}", d.file_open_avg_us.floor()),
        gb(r.bytes_read),
        r.blocks_read.to_string(),
        secs(d.run_total_us),
        percent(d.cpu_overhead_percent),
        report.identity.capabilities.block_size_bytes.to_string(),
        r.files_read.to_string(),
        r.missing_files.to_string(),
        r.checksum_failures.to_string(),
        r.read_errors.to_string(),
    ]
}

/// Write and read metric tables for one run.
pub fn emit_table(report: &RunReport) -> String {
    let mut out = render("File write performance", &WRITE_COLUMNS, &write_row(report));
    out.push('\n');
    out.push_str(&render("File read performance", &READ_COLUMNS, &read_row(report)));
    out
}

pub const PLOT_FILES: [&str; 4] = [
    "hist_write.csv",
    "hist_read.csv",
    "trend_write.csv",
    "trend_read.csv",
];

fn write_csv(path: &Path, rows: Vec<Vec<String>>) -> Result<(), ReportError> {
    let csv_err = |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn histogram_rows(h: Option<&LatencyHistogram>) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        "bucket_low_us".to_string(),
        "bucket_high_us".to_string(),
        "count".to_string(),
    ]];
    if let Some(h) = h {
        rows.push(vec![String::new(), h.edges_us[0].to_string(), h.underflow.to_string()]);
        rows.extend(
            h.buckets()
                .map(|(lo, hi, c)| vec![lo.to_string(), hi.to_string(), c.to_string()]),
        );
        let last = h.edges_us.last().copied().unwrap_or_default();
        rows.push(vec![last.to_string(), String::new(), h.overflow.to_string()]);
    }
    rows
}

fn trend_rows(series: Option<&[crate::metrics::FolderSample]>) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        "sample_ordinal".to_string(),
        "folder_ordinal".to_string(),
        "throughput_files_per_sec".to_string(),
    ]];
    for (i, s) in series.unwrap_or_default().iter().enumerate() {
        rows.push(vec![
            (i + 1).to_string(),
            s.folder_ordinal.to_string(),
            s.throughput_files_per_sec.to_string(),
        ]);
    }
    rows
}

/// Histogram and trend CSV files for plotting; returns the paths written.
pub fn emit_plotdata(report: &RunReport, out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(out_dir).map_err(|source| ReportError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let w = report.write.as_ref();
    let r = report.read.as_ref();
    let contents = [
        histogram_rows(w.map(|c| &c.write_histogram)),
        histogram_rows(r.map(|c| &c.read_histogram)),
        trend_rows(w.map(|c| c.per_folder_series.as_slice())),
        trend_rows(r.map(|c| c.per_folder_series.as_slice())),
    ];
    let mut paths = Vec::new();
    for (name, rows) in PLOT_FILES.iter().zip(contents) {
        let p = out_dir.join(name);
        write_csv(&p, rows)?;
        paths.push(p);
    }
    Ok(paths)
}
