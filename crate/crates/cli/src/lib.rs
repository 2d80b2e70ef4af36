//! `bffs` command implementations: create, read, run and advise.

pub mod config;

use std::fmt;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use bffs_core::advise::{advise, parse_size, FsType};
use bffs_core::backend::{FsBackend, LatencyModel, MockConfig, MockFs, RealFs};
use bffs_core::pipeline::{create_phase, full_run, populate, read_phase, Outcome, RunOptions};
use bffs_core::reference;
use bffs_core::report::{emit_json, emit_plotdata, emit_table, load_json, ReportError};
use bffs_core::sink::{MetricsSink, ProgressReporter, SampleLog};
use bffs_core::workload::{plan_schedule, FileSizeDistribution, RunSchedule};
use bffs_core::RunReport;

use config::{FileConfig, Resolver};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_ABORT: i32 = 3;
pub const EXIT_DISCREPANCY: i32 = 4;

const DEFAULT_MOCK_ROOT: &str = "/mock";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("--{flag}: {msg}")]
    Invalid { flag: String, msg: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Backend(String),
}

impl CliError {
    pub fn invalid(flag: &str, msg: impl Into<String>) -> Self {
        CliError::Invalid {
            flag: flag.to_string(),
            msg: msg.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid { .. } | CliError::Config(_) => EXIT_VALIDATION,
            _ => EXIT_ABORT,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bffs", version, about = "Small-file metadata scalability benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the tree and write every file, timing each step.
    Create(RunArgs),
    /// Read the tree back, verify every file and merge into a report.
    Read(ReadArgs),
    /// Create then read in one process.
    Run(RunArgs),
    /// Print (never run) filesystem preparation commands.
    Advise(AdviseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Real,
    Mock,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Real => "real",
            BackendKind::Mock => "mock",
        })
    }
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

/// Latency model for the mock backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MockLatency {
    Default,
    Zero,
}

impl fmt::Display for MockLatency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MockLatency::Default => "default",
            MockLatency::Zero => "zero",
        })
    }
}

impl FromStr for MockLatency {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Directory the tree is created under (must exist for the real backend).
    #[arg(long)]
    pub root: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    #[arg(long)]
    pub folders: Option<u64>,
    #[arg(long)]
    pub subfolders: Option<u64>,
    #[arg(long)]
    pub files_per_subfolder: Option<u64>,
    /// Mean file size in bytes, trailer included.
    #[arg(long)]
    pub size_mean: Option<u64>,
    #[arg(long)]
    pub size_sd: Option<u64>,
    #[arg(long)]
    pub size_min: Option<u64>,
    #[arg(long)]
    pub size_max: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of folder throughput samples in the trend series.
    #[arg(long)]
    pub buckets: Option<usize>,
    /// Output directory for report.json, table.txt and plot CSVs.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub label: Option<String>,
    /// Log every Nth file's raw timings to CSV.
    #[arg(long, value_name = "N")]
    pub sample_log: Option<u64>,
    /// Try to drop the page cache before reading (needs privileges).
    #[arg(long)]
    pub drop_cache_hint: bool,
    /// Sync each file's data inside its write window.
    #[arg(long)]
    pub durability_sync: bool,
    #[arg(long, value_enum)]
    pub mock_latency: Option<MockLatency>,
    /// Seconds between progress lines on stderr; 0 disables them.
    #[arg(long)]
    pub progress_secs: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ReadArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Reuse the schedule and size law of an earlier create report and merge into it.
    #[arg(long)]
    pub from_report: Option<PathBuf>,
    /// Recompute metrics from a published reference row instead of reading a tree.
    #[arg(long, requires = "fixture")]
    pub metrics_only: bool,
    /// Reference row label for --metrics-only (ext4_10m, xfs_10m, zfs_1b).
    #[arg(long, requires = "metrics_only")]
    pub fixture: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct AdviseArgs {
    /// ext4, xfs, btrfs, zfs or f2fs.
    #[arg(long = "fs")]
    pub fs_type: String,
    /// Number of files the run will create (e.g. 1e9).
    #[arg(long, default_value = "1e9")]
    pub files: String,
    /// Disk capacity, e.g. 14TB.
    #[arg(long)]
    pub disk: Option<String>,
}

/// Fully resolved settings for create/read/run.
#[derive(Debug, Clone)]
pub struct Settings {
    pub backend: BackendKind,
    pub root: PathBuf,
    pub schedule: RunSchedule,
    pub distribution: FileSizeDistribution,
    pub buckets: usize,
    pub out: PathBuf,
    pub label: String,
    pub sample_log: Option<u64>,
    pub drop_cache_hint: bool,
    pub durability_sync: bool,
    pub mock: MockConfig,
    pub progress_secs: u64,
    pub options: RunOptions,
}

fn at_least_one(flag: &str, v: u64) -> Result<u64, CliError> {
    if v == 0 {
        Err(CliError::invalid(flag, "must be at least 1"))
    } else {
        Ok(v)
    }
}

/// Merge defaults, config file and flags and check everything before any I/O.
pub fn resolve(args: &RunArgs, file: &FileConfig, base: Option<&RunReport>) -> Result<Settings, CliError> {
    let mut r = Resolver::new(file);
    let prior = base.map(|b| &b.identity);
    let prior_sched = prior.map(|p| &p.schedule);
    let prior_dist = prior.map(|p| p.distribution).unwrap_or_default();

    let backend = r.value(
        "backend",
        args.backend,
        match prior.map(|p| p.backend.as_str()) {
            Some("mock") => BackendKind::Mock,
            _ => BackendKind::Real,
        },
    )?;
    let folders = at_least_one(
        "folders",
        r.value("folders", args.folders, prior_sched.map_or(100, |s| s.folders()))?,
    )?;
    let subfolders = at_least_one(
        "subfolders",
        r.value(
            "subfolders",
            args.subfolders,
            prior_sched.map_or(1, |s| s.subfolders_per_folder()),
        )?,
    )?;
    let files = at_least_one(
        "files-per-subfolder",
        r.value(
            "files-per-subfolder",
            args.files_per_subfolder,
            prior_sched.map_or(100_000, |s| s.files_per_subfolder()),
        )?,
    )?;
    let distribution = FileSizeDistribution {
        mean_bytes: r.value("size-mean", args.size_mean, prior_dist.mean_bytes)?,
        std_dev_bytes: r.value("size-sd", args.size_sd, prior_dist.std_dev_bytes)?,
        min_bytes: r.value("size-min", args.size_min, prior_dist.min_bytes)?,
        max_bytes: r.value("size-max", args.size_max, prior_dist.max_bytes)?,
        seed: r.value("seed", args.seed, prior_dist.seed)?,
    };
    if distribution.min_bytes > distribution.max_bytes {
        return Err(CliError::invalid("size-min", "must not exceed --size-max"));
    }
    if !(distribution.min_bytes..=distribution.max_bytes).contains(&distribution.mean_bytes) {
        return Err(CliError::invalid("size-mean", "must lie within [--size-min, --size-max]"));
    }
    distribution
        .validate()
        .map_err(|e| CliError::invalid("size-min", e.to_string()))?;

    let buckets = r.value("buckets", args.buckets, 20usize)?;
    if buckets == 0 {
        return Err(CliError::invalid("buckets", "must be at least 1"));
    }
    let sample_log = r.optional("sample-log", args.sample_log)?;
    if sample_log == Some(0) {
        return Err(CliError::invalid("sample-log", "must be at least 1"));
    }
    let label = r.value(
        "label",
        args.label.clone(),
        prior.map_or_else(|| "run".to_string(), |p| p.label.clone()),
    )?;
    if label.trim().is_empty() {
        return Err(CliError::invalid("label", "must not be empty"));
    }
    let out = r.value("out", args.out.as_ref().map(|p| p.display().to_string()), "bffs-out".into())?;
    let drop_cache_hint = r.switch("drop-cache-hint", args.drop_cache_hint)?;
    let durability_sync = r.switch("durability-sync", args.durability_sync)?;
    let latency = r.value("mock-latency", args.mock_latency, MockLatency::Default)?;
    let progress_secs = r.value("progress-secs", args.progress_secs, 10u64)?;

    let root_default = match (backend, prior_sched) {
        (_, Some(s)) => s.root().display().to_string(),
        (BackendKind::Mock, None) => DEFAULT_MOCK_ROOT.to_string(),
        (BackendKind::Real, None) => String::new(),
    };
    let root = PathBuf::from(r.value(
        "root",
        args.root.as_ref().map(|p| p.display().to_string()),
        root_default,
    )?);
    if root.as_os_str().is_empty() {
        return Err(CliError::invalid("root", "required for the real backend"));
    }
    if backend == BackendKind::Real && !root.is_dir() {
        return Err(CliError::invalid(
            "root",
            format!("{} is not an existing directory", root.display()),
        ));
    }
    if drop_cache_hint && backend == BackendKind::Mock {
        log::info!("--drop-cache-hint has no effect on the mock backend");
    }
    let schedule = match prior_sched {
        Some(s) if s.folders() == folders
            && s.subfolders_per_folder() == subfolders
            && s.files_per_subfolder() == files
            && s.root() == root =>
        {
            s.clone()
        }
        _ => plan_schedule(folders, subfolders, files, &root)
            .map_err(|e| CliError::invalid("folders", e.to_string()))?,
    };

    let mut mock = prior.and_then(|p| p.mock).unwrap_or_default();
    if args.mock_latency.is_some() || file.get("mock-latency").is_some() || prior.and_then(|p| p.mock).is_none() {
        mock.latency = match latency {
            MockLatency::Default => MockConfig::default().latency,
            MockLatency::Zero => LatencyModel::zero(),
        };
    }
    mock.seed = distribution.seed;

    let mut options = RunOptions::new(label.clone(), schedule.clone(), distribution);
    options.drop_cache_hint = drop_cache_hint;
    options.durability_sync = durability_sync;
    options.mock = (backend == BackendKind::Mock).then_some(mock);
    options.config = r.effective.clone();

    Ok(Settings {
        backend,
        root,
        schedule,
        distribution,
        buckets,
        out: PathBuf::from(out),
        label,
        sample_log,
        drop_cache_hint,
        durability_sync,
        mock,
        progress_secs,
        options,
    })
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

fn make_backend(s: &Settings) -> Result<Box<dyn FsBackend>, CliError> {
    Ok(match s.backend {
        BackendKind::Real => Box::new(
            RealFs::new(&s.root)
                .map_err(|e| CliError::Backend(e.to_string()))?
                .with_durability_sync(s.durability_sync),
        ),
        BackendKind::Mock => Box::new(MockFs::new(&s.root, s.mock)),
    })
}

fn make_sink(s: &Settings, stop: Arc<AtomicBool>) -> Result<MetricsSink, CliError> {
    let mut sink = MetricsSink {
        trend_buckets: s.buckets,
        stop: Some(stop),
        ..MetricsSink::default()
    };
    if s.progress_secs > 0 {
        sink.progress = Some(ProgressReporter::stderr(Duration::from_secs(s.progress_secs)));
    }
    if let Some(every) = s.sample_log {
        fs::create_dir_all(&s.out).map_err(io_err(s.out.display().to_string()))?;
        let open = |name: &str| -> Result<Box<dyn Write + Send>, CliError> {
            let p = s.out.join(name);
            Ok(Box::new(io::BufWriter::new(
                File::create(&p).map_err(io_err(p.display().to_string()))?,
            )))
        };
        sink.write_log = Some(
            SampleLog::for_writes(every, open("samples_write.csv")?)
                .map_err(io_err("samples_write.csv"))?,
        );
        sink.read_log = Some(
            SampleLog::for_reads(every, open("samples_read.csv")?)
                .map_err(io_err("samples_read.csv"))?,
        );
    }
    Ok(sink)
}

/// Write report.json, table.txt and the plot CSVs; returns the table text.
pub fn emit_all(report: &RunReport, out: &Path) -> Result<String, CliError> {
    fs::create_dir_all(out).map_err(io_err(out.display().to_string()))?;
    emit_json(report, &out.join("report.json"))?;
    let table = emit_table(report);
    let tp = out.join("table.txt");
    fs::write(&tp, &table).map_err(io_err(tp.display().to_string()))?;
    emit_plotdata(report, out)?;
    Ok(table)
}

fn summary(report: &RunReport, outcome: Outcome) -> String {
    let mut s = String::new();
    if let Some(w) = &report.write {
        s.push_str(&format!(
            "wrote {} files ({} bytes), {} errors\n",
            w.files_written, w.bytes_written, w.errors
        ));
    }
    if let Some(r) = &report.read {
        s.push_str(&format!(
            "read {} files, {} failed checksums, {} missing\n",
            r.files_read, r.checksum_failures, r.missing_files
        ));
    }
    for w in &report.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    s.push_str(match outcome {
        Outcome::Clean => "status: clean\n",
        Outcome::Discrepancy => "status: integrity discrepancies\n",
        Outcome::Aborted => "status: aborted (report marked incomplete)\n",
    });
    s
}

fn exit_for(outcome: Outcome) -> i32 {
    match outcome {
        Outcome::Clean => EXIT_CLEAN,
        Outcome::Discrepancy => EXIT_DISCREPANCY,
        Outcome::Aborted => EXIT_ABORT,
    }
}

fn finish(report: &RunReport, outcome: Outcome, out: &Path, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let table = emit_all(report, out)?;
    let _ = write!(stdout, "{table}\n{}", summary(report, outcome));
    let _ = writeln!(stdout, "report: {}", out.join("report.json").display());
    Ok(exit_for(outcome))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Create,
    Run,
}

fn cmd_create_or_run(
    mode: Mode,
    args: &RunArgs,
    file: &FileConfig,
    stop: Arc<AtomicBool>,
    stdout: &mut dyn Write,
) -> Result<i32, CliError> {
    let s = resolve(args, file, None)?;
    let mut sink = make_sink(&s, stop)?;
    let mut backend = make_backend(&s)?;
    let (report, outcome) = match mode {
        Mode::Create => create_phase(&s.options, backend.as_mut(), &mut sink),
        Mode::Run => full_run(&s.options, backend.as_mut(), &mut sink),
    };
    finish(&report, outcome, &s.out, stdout)
}

fn cmd_read(args: &ReadArgs, file: &FileConfig, stop: Arc<AtomicBool>, stdout: &mut dyn Write) -> Result<i32, CliError> {
    if args.metrics_only {
        let label = args.fixture.as_deref().unwrap_or_default();
        let row = reference::by_label(label).ok_or_else(|| {
            let known: Vec<_> = reference::ROWS.iter().map(|r| r.label).collect();
            CliError::invalid("fixture", format!("unknown row {label:?}; known: {}", known.join(", ")))
        })?;
        let out = args.run.out.clone().unwrap_or_else(|| PathBuf::from("bffs-out"));
        let report = row
            .report()
            .map_err(|e| CliError::Backend(format!("fixture {label}: {e}")))?;
        return finish(&report, Outcome::Clean, &out, stdout);
    }
    let previous = match &args.from_report {
        Some(p) => {
            if !p.is_file() {
                return Err(CliError::invalid("from-report", format!("{} does not exist", p.display())));
            }
            Some(load_json(p)?)
        }
        None => None,
    };
    let s = resolve(&args.run, file, previous.as_ref())?;
    let mut sink = make_sink(&s, stop)?;
    let mut backend = make_backend(&s)?;
    if s.backend == BackendKind::Mock {
        // The in-memory tree does not outlive a process; rebuild it unmeasured.
        populate(&s.options, backend.as_mut()).map_err(CliError::Backend)?;
    }
    let (report, outcome) = read_phase(&s.options, previous, backend.as_mut(), &mut sink);
    finish(&report, outcome, &s.out, stdout)
}

fn cmd_advise(args: &AdviseArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let fs_type: FsType = args
        .fs_type
        .parse()
        .map_err(|e: bffs_core::advise::AdviseError| CliError::invalid("fs", e.to_string()))?;
    let files = parse_size(&args.files).map_err(|e| CliError::invalid("files", e.to_string()))?;
    let disk = args
        .disk
        .as_deref()
        .map(parse_size)
        .transpose()
        .map_err(|e| CliError::invalid("disk", e.to_string()))?;
    let advice = advise(fs_type, files, disk).map_err(|e| CliError::invalid("files", e.to_string()))?;
    let _ = write!(stdout, "{advice}");
    Ok(EXIT_CLEAN)
}

/// Execute a parsed command; returns the process exit code.
pub fn execute(cli: &Cli, stop: Arc<AtomicBool>, stdout: &mut dyn Write) -> i32 {
    let result = FileConfig::from_env().and_then(|file| match &cli.command {
        Command::Create(a) => cmd_create_or_run(Mode::Create, a, &file, stop.clone(), stdout),
        Command::Run(a) => cmd_create_or_run(Mode::Run, a, &file, stop.clone(), stdout),
        Command::Read(a) => cmd_read(a, &file, stop.clone(), stdout),
        Command::Advise(a) => cmd_advise(a, stdout),
    });
    match result {
        Ok(code) => {
            if stop.load(Ordering::Relaxed) {
                eprintln!("bffs: interrupted; partial report written");
            }
            code
        }
        Err(e) => {
            eprintln!("bffs: {e}");
            e.exit_code()
        }
    }
}
