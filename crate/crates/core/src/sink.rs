//! Where a phase sends what it measures besides its result: raw sample logs and progress.

use std::fmt;
use std::io::{self, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::metrics::{Phase, DEFAULT_EDGES_US, DEFAULT_TREND_BUCKETS};

/// Configuration and side outputs shared by the create and read phases.
pub struct MetricsSink {
    pub histogram_edges_us: Vec<u64>,
    pub trend_buckets: usize,
    pub write_log: Option<SampleLog>,
    pub read_log: Option<SampleLog>,
    pub progress: Option<ProgressReporter>,
    /// Set from outside (e.g. a signal handler) to stop a phase at the next batch boundary.
    pub stop: Option<Arc<AtomicBool>>,
}

impl Default for MetricsSink {
    fn default() -> Self {
        Self {
            histogram_edges_us: DEFAULT_EDGES_US.to_vec(),
            trend_buckets: DEFAULT_TREND_BUCKETS,
            write_log: None,
            read_log: None,
            progress: None,
            stop: None,
        }
    }
}

impl MetricsSink {
    pub fn stop_requested(&self) -> bool {
        self.stop.as_ref().is_some_and(|f| f.load(Ordering::Relaxed))
    }

    pub(crate) fn tick(&mut self, state: &ProgressState) {
        if let Some(p) = self.progress.as_mut() {
            p.maybe_emit(state);
        }
    }

    pub(crate) fn finish_progress(&mut self, state: &ProgressState) {
        if let Some(p) = self.progress.as_mut() {
            p.emit(state);
        }
    }
}

/// 1-in-N raw per-file sample log in CSV.
pub struct SampleLog {
    every: u64,
    out: csv::Writer<Box<dyn Write + Send>>,
}

impl SampleLog {
    pub fn for_writes(every: u64, out: Box<dyn Write + Send>) -> io::Result<Self> {
        Self::with_header(every, out, &["path_ordinal", "size_bytes", "create_us", "write_us"])
    }

    pub fn for_reads(every: u64, out: Box<dyn Write + Send>) -> io::Result<Self> {
        Self::with_header(
            every,
            out,
            &["path_ordinal", "size_bytes", "open_us", "read_us", "verify"],
        )
    }

    fn with_header(every: u64, out: Box<dyn Write + Send>, header: &[&str]) -> io::Result<Self> {
        let mut out = csv::Writer::from_writer(out);
        out.write_record(header)?;
        Ok(Self {
            every: every.max(1),
            out,
        })
    }

    pub fn wants(&self, ordinal: u64) -> bool {
        ordinal.is_multiple_of(self.every)
    }

    pub fn record(&mut self, fields: &[String]) -> io::Result<()> {
        self.out.write_record(fields).map_err(io::Error::from)
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressState {
    pub phase: Phase,
    pub folders_done: u64,
    pub folders_total: u64,
    pub files_done: u64,
    pub elapsed_us: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressLine {
    pub phase: Phase,
    pub folders_done: u64,
    pub folders_total: u64,
    pub files_done: u64,
    pub rate_files_per_sec: f64,
}

pub fn progress_report(state: &ProgressState) -> ProgressLine {
    let rate_files_per_sec = if state.files_done == 0 || state.elapsed_us == 0 {
        0.0
    } else {
        state.files_done as f64 * 1e6 / state.elapsed_us as f64
    };
    ProgressLine {
        phase: state.phase,
        folders_done: state.folders_done,
        folders_total: state.folders_total,
        files_done: state.files_done,
        rate_files_per_sec,
    }
}

impl fmt::Display for ProgressLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let phase = match self.phase {
            Phase::Write => "write",
            Phase::Read => "read",
        };
        write!(
            f,
            "[{phase}] {}/{} folders, {} files, {:.0} files/s",
            self.folders_done, self.folders_total, self.files_done, self.rate_files_per_sec
        )
    }
}

/// Writes a progress line at most once per interval.
pub struct ProgressReporter {
    interval: Duration,
    last: Option<Instant>,
    out: Box<dyn Write + Send>,
}

impl ProgressReporter {
    pub fn new(interval: Duration, out: Box<dyn Write + Send>) -> Self {
        Self {
            interval,
            last: None,
            out,
        }
    }

    pub fn stderr(interval: Duration) -> Self {
        Self::new(interval, Box::new(io::stderr()))
    }

    fn maybe_emit(&mut self, state: &ProgressState) {
        let now = Instant::now();
        match self.last {
            Some(t) if now.duration_since(t) < self.interval => {}
            _ => {
                self.last = Some(now);
                self.emit(state);
            }
        }
    }

    fn emit(&mut self, state: &ProgressState) {
        // progress is best effort
        let _ = writeln!(self.out, "{}", progress_report(state));
    }
}
