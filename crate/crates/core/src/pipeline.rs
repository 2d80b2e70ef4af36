//! Create, read and full runs assembled into reports.

use std::collections::BTreeMap;

use crate::backend::{FsBackend, MockConfig};
use crate::creator::run_create;
use crate::metrics::compute_derived;
use crate::reader::run_read;
use crate::report::{RunIdentity, RunReport};
use crate::sink::MetricsSink;
use crate::workload::{FileSizeDistribution, RunSchedule};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub label: String,
    pub schedule: RunSchedule,
    pub distribution: FileSizeDistribution,
    pub drop_cache_hint: bool,
    pub durability_sync: bool,
    pub mock: Option<MockConfig>,
    pub config: BTreeMap<String, String>,
}

impl RunOptions {
    pub fn new(label: impl Into<String>, schedule: RunSchedule, distribution: FileSizeDistribution) -> Self {
        Self {
            label: label.into(),
            schedule,
            distribution,
            drop_cache_hint: false,
            durability_sync: false,
            mock: None,
            config: BTreeMap::new(),
        }
    }
}

/// How a command should exit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    /// Missing files or checksum failures.
    Discrepancy,
    Aborted,
}

impl Outcome {
    fn worst(self, other: Outcome) -> Outcome {
        use Outcome::*;
        match (self, other) {
            (Aborted, _) | (_, Aborted) => Aborted,
            (Discrepancy, _) | (_, Discrepancy) => Discrepancy,
            _ => Clean,
        }
    }
}

fn identity<B: FsBackend + ?Sized>(opts: &RunOptions, backend: &B, started_us: u64) -> RunIdentity {
    RunIdentity {
        label: opts.label.clone(),
        backend: backend.kind().to_string(),
        schedule: opts.schedule.clone(),
        distribution: opts.distribution,
        started_us,
        finished_us: started_us,
        capabilities: backend.capabilities(),
        mock: opts.mock,
        timer_overhead_ns: backend.timer_overhead_ns(),
        drop_cache_hint_requested: opts.drop_cache_hint,
        drop_cache_applied: false,
        durability_sync: opts.durability_sync,
        config: opts.config.clone(),
    }
}

/// Recompute derived metrics from whatever phases the report holds.
pub fn refresh_derived(report: &mut RunReport, run_total_us: u64) {
    let create = report.write.clone().unwrap_or_default();
    let read = report.read.clone().unwrap_or_default();
    match compute_derived(
        &create,
        &read,
        &create.storage,
        report.identity.capabilities.block_size_bytes,
        run_total_us,
    ) {
        Ok(d) => report.derived = Some(d),
        Err(e) => {
            report.derived = None;
            report.warnings.push(format!("derived metrics unavailable: {e}"));
        }
    }
}

fn create_into<B: FsBackend + ?Sized>(
    opts: &RunOptions,
    backend: &mut B,
    sink: &mut MetricsSink,
    report: &mut RunReport,
) -> Outcome {
    match run_create(&opts.schedule, &opts.distribution, backend, sink) {
        Ok(result) => {
            report.warnings.extend(result.warnings.iter().cloned());
            report.write = Some(result);
            Outcome::Clean
        }
        Err(abort) => {
            report.warnings.push(abort.to_string());
            report.write = Some(*abort.partial);
            Outcome::Aborted
        }
    }
}

fn read_into<B: FsBackend + ?Sized>(
    opts: &RunOptions,
    backend: &mut B,
    sink: &mut MetricsSink,
    report: &mut RunReport,
) -> Outcome {
    if opts.drop_cache_hint {
        report.identity.drop_cache_applied = backend.drop_caches();
    }
    match run_read(&opts.schedule, backend, sink) {
        Ok(result) => {
            let outcome = if result.is_clean() {
                Outcome::Clean
            } else {
                Outcome::Discrepancy
            };
            report.read = Some(result);
            outcome
        }
        Err(abort) => {
            report.warnings.push(abort.to_string());
            report.read = Some(*abort.partial);
            Outcome::Aborted
        }
    }
}

/// Write phase only; the report stays marked incomplete until a read is merged.
pub fn create_phase<B: FsBackend + ?Sized>(
    opts: &RunOptions,
    backend: &mut B,
    sink: &mut MetricsSink,
) -> (RunReport, Outcome) {
    let started = backend.now_us();
    let mut report = RunReport::new(identity(opts, backend, started));
    let outcome = create_into(opts, backend, sink, &mut report);
    let finished = backend.now_us();
    report.identity.finished_us = finished;
    refresh_derived(&mut report, finished - started);
    (report, outcome)
}

/// Read phase merged into an earlier create report (or a fresh one).
pub fn read_phase<B: FsBackend + ?Sized>(
    opts: &RunOptions,
    previous: Option<RunReport>,
    backend: &mut B,
    sink: &mut MetricsSink,
) -> (RunReport, Outcome) {
    let started = backend.now_us();
    let mut report = previous.unwrap_or_else(|| RunReport::new(identity(opts, backend, started)));
    let prior_us = report.derived.map(|d| d.run_total_us).unwrap_or(0);
    report.identity.drop_cache_hint_requested |= opts.drop_cache_hint;
    let outcome = read_into(opts, backend, sink, &mut report);
    let finished = backend.now_us();
    report.identity.finished_us = finished;
    report.complete = outcome != Outcome::Aborted && report.write.is_some();
    refresh_derived(&mut report, prior_us + (finished - started));
    (report, outcome)
}

/// Create then read in one pass; the run total spans both phases.
pub fn full_run<B: FsBackend + ?Sized>(
    opts: &RunOptions,
    backend: &mut B,
    sink: &mut MetricsSink,
) -> (RunReport, Outcome) {
    let started = backend.now_us();
    let mut report = RunReport::new(identity(opts, backend, started));
    let mut outcome = create_into(opts, backend, sink, &mut report);
    if outcome != Outcome::Aborted {
        outcome = outcome.worst(read_into(opts, backend, sink, &mut report));
    }
    let finished = backend.now_us();
    report.identity.finished_us = finished;
    report.complete = outcome != Outcome::Aborted;
    refresh_derived(&mut report, finished - started);
    (report, outcome)
}

/// Rebuild the deterministic tree on an in-memory backend without measuring it.
pub fn populate<B: FsBackend + ?Sized>(opts: &RunOptions, backend: &mut B) -> Result<(), String> {
    run_create(&opts.schedule, &opts.distribution, backend, &mut MetricsSink::default())
        .map(|_| ())
        .map_err(|e| e.to_string())
}
