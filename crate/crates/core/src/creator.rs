//! Write phase: build the folder tree and write every framed file.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, FsBackend};
use crate::batch::build_frames;
use crate::metrics::{trend_series, FolderSample, LatencyHistogram, LatencyTracker, MetricsError, Phase};
use crate::sink::{MetricsSink, ProgressState};
use crate::storage::{capture_delta, check_inodes, expected_inodes, StorageDelta};
use crate::workload::{DistributionError, FileSizeDistribution, RunSchedule};

/// Frames prepared ahead of the sequential write loop.
pub const FRAME_BATCH: u64 = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CreatePhaseResult {
    pub files_written: u64,
    pub bytes_written: u64,
    pub directories_created: u64,
    /// Folder and subfolder creation.
    pub folder_create_total_us: u64,
    /// File creation (open) only.
    pub file_create_total_us: u64,
    /// Data write plus close.
    pub file_write_total_us: u64,
    pub file_create: LatencyTracker,
    pub file_write: LatencyTracker,
    pub write_histogram: LatencyHistogram,
    pub per_folder_series: Vec<FolderSample>,
    pub errors: u64,
    pub storage: StorageDelta,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum AbortCause {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("interrupted")]
    Interrupted,
}

/// A phase that stopped early, with everything measured up to that point.
#[derive(Debug, Error)]
#[error("run aborted: {cause}")]
pub struct RunAbort<T> {
    pub cause: AbortCause,
    pub partial: Box<T>,
}

struct Tally {
    result: CreatePhaseResult,
    folders: Vec<FolderSample>,
}

/// Create the scheduled tree on `backend` and record all write timings.
pub fn run_create<B: FsBackend + ?Sized>(
    schedule: &RunSchedule,
    dist: &FileSizeDistribution,
    backend: &mut B,
    sink: &mut MetricsSink,
) -> Result<CreatePhaseResult, RunAbort<CreatePhaseResult>> {
    let histogram = match LatencyHistogram::new(sink.histogram_edges_us.clone()) {
        Ok(h) => h,
        Err(e) => return Err(abort(e.into(), CreatePhaseResult::default())),
    };
    if let Err(e) = dist.validate() {
        return Err(abort(e.into(), CreatePhaseResult::default()));
    }
    let before = match backend.storage_stats() {
        Ok(s) => s,
        Err(e) => return Err(abort(e.into(), CreatePhaseResult::default())),
    };
    let mut tally = Tally {
        result: CreatePhaseResult {
            write_histogram: histogram,
            ..CreatePhaseResult::default()
        },
        folders: Vec::with_capacity(schedule.folders() as usize),
    };
    let started = backend.now_us();

    let outcome = write_tree(schedule, dist, backend, sink, &mut tally, started);

    let buckets = sink.trend_buckets;
    if let Some(log) = sink.write_log.as_mut() {
        if let Err(e) = log.flush() {
            tally.result.warnings.push(format!("write sample log: {e}"));
        }
    }
    let mut result = tally.result;
    result.per_folder_series = trend_series(&tally.folders, buckets);
    let storage = capture_delta(backend, &before);
    match (outcome, storage) {
        (Ok(()), Ok(delta)) => {
            if let Some(w) = check_inodes(&delta, expected_inodes(schedule)) {
                result.warnings.push(w);
            }
            result.storage = delta;
            Ok(result)
        }
        (Ok(()), Err(e)) => {
            result.storage.before = before;
            result.storage.after = before;
            Err(abort(e.into(), result))
        }
        (Err(cause), delta) => {
            result.storage = delta.unwrap_or_else(|_| StorageDelta {
                before,
                after: before,
                ..StorageDelta::default()
            });
            Err(abort(cause, result))
        }
    }
}

fn abort<T>(cause: AbortCause, partial: T) -> RunAbort<T> {
    RunAbort {
        cause,
        partial: Box::new(partial),
    }
}

fn write_tree<B: FsBackend + ?Sized>(
    schedule: &RunSchedule,
    dist: &FileSizeDistribution,
    backend: &mut B,
    sink: &mut MetricsSink,
    tally: &mut Tally,
    started: u64,
) -> Result<(), AbortCause> {
    let r = &mut tally.result;
    for folder in 1..=schedule.folders() {
        let mut folder_us = backend.create_directory(&schedule.folder_path(folder))?;
        r.folder_create_total_us += folder_us;
        r.directories_created += 1;
        let files_before = r.files_written;

        for sub in 1..=schedule.subfolders_per_folder() {
            let t = backend.create_directory(&schedule.subfolder_path(folder, sub))?;
            r.folder_create_total_us += t;
            r.directories_created += 1;
            folder_us += t;

            let entries: Vec<_> = schedule.subfolder_files(folder, sub).collect();
            for chunk in entries.chunks(FRAME_BATCH as usize) {
                if sink.stop_requested() {
                    return Err(AbortCause::Interrupted);
                }
                let first = chunk[0].ordinal;
                let frames = build_frames(dist, first..first + chunk.len() as u64)?;
                for (entry, frame) in chunk.iter().zip(&frames) {
                    let timing = match backend.create_and_write_file(&entry.path, frame.as_bytes()) {
                        Ok(t) => t,
                        Err(e) if e.is_no_space() || e.is_not_found() => return Err(e.into()),
                        Err(e) => {
                            log::debug!("write failed: {e}");
                            r.errors += 1;
                            continue;
                        }
                    };
                    let size = frame.total_size();
                    r.files_written += 1;
                    r.bytes_written += size;
                    r.file_create_total_us += timing.create_us;
                    r.file_write_total_us += timing.write_us;
                    r.file_create.record(timing.create_us);
                    r.file_write.record(timing.write_us);
                    r.write_histogram.record(timing.write_us);
                    folder_us += timing.create_us + timing.write_us;
                    if let Some(log) = sink.write_log.as_mut().filter(|l| l.wants(entry.ordinal)) {
                        let row = [
                            entry.ordinal.to_string(),
                            size.to_string(),
                            timing.create_us.to_string(),
                            timing.write_us.to_string(),
                        ];
                        if let Err(e) = log.record(&row) {
                            r.warnings.push(format!("write sample log: {e}"));
                            sink.write_log = None;
                        }
                    }
                }
                sink.tick(&ProgressState {
                    phase: Phase::Write,
                    folders_done: folder - 1,
                    folders_total: schedule.folders(),
                    files_done: r.files_written,
                    elapsed_us: backend.now_us().saturating_sub(started),
                });
            }
        }
        tally.folders.push(FolderSample::new(
            folder,
            Phase::Write,
            folder_us,
            r.files_written - files_before,
        ));
    }
    sink.finish_progress(&ProgressState {
        phase: Phase::Write,
        folders_done: schedule.folders(),
        folders_total: schedule.folders(),
        files_done: r.files_written,
        elapsed_us: backend.now_us().saturating_sub(started),
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{Latency, LatencyModel, MockConfig, MockFs};
    use crate::workload::plan_schedule;

    fn mock(latency: LatencyModel) -> MockFs {
        MockFs::new(
            "/m",
            MockConfig {
                latency,
                ..MockConfig::default()
            },
        )
    }

    #[test]
    fn tree_shape_on_mock() {
        let s = plan_schedule(2, 2, 10, "/m").unwrap();
        let mut fs = mock(LatencyModel::default());
        let r = run_create(&s, &FileSizeDistribution::default(), &mut fs, &mut MetricsSink::default())
            .unwrap();
        assert_eq!(r.files_written, 40);
        assert_eq!(r.directories_created, 6);
        assert_eq!(fs.directory_count(), 6);
        assert_eq!(fs.file_count(), 40);
        assert_eq!(r.errors, 0);
        let on_disk: u64 = fs.files().map(|(_, c)| c.len() as u64).sum();
        assert_eq!(on_disk, r.bytes_written);
        assert_eq!(r.storage.inodes_used, 46);
        assert_eq!(r.per_folder_series.len(), 2);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn closed_form_totals() {
        let s = plan_schedule(1, 1, 100, "/m").unwrap();
        let mut fs = mock(LatencyModel {
            file_create: Latency::Fixed(25),
            write_per_block: 10,
            ..LatencyModel::default()
        });
        let r = run_create(&s, &FileSizeDistribution::fixed(4096, 1), &mut fs, &mut MetricsSink::default())
            .unwrap();
        assert_eq!(r.file_create_total_us, 2500);
        assert_eq!(r.file_write_total_us, 1000);
        assert_eq!(r.bytes_written, 409_600);
    }

    #[test]
    fn existing_tree_aborts() {
        let s = plan_schedule(1, 1, 3, "/m").unwrap();
        let mut fs = mock(LatencyModel::default());
        let dist = FileSizeDistribution::default();
        run_create(&s, &dist, &mut fs, &mut MetricsSink::default()).unwrap();
        let err = run_create(&s, &dist, &mut fs, &mut MetricsSink::default()).unwrap_err();
        assert!(matches!(err.cause, AbortCause::Backend(BackendError::AlreadyExists(_))));
        assert_eq!(err.partial.files_written, 0);
    }

    #[test]
    fn no_space_keeps_partial_result() {
        let s = plan_schedule(1, 1, 100, "/m").unwrap();
        let mut fs = MockFs::new(
            "/m",
            MockConfig {
                total_blocks: 2 + 10 * 2,
                ..MockConfig::default()
            },
        );
        let err = run_create(&s, &FileSizeDistribution::fixed(5000, 0), &mut fs, &mut MetricsSink::default())
            .unwrap_err();
        assert!(matches!(err.cause, AbortCause::Backend(BackendError::NoSpace(_))));
        assert_eq!(err.partial.files_written, 10);
        assert_eq!(err.partial.storage.blocks_used, 22);
    }

    #[test]
    fn invalid_distribution_rejected_before_io() {
        let s = plan_schedule(1, 1, 1, "/m").unwrap();
        let mut fs = mock(LatencyModel::default());
        let err = run_create(&s, &FileSizeDistribution::fixed(4, 0), &mut fs, &mut MetricsSink::default())
            .unwrap_err();
        assert!(matches!(err.cause, AbortCause::Distribution(_)));
        assert_eq!(fs.directory_count(), 0);
    }
}
