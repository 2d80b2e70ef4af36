//! Read phase: walk the schedule, read every file back and verify its trailer.

use serde::{Deserialize, Serialize};

use crate::backend::{FsBackend, Micros, ReadOutcome};
use crate::batch::verify_all;
use crate::creator::{AbortCause, RunAbort, FRAME_BATCH};
use crate::metrics::{trend_series, FolderSample, LatencyHistogram, LatencyTracker, Phase};
use crate::sink::{MetricsSink, ProgressState};
use crate::workload::{FileEntry, RunSchedule, Verification};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FolderDiscrepancy {
    pub folder_ordinal: u64,
    pub checksum_failures: u64,
    pub missing_files: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ReadPhaseResult {
    pub files_read: u64,
    pub bytes_read: u64,
    pub blocks_read: u64,
    /// Folder and subfolder searches.
    pub folder_search_total_us: u64,
    /// File open only.
    pub file_open_total_us: u64,
    /// Data read plus close.
    pub file_read_total_us: u64,
    pub file_open: LatencyTracker,
    pub file_read: LatencyTracker,
    pub read_histogram: LatencyHistogram,
    pub checksum_failures: u64,
    /// Files not found, including those under missing directories and unreadable files.
    pub missing_files: u64,
    pub read_errors: u64,
    pub per_folder_series: Vec<FolderSample>,
    pub discrepancies: Vec<FolderDiscrepancy>,
}

impl ReadPhaseResult {
    pub fn is_clean(&self) -> bool {
        self.checksum_failures == 0 && self.missing_files == 0
    }
}

/// Time to stat a directory before iterating it.
pub fn folder_search<B: FsBackend + ?Sized>(
    backend: &mut B,
    path: &std::path::Path,
) -> Result<Micros, crate::backend::BackendError> {
    backend.search_directory(path)
}

struct FolderTally {
    us: u64,
    files: u64,
    failures: u64,
    missing: u64,
}

pub fn run_read<B: FsBackend + ?Sized>(
    schedule: &RunSchedule,
    backend: &mut B,
    sink: &mut MetricsSink,
) -> Result<ReadPhaseResult, RunAbort<ReadPhaseResult>> {
    let histogram = LatencyHistogram::new(sink.histogram_edges_us.clone()).map_err(|e| RunAbort {
        cause: AbortCause::Metrics(e),
        partial: Box::default(),
    })?;
    let block_size = backend.capabilities().block_size_bytes.max(1);
    let mut r = ReadPhaseResult {
        read_histogram: histogram,
        ..ReadPhaseResult::default()
    };
    let mut folders = Vec::with_capacity(schedule.folders() as usize);
    let started = backend.now_us();
    let files_per_sub = schedule.files_per_subfolder();

    let mut interrupted = false;
    'folders: for folder in 1..=schedule.folders() {
        let mut tally = FolderTally {
            us: 0,
            files: 0,
            failures: 0,
            missing: 0,
        };
        match folder_search(backend, &schedule.folder_path(folder)) {
            Ok(t) => {
                tally.us += t;
                r.folder_search_total_us += t;
                for sub in 1..=schedule.subfolders_per_folder() {
                    if sink.stop_requested() {
                        interrupted = true;
                        r.missing_files += tally.missing;
                        folders.push(FolderSample::new(folder, Phase::Read, tally.us, tally.files));
                        break 'folders;
                    }
                    match folder_search(backend, &schedule.subfolder_path(folder, sub)) {
                        Ok(t) => {
                            tally.us += t;
                            r.folder_search_total_us += t;
                            let entries: Vec<_> = schedule.subfolder_files(folder, sub).collect();
                            for chunk in entries.chunks(FRAME_BATCH as usize) {
                                read_chunk(chunk, backend, sink, &mut r, &mut tally, block_size);
                            }
                        }
                        Err(e) => {
                            log::debug!("subfolder search failed: {e}");
                            tally.missing += files_per_sub;
                        }
                    }
                    sink.tick(&ProgressState {
                        phase: Phase::Read,
                        folders_done: folder - 1,
                        folders_total: schedule.folders(),
                        files_done: r.files_read,
                        elapsed_us: backend.now_us().saturating_sub(started),
                    });
                }
            }
            Err(e) => {
                log::debug!("folder search failed: {e}");
                tally.missing += schedule.files_per_folder();
            }
        }
        r.missing_files += tally.missing;
        if tally.missing > 0 || tally.failures > 0 {
            r.discrepancies.push(FolderDiscrepancy {
                folder_ordinal: folder,
                checksum_failures: tally.failures,
                missing_files: tally.missing,
            });
        }
        folders.push(FolderSample::new(folder, Phase::Read, tally.us, tally.files));
    }
    sink.finish_progress(&ProgressState {
        phase: Phase::Read,
        folders_done: schedule.folders(),
        folders_total: schedule.folders(),
        files_done: r.files_read,
        elapsed_us: backend.now_us().saturating_sub(started),
    });
    if let Some(log) = sink.read_log.as_mut() {
        if let Err(e) = log.flush() {
            log::warn!("read sample log: {e}");
        }
    }
    r.per_folder_series = trend_series(&folders, sink.trend_buckets);
    if interrupted {
        return Err(RunAbort {
            cause: AbortCause::Interrupted,
            partial: Box::new(r),
        });
    }
    Ok(r)
}

/// Read a chunk sequentially, then verify it outside the timed windows.
fn read_chunk<B: FsBackend + ?Sized>(
    chunk: &[FileEntry],
    backend: &mut B,
    sink: &mut MetricsSink,
    r: &mut ReadPhaseResult,
    tally: &mut FolderTally,
    block_size: u64,
) {
    let mut done: Vec<(&FileEntry, ReadOutcome)> = Vec::with_capacity(chunk.len());
    for entry in chunk {
        match backend.open_and_read_file(&entry.path) {
            Ok(out) => done.push((entry, out)),
            Err(e) if e.is_not_found() => tally.missing += 1,
            Err(e) => {
                log::debug!("read failed: {e}");
                r.read_errors += 1;
                tally.missing += 1;
            }
        }
    }
    let contents: Vec<&[u8]> = done.iter().map(|(_, o)| o.content.as_slice()).collect();
    let verdicts = verify_all(&contents);
    for ((entry, out), verdict) in done.iter().zip(verdicts) {
        let size = out.content.len() as u64;
        r.files_read += 1;
        r.bytes_read += size;
        r.blocks_read += size.div_ceil(block_size);
        r.file_open_total_us += out.open_us;
        r.file_read_total_us += out.read_us;
        r.file_open.record(out.open_us);
        r.file_read.record(out.read_us);
        r.read_histogram.record(out.read_us);
        tally.us += out.open_us + out.read_us;
        tally.files += 1;
        if verdict != Verification::Pass {
            r.checksum_failures += 1;
            tally.failures += 1;
        }
        if let Some(log) = sink.read_log.as_mut().filter(|l| l.wants(entry.ordinal)) {
            let row = [
                entry.ordinal.to_string(),
                size.to_string(),
                out.open_us.to_string(),
                out.read_us.to_string(),
                verdict.as_str().to_string(),
            ];
            if let Err(e) = log.record(&row) {
                log::warn!("read sample log: {e}");
                sink.read_log = None;
            }
        }
    }
}
