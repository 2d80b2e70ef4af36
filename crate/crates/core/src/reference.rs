//! Published measurement rows replayed through the metric formulas.
//!
//! Only primary cells are stored (phase totals, byte totals, disk space
//! used, run time); every rate and overhead is recomputed. Values are in the
//! published units: seconds, decimal GB and µs.

use std::collections::BTreeMap;

use crate::backend::{BackendCapabilities, StorageSnapshot};
use crate::creator::CreatePhaseResult;
use crate::metrics::{compute_derived, DerivedMetrics, LatencyTracker, MetricsError};
use crate::reader::ReadPhaseResult;
use crate::report::{units, RunIdentity, RunReport};
use crate::storage::StorageDelta;
use crate::workload::{plan_schedule, FileSizeDistribution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub label: &'static str,
    pub folders: u64,
    pub subfolders: u64,
    pub files_per_subfolder: u64,
    pub block_size: u64,
    /// min, ave, max
    pub file_write_us: (u64, f64, u64),
    pub folder_write_s: f64,
    pub file_write_s: f64,
    pub file_create_s: f64,
    pub bytes_written_gb: f64,
    /// Exact block count when published, otherwise derived from `disk_used_gb`.
    pub disk_used_blocks: Option<u64>,
    pub disk_used_gb: f64,
    pub inodes: u64,
    pub file_read_us: (u64, f64, u64),
    pub folder_read_s: f64,
    pub file_read_s: f64,
    pub file_open_s: f64,
    pub bytes_read_gb: f64,
    pub run_total_s: f64,
}

pub const EXT4_10M: ReferenceRow = ReferenceRow {
    label: "ext4_10m",
    folders: 100,
    subfolders: 1,
    files_per_subfolder: 100_000,
    block_size: 4096,
    file_write_us: (5, 15.0, 2_530_000),
    folder_write_s: 0.02,
    file_write_s: 157.0,
    file_create_s: 253.0,
    bytes_written_gb: 54.99,
    disk_used_blocks: Some(19_270_745),
    disk_used_gb: 78.93,
    inodes: 10_000_200,
    file_read_us: (2, 10.0, 4_120_000),
    folder_read_s: 0.0,
    file_read_s: 108.0,
    file_open_s: 23.0,
    bytes_read_gb: 54.99,
    run_total_s: 683.66,
};

pub const XFS_10M: ReferenceRow = ReferenceRow {
    label: "xfs_10m",
    folders: 100,
    subfolders: 1,
    files_per_subfolder: 100_000,
    block_size: 4096,
    file_write_us: (7, 12.0, 220_000),
    folder_write_s: 0.09,
    file_write_s: 124.0,
    file_create_s: 224.0,
    bytes_written_gb: 54.99,
    disk_used_blocks: None,
    disk_used_gb: 138.34,
    inodes: 10_000_200,
    file_read_us: (2, 5.0, 2_160_000),
    folder_read_s: 0.0,
    file_read_s: 53.0,
    file_open_s: 23.0,
    bytes_read_gb: 54.99,
    run_total_s: 571.45,
};

pub const ZFS_1B: ReferenceRow = ReferenceRow {
    label: "zfs_1b",
    folders: 100,
    subfolders: 100,
    files_per_subfolder: 100_000,
    block_size: 131_072,
    file_write_us: (11, 16.0, 130_000),
    folder_write_s: 13.76,
    file_write_s: 16316.0,
    file_create_s: 40887.0,
    bytes_written_gb: 5499.59,
    disk_used_blocks: None,
    disk_used_gb: 8232.76,
    inodes: 1_000_010_100,
    file_read_us: (73, 230.0, 830_000),
    folder_read_s: 10.52,
    file_read_s: 230447.0,
    file_open_s: 41671.0,
    bytes_read_gb: 5499.59,
    run_total_s: 348312.94,
};

pub const ROWS: [ReferenceRow; 3] = [EXT4_10M, XFS_10M, ZFS_1B];

pub fn by_label(label: &str) -> Option<ReferenceRow> {
    ROWS.iter().copied().find(|r| r.label.eq_ignore_ascii_case(label))
}

impl ReferenceRow {
    pub fn total_files(&self) -> u64 {
        self.folders * self.subfolders * self.files_per_subfolder
    }

    fn blocks_used(&self) -> u64 {
        self.disk_used_blocks.unwrap_or_else(|| {
            (units::gb_to_bytes(self.disk_used_gb) as f64 / self.block_size as f64).round() as u64
        })
    }

    pub fn create_result(&self) -> CreatePhaseResult {
        let files = self.total_files();
        let (min, ave, max) = self.file_write_us;
        let blocks = self.blocks_used();
        let before = StorageSnapshot {
            inodes_free: self.inodes * 10,
            blocks_free: blocks * 10,
            block_size: self.block_size,
            total_bytes: blocks * 20 * self.block_size,
            timestamp_us: 0,
        };
        let after = StorageSnapshot {
            inodes_free: before.inodes_free - self.inodes,
            blocks_free: before.blocks_free - blocks,
            ..before
        };
        CreatePhaseResult {
            files_written: files,
            bytes_written: units::gb_to_bytes(self.bytes_written_gb),
            directories_created: self.folders * (1 + self.subfolders),
            folder_create_total_us: units::secs_to_us(self.folder_write_s),
            file_create_total_us: units::secs_to_us(self.file_create_s),
            file_write_total_us: units::secs_to_us(self.file_write_s),
            file_write: LatencyTracker::from_summary(files, min, ave, max),
            storage: StorageDelta::between(before, after, true),
            ..CreatePhaseResult::default()
        }
    }

    pub fn read_result(&self) -> ReadPhaseResult {
        let files = self.total_files();
        let (min, ave, max) = self.file_read_us;
        let bytes = units::gb_to_bytes(self.bytes_read_gb);
        ReadPhaseResult {
            files_read: files,
            bytes_read: bytes,
            blocks_read: self.blocks_used(),
            folder_search_total_us: units::secs_to_us(self.folder_read_s),
            file_open_total_us: units::secs_to_us(self.file_open_s),
            file_read_total_us: units::secs_to_us(self.file_read_s),
            file_read: LatencyTracker::from_summary(files, min, ave, max),
            ..ReadPhaseResult::default()
        }
    }

    pub fn derived(&self) -> Result<DerivedMetrics, MetricsError> {
        let create = self.create_result();
        compute_derived(
            &create,
            &self.read_result(),
            &create.storage,
            self.block_size,
            units::secs_to_us(self.run_total_s),
        )
    }

    /// A complete report built from the row, for metrics-only replay.
    pub fn report(&self) -> Result<RunReport, MetricsError> {
        let identity = RunIdentity {
            label: self.label.to_string(),
            backend: "replay".to_string(),
            schedule: plan_schedule(self.folders, self.subfolders, self.files_per_subfolder, "/replay")
                .expect("reference schedules are valid"),
            distribution: FileSizeDistribution::default(),
            started_us: 0,
            finished_us: units::secs_to_us(self.run_total_s),
            capabilities: BackendCapabilities {
                reports_inodes: true,
                block_size_bytes: self.block_size,
            },
            mock: None,
            timer_overhead_ns: 0,
            drop_cache_hint_requested: false,
            drop_cache_applied: false,
            durability_sync: false,
            config: BTreeMap::new(),
        };
        let mut report = RunReport::new(identity);
        report.derived = Some(self.derived()?);
        report.write = Some(self.create_result());
        report.read = Some(self.read_result());
        report.complete = true;
        Ok(report)
    }
}
