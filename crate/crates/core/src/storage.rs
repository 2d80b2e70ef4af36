//! Before/used/after storage accounting around a run.

use serde::{Deserialize, Serialize};

use crate::backend::{BackendError, FsBackend, StorageSnapshot};
use crate::workload::RunSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct StorageDelta {
    pub before: StorageSnapshot,
    pub after: StorageSnapshot,
    pub reports_inodes: bool,
    pub inodes_used: u64,
    pub blocks_used: u64,
    pub bytes_used: u64,
}

impl StorageDelta {
    /// Space consumed between two snapshots; frees by other activity clamp to zero.
    pub fn between(before: StorageSnapshot, after: StorageSnapshot, reports_inodes: bool) -> Self {
        let blocks_used = before.blocks_free.saturating_sub(after.blocks_free);
        Self {
            before,
            after,
            reports_inodes,
            inodes_used: if reports_inodes {
                before.inodes_free.saturating_sub(after.inodes_free)
            } else {
                0
            },
            blocks_used,
            bytes_used: blocks_used * before.block_size,
        }
    }
}

/// One inode per file, folder and subfolder.
pub fn expected_inodes(schedule: &RunSchedule) -> u64 {
    schedule.total_files() + schedule.directory_count()
}

pub fn capture_delta<B: FsBackend + ?Sized>(
    backend: &mut B,
    before: &StorageSnapshot,
) -> Result<StorageDelta, BackendError> {
    let after = backend.storage_stats()?;
    Ok(StorageDelta::between(
        *before,
        after,
        backend.capabilities().reports_inodes,
    ))
}

/// Warning text when an inode-reporting target consumed a different inode count than planned.
pub fn check_inodes(delta: &StorageDelta, expected: u64) -> Option<String> {
    if !delta.reports_inodes || delta.inodes_used == expected {
        return None;
    }
    let msg = format!(
        "inode delta {} differs from the expected {} (other activity on the target?)",
        delta.inodes_used, expected
    );
    log::warn!("{msg}");
    Some(msg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{FsBackend, MockConfig, MockFs};
    use crate::workload::plan_schedule;
    use std::path::Path;

    #[test]
    fn expected_inode_counts() {
        assert_eq!(expected_inodes(&plan_schedule(100, 1, 100_000, "/t").unwrap()), 10_000_200);
        assert_eq!(expected_inodes(&plan_schedule(100, 10, 100_000, "/t").unwrap()), 100_001_100);
        assert_eq!(
            expected_inodes(&plan_schedule(100, 100, 100_000, "/t").unwrap()),
            1_000_010_100
        );
        assert_eq!(expected_inodes(&plan_schedule(1, 1, 1, "/t").unwrap()), 3);
    }

    #[test]
    fn reference_disk_row() {
        let before = StorageSnapshot {
            inodes_free: 1_200_005_235,
            blocks_free: 3_171_666_459,
            block_size: 4096,
            total_bytes: 13_000_000_000_000,
            timestamp_us: 0,
        };
        let after = StorageSnapshot {
            inodes_free: 1_190_005_035,
            blocks_free: 3_152_395_714,
            ..before
        };
        let d = StorageDelta::between(before, after, true);
        assert_eq!(d.inodes_used, 10_000_200);
        assert_eq!(d.blocks_used, 19_270_745);
        assert_eq!(d.bytes_used, 78_932_971_520);
        assert_eq!(check_inodes(&d, 10_000_200), None);
        assert!(check_inodes(&d, 10_000_000).is_some());
    }

    #[test]
    fn noop_and_mock_runs() {
        let mut fs = MockFs::new("/m", MockConfig::default());
        let before = fs.storage_stats().unwrap();
        let d = capture_delta(&mut fs, &before).unwrap();
        assert_eq!((d.inodes_used, d.blocks_used, d.bytes_used), (0, 0, 0));

        for dir in ["/m/a", "/m/a/b", "/m/a/c"] {
            fs.create_directory(Path::new(dir)).unwrap();
        }
        for i in 0..10 {
            fs.create_and_write_file(Path::new(&format!("/m/a/b/{i}")), &[0u8; 5000])
                .unwrap();
        }
        let d = capture_delta(&mut fs, &before).unwrap();
        assert_eq!(d.blocks_used, 23);
        assert_eq!(d.inodes_used, 13);
        assert_eq!(d.bytes_used, 23 * 4096);
    }

    #[test]
    fn inodeless_skip_checks() {
        let d = StorageDelta::between(
            StorageSnapshot {
                blocks_free: 10,
                block_size: 4096,
                ..StorageSnapshot::default()
            },
            StorageSnapshot {
                blocks_free: 5,
                block_size: 4096,
                ..StorageSnapshot::default()
            },
            false,
        );
        assert_eq!(d.inodes_used, 0);
        assert_eq!(check_inodes(&d, 99), None);
    }
}
