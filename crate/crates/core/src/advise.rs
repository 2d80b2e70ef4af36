//! Filesystem preparation hints. Nothing here touches a device; commands are only printed.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::batch::sample_sizes;
use crate::storage::expected_inodes;
use crate::workload::{plan_schedule, FileSizeDistribution, RunSchedule};

pub const INODE_SAFETY_FACTOR: f64 = 1.2;
/// Approximate inode ceiling seen when formatting f2fs with `-i`.
pub const F2FS_INODE_CEILING: u64 = 630_000_000;
const EXT4_MAX_INODES: u64 = u32::MAX as u64;
const EXT4_INODE_BYTES: u64 = 256;
const XFS_INODE_BYTES: u64 = 512;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdviseError {
    #[error("unknown filesystem type {0:?} (expected ext4, xfs, btrfs, zfs or f2fs)")]
    UnknownFs(String),
    #[error("invalid size {0:?}")]
    InvalidSize(String),
    #[error("target file count must be at least 1")]
    NoFiles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsType {
    Ext4,
    Xfs,
    Btrfs,
    Zfs,
    F2fs,
}

impl FromStr for FsType {
    type Err = AdviseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ext4" => Ok(FsType::Ext4),
            "xfs" => Ok(FsType::Xfs),
            "btrfs" => Ok(FsType::Btrfs),
            "zfs" => Ok(FsType::Zfs),
            "f2fs" => Ok(FsType::F2fs),
            _ => Err(AdviseError::UnknownFs(s.to_string())),
        }
    }
}

/// Parse `14TB`, `2T`, `500GB`, `1e9` or a plain byte count (decimal units).
pub fn parse_size(s: &str) -> Result<u64, AdviseError> {
    let t = s.trim();
    let bad = || AdviseError::InvalidSize(s.to_string());
    let split = t
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .unwrap_or(t.len());
    let (num, suffix) = t.split_at(split);
    let scale = match suffix.to_ascii_uppercase().as_str() {
        "" | "B" => 1e0,
        "K" | "KB" => 1e3,
        "M" | "MB" => 1e6,
        "G" | "GB" => 1e9,
        "T" | "TB" => 1e12,
        "P" | "PB" => 1e15,
        _ => return Err(bad()),
    };
    let v: f64 = num.parse().map_err(|_| bad())?;
    if !v.is_finite() || v < 0.0 {
        return Err(bad());
    }
    Ok((v * scale).round() as u64)
}

/// Tree layout used for a target file count: up to 100 folders of 100K-file subfolders.
pub fn layout_for(target_files: u64) -> Result<RunSchedule, AdviseError> {
    if target_files == 0 {
        return Err(AdviseError::NoFiles);
    }
    let per_sub = target_files.min(100_000);
    let folders = target_files.div_ceil(per_sub).min(100);
    let subs = target_files.div_ceil(folders * per_sub);
    Ok(plan_schedule(folders, subs, per_sub, "/target").expect("layout counts are non-zero"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Advice {
    pub fs: FsType,
    pub schedule: RunSchedule,
    pub expected_inodes: u64,
    pub inode_target: u64,
    pub estimated_bytes: u64,
    pub command: String,
    pub notes: Vec<String>,
}

impl fmt::Display for Advice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "layout: {} folders x {} subfolders x {} files = {} files",
            self.schedule.folders(),
            self.schedule.subfolders_per_folder(),
            self.schedule.files_per_subfolder(),
            self.schedule.total_files()
        )?;
        writeln!(f, "expected inodes: {}", self.expected_inodes)?;
        writeln!(
            f,
            "inode target (x{INODE_SAFETY_FACTOR}): {}",
            self.inode_target
        )?;
        writeln!(
            f,
            "estimated space at 4 KiB blocks: {:.2} GB",
            self.estimated_bytes as f64 / 1e9
        )?;
        writeln!(f, "suggested command (not executed):")?;
        writeln!(f, "  {}", self.command)?;
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// Mean 4 KiB blocks per file under the default size law, from a fixed sample.
fn mean_blocks_per_file() -> f64 {
    let sizes = sample_sizes(&FileSizeDistribution::default(), 100_000)
        .expect("default distribution samples");
    sizes.iter().map(|s| s.div_ceil(4096)).sum::<u64>() as f64 / sizes.len() as f64
}

pub fn advise(fs: FsType, target_files: u64, disk_bytes: Option<u64>) -> Result<Advice, AdviseError> {
    let schedule = layout_for(target_files)?;
    let expected = expected_inodes(&schedule);
    let inode_target = (expected as f64 * INODE_SAFETY_FACTOR).ceil() as u64;
    let data_bytes = (target_files as f64 * mean_blocks_per_file() * 4096.0) as u64;
    let mut notes = Vec::new();

    let (command, estimated_bytes) = match fs {
        FsType::Ext4 => {
            if inode_target > EXT4_MAX_INODES {
                notes.push(format!(
                    "ext4 cannot hold more than {EXT4_MAX_INODES} inodes; split the schedule"
                ));
            }
            if let Some(disk) = disk_bytes {
                notes.push(format!(
                    "mkfs.ext4 defaults to one inode per 16 KiB, about {} inodes on this disk",
                    disk / 16_384
                ));
            }
            (
                format!("mkfs.ext4 -N {inode_target} -b 4096 /dev/xxx"),
                data_bytes + inode_target * EXT4_INODE_BYTES,
            )
        }
        FsType::Xfs => {
            let pct = disk_bytes
                .filter(|&d| d > 0)
                .map(|d| ((inode_target * XFS_INODE_BYTES) as f64 * 100.0 / d as f64).ceil() as u64)
                .unwrap_or(0)
                .clamp(10, 100);
            notes.push(
                "xfs allocates inodes on demand within maxpct of the disk; brief pauses during creation are inode allocation"
                    .to_string(),
            );
            (
                format!("mkfs.xfs -i maxpct={pct} -f /dev/xxx"),
                data_bytes + expected * XFS_INODE_BYTES,
            )
        }
        FsType::Btrfs => {
            notes.push(
                "btrfs does not use inodes like other filesystems: df always reports 0 inodes, so inode accounting is skipped"
                    .to_string(),
            );
            ("mkfs.btrfs -f /dev/xxx".to_string(), data_bytes)
        }
        FsType::Zfs => {
            notes.push(
                "create the pool first, then make sure it is mounted before pointing --root at it"
                    .to_string(),
            );
            notes.push("zfs uses 128 KiB records: reports show a 131072-byte block size".to_string());
            ("zpool create -f zfspoolname /dev/xxx".to_string(), data_bytes)
        }
        FsType::F2fs => {
            if inode_target > F2FS_INODE_CEILING {
                notes.push(format!(
                    "warning: f2fs formatted this way tops out near {F2FS_INODE_CEILING} inodes; creating {expected} files and folders is expected to fail, cap the run at 100 million files"
                ));
            }
            ("mkfs.f2fs -i -s 10 -z 10 -f /dev/xxx".to_string(), data_bytes)
        }
    };
    if let Some(disk) = disk_bytes {
        if estimated_bytes > disk {
            notes.push(format!(
                "warning: estimated {:.2} GB exceeds the {:.2} GB disk",
                estimated_bytes as f64 / 1e9,
                disk as f64 / 1e9
            ));
        }
    }
    Ok(Advice {
        fs,
        schedule,
        expected_inodes: expected,
        inode_target,
        estimated_bytes,
        command,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(parse_size("14TB").unwrap(), 14_000_000_000_000);
        assert_eq!(parse_size("2t").unwrap(), 2_000_000_000_000);
        assert_eq!(parse_size("1e9").unwrap(), 1_000_000_000);
        assert_eq!(parse_size("4096").unwrap(), 4096);
        assert!(parse_size("12XB").is_err());
        assert!(parse_size("-1").is_err());
    }

    #[test]
    fn layouts() {
        let s = layout_for(1_000_000_000).unwrap();
        assert_eq!(
            (s.folders(), s.subfolders_per_folder(), s.files_per_subfolder()),
            (100, 100, 100_000)
        );
        let s = layout_for(10_000_000).unwrap();
        assert_eq!(s.subfolders_per_folder(), 1);
        let s = layout_for(50).unwrap();
        assert_eq!(s.total_files(), 50);
        assert!(layout_for(0).is_err());
    }

    #[test]
    fn ext4_billion_files() {
        let a = advise(FsType::Ext4, 1_000_000_000, Some(14_000_000_000_000)).unwrap();
        assert_eq!(a.expected_inodes, 1_000_010_100);
        assert_eq!(a.inode_target, 1_200_012_120);
        assert!(a.command.contains("-N 1200012120"));
        assert!(a.command.contains("-b 4096"));
        assert!(!a.to_string().contains("exceeds"), "{a}");
    }

    #[test]
    fn btrfs_and_f2fs_notes() {
        let b = advise(FsType::Btrfs, 1000, None).unwrap();
        assert!(b.to_string().contains("does not use inodes"));
        let f = advise(FsType::F2fs, 1_000_000_000, None).unwrap();
        assert!(f.notes.iter().any(|n| n.contains("630000000")));
        let small = advise(FsType::F2fs, 100_000_000, None).unwrap();
        assert!(small.notes.is_empty());
    }

    #[test]
    fn xfs_and_zfs() {
        let x = advise(FsType::Xfs, 1_000_000_000, Some(14_000_000_000_000)).unwrap();
        assert!(x.command.starts_with("mkfs.xfs -i maxpct=10"));
        let z = advise(FsType::Zfs, 10, None).unwrap();
        assert!(z.command.starts_with("zpool create"));
        assert!("NTFS".parse::<FsType>().is_err());
    }

    #[test]
    fn space_per_file_is_about_two_blocks() {
        let m = mean_blocks_per_file();
        assert!((1.85..2.0).contains(&m), "{m}");
    }
}
