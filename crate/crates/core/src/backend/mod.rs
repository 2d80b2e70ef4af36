//! Storage targets: the OS filesystem and a deterministic in-memory double.

use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod mock;
mod real;

pub use mock::{Latency, LatencyModel, MockConfig, MockFs};
pub use real::RealFs;

/// Microseconds.
pub type Micros = u64;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("{0}: already exists")]
    AlreadyExists(PathBuf),
    #[error("{0}: not found")]
    NotFound(PathBuf),
    #[error("{0}: permission denied")]
    PermissionDenied(PathBuf),
    #[error("{0}: no space left on device")]
    NoSpace(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("filesystem statistics for {path}: {source}")]
    Stat { path: PathBuf, source: io::Error },
}

impl BackendError {
    pub fn from_io(path: &Path, err: io::Error) -> Self {
        let path = path.to_path_buf();
        if err.raw_os_error() == Some(libc::ENOSPC) || err.raw_os_error() == Some(libc::EDQUOT) {
            return BackendError::NoSpace(path);
        }
        match err.kind() {
            io::ErrorKind::AlreadyExists => BackendError::AlreadyExists(path),
            io::ErrorKind::NotFound => BackendError::NotFound(path),
            io::ErrorKind::PermissionDenied => BackendError::PermissionDenied(path),
            io::ErrorKind::StorageFull => BackendError::NoSpace(path),
            _ => BackendError::Io { path, source: err },
        }
    }

    pub fn is_no_space(&self) -> bool {
        matches!(self, BackendError::NoSpace(_))
    }

    pub fn is_not_found(&self) -> bool {
        matches!(self, BackendError::NotFound(_))
    }
}

/// Free inodes and blocks of the target filesystem at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct StorageSnapshot {
    pub inodes_free: u64,
    pub blocks_free: u64,
    pub block_size: u64,
    pub total_bytes: u64,
    pub timestamp_us: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendCapabilities {
    /// False for targets that report no inode counts (btrfs-like).
    pub reports_inodes: bool,
    pub block_size_bytes: u64,
}

impl BackendCapabilities {
    pub fn block_size_is_valid(block_size: u64) -> bool {
        block_size >= 512 && block_size.is_power_of_two()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriteTiming {
    pub create_us: Micros,
    pub write_us: Micros,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadOutcome {
    pub open_us: Micros,
    pub read_us: Micros,
    pub content: Vec<u8>,
}

/// Uniform interface to the storage under test.
///
/// Paths are absolute (rooted at the schedule root). Implementations are
/// handed between threads but never called concurrently.
pub trait FsBackend: Send {
    fn kind(&self) -> &'static str;

    fn capabilities(&self) -> BackendCapabilities;

    fn create_directory(&mut self, path: &Path) -> Result<Micros, BackendError>;

    /// Create `path` and write `content`; the create and the write+close are timed separately.
    fn create_and_write_file(
        &mut self,
        path: &Path,
        content: &[u8],
    ) -> Result<WriteTiming, BackendError>;

    fn open_and_read_file(&mut self, path: &Path) -> Result<ReadOutcome, BackendError>;

    /// Stat the directory ahead of iterating its files.
    fn search_directory(&mut self, path: &Path) -> Result<Micros, BackendError>;

    fn storage_stats(&mut self) -> Result<StorageSnapshot, BackendError>;

    /// Clock for run-level totals, in microseconds since the epoch.
    fn now_us(&self) -> Micros;

    /// Best-effort page cache drop ahead of a read phase; returns whether it happened.
    fn drop_caches(&mut self) -> bool {
        false
    }

    /// Cost of an empty timed interval, in nanoseconds.
    fn timer_overhead_ns(&self) -> u64 {
        0
    }
}

/// Round a duration in nanoseconds to whole microseconds.
pub(crate) fn nanos_to_micros(nanos: u128) -> Micros {
    ((nanos + 500) / 1000) as Micros
}

/// Median cost of back-to-back monotonic clock reads.
pub fn calibrate_timer(samples: usize) -> u64 {
    let samples = samples.max(1);
    let mut costs: Vec<u128> = (0..samples)
        .map(|_| {
            let t = Instant::now();
            t.elapsed().as_nanos()
        })
        .collect();
    costs.sort_unstable();
    costs[costs.len() / 2] as u64
}
