//! Deterministic in-memory filesystem with a configurable cost model.
//!
//! Latencies are not measured: every call reports the value its model
//! assigns, and a virtual clock advances by that value plus
//! `untimed_overhead_us`. The overhead stands for work outside every timed
//! window, so run totals taken from the clock exceed the sum of the timed
//! phases the way they do on a real system.
//!
//! Space accounting: a file holds `ceil(len / block_size)` blocks, every
//! directory below the root holds one block, and every file or directory
//! holds one inode. The root itself is free.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    BackendCapabilities, BackendError, FsBackend, Micros, ReadOutcome, StorageSnapshot,
    WriteTiming,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Latency {
    Fixed(Micros),
    /// Uniform in `[lo, hi)`, drawn from the mock's seeded generator.
    Uniform { lo: Micros, hi: Micros },
}

impl Default for Latency {
    fn default() -> Self {
        Latency::Fixed(0)
    }
}

impl Latency {
    fn draw(self, rng: &mut ChaCha8Rng) -> Micros {
        match self {
            Latency::Fixed(v) => v,
            Latency::Uniform { lo, hi } if hi > lo => rng.gen_range(lo..hi),
            Latency::Uniform { lo, .. } => lo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct LatencyModel {
    pub dir_create: Latency,
    pub dir_search: Latency,
    pub file_create: Latency,
    pub write_base: Latency,
    pub write_per_block: Micros,
    pub file_open: Latency,
    pub read_base: Latency,
    pub read_per_block: Micros,
    pub untimed_overhead_us: Micros,
}

impl LatencyModel {
    /// All timed costs zero; only untimed overhead advances the clock.
    pub fn zero() -> Self {
        Self {
            untimed_overhead_us: 1,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockConfig {
    pub block_size: u64,
    pub total_blocks: u64,
    pub total_inodes: u64,
    pub reports_inodes: bool,
    pub latency: LatencyModel,
    pub seed: u64,
    pub epoch_us: u64,
}

impl Default for MockConfig {
    fn default() -> Self {
        Self {
            block_size: 4096,
            total_blocks: 1 << 32,
            total_inodes: 1 << 32,
            reports_inodes: true,
            latency: LatencyModel {
                dir_create: Latency::Fixed(20),
                dir_search: Latency::Fixed(3),
                file_create: Latency::Fixed(25),
                write_base: Latency::Fixed(0),
                write_per_block: 10,
                file_open: Latency::Fixed(2),
                read_base: Latency::Fixed(0),
                read_per_block: 5,
                untimed_overhead_us: 1,
            },
            seed: 0,
            epoch_us: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MockFs {
    cfg: MockConfig,
    root: PathBuf,
    dirs: BTreeSet<PathBuf>,
    files: BTreeMap<PathBuf, Vec<u8>>,
    blocks_used: u64,
    inodes_used: u64,
    clock_us: Micros,
    rng: ChaCha8Rng,
}

impl MockFs {
    pub fn new(root: impl Into<PathBuf>, cfg: MockConfig) -> Self {
        assert!(
            BackendCapabilities::block_size_is_valid(cfg.block_size),
            "mock block size must be a power of two >= 512"
        );
        let root = root.into();
        let mut dirs = BTreeSet::new();
        dirs.insert(root.clone());
        Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            clock_us: cfg.epoch_us,
            cfg,
            root,
            dirs,
            files: BTreeMap::new(),
            blocks_used: 0,
            inodes_used: 0,
        }
    }

    pub fn config(&self) -> &MockConfig {
        &self.cfg
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn blocks_for(&self, len: u64) -> u64 {
        len.div_ceil(self.cfg.block_size)
    }

    pub fn file_count(&self) -> usize {
        self.files.len()
    }

    /// Directories below the root.
    pub fn directory_count(&self) -> usize {
        self.dirs.len() - 1
    }

    pub fn contains_dir(&self, path: &Path) -> bool {
        self.dirs.contains(path)
    }

    pub fn file(&self, path: &Path) -> Option<&[u8]> {
        self.files.get(path).map(Vec::as_slice)
    }

    pub fn files(&self) -> impl Iterator<Item = (&Path, &[u8])> {
        self.files.iter().map(|(p, c)| (p.as_path(), c.as_slice()))
    }

    /// Delete a file outside the measured operations.
    pub fn remove_file(&mut self, path: &Path) -> bool {
        match self.files.remove(path) {
            Some(c) => {
                self.blocks_used -= self.blocks_for(c.len() as u64);
                self.inodes_used -= 1;
                true
            }
            None => false,
        }
    }

    /// Flip every bit of the byte at `offset`, outside the measured operations.
    pub fn corrupt_byte(&mut self, path: &Path, offset: usize) -> bool {
        match self.files.get_mut(path).and_then(|c| c.get_mut(offset)) {
            Some(b) => {
                *b ^= 0xFF;
                true
            }
            None => false,
        }
    }

    /// Remove a directory and everything below it.
    pub fn remove_tree(&mut self, path: &Path) {
        let files: Vec<PathBuf> = self
            .files
            .keys()
            .filter(|p| p.starts_with(path))
            .cloned()
            .collect();
        for f in files {
            self.remove_file(&f);
        }
        let dirs: Vec<PathBuf> = self
            .dirs
            .iter()
            .filter(|p| p.starts_with(path) && p.as_path() != self.root)
            .cloned()
            .collect();
        for d in dirs {
            self.dirs.remove(&d);
            self.blocks_used -= 1;
            self.inodes_used -= 1;
        }
    }

    fn tick(&mut self, timed: Micros) {
        self.clock_us += timed + self.cfg.latency.untimed_overhead_us;
    }

    fn parent_exists(&self, path: &Path) -> bool {
        path.parent().is_some_and(|p| self.dirs.contains(p))
    }

    fn exists(&self, path: &Path) -> bool {
        self.dirs.contains(path) || self.files.contains_key(path)
    }

    fn reserve(&mut self, path: &Path, blocks: u64) -> Result<(), BackendError> {
        if self.inodes_used >= self.cfg.total_inodes
            || self.blocks_used + blocks > self.cfg.total_blocks
        {
            return Err(BackendError::NoSpace(path.to_path_buf()));
        }
        self.inodes_used += 1;
        self.blocks_used += blocks;
        Ok(())
    }
}

impl FsBackend for MockFs {
    fn kind(&self) -> &'static str {
        "mock"
    }

    fn capabilities(&self) -> BackendCapabilities {
        BackendCapabilities {
            reports_inodes: self.cfg.reports_inodes,
            block_size_bytes: self.cfg.block_size,
        }
    }

    fn create_directory(&mut self, path: &Path) -> Result<Micros, BackendError> {
        if !self.parent_exists(path) {
            return Err(BackendError::NotFound(path.to_path_buf()));
        }
        if self.exists(path) {
            return Err(BackendError::AlreadyExists(path.to_path_buf()));
        }
        self.reserve(path, 1)?;
        self.dirs.insert(path.to_path_buf());
        let t = self.cfg.latency.dir_create.draw(&mut self.rng);
        self.tick(t);
        Ok(t)
    }

    fn create_and_write_file(
        &mut self,
        path: &Path,
        content: &[u8],
    ) -> Result<WriteTiming, BackendError> {
        if !self.parent_exists(path) {
            return Err(BackendError::NotFound(path.to_path_buf()));
        }
        if self.exists(path) {
            return Err(BackendError::AlreadyExists(path.to_path_buf()));
        }
        let blocks = self.blocks_for(content.len() as u64);
        self.reserve(path, blocks)?;
        self.files.insert(path.to_path_buf(), content.to_vec());
        let lat = self.cfg.latency;
        let create_us = lat.file_create.draw(&mut self.rng);
        let write_us = lat.write_base.draw(&mut self.rng) + lat.write_per_block * blocks;
        self.tick(create_us + write_us);
        Ok(WriteTiming {
            create_us,
            write_us,
        })
    }

    fn open_and_read_file(&mut self, path: &Path) -> Result<ReadOutcome, BackendError> {
        let content = self
            .files
            .get(path)
            .cloned()
            .ok_or_else(|| BackendError::NotFound(path.to_path_buf()))?;
        let lat = self.cfg.latency;
        let open_us = lat.file_open.draw(&mut self.rng);
        let read_us = lat.read_base.draw(&mut self.rng)
            + lat.read_per_block * self.blocks_for(content.len() as u64);
        self.tick(open_us + read_us);
        Ok(ReadOutcome {
            open_us,
            read_us,
            content,
        })
    }

    fn search_directory(&mut self, path: &Path) -> Result<Micros, BackendError> {
        if !self.dirs.contains(path) {
            return Err(BackendError::NotFound(path.to_path_buf()));
        }
        let t = self.cfg.latency.dir_search.draw(&mut self.rng);
        self.tick(t);
        Ok(t)
    }

    fn storage_stats(&mut self) -> Result<StorageSnapshot, BackendError> {
        Ok(StorageSnapshot {
            inodes_free: if self.cfg.reports_inodes {
                self.cfg.total_inodes - self.inodes_used
            } else {
                0
            },
            blocks_free: self.cfg.total_blocks - self.blocks_used,
            block_size: self.cfg.block_size,
            total_bytes: self.cfg.total_blocks * self.cfg.block_size,
            timestamp_us: self.clock_us,
        })
    }

    fn now_us(&self) -> Micros {
        self.clock_us
    }
}
