//! Run schedule, file-size sampling and the checksummed file frame.
//!
//! Every file in a run is fully determined by `(seed, ordinal)`: the file's
//! ordinal selects an independent ChaCha8 stream of the seeded generator, the
//! size is drawn first from that stream and the payload bytes follow. This
//! keeps trees byte-identical across runs and lets batches of files be
//! prepared in any order (or in parallel) without changing their contents.
//!
//! On-disk frame layout:
//!
//! ```text
//! +---------------------------+-------------------------------------+
//! | payload (size - 8 bytes)  | CRC-32 of payload as u64, LE (8 B)  |
//! +---------------------------+-------------------------------------+
//! ```
//!
//! The CRC is the reflected IEEE 802.3 variant (check value `0xCBF43926`);
//! the upper four trailer bytes are always zero.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Length of the checksum trailer appended to every payload.
pub const TRAILER_LEN: usize = 8;

/// Resample guard for the truncated normal draw.
pub const MAX_RESAMPLES: u32 = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("invalid schedule: {0} must be at least 1")]
    ZeroCount(&'static str),
    #[error("schedule overflow: {folders} x {subfolders} x {files} files does not fit in 64 bits")]
    Overflow { folders: u64, subfolders: u64, files: u64 },
    #[error("invalid root path {0:?}")]
    InvalidRoot(String),
    #[error("invalid name template {0:?}: expected exactly one %0Nd placeholder")]
    InvalidTemplate(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("size bounds must satisfy min <= mean <= max (min {min}, mean {mean}, max {max})")]
    Bounds { min: u64, mean: u64, max: u64 },
    #[error("minimum size {0} leaves no room for a payload; need at least {}", TRAILER_LEN + 1)]
    MinTooSmall(u64),
    #[error("no size within [{min}, {max}] after {MAX_RESAMPLES} draws")]
    Exhausted { min: u64, max: u64 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("invalid payload: frames need at least one payload byte")]
    EmptyPayload,
}

/// A `prefix%0Nd` style name pattern with a single zero-padded counter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamePattern {
    prefix: String,
    width: usize,
    suffix: String,
}

impl NamePattern {
    pub fn parse(template: &str) -> Result<Self, ScheduleError> {
        let bad = || ScheduleError::InvalidTemplate(template.to_string());
        let start = template.find('%').ok_or_else(bad)?;
        let rest = &template[start + 1..];
        let end = rest.find('d').ok_or_else(bad)?;
        let spec = &rest[..end];
        let width = if spec.is_empty() {
            0
        } else {
            if !spec.starts_with('0') {
                return Err(bad());
            }
            spec[1..].parse::<usize>().map_err(|_| bad())?
        };
        let suffix = &rest[end + 1..];
        let prefix = &template[..start];
        if suffix.contains('%') || prefix.contains('/') || suffix.contains('/') {
            return Err(bad());
        }
        if prefix.is_empty() && suffix.is_empty() && width == 0 {
            return Err(bad());
        }
        Ok(Self {
            prefix: prefix.to_string(),
            width,
            suffix: suffix.to_string(),
        })
    }

    pub fn render(&self, n: u64) -> String {
        format!("{}{:0width$}{}", self.prefix, n, self.suffix, width = self.width)
    }
}

impl fmt::Display for NamePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.width == 0 {
            write!(f, "{}%d{}", self.prefix, self.suffix)
        } else {
            write!(f, "{}%0{}d{}", self.prefix, self.width, self.suffix)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameTemplate {
    pub folder: NamePattern,
    pub subfolder: NamePattern,
    pub file: NamePattern,
}

impl NameTemplate {
    pub fn new(folder: &str, subfolder: &str, file: &str) -> Result<Self, ScheduleError> {
        Ok(Self {
            folder: NamePattern::parse(folder)?,
            subfolder: NamePattern::parse(subfolder)?,
            file: NamePattern::parse(file)?,
        })
    }
}

impl Default for NameTemplate {
    fn default() -> Self {
        Self::new("f%04d", "s%04d", "file%07d").expect("default templates are valid")
    }
}

/// Folder / subfolder / file counts and naming plan for one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSchedule {
    folders: u64,
    subfolders_per_folder: u64,
    files_per_subfolder: u64,
    total_files: u64,
    root: PathBuf,
    names: NameTemplate,
}

/// Build a schedule with the default name template.
pub fn plan_schedule(
    folders: u64,
    subfolders: u64,
    files_per_subfolder: u64,
    root: impl Into<PathBuf>,
) -> Result<RunSchedule, ScheduleError> {
    RunSchedule::with_names(
        folders,
        subfolders,
        files_per_subfolder,
        root,
        NameTemplate::default(),
    )
}

impl RunSchedule {
    pub fn with_names(
        folders: u64,
        subfolders: u64,
        files_per_subfolder: u64,
        root: impl Into<PathBuf>,
        names: NameTemplate,
    ) -> Result<Self, ScheduleError> {
        for (n, what) in [
            (folders, "folders"),
            (subfolders, "subfolders"),
            (files_per_subfolder, "files-per-subfolder"),
        ] {
            if n == 0 {
                return Err(ScheduleError::ZeroCount(what));
            }
        }
        let root = root.into();
        let raw = root.as_os_str();
        if raw.is_empty() || raw.to_string_lossy().contains('\0') {
            return Err(ScheduleError::InvalidRoot(root.display().to_string()));
        }
        let total_files = folders
            .checked_mul(subfolders)
            .and_then(|d| d.checked_mul(files_per_subfolder))
            .ok_or(ScheduleError::Overflow {
                folders,
                subfolders,
                files: files_per_subfolder,
            })?;
        // directory count must also fit, it feeds inode accounting
        folders
            .checked_mul(subfolders)
            .and_then(|d| d.checked_add(folders))
            .and_then(|d| d.checked_add(total_files))
            .ok_or(ScheduleError::Overflow {
                folders,
                subfolders,
                files: files_per_subfolder,
            })?;
        Ok(Self {
            folders,
            subfolders_per_folder: subfolders,
            files_per_subfolder,
            total_files,
            root,
            names,
        })
    }

    pub fn folders(&self) -> u64 {
        self.folders
    }

    pub fn subfolders_per_folder(&self) -> u64 {
        self.subfolders_per_folder
    }

    pub fn files_per_subfolder(&self) -> u64 {
        self.files_per_subfolder
    }

    pub fn total_files(&self) -> u64 {
        self.total_files
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn names(&self) -> &NameTemplate {
        &self.names
    }

    /// Number of directories the run creates below the root.
    pub fn directory_count(&self) -> u64 {
        self.folders * (1 + self.subfolders_per_folder)
    }

    pub fn files_per_folder(&self) -> u64 {
        self.subfolders_per_folder * self.files_per_subfolder
    }

    /// `folder` is 1-based.
    pub fn folder_path(&self, folder: u64) -> PathBuf {
        self.root.join(self.names.folder.render(folder))
    }

    pub fn subfolder_path(&self, folder: u64, subfolder: u64) -> PathBuf {
        self.folder_path(folder)
            .join(self.names.subfolder.render(subfolder))
    }

    /// Global 0-based ordinal of a file from its 1-based coordinates.
    pub fn file_ordinal(&self, folder: u64, subfolder: u64, file: u64) -> u64 {
        ((folder - 1) * self.subfolders_per_folder + (subfolder - 1)) * self.files_per_subfolder
            + (file - 1)
    }

    /// Files of one subfolder in creation order.
    pub fn subfolder_files(&self, folder: u64, subfolder: u64) -> impl Iterator<Item = FileEntry> + '_ {
        let dir = self.subfolder_path(folder, subfolder);
        let base = self.file_ordinal(folder, subfolder, 1);
        (1..=self.files_per_subfolder).map(move |file| FileEntry {
            ordinal: base + file - 1,
            folder,
            subfolder,
            file,
            path: dir.join(self.names.file.render(file)),
        })
    }

    /// Every file path in creation order: folders, then subfolders, then files.
    pub fn files(&self) -> impl Iterator<Item = FileEntry> + '_ {
        (1..=self.folders).flat_map(move |f| {
            (1..=self.subfolders_per_folder).flat_map(move |s| self.subfolder_files(f, s))
        })
    }

    /// Every directory in creation order (each folder followed by its subfolders).
    pub fn directories(&self) -> impl Iterator<Item = PathBuf> + '_ {
        (1..=self.folders).flat_map(move |f| {
            std::iter::once(self.folder_path(f))
                .chain((1..=self.subfolders_per_folder).map(move |s| self.subfolder_path(f, s)))
        })
    }
}

/// One scheduled file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileEntry {
    pub ordinal: u64,
    pub folder: u64,
    pub subfolder: u64,
    pub file: u64,
    pub path: PathBuf,
}

/// Truncated normal file-size law; sizes include the trailer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileSizeDistribution {
    pub mean_bytes: u64,
    pub std_dev_bytes: u64,
    pub min_bytes: u64,
    pub max_bytes: u64,
    pub seed: u64,
}

impl Default for FileSizeDistribution {
    fn default() -> Self {
        Self {
            mean_bytes: 5500,
            std_dev_bytes: 1024,
            min_bytes: 1024,
            max_bytes: 10240,
            seed: 0,
        }
    }
}

impl FileSizeDistribution {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Every file has exactly `size` bytes.
    pub fn fixed(size: u64, seed: u64) -> Self {
        Self {
            mean_bytes: size,
            std_dev_bytes: 0,
            min_bytes: size,
            max_bytes: size,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), DistributionError> {
        if !(self.min_bytes <= self.mean_bytes && self.mean_bytes <= self.max_bytes) {
            return Err(DistributionError::Bounds {
                min: self.min_bytes,
                mean: self.mean_bytes,
                max: self.max_bytes,
            });
        }
        if self.min_bytes < TRAILER_LEN as u64 + 1 {
            return Err(DistributionError::MinTooSmall(self.min_bytes));
        }
        Ok(())
    }
}

/// Seeded generator state: ChaCha8 plus the cached second polar Box-Muller output.
#[derive(Debug, Clone)]
pub struct WorkloadRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl WorkloadRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Independent stream for the file with the given ordinal.
    pub fn for_file(seed: u64, ordinal: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(ordinal);
        Self { inner, spare: None }
    }

    /// Standard normal deviate, polar Box-Muller; both outputs are used.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.inner.gen::<f64>() - 1.0;
            let v = 2.0 * self.inner.gen::<f64>() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let m = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * m);
                return u * m;
            }
        }
    }

    pub fn fill_bytes(&mut self, buf: &mut [u8]) {
        self.inner.fill_bytes(buf);
    }
}

/// Draw one file size (trailer included) from the truncated normal law.
///
/// Out-of-range draws are rejected and redrawn, never clamped.
pub fn sample_file_size(
    dist: &FileSizeDistribution,
    rng: &mut WorkloadRng,
) -> Result<u64, DistributionError> {
    let mean = dist.mean_bytes as f64;
    let sd = dist.std_dev_bytes as f64;
    for _ in 0..MAX_RESAMPLES {
        let x = (mean + sd * rng.standard_normal()).round();
        if x >= dist.min_bytes as f64 && x <= dist.max_bytes as f64 {
            return Ok(x as u64);
        }
    }
    Err(DistributionError::Exhausted {
        min: dist.min_bytes,
        max: dist.max_bytes,
    })
}

pub fn generate_payload(size: usize, rng: &mut WorkloadRng) -> Vec<u8> {
    let mut buf = vec![0u8; size];
    rng.fill_bytes(&mut buf);
    buf
}

pub fn crc32(data: &[u8]) -> u32 {
    crc32fast::hash(data)
}

/// Payload followed by its 8-byte trailer, stored contiguously.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramedFile {
    bytes: Vec<u8>,
}

impl FramedFile {
    pub fn payload(&self) -> &[u8] {
        &self.bytes[..self.bytes.len() - TRAILER_LEN]
    }

    pub fn trailer(&self) -> [u8; TRAILER_LEN] {
        let mut t = [0u8; TRAILER_LEN];
        t.copy_from_slice(&self.bytes[self.bytes.len() - TRAILER_LEN..]);
        t
    }

    pub fn total_size(&self) -> u64 {
        self.bytes.len() as u64
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

/// Append the CRC-32 trailer to `payload`.
pub fn encode_trailer(mut payload: Vec<u8>) -> Result<FramedFile, FrameError> {
    if payload.is_empty() {
        return Err(FrameError::EmptyPayload);
    }
    let crc = u64::from(crc32(&payload));
    payload.extend_from_slice(&crc.to_le_bytes());
    Ok(FramedFile { bytes: payload })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verification {
    Pass,
    ChecksumMismatch,
    TooShort,
}

impl Verification {
    pub fn as_str(self) -> &'static str {
        match self {
            Verification::Pass => "pass",
            Verification::ChecksumMismatch => "checksum-mismatch",
            Verification::TooShort => "too-short",
        }
    }
}

pub fn verify_frame(file_bytes: &[u8]) -> Verification {
    if file_bytes.len() < TRAILER_LEN + 1 {
        return Verification::TooShort;
    }
    let (payload, trailer) = file_bytes.split_at(file_bytes.len() - TRAILER_LEN);
    let stored = u64::from_le_bytes(trailer.try_into().expect("trailer is 8 bytes"));
    if stored == u64::from(crc32(payload)) {
        Verification::Pass
    } else {
        Verification::ChecksumMismatch
    }
}

/// Size and content of the file with the given ordinal.
pub fn frame_for(
    dist: &FileSizeDistribution,
    ordinal: u64,
) -> Result<FramedFile, DistributionError> {
    let mut rng = WorkloadRng::for_file(dist.seed, ordinal);
    let size = sample_file_size(dist, &mut rng)?;
    let payload = generate_payload(size as usize - TRAILER_LEN, &mut rng);
    Ok(encode_trailer(payload).expect("validated distributions leave a non-empty payload"))
}

/// The size the file with the given ordinal will have, without building its payload.
pub fn size_for(dist: &FileSizeDistribution, ordinal: u64) -> Result<u64, DistributionError> {
    sample_file_size(dist, &mut WorkloadRng::for_file(dist.seed, ordinal))
}
