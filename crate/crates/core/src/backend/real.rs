//! Backend over a mounted local filesystem.

// statvfs field widths differ between platforms; the casts keep this portable.
#![allow(clippy::unnecessary_cast)]

use std::ffi::CString;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Write};
use std::mem::MaybeUninit;
use std::os::unix::ffi::OsStrExt;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use super::{
    calibrate_timer, nanos_to_micros, BackendCapabilities, BackendError, FsBackend, Micros,
    ReadOutcome, StorageSnapshot, WriteTiming,
};

/// The mounted filesystem containing `root`.
#[derive(Debug)]
pub struct RealFs {
    root: PathBuf,
    durability_sync: bool,
    caps: BackendCapabilities,
    epoch_us: u64,
    origin: Instant,
    timer_overhead_ns: u64,
}

impl RealFs {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self, BackendError> {
        let root = root.into();
        let meta = fs::metadata(&root).map_err(|e| BackendError::from_io(&root, e))?;
        if !meta.is_dir() {
            return Err(BackendError::Io {
                path: root,
                source: io::Error::other("root is not a directory"),
            });
        }
        let st = statvfs(&root)?;
        let caps = BackendCapabilities {
            reports_inodes: st.f_files > 0,
            block_size_bytes: fragment_size(&st),
        };
        let epoch_us = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_micros() as u64)
            .unwrap_or(0);
        Ok(Self {
            root,
            durability_sync: false,
            caps,
            epoch_us,
            origin: Instant::now(),
            timer_overhead_ns: calibrate_timer(10_000),
        })
    }

    /// Sync file data to the device inside each write window.
    pub fn with_durability_sync(mut self, enabled: bool) -> Self {
        self.durability_sync = enabled;
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

fn statvfs(path: &Path) -> Result<libc::statvfs, BackendError> {
    let stat_err = |source| BackendError::Stat {
        path: path.to_path_buf(),
        source,
    };
    let c = CString::new(path.as_os_str().as_bytes())
        .map_err(|e| stat_err(io::Error::new(io::ErrorKind::InvalidInput, e)))?;
    let mut buf = MaybeUninit::<libc::statvfs>::uninit();
    // SAFETY: `c` is a valid NUL-terminated path and `buf` is writable for one statvfs.
    let rc = unsafe { libc::statvfs(c.as_ptr(), buf.as_mut_ptr()) };
    if rc != 0 {
        return Err(stat_err(io::Error::last_os_error()));
    }
    // SAFETY: statvfs returned 0, so the struct is initialized.
    Ok(unsafe { buf.assume_init() })
}

fn fragment_size(st: &libc::statvfs) -> u64 {
    let frsize = st.f_frsize as u64;
    if frsize > 0 {
        frsize
    } else {
        st.f_bsize as u64
    }
}

impl FsBackend for RealFs {
    fn kind(&self) -> &'static str {
        "real"
    }

    fn capabilities(&self) -> BackendCapabilities {
        self.caps
    }

    fn create_directory(&mut self, path: &Path) -> Result<Micros, BackendError> {
        let t = Instant::now();
        let res = fs::create_dir(path);
        let elapsed = nanos_to_micros(t.elapsed().as_nanos());
        res.map_err(|e| BackendError::from_io(path, e))?;
        Ok(elapsed)
    }

    fn create_and_write_file(
        &mut self,
        path: &Path,
        content: &[u8],
    ) -> Result<WriteTiming, BackendError> {
        let t0 = Instant::now();
        let opened = OpenOptions::new().write(true).create_new(true).open(path);
        let t1 = Instant::now();
        let mut file = opened.map_err(|e| BackendError::from_io(path, e))?;
        let written = file.write_all(content).and_then(|_| {
            if self.durability_sync {
                file.sync_data()
            } else {
                Ok(())
            }
        });
        drop(file);
        let t2 = Instant::now();
        written.map_err(|e| BackendError::from_io(path, e))?;
        Ok(WriteTiming {
            create_us: nanos_to_micros((t1 - t0).as_nanos()),
            write_us: nanos_to_micros((t2 - t1).as_nanos()),
        })
    }

    fn open_and_read_file(&mut self, path: &Path) -> Result<ReadOutcome, BackendError> {
        let t0 = Instant::now();
        let opened = File::open(path);
        let t1 = Instant::now();
        let mut file = opened.map_err(|e| BackendError::from_io(path, e))?;
        let result = file.metadata().and_then(|m| {
            let mut content = Vec::with_capacity(m.len() as usize);
            file.read_to_end(&mut content).map(|_| content)
        });
        drop(file);
        let t2 = Instant::now();
        let content = result.map_err(|e| BackendError::from_io(path, e))?;
        Ok(ReadOutcome {
            open_us: nanos_to_micros((t1 - t0).as_nanos()),
            read_us: nanos_to_micros((t2 - t1).as_nanos()),
            content,
        })
    }

    fn search_directory(&mut self, path: &Path) -> Result<Micros, BackendError> {
        let t = Instant::now();
        let res = fs::metadata(path);
        let elapsed = nanos_to_micros(t.elapsed().as_nanos());
        let meta = res.map_err(|e| BackendError::from_io(path, e))?;
        if !meta.is_dir() {
            return Err(BackendError::NotFound(path.to_path_buf()));
        }
        Ok(elapsed)
    }

    fn storage_stats(&mut self) -> Result<StorageSnapshot, BackendError> {
        let st = statvfs(&self.root)?;
        let block_size = fragment_size(&st);
        Ok(StorageSnapshot {
            inodes_free: if self.caps.reports_inodes {
                st.f_ffree as u64
            } else {
                0
            },
            blocks_free: st.f_bfree as u64,
            block_size,
            total_bytes: st.f_blocks as u64 * block_size,
            timestamp_us: self.now_us(),
        })
    }

    fn now_us(&self) -> Micros {
        self.epoch_us + self.origin.elapsed().as_micros() as u64
    }

    fn drop_caches(&mut self) -> bool {
        // SAFETY: sync(2) takes no arguments and cannot fail.
        unsafe { libc::sync() };
        match fs::OpenOptions::new()
            .write(true)
            .open("/proc/sys/vm/drop_caches")
            .and_then(|mut f| f.write_all(b"3\n"))
        {
            Ok(()) => true,
            Err(e) => {
                log::warn!("page cache drop not possible: {e}");
                false
            }
        }
    }

    fn timer_overhead_ns(&self) -> u64 {
        self.timer_overhead_ns
    }
}
