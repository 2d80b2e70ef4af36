//! Streaming latency statistics and the derived write/read metrics.
//!
//! Per-file latencies are kept as min/ave/max trackers plus fixed-edge
//! histograms, so memory does not grow with the number of files. Folder
//! level aggregates are kept for every top-level folder (there are few of
//! them) and thinned to the trend buckets on output.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::creator::CreatePhaseResult;
use crate::reader::ReadPhaseResult;
use crate::storage::StorageDelta;

/// Default histogram edges in microseconds.
pub const DEFAULT_EDGES_US: [u64; 18] = [
    0, 5, 10, 15, 20, 25, 30, 40, 50, 75, 100, 250, 500, 1000, 10_000, 100_000, 1_000_000,
    10_000_000,
];

pub const DEFAULT_TREND_BUCKETS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("histogram edges must be strictly ascending with at least two entries")]
    InvalidEdges,
    #[error("inconsistent metrics: {0}")]
    Inconsistent(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct LatencyTracker {
    pub count: u64,
    pub sum_us: u64,
    pub min_us: u64,
    pub max_us: u64,
}

impl LatencyTracker {
    pub fn record(&mut self, sample_us: u64) {
        if self.count == 0 {
            self.min_us = sample_us;
            self.max_us = sample_us;
        } else {
            self.min_us = self.min_us.min(sample_us);
            self.max_us = self.max_us.max(sample_us);
        }
        self.count += 1;
        self.sum_us += sample_us;
    }

    pub fn mean_us(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum_us as f64 / self.count as f64
        }
    }

    /// Tracker with the given summary; used to replay published rows.
    pub fn from_summary(count: u64, min_us: u64, mean_us: f64, max_us: u64) -> Self {
        Self {
            count,
            sum_us: (mean_us * count as f64).round() as u64,
            min_us,
            max_us,
        }
    }
}

/// Fixed-edge latency histogram. Bucket `i` holds `[edges[i], edges[i+1])`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyHistogram {
    pub edges_us: Vec<u64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Default for LatencyHistogram {
    fn default() -> Self {
        Self::new(DEFAULT_EDGES_US.to_vec()).expect("default edges are ascending")
    }
}

impl LatencyHistogram {
    pub fn new(edges_us: Vec<u64>) -> Result<Self, MetricsError> {
        if edges_us.len() < 2 || edges_us.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MetricsError::InvalidEdges);
        }
        let buckets = edges_us.len() - 1;
        Ok(Self {
            edges_us,
            counts: vec![0; buckets],
            underflow: 0,
            overflow: 0,
        })
    }

    pub fn record(&mut self, sample_us: u64) {
        let first = self.edges_us[0];
        let last = *self.edges_us.last().expect("at least two edges");
        if sample_us < first {
            self.underflow += 1;
        } else if sample_us >= last {
            self.overflow += 1;
        } else {
            let idx = self.edges_us.partition_point(|&e| e <= sample_us) - 1;
            self.counts[idx] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// `(low, high, count)` for every in-range bucket.
    pub fn buckets(&self) -> impl Iterator<Item = (u64, u64, u64)> + '_ {
        self.edges_us
            .windows(2)
            .zip(&self.counts)
            .map(|(w, &c)| (w[0], w[1], c))
    }

    pub fn count_in(&self, low: u64, high: u64) -> Option<u64> {
        self.buckets()
            .find(|&(l, h, _)| l == low && h == high)
            .map(|(_, _, c)| c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Write,
    Read,
}

/// Aggregate for one top-level folder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FolderSample {
    pub folder_ordinal: u64,
    pub phase: Phase,
    pub total_us: u64,
    pub files: u64,
    pub throughput_files_per_sec: f64,
}

impl FolderSample {
    pub fn new(folder_ordinal: u64, phase: Phase, total_us: u64, files: u64) -> Self {
        let throughput_files_per_sec = if total_us == 0 {
            0.0
        } else {
            files as f64 * 1e6 / total_us as f64
        };
        Self {
            folder_ordinal,
            phase,
            total_us,
            files,
            throughput_files_per_sec,
        }
    }
}

/// Evenly spaced subset of folder aggregates: every `ceil(n / buckets)`-th, starting with the first.
pub fn trend_series(samples: &[FolderSample], buckets: usize) -> Vec<FolderSample> {
    let buckets = buckets.max(1);
    let step = samples.len().div_ceil(buckets).max(1);
    samples.iter().step_by(step).copied().collect()
}

/// Throughput, rate and overhead figures computed from phase totals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct DerivedMetrics {
    pub write_throughput_bytes_per_us: f64,
    pub read_throughput_bytes_per_us: f64,
    pub files_written_per_sec: u64,
    pub files_read_per_sec: u64,
    pub blocks_written_per_sec: u64,
    pub blocks_read_per_sec: u64,
    pub file_create_avg_us: f64,
    pub file_open_avg_us: f64,
    pub bytes_written: u64,
    pub bytes_read: u64,
    pub blocks_written: u64,
    pub blocks_read: u64,
    pub disk_space_used_bytes: u64,
    pub disk_space_overhead_percent: f64,
    pub inodes_used: u64,
    pub total_write_us: u64,
    pub total_read_us: u64,
    pub run_total_us: u64,
    pub cpu_overhead_percent: f64,
}

fn per_sec(count: u64, elapsed_us: u64) -> u64 {
    if elapsed_us == 0 {
        0
    } else {
        (u128::from(count) * 1_000_000 / u128::from(elapsed_us)) as u64
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Share of the run not spent inside any timed I/O window, in percent.
pub fn cpu_overhead_percent(
    run_total_us: u64,
    total_write_us: u64,
    file_create_total_us: u64,
    total_read_us: u64,
    file_open_total_us: u64,
) -> f64 {
    if run_total_us == 0 {
        return 0.0;
    }
    let io = total_write_us + file_create_total_us + total_read_us + file_open_total_us;
    run_total_us.saturating_sub(io) as f64 / run_total_us as f64 * 100.0
}

/// Disk space overhead: share of consumed space not holding file bytes, in percent.
pub fn disk_space_overhead_percent(disk_space_used: u64, bytes_added: u64) -> f64 {
    if disk_space_used == 0 {
        return 0.0;
    }
    (disk_space_used as f64 - bytes_added as f64) / disk_space_used as f64 * 100.0
}

/// Derive every rate, average and overhead from the raw phase totals.
///
/// Rates over a zero-length window are reported as 0. A non-empty write
/// phase that consumed no disk space is rejected.
pub fn compute_derived(
    create: &CreatePhaseResult,
    read: &ReadPhaseResult,
    storage: &StorageDelta,
    block_size: u64,
    run_total_us: u64,
) -> Result<DerivedMetrics, MetricsError> {
    if block_size == 0 {
        return Err(MetricsError::Inconsistent("block size is zero"));
    }
    let dsu = storage.bytes_used;
    if create.files_written > 0 && create.bytes_written > 0 && dsu == 0 {
        return Err(MetricsError::Inconsistent(
            "files were written but no disk space was consumed",
        ));
    }
    let blocks_written = dsu / block_size;
    let total_write_us = create.folder_create_total_us + create.file_write_total_us;
    let total_read_us = read.folder_search_total_us + read.file_read_total_us;
    Ok(DerivedMetrics {
        write_throughput_bytes_per_us: ratio(create.bytes_written, create.file_write_total_us),
        read_throughput_bytes_per_us: ratio(read.bytes_read, read.file_read_total_us),
        files_written_per_sec: per_sec(create.files_written, create.file_write_total_us),
        files_read_per_sec: per_sec(read.files_read, read.file_read_total_us),
        blocks_written_per_sec: per_sec(blocks_written, create.file_write_total_us),
        blocks_read_per_sec: per_sec(read.blocks_read, read.file_read_total_us),
        file_create_avg_us: ratio(create.file_create_total_us, create.files_written),
        file_open_avg_us: ratio(read.file_open_total_us, read.files_read),
        bytes_written: create.bytes_written,
        bytes_read: read.bytes_read,
        blocks_written,
        blocks_read: read.blocks_read,
        disk_space_used_bytes: dsu,
        disk_space_overhead_percent: disk_space_overhead_percent(dsu, create.bytes_written),
        inodes_used: if storage.reports_inodes {
            storage.inodes_used
        } else {
            0
        },
        total_write_us,
        total_read_us,
        run_total_us,
        cpu_overhead_percent: cpu_overhead_percent(
            run_total_us,
            total_write_us,
            create.file_create_total_us,
            total_read_us,
            read.file_open_total_us,
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::StorageSnapshot;
    use proptest::prelude::*;

    #[test]
    fn tracker_basics() {
        let mut t = LatencyTracker::default();
        t.record(15);
        assert_eq!((t.min_us, t.max_us, t.mean_us()), (15, 15, 15.0));
        let mut t = LatencyTracker::default();
        t.record(10);
        t.record(20);
        assert_eq!(t.mean_us(), 15.0);
        assert_eq!(LatencyTracker::default().mean_us(), 0.0);
    }

    #[test]
    fn histogram_edges_and_bounds() {
        assert_eq!(LatencyHistogram::new(vec![1]), Err(MetricsError::InvalidEdges));
        assert_eq!(LatencyHistogram::new(vec![1, 1, 2]), Err(MetricsError::InvalidEdges));
        let mut h = LatencyHistogram::new(vec![10, 15, 20]).unwrap();
        for v in [9, 10, 14, 15, 19, 20, 1000] {
            h.record(v);
        }
        assert_eq!(h.underflow, 1);
        assert_eq!(h.counts, vec![2, 2]);
        assert_eq!(h.overflow, 2);
        assert_eq!(h.total(), 7);
        assert_eq!(h.count_in(15, 20), Some(2));
    }

    /// Uniform samples against ten equal buckets stay within 3 sigma of the binomial mean.
    #[test]
    fn uniform_fill_is_binomial() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut h = LatencyHistogram::new((0..=10).map(|i| i * 10).collect()).unwrap();
        let n = 1_000_000u64;
        for _ in 0..n {
            h.record(rng.gen_range(0..100));
        }
        let p = 0.1f64;
        let mean = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in &h.counts {
            assert!((*c as f64 - mean).abs() <= 3.0 * sigma, "{c}");
        }
        assert_eq!(h.total(), n);
    }

    fn samples(n: u64) -> Vec<FolderSample> {
        (1..=n).map(|i| FolderSample::new(i, Phase::Write, 1000, 10)).collect()
    }

    #[test]
    fn trend_selection() {
        let t = trend_series(&samples(100), 20);
        let ords: Vec<u64> = t.iter().map(|s| s.folder_ordinal).collect();
        assert_eq!(ords, (0..20).map(|i| 1 + 5 * i).collect::<Vec<_>>());
        assert_eq!(trend_series(&samples(7), 20).len(), 7);
        assert_eq!(trend_series(&samples(30), 20).len(), 15);
        assert!(trend_series(&samples(100), 20)
            .iter()
            .all(|s| s.throughput_files_per_sec == 10_000.0));
        assert!(trend_series(&[], 20).is_empty());
    }

    #[test]
    fn folder_throughput() {
        let s = FolderSample::new(1, Phase::Read, 2_000_000, 100);
        assert_eq!(s.throughput_files_per_sec, 50.0);
        assert_eq!(FolderSample::new(1, Phase::Read, 0, 5).throughput_files_per_sec, 0.0);
    }

    #[test]
    fn empty_run_is_all_zero() {
        let d = compute_derived(
            &CreatePhaseResult::default(),
            &ReadPhaseResult::default(),
            &StorageDelta::default(),
            4096,
            0,
        )
        .unwrap();
        assert_eq!(d, DerivedMetrics::default());
    }

    #[test]
    fn rejects_zero_space_after_writes() {
        let create = CreatePhaseResult {
            files_written: 10,
            bytes_written: 1000,
            file_write_total_us: 100,
            ..CreatePhaseResult::default()
        };
        let err = compute_derived(
            &create,
            &ReadPhaseResult::default(),
            &StorageDelta::default(),
            4096,
            1000,
        );
        assert!(matches!(err, Err(MetricsError::Inconsistent(_))));
    }

    #[test]
    fn formulas_on_small_numbers() {
        let create = CreatePhaseResult {
            files_written: 4,
            bytes_written: 10_000,
            folder_create_total_us: 100,
            file_create_total_us: 200,
            file_write_total_us: 1000,
            ..CreatePhaseResult::default()
        };
        let read = ReadPhaseResult {
            files_read: 4,
            bytes_read: 10_000,
            blocks_read: 12,
            folder_search_total_us: 50,
            file_open_total_us: 40,
            file_read_total_us: 500,
            ..ReadPhaseResult::default()
        };
        let before = StorageSnapshot {
            inodes_free: 100,
            blocks_free: 100,
            block_size: 4096,
            total_bytes: 409_600,
            timestamp_us: 0,
        };
        let after = StorageSnapshot {
            inodes_free: 93,
            blocks_free: 88,
            ..before
        };
        let delta = StorageDelta::between(before, after, true);
        let d = compute_derived(&create, &read, &delta, 4096, 4000).unwrap();
        assert_eq!(d.write_throughput_bytes_per_us, 10.0);
        assert_eq!(d.read_throughput_bytes_per_us, 20.0);
        assert_eq!(d.files_written_per_sec, 4000);
        assert_eq!(d.files_read_per_sec, 8000);
        assert_eq!(d.blocks_written, 12);
        assert_eq!(d.blocks_written_per_sec, 12_000);
        assert_eq!(d.blocks_read_per_sec, 24_000);
        assert_eq!(d.file_create_avg_us, 50.0);
        assert_eq!(d.file_open_avg_us, 10.0);
        assert_eq!(d.disk_space_used_bytes, 12 * 4096);
        let dsuo = (49_152.0 - 10_000.0) / 49_152.0 * 100.0;
        assert!((d.disk_space_overhead_percent - dsuo).abs() < 1e-12);
        assert_eq!(d.inodes_used, 7);
        assert_eq!(d.total_write_us, 1100);
        assert_eq!(d.total_read_us, 550);
        // 4000 - (1100 + 200 + 550 + 40) = 2110
        assert!((d.cpu_overhead_percent - 52.75).abs() < 1e-12);

        let inodeless = StorageDelta::between(before, after, false);
        assert_eq!(compute_derived(&create, &read, &inodeless, 4096, 4000).unwrap().inodes_used, 0);
    }

    proptest! {
        #[test]
        fn tracker_is_order_independent(mut v in proptest::collection::vec(0u64..1_000_000, 1..200)) {
            let mut a = LatencyTracker::default();
            v.iter().for_each(|&x| a.record(x));
            v.reverse();
            let mut b = LatencyTracker::default();
            v.iter().for_each(|&x| b.record(x));
            prop_assert_eq!(a, b);
            prop_assert!(a.min_us as f64 <= a.mean_us() && a.mean_us() <= a.max_us as f64);
        }

        #[test]
        fn histogram_conserves_mass(v in proptest::collection::vec(0u64..20_000_000, 0..300)) {
            let mut h = LatencyHistogram::default();
            v.iter().for_each(|&x| h.record(x));
            prop_assert_eq!(h.total(), v.len() as u64);
        }

        #[test]
        fn trend_never_exceeds_buckets(n in 1u64..500, buckets in 1usize..40) {
            let t = trend_series(&samples(n), buckets);
            prop_assert!(t.len() <= buckets);
            prop_assert_eq!(t[0].folder_ordinal, 1);
        }
    }
}
