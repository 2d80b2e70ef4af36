//! Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bffs_core::backend::{Latency, LatencyModel, MockConfig, MockFs, RealFs};
use bffs_core::batch::{mean_sd, sample_sizes};
use bffs_core::metrics::LatencyHistogram;
use bffs_core::pipeline::{full_run, Outcome, RunOptions};
use bffs_core::reader::run_read;
use bffs_core::reference::{EXT4_10M, XFS_10M, ZFS_1B};
use bffs_core::report::{to_json, RunReport};
use bffs_core::sink::MetricsSink;
use bffs_core::storage::expected_inodes;
use bffs_core::workload::{plan_schedule, FileSizeDistribution};
use bffs_core::{run_create, DerivedMetrics};

fn verdict(criterion: u32, checks: &[(String, bool)]) {
    let ok = checks.iter().all(|(_, pass)| *pass);
    let detail: Vec<String> = checks
        .iter()
        .map(|(what, pass)| format!("{what} [{}]", if *pass { "ok" } else { "MISS" }))
        .collect();
    println!(
        "criterion {criterion}: {} — {}",
        if ok { "PASS" } else { "FAIL" },
        detail.join("; ")
    );
    assert!(ok, "criterion {criterion} failed: {}", detail.join("; "));
}

/// Integer cell as the tables print it (truncated).
fn printed(v: f64) -> i64 {
    v.floor() as i64
}

fn within(label: &str, got: f64, want: f64, tol: f64) -> (String, bool) {
    (
        format!("{label} {got:.2} vs {want} ±{tol}"),
        (got - want).abs() <= tol + 1e-9,
    )
}

#[test]
fn criterion_1_reference_formulas() {
    let ext4: DerivedMetrics = EXT4_10M.derived().expect("ext4 derive");
    let xfs = XFS_10M.derived().expect("xfs derive");
    let zfs = ZFS_1B.derived().expect("zfs derive");
    let checks = vec![
        within(
            "EXT4_10M WTh B/us",
            printed(ext4.write_throughput_bytes_per_us) as f64,
            348.0,
            1.0,
        ),
        (
            format!("EXT4_10M FWs {}k/s vs 63", ext4.files_written_per_sec / 1000),
            ext4.files_written_per_sec / 1000 == 63,
        ),
        within("EXT4_10M DSUO %", ext4.disk_space_overhead_percent, 30.0, 0.5),
        within("EXT4_10M CPUO %", ext4.cpu_overhead_percent, 21.0, 1.0),
        within(
            "XFS_10M WTh B/us",
            printed(xfs.write_throughput_bytes_per_us) as f64,
            442.0,
            1.0,
        ),
        within("XFS_10M DSUO %", xfs.disk_space_overhead_percent, 60.0, 1.0),
        within("ZFS_1B CPUO %", zfs.cpu_overhead_percent, 5.0, 1.0),
    ];
    verdict(1, &checks);
}

#[test]
fn criterion_2_inode_accounting() {
    let cases = [
        ((100, 1, 100_000), 10_000_200u64),
        ((100, 10, 100_000), 100_001_100),
        ((100, 100, 100_000), 1_000_010_100),
    ];
    let checks: Vec<(String, bool)> = cases
        .iter()
        .map(|&((f, s, n), want)| {
            let got = expected_inodes(&plan_schedule(f, s, n, "/x").unwrap());
            (format!("({f},{s},{n}) -> {got} vs {want}"), got == want)
        })
        .collect();
    verdict(2, &checks);
}

/// P(X > t | lo <= X <= hi) for a normal truncated to [lo, hi], by composite Simpson integration.
fn truncated_tail_oracle(mean: f64, sd: f64, lo: f64, hi: f64, t: f64) -> f64 {
    let pdf = |x: f64| (-0.5 * ((x - mean) / sd).powi(2)).exp();
    let simpson = |a: f64, b: f64| {
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut s = pdf(a) + pdf(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * pdf(a + i as f64 * h);
        }
        s * h / 3.0
    };
    simpson(t, hi) / simpson(lo, hi)
}

#[test]
fn criterion_3_size_distribution() {
    let dist = FileSizeDistribution::default();
    let sizes = sample_sizes(&dist, 100_000).unwrap();
    let (mean, sd) = mean_sd(&sizes);
    let in_range = sizes.iter().all(|&s| (1024..=10240).contains(&s));
    let frac = sizes.iter().filter(|&&s| s > 4096).count() as f64 / sizes.len() as f64;
    let oracle = truncated_tail_oracle(5500.0, 1024.0, 1024.0, 10240.0, 4096.0);
    verdict(
        3,
        &[
            within("mean", mean, 5500.0, 50.0),
            within("sd", sd, 1024.0, 50.0),
            ("all samples in [1024, 10240]".to_string(), in_range),
            within("fraction > 4096", frac, (oracle * 1e4).round() / 1e4, 0.01),
        ],
    );
}

fn flip_random_bytes(root: &Path, schedule: &bffs_core::RunSchedule, count: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF11B);
    let entries: Vec<_> = schedule.files().collect();
    for i in sample(&mut rng, entries.len(), count).into_iter() {
        let path = &entries[i].path;
        assert!(path.starts_with(root));
        let mut bytes = fs::read(path).unwrap();
        let at = rng.gen_range(0..bytes.len());
        bytes[at] ^= 1 << rng.gen_range(0..8);
        fs::write(path, bytes).unwrap();
    }
}

#[test]
fn criterion_4_integrity_round_trip_on_real_fs() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("tree");
    fs::create_dir(&root).unwrap();
    let schedule = plan_schedule(10, 10, 1000, &root).unwrap();
    let dist = FileSizeDistribution::with_seed(42);
    let mut backend = RealFs::new(&root).unwrap();

    let created = run_create(&schedule, &dist, &mut backend, &mut MetricsSink::default())
        .map_err(|e| e.to_string())
        .unwrap();
    let clean = run_read(&schedule, &mut backend, &mut MetricsSink::default())
        .map_err(|e| e.to_string())
        .unwrap();
    flip_random_bytes(&root, &schedule, 50);
    let dirty = run_read(&schedule, &mut backend, &mut MetricsSink::default())
        .map_err(|e| e.to_string())
        .unwrap();

    verdict(
        4,
        &[
            (
                format!("files written {}", created.files_written),
                created.files_written == 100_000,
            ),
            (
                format!("checksum failures {}", clean.checksum_failures),
                clean.checksum_failures == 0,
            ),
            (
                format!("missing {}", clean.missing_files),
                clean.missing_files == 0,
            ),
            (
                format!("bytes read {} = written {}", clean.bytes_read, created.bytes_written),
                clean.bytes_read == created.bytes_written,
            ),
            (
                format!("after 50 flips: {} failures", dirty.checksum_failures),
                dirty.checksum_failures == 50 && dirty.missing_files == 0,
            ),
        ],
    );
}

fn mock_run(opts: &RunOptions, cfg: MockConfig) -> (RunReport, MockFs) {
    let mut fs = MockFs::new(opts.schedule.root(), cfg);
    let (report, outcome) = full_run(opts, &mut fs, &mut MetricsSink::default());
    assert_eq!(outcome, Outcome::Clean);
    (report, fs)
}

#[test]
fn criterion_5_mock_closed_form() {
    let schedule = plan_schedule(4, 3, 25, "/mock").unwrap();
    let cfg = MockConfig::default();
    let lat = cfg.latency;
    let fixed = |l: Latency| match l {
        Latency::Fixed(v) => v,
        Latency::Uniform { .. } => unreachable!("default model is fixed"),
    };
    let mut opts = RunOptions::new("closed-form", schedule.clone(), FileSizeDistribution::with_seed(5));
    opts.mock = Some(cfg);
    let (report, fs) = mock_run(&opts, cfg);
    let (second, _) = mock_run(&opts, cfg);

    // Expectations from the stored tree and the latency model alone.
    let dirs = schedule.directory_count();
    let files = schedule.total_files();
    let lens: Vec<u64> = fs.files().map(|(_, b)| b.len() as u64).collect();
    let blocks: u64 = lens.iter().map(|l| l.div_ceil(cfg.block_size)).sum();
    let bytes: u64 = lens.iter().sum();

    let w = report.write.as_ref().unwrap();
    let r = report.read.as_ref().unwrap();
    let exact = |label: &str, got: u64, want: u64| (format!("{label} {got} = {want}"), got == want);
    verdict(
        5,
        &[
            exact("TFWT", w.folder_create_total_us, dirs * fixed(lat.dir_create)),
            exact("TFCWT", w.file_create_total_us, files * fixed(lat.file_create)),
            exact(
                "TfWT",
                w.file_write_total_us,
                files * fixed(lat.write_base) + blocks * lat.write_per_block,
            ),
            exact("TFRT", r.folder_search_total_us, dirs * fixed(lat.dir_search)),
            exact("TFORT", r.file_open_total_us, files * fixed(lat.file_open)),
            exact(
                "TfRT",
                r.file_read_total_us,
                files * fixed(lat.read_base) + blocks * lat.read_per_block,
            ),
            exact("bytes", w.bytes_written, bytes),
            exact("inodes used", w.storage.inodes_used, files + dirs),
            exact("blocks used", w.storage.blocks_used, blocks + dirs),
            (
                "identical JSON across runs".to_string(),
                to_json(&report).unwrap() == to_json(&second).unwrap(),
            ),
        ],
    );
}

#[test]
fn criterion_6_trend_sampling() {
    let schedule = plan_schedule(100, 1, 10, "/trend").unwrap();
    let mut opts = RunOptions::new("trend", schedule, FileSizeDistribution::fixed(4096, 1));
    let cfg = MockConfig::default();
    opts.mock = Some(cfg);
    let (report, _) = mock_run(&opts, cfg);
    let want: Vec<u64> = (0..20).map(|i| 1 + 5 * i).collect();
    let mut checks = Vec::new();
    for (phase, series) in [
        ("write", &report.write.as_ref().unwrap().per_folder_series),
        ("read", &report.read.as_ref().unwrap().per_folder_series),
    ] {
        let ordinals: Vec<u64> = series.iter().map(|s| s.folder_ordinal).collect();
        checks.push((
            format!("{phase}: {} samples at 1,6,..,96", ordinals.len()),
            ordinals == want,
        ));
        let rates: Vec<i64> = series
            .iter()
            .map(|s| s.throughput_files_per_sec.round() as i64)
            .collect();
        let spread = rates.iter().max().unwrap() - rates.iter().min().unwrap();
        checks.push((format!("{phase}: throughput spread {spread} files/s"), spread <= 1));
    }
    verdict(6, &checks);
}

fn mass(h: &LatencyHistogram) -> u64 {
    h.counts.iter().sum::<u64>() + h.underflow + h.overflow
}

#[test]
fn criterion_7_histogram_mass() {
    let schedule = plan_schedule(10, 2, 50, "/hist").unwrap();
    let mut checks = Vec::new();

    let mut opts = RunOptions::new("default", schedule.clone(), FileSizeDistribution::with_seed(3));
    let (plain, _) = mock_run(&opts, MockConfig::default());
    let (w, r) = (plain.write.unwrap(), plain.read.unwrap());
    checks.push((
        format!("default run mass {}/{}", mass(&w.write_histogram), w.files_written),
        mass(&w.write_histogram) == w.files_written && mass(&r.read_histogram) == r.files_read,
    ));

    let cfg = MockConfig {
        latency: LatencyModel {
            write_base: Latency::Uniform { lo: 10, hi: 20 },
            write_per_block: 0,
            ..MockConfig::default().latency
        },
        seed: 11,
        ..MockConfig::default()
    };
    opts.label = "uniform".into();
    opts.mock = Some(cfg);
    let (report, _) = mock_run(&opts, cfg);
    let h = &report.write.as_ref().unwrap().write_histogram;
    let files = report.write.as_ref().unwrap().files_written;
    let low = h.count_in(10, 15).unwrap();
    let high = h.count_in(15, 20).unwrap();
    checks.push((format!("uniform run mass {}/{files}", mass(h)), mass(h) == files));
    checks.push((
        format!("10-15: {low}, 15-20: {high}, total {files}"),
        low + high == files && low > 0 && high > 0,
    ));
    verdict(7, &checks);
}

#[test]
fn criterion_8_out_of_scope_note() {
    println!(
        "criterion 8: PASS — billion-file latencies, multi-day run times and HDD numbers are \
         not reproduced live; the published rows are checked only as formula fixtures (criterion 1)"
    );
}
