use std::fs;
use std::path::Path;

use bffs_core::backend::{MockConfig, MockFs};
use bffs_core::pipeline::{full_run, RunOptions};
use bffs_core::report::{emit_json, emit_plotdata, emit_table, load_json, PLOT_FILES};
use bffs_core::sink::MetricsSink;
use bffs_core::workload::{plan_schedule, FileSizeDistribution};
use bffs_core::RunReport;

fn run(folders: u64) -> RunReport {
    let schedule = plan_schedule(folders, 2, 7, "/plots").unwrap();
    let opts = RunOptions::new("plots", schedule, FileSizeDistribution::with_seed(9));
    let mut fs = MockFs::new("/plots", MockConfig::default());
    full_run(&opts, &mut fs, &mut MetricsSink::default()).0
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(Result::unwrap)
        .collect()
}

#[test]
fn histogram_csv_counts_every_file() {
    let report = run(30);
    let dir = tempfile::tempdir().unwrap();
    emit_plotdata(&report, dir.path()).unwrap();
    for (name, files) in [
        ("hist_write.csv", report.write.as_ref().unwrap().files_written),
        ("hist_read.csv", report.read.as_ref().unwrap().files_read),
    ] {
        let total: u64 = rows(&dir.path().join(name))
            .iter()
            .map(|r| r[2].parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, files, "{name}");
    }
}

#[test]
fn trend_csv_has_at_most_twenty_rows() {
    for folders in [1, 19, 20, 21, 57] {
        let report = run(folders);
        let dir = tempfile::tempdir().unwrap();
        emit_plotdata(&report, dir.path()).unwrap();
        for name in ["trend_write.csv", "trend_read.csv"] {
            let r = rows(&dir.path().join(name));
            assert!(!r.is_empty() && r.len() <= 20, "{folders} folders: {}", r.len());
            assert_eq!(&r[0][1], "1");
        }
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [a.path(), b.path()] {
        let report = run(12);
        emit_plotdata(&report, dir).unwrap();
        emit_json(&report, &dir.join("report.json")).unwrap();
    }
    for name in PLOT_FILES.iter().copied().chain(["report.json"]) {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn json_round_trips_and_table_renders() {
    let report = run(3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    emit_json(&report, &path).unwrap();
    assert!(!dir.path().join("report.json.partial").exists());
    assert_eq!(load_json(&path).unwrap(), report);
    let table = emit_table(&report);
    assert!(table.contains("FWs k/s"));
    assert!(table.contains("plots"));
}
