//! Batch work with the rayon pool versus a plain sequential loop.
//!
//! The library functions follow the `parallel` feature; the `sequential`
//! variants here are the same per-item work on one thread, so both shapes can
//! be compared from a single default build.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use bffs_core::batch::{build_frames, sample_sizes, verify_all};
use bffs_core::workload::{frame_for, size_for, verify_frame, FileSizeDistribution};

const SIZES: [u64; 2] = [256, 4096];

fn frames(c: &mut Criterion) {
    let dist = FileSizeDistribution::default();
    let mut g = c.benchmark_group("build_frames");
    for n in SIZES {
        g.throughput(Throughput::Elements(n));
        g.bench_with_input(BenchmarkId::new("library", n), &n, |b, &n| {
            b.iter(|| build_frames(&dist, 0..n).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| {
                (0..n)
                    .map(|o| frame_for(&dist, o))
                    .collect::<Result<Vec<_>, _>>()
                    .unwrap()
            })
        });
    }
    g.finish();
}

fn verify(c: &mut Criterion) {
    let dist = FileSizeDistribution::default();
    let mut g = c.benchmark_group("verify_all");
    for n in SIZES {
        let data: Vec<Vec<u8>> = build_frames(&dist, 0..n)
            .unwrap()
            .into_iter()
            .map(|f| f.into_bytes())
            .collect();
        g.throughput(Throughput::Elements(n));
        g.bench_with_input(BenchmarkId::new("library", n), &data, |b, d| {
            b.iter(|| verify_all(black_box(d)))
        });
        g.bench_with_input(BenchmarkId::new("sequential", n), &data, |b, d| {
            b.iter(|| d.iter().map(|f| verify_frame(f)).collect::<Vec<_>>())
        });
    }
    g.finish();
}

fn sizes(c: &mut Criterion) {
    let dist = FileSizeDistribution::default();
    let mut g = c.benchmark_group("sample_sizes");
    let n = 100_000;
    g.throughput(Throughput::Elements(n));
    g.bench_function("library", |b| b.iter(|| sample_sizes(&dist, n).unwrap()));
    g.bench_function("sequential", |b| {
        b.iter(|| {
            (0..n)
                .map(|o| size_for(&dist, o))
                .collect::<Result<Vec<_>, _>>()
                .unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, frames, verify, sizes);
criterion_main!(benches);
