//! Benchmarks of the grid scans that dominate every analysis, comparing the
//! data-parallel path (`parallel` feature, default) against the sequential
//! one. Build with `--no-default-features` to measure the pure sequential
//! crate end to end.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use ozf_core::criterion::{
    check_plant, normalized_gap, CoprimePair, CriterionConfig, MultiplierClass,
};
use ozf_core::grid::{scan_max, scan_max_seq, GridSpec};
use ozf_core::interval::q_minus;
use ozf_core::plants;
use ozf_core::xferfn::ShiftedPlant;

fn bench_gap_scan(c: &mut Criterion) {
    let plant = ShiftedPlant::with_slope(32.61, 1, plants::oshea(0.25)).unwrap();
    let pair = CoprimePair::new(4, 1).unwrap();
    let grid = GridSpec::log(1e-3, 1e3, 20_001);
    let f = |w: f64| {
        normalized_gap(&plant, pair, MultiplierClass::Monotone, w)
            .map(f64::abs)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let mut group = c.benchmark_group("gap_scan_20k");
    group.bench_function("parallel", |b| b.iter(|| black_box(scan_max(&grid, f))));
    group.bench_function("sequential", |b| b.iter(|| black_box(scan_max_seq(&grid, f))));
    group.finish();
}

fn bench_q_minus_sup(c: &mut Criterion) {
    let pair = CoprimePair::new(2, 3).unwrap();
    let grid = GridSpec::linear(1e-5, 2.0 * std::f64::consts::PI, 200_000);
    let f = |t: f64| q_minus(t, pair, 1.0).abs();
    let mut group = c.benchmark_group("q_minus_sup_200k");
    group.bench_function("parallel", |b| b.iter(|| black_box(scan_max(&grid, f))));
    group.bench_function("sequential", |b| b.iter(|| black_box(scan_max_seq(&grid, f))));
    group.finish();
}

fn bench_check_plant(c: &mut Criterion) {
    let plant = ShiftedPlant::new(0.5, 1, plants::third_order_delay()).unwrap();
    let config = CriterionConfig::default();
    c.bench_function("check_plant_example3", |b| {
        b.iter(|| black_box(check_plant(&plant, MultiplierClass::Monotone, &config).unwrap()))
    });
}

criterion_group!(benches, bench_gap_scan, bench_q_minus_sup, bench_check_plant);
criterion_main!(benches);
