//! Sequential against pooled sweep execution on a small coarse grid.
//!
//! With the `parallel` feature off both variants take the sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nlkg_core::groundstate::standard_ground_state;
use nlkg_core::sweep::{resolve_workers, run_sweep, SweepConfig};

fn config(workers: usize) -> SweepConfig {
    let mut cfg = SweepConfig::from_preset("fig1_2_left").unwrap();
    cfg.a_range = (-3.0, 3.0);
    cfg.b_range = (-3.0, 3.0);
    cfg.a_count = 8;
    cfg.b_count = 8;
    cfg.solver.dr = 0.05;
    cfg.solver.t_final = 30.0;
    cfg.classifier.sustain_window = 20;
    cfg.workers = workers;
    cfg
}

fn bench_sweep(c: &mut Criterion) {
    let ground = standard_ground_state().unwrap();
    let mut group = c.benchmark_group("sweep_8x8");
    group.sample_size(10);
    // at least two workers so the pool path runs even on a single core
    let all = resolve_workers(0).max(2);
    for (label, workers) in [("sequential", 1), ("parallel", all)] {
        let cfg = config(workers);
        group.bench_with_input(BenchmarkId::new(label, workers), &cfg, |b, cfg| {
            b.iter(|| run_sweep(cfg, &ground).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sweep);
criterion_main!(benches);
