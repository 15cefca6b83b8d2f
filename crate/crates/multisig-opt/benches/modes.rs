//! Sequential vs parallel execution on the two scan-heavy entry points:
//! a fine-grained grid minimization and the default static parameter sweep.
//! Run with `cargo bench`, or `cargo bench --no-default-features` to see
//! the parallel mode degrade to the sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use multisig_opt::exec::ExecMode;
use multisig_opt::model::CurvatureParams;
use multisig_opt::oracle::{grid_minimize_static, GridSpec};
use multisig_opt::sweep::{run_sweep, SweepSpec};

fn bench_grid_minimize(c: &mut Criterion) {
    let params = CurvatureParams::new(1.0, 2.5).unwrap();
    let grid = GridSpec::with_points(0.0, 1.0, 2_000_001).unwrap();
    let mut group = c.benchmark_group("grid_minimize_static");
    for mode in [ExecMode::Sequential, ExecMode::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| grid_minimize_static(&params, 1.0, &grid, mode).unwrap());
        });
    }
    group.finish();
}

fn bench_static_sweep(c: &mut Criterion) {
    let spec = SweepSpec::static_default();
    let mut group = c.benchmark_group("static_sweep");
    group.sample_size(20);
    for mode in [ExecMode::Sequential, ExecMode::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| run_sweep(&spec, mode).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, bench_grid_minimize, bench_static_sweep);
criterion_main!(benches);
