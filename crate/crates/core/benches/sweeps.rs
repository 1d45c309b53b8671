use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sigmak_core::curvature::{make_flat_pole_k, Blend};
use sigmak_core::par::ExecMode;
use sigmak_core::solvers::noncompact::{continuation_in_t, NoncompactOptions};
use sigmak_core::solvers::{defect_scan, log_grid, ShootOptions};
use sigmak_core::ProblemParams;

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn defect_scans(c: &mut Criterion) {
    let pp = ProblemParams::new(7, 2).unwrap();
    let k = make_flat_pole_k(&pp, 1.0, 1.0, 3.0, 1.2, 1.0, 3.0, Blend::default()).unwrap();
    let grid = log_grid(0.5, 20.0, 24);
    let o = ShootOptions::default();
    let mut g = c.benchmark_group("defect_scan");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &m| {
            b.iter(|| defect_scan(&pp, &k, &grid, &o, m).unwrap())
        });
    }
    g.finish();
}

fn continuation(c: &mut Criterion) {
    let pp = ProblemParams::new(9, 2).unwrap();
    let o = NoncompactOptions::default();
    let mut g = c.benchmark_group("continuation_in_t");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &m| {
            b.iter(|| continuation_in_t(&pp, 1e-3, 2.0, (1.0, 8.0), 48, m, &o).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, defect_scans, continuation);
criterion_main!(benches);
