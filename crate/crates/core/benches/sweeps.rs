use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qfisher::sampling::sample_nodes;
use qfisher::sweep::{qcr_saturation_sweep, zoo_qcr_sweep};
use qfisher::zoo::zoo_member;
use qfisher::{Exec, GridSpec};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn saturation(c: &mut Criterion) {
    let mut group = c.benchmark_group("qcr_saturation_sweep");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| qcr_saturation_sweep(&[0.8, 1.0, 1.2, 1.5], &[1.5, 2.0, 3.0], 4096, exec).unwrap())
        });
    }
    group.finish();
}

fn zoo(c: &mut Criterion) {
    let grid = GridSpec::line(-16.0, 16.0, 2048).unwrap();
    let mut group = c.benchmark_group("zoo_qcr_sweep");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| zoo_qcr_sweep(&grid, 16, 2024, &[1.0, 1.5], &[2.0], exec).unwrap())
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let g = zoo_member(&GridSpec::line(-16.0, 16.0, 4096).unwrap(), 0, 1).unwrap();
    let mut group = c.benchmark_group("sample_nodes");
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| sample_nodes(&g, 200_000, 5, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, saturation, zoo, sampling);
criterion_main!(benches);
