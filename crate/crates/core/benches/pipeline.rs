//! Parallel vs sequential runs of the sampling and elimination pipelines.
//! A one-thread rayon pool stands in for the sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pqflex::methods::{fme_for, monte_carlo_for, FmeOptions};
use pqflex::network::{load_case_file, Case};

fn fixture() -> Case {
    load_case_file(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/ieee33.toml")).unwrap()
}

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        ("sequential", rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("parallel", rayon::ThreadPoolBuilder::new().build().unwrap()),
    ]
}

fn monte_carlo(c: &mut Criterion) {
    let case = fixture();
    let mut g = c.benchmark_group("monte_carlo_1e4");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| monte_carlo_for(&case, 10_000, 42, None).unwrap()))
        });
    }
    g.finish();
}

fn fme(c: &mut Criterion) {
    let case = fixture();
    let opts = FmeOptions::default();
    let mut g = c.benchmark_group("fme");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| fme_for(&case, &opts, None).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, monte_carlo, fme);
criterion_main!(benches);
