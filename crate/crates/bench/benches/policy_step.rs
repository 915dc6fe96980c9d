use bsca_bench::{bipartite, uniform_requests};
use bsca_core::baselines::MultiLru;
use bsca_core::policy::{Bsca, BscaConfig, OnlinePolicy};
use bsca_core::routing::route;
use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use std::hint::black_box;

const STEPS: usize = 1_000;

fn bsca_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("step/bsca");
    for library in [100usize, 1_000, 10_000] {
        let (top, w) = bipartite(library, library / 10);
        let requests = uniform_requests(&top, STEPS, 3);
        let config = BscaConfig {
            horizon: Some(100_000),
            max_weight: w.max_weight(),
            ..BscaConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(library), &requests, |b, reqs| {
            b.iter_batched(
                || Bsca::new(top.clone(), config.clone()).unwrap(),
                |mut policy| {
                    for r in reqs {
                        black_box(policy.serve(r, &w).unwrap());
                    }
                    policy
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn baseline_steps(c: &mut Criterion) {
    let (top, w) = bipartite(1_000, 100);
    let requests = uniform_requests(&top, STEPS, 4);
    c.bench_function("step/mlru/1000", |b| {
        b.iter_batched(
            || MultiLru::mlru(top.clone(), 5).unwrap(),
            |mut policy| {
                for r in &requests {
                    black_box(policy.serve(r, &w).unwrap());
                }
                policy
            },
            BatchSize::LargeInput,
        )
    });
}

fn routing(c: &mut Criterion) {
    let (top, w) = bipartite(1_000, 100);
    let requests = uniform_requests(&top, STEPS, 6);
    let policy = Bsca::new(
        top.clone(),
        BscaConfig {
            horizon: Some(100_000),
            max_weight: w.max_weight(),
            ..BscaConfig::default()
        },
    )
    .unwrap();
    let y = policy.caching();
    c.bench_function("route/1000", |b| {
        b.iter(|| {
            for r in &requests {
                black_box(route(r, y, &top, &w));
            }
        })
    });
}

criterion_group!(benches, bsca_steps, baseline_steps, routing);
criterion_main!(benches);
