use std::hint::black_box;

use convexlab::geometry::volume;
use convexlab::sampling::{hit_and_run, ChainConfig};
use convexlab::BodyExpr;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn norms(c: &mut Criterion) {
    let mut g = c.benchmark_group("norm");
    for n in [8, 64] {
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let bodies = [
            ("lp", BodyExpr::lp(n, 1.5).unwrap()),
            ("revolution", BodyExpr::revolution(n).unwrap()),
            ("fsum", BodyExpr::firey_sum(vec![BodyExpr::lp(n, 1.5).unwrap(), BodyExpr::lp(n, 4.0).unwrap()]).unwrap()),
        ];
        for (name, b) in &bodies {
            g.bench_with_input(BenchmarkId::new(*name, n), &x, |bench, x| bench.iter(|| b.norm(black_box(x)).unwrap()));
        }
    }
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("hit_and_run");
    g.sample_size(10);
    for n in [8, 32] {
        let b = BodyExpr::lp(n, 1.5).unwrap();
        g.bench_function(BenchmarkId::new("lp", n), |bench| bench.iter(|| hit_and_run(&b, &ChainConfig::new(7), 1_000).unwrap()));
    }
    g.finish();
}

fn volumes(c: &mut Criterion) {
    let mut g = c.benchmark_group("volume");
    g.sample_size(10);
    for n in [4, 8] {
        let b = BodyExpr::firey_sum(vec![BodyExpr::lp(n, 1.5).unwrap(), BodyExpr::cube(n).unwrap()]).unwrap();
        g.bench_function(BenchmarkId::new("fsum", n), |bench| bench.iter(|| volume(&b, 1e-2, 11).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, norms, sampling, volumes);
criterion_main!(benches);
