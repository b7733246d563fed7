//! Forward-model cost: one nominal evaluation, and a small batch of design
//! points evaluated on the rayon pool versus one after another.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::prelude::*;

use aquifer::{random_vector, CrossSectionModel};
use sparse_pce::lhs;

fn bench_nominal(c: &mut Criterion) {
    let model = CrossSectionModel::bundled();
    let x = model.nominal();
    let mut group = c.benchmark_group("evaluate");
    group.sample_size(10);
    group.bench_function("nominal_250x104", |b| b.iter(|| black_box(model.evaluate(&x).unwrap())));
    group.finish();
}

fn bench_batch(c: &mut Criterion) {
    let model = CrossSectionModel::bundled();
    let rv = random_vector(model.data());
    let design = lhs(4, &rv, 11).unwrap();
    let points: Vec<Vec<f64>> = design.points().rows().into_iter().map(|r| r.to_vec()).collect();
    let mut group = c.benchmark_group("evaluate_batch_4");
    group.sample_size(10);
    group.bench_function(BenchmarkId::from_parameter("pool"), |b| {
        b.iter(|| {
            let y: Vec<f64> = points.par_iter().map(|x| model.evaluate(x).unwrap()).collect();
            black_box(y)
        })
    });
    group.bench_function(BenchmarkId::from_parameter("single"), |b| {
        b.iter(|| {
            let y: Vec<f64> = points.iter().map(|x| model.evaluate(x).unwrap()).collect();
            black_box(y)
        })
    });
    group.finish();
}

criterion_group!(benches, bench_nominal, bench_batch);
criterion_main!(benches);
