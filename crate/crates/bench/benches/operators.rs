use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qcs_core::models::{gen_lowrank, project_lowrank};
use qcs_core::pbp::reconstruct;
use qcs_core::{DitherMode, OperatorKind, QuantizedMap, SensingOperator, SignalModel};

fn probe(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.5)
        .collect()
}

fn apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply");
    for n in [512, 4096] {
        let x = probe(n);
        let gauss = SensingOperator::build(OperatorKind::DenseGaussian, n / 2, n, 1).unwrap();
        group.bench_with_input(BenchmarkId::new("gaussian", n), &x, |b, x| {
            b.iter(|| gauss.apply(black_box(x)).unwrap())
        });
        let dct = SensingOperator::build(OperatorKind::PartialDct, n / 2, n, 1).unwrap();
        group.bench_with_input(BenchmarkId::new("dct-fast", n), &x, |b, x| {
            b.iter(|| dct.apply(black_box(x)).unwrap())
        });
        if n <= 512 {
            group.bench_with_input(BenchmarkId::new("dct-by-rows", n), &x, |b, x| {
                b.iter(|| dct.apply_by_rows(black_box(x)).unwrap())
            });
        }
    }
    group.finish();
}

fn projection(c: &mut Criterion) {
    let z = gen_lowrank(64, 64, 8, 3).unwrap();
    c.bench_function("project_lowrank/64x64/r2", |b| {
        b.iter(|| project_lowrank(black_box(&z), 2).unwrap())
    });
}

fn trial(c: &mut Criterion) {
    let model = SignalModel::sparse(512, 4).unwrap();
    let op = SensingOperator::build(OperatorKind::DenseGaussian, 256, 512, 5).unwrap();
    let map = QuantizedMap::new(op, 1.0, DitherMode::Uniform, 6).unwrap();
    let x = model.generate(7).unwrap();
    c.bench_function("reconstruct/sparse-512-4/m256", |b| {
        b.iter(|| {
            let y = map.observe(black_box(&x.data)).unwrap();
            reconstruct(&map, &y, &model).unwrap()
        })
    });
}

criterion_group!(benches, apply, projection, trial);
criterion_main!(benches);
