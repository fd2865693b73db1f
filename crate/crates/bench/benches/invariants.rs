use std::hint::black_box;
use std::sync::Arc;

use busby_core::extension::spanning_probes;
use busby_core::gen::random_cycle_setup;
use busby_core::{
    delta_to_isometry, det_winding, fredholm_index, isometry_to_delta, winding_number, C64, CMat,
    StructuredOperator,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_winding(c: &mut Criterion) {
    let mut group = c.benchmark_group("winding_number");
    for n in [64usize, 512, 4096] {
        let samples: Vec<C64> = (0..n)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                C64::from_polar(1.0, 3.0 * t + 0.2 * t.sin())
            })
            .collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &samples, |b, s| {
            b.iter(|| winding_number(black_box(s)).unwrap())
        });
    }
    group.finish();
}

fn bench_det_winding(c: &mut Criterion) {
    let mut group = c.benchmark_group("det_winding");
    for (ambient, rank) in [(2usize, 1usize), (3, 2), (4, 4)] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (_, field) = random_cycle_setup(&mut rng, 64, ambient, rank, rank, 2).unwrap();
        group.bench_with_input(
            BenchmarkId::new("conjugated", format!("{rank}of{ambient}")),
            &field,
            |b, f| b.iter(|| det_winding(black_box(f)).unwrap()),
        );
    }
    group.finish();
}

fn bench_roundtrip(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (_, field) = random_cycle_setup(&mut rng, 32, 4, 2, 3, 1).unwrap();
    let probes = spanning_probes(field.source(), 9).unwrap();
    let delta = isometry_to_delta(&field);
    c.bench_function("delta_to_isometry_32x4", |b| {
        b.iter(|| delta_to_isometry(black_box(&delta), black_box(&probes)).unwrap())
    });
}

fn bench_fredholm(c: &mut Criterion) {
    let mut group = c.benchmark_group("fredholm_index");
    group.sample_size(20);
    let plain = StructuredOperator::power_symbol(3, 64, false).unwrap();
    group.bench_function("z3", |b| {
        b.iter(|| fredholm_index(black_box(&plain)).unwrap())
    });
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let perturbed = plain
        .with_perturbation(CMat::from_fn(3, 3, |_, _| {
            busby_core::gen::random_complex(&mut rng)
        }))
        .unwrap();
    group.bench_function("z3_perturbed", |b| {
        b.iter(|| fredholm_index(black_box(&perturbed)).unwrap())
    });
    group.finish();
}

fn bench_frames(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cycle = Arc::new(busby_core::mesh::cycle_space(128).unwrap());
    let field = busby_core::gen::random_projection_field(&mut rng, &cycle, 4, 2, 0.3).unwrap();
    let values: Vec<&CMat> = (0..128).map(|v| field.value(v)).collect();
    c.bench_function("closed_cycle_frames_128x4", |b| {
        b.iter(|| busby_core::isometry::closed_cycle_frames(black_box(&values)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_winding,
    bench_det_winding,
    bench_roundtrip,
    bench_fredholm,
    bench_frames
);
criterion_main!(benches);
