use std::hint::black_box;
use std::sync::Arc;

use busby_core::mesh::{annulus_tower, build_disk_mesh};
use busby_core::{
    build_wk_extension, extension_from_busby, homotopy_equivalent_fields, stabilized_invariant,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_wk_classification(c: &mut Criterion) {
    let mut group = c.benchmark_group("wk_pipeline");
    for angular in [32usize, 64, 128] {
        let disk = Arc::new(build_disk_mesh(2, angular).unwrap());
        let tower = Arc::new(annulus_tower(3, angular).unwrap());
        group.bench_with_input(
            BenchmarkId::new("stabilized_invariant", angular),
            &(disk, tower),
            |b, (disk, tower)| {
                b.iter(|| {
                    let ext = build_wk_extension(3, black_box(disk)).unwrap();
                    stabilized_invariant(&ext, tower).unwrap()
                })
            },
        );
    }
    group.finish();
}

fn bench_busby_roundtrip(c: &mut Criterion) {
    let disk = Arc::new(build_disk_mesh(2, 64).unwrap());
    let tower = Arc::new(annulus_tower(3, 64).unwrap());
    let ext = build_wk_extension(2, &disk).unwrap();
    let delta = ext.busby_invariant(&tower).unwrap();
    c.bench_function("extension_from_busby_64", |b| {
        b.iter(|| {
            extension_from_busby(
                black_box(&delta),
                ext.v_bundle().unwrap(),
                ext.z_bundle(),
                &tower,
            )
            .unwrap()
        })
    });
}

fn bench_homotopy_decision(c: &mut Criterion) {
    let disk = Arc::new(build_disk_mesh(2, 64).unwrap());
    let tower = Arc::new(annulus_tower(3, 64).unwrap());
    let a = build_wk_extension(1, &disk)
        .unwrap()
        .busby_invariant(&tower)
        .unwrap();
    let b_field = build_wk_extension(-2, &disk)
        .unwrap()
        .busby_invariant(&tower)
        .unwrap();
    c.bench_function("homotopy_verdict_64", |bch| {
        bch.iter(|| homotopy_equivalent_fields(black_box(&a), black_box(&b_field)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_wk_classification,
    bench_busby_roundtrip,
    bench_homotopy_decision
);
criterion_main!(benches);
