use criterion::{criterion_group, criterion_main, Criterion};
use ndarray::Array1;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use nips::prox::{dykstra_prox, project_box_hyperplane, project_nonneg, prox_l1, prox_l1_nonneg};

fn rand_vec(n: usize, seed: u64) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array1::from_iter((0..n).map(|_| rng.random_range(-5.0..5.0)))
}

fn bench_prox_ops(c: &mut Criterion) {
    let y = rand_vec(100_000, 1);
    c.bench_function("prox_l1_100k", |b| {
        b.iter(|| prox_l1(black_box(&y), 0.7).unwrap())
    });
    c.bench_function("prox_l1_nonneg_100k", |b| {
        b.iter(|| prox_l1_nonneg(black_box(&y), 0.7).unwrap())
    });

    let n = 10_000;
    let y = rand_vec(n, 2);
    let lower = Array1::from_elem(n, -1.0);
    let upper = Array1::from_elem(n, 1.0);
    let normal = rand_vec(n, 3).mapv(f64::abs);
    let offset = 0.25 * normal.sum();
    c.bench_function("project_box_hyperplane_10k", |b| {
        b.iter(|| project_box_hyperplane(black_box(&y), &lower, &upper, &normal, offset).unwrap())
    });

    let y = rand_vec(1000, 4);
    c.bench_function("dykstra_l1_nonneg_1k", |b| {
        b.iter(|| {
            dykstra_prox(
                black_box(&y),
                |v| prox_l1(v, 0.7).unwrap(),
                |v| project_nonneg(v).unwrap(),
                1000,
                1e-9,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, bench_prox_ops);
criterion_main!(benches);
