//! Data-parallel inner loops against their sequential equivalents.
//!
//! With the default `parallel` feature the library paths fan column
//! subproblems and oracle grid scans out over rayon; the `*_sequential_loop`
//! benches drive the same public per-column operations in a plain loop.
//! Building with `--no-default-features` makes the library paths sequential
//! too, which is the other half of the comparison.

use criterion::{criterion_group, criterion_main, Criterion};
use ndarray::{Array1, Array2};
use std::hint::black_box;

use nips::io::MatrixData;
use nips::nmf::{self, ft_grad, subproblem_solve, InnerSettings, NmfProblem};
use nips::oracle::{prox_oracle, GridSpec};
use nips::prox::ProxRegularizer;

fn setup_block() -> (NmfProblem, Array2<f64>) {
    let y = nips::synth::uniform_dense(100, 160, 7);
    let problem = NmfProblem::new(MatrixData::Dense(y), 8, 0.0, 0.1)
        .unwrap()
        .with_minibatch(160)
        .unwrap()
        .with_inner(InnerSettings {
            tol: 1e-5,
            max_iters: 2000,
        });
    let x0 = nmf::seeded_dictionary(&problem, 3);
    (problem, x0)
}

fn bench_nmf_gradient(c: &mut Criterion) {
    let (problem, x0) = setup_block();
    let (decomposable, _, _) = nmf::build_decomposable(&problem, &x0).unwrap();
    let flat = Array1::from_iter(x0.iter().cloned());

    let mut group = c.benchmark_group("nmf_block_gradient_160cols");
    group.sample_size(10);
    // library path: columns fan out over rayon under the parallel feature
    group.bench_function("library_api", |b| {
        b.iter(|| decomposable.components()[0].grad(black_box(&flat)))
    });
    // reference: same public per-column operations, strictly sequential
    group.bench_function("sequential_loop", |b| {
        b.iter(|| {
            let mut grad = Array2::<f64>::zeros(x0.dim());
            for t in 0..problem.y.ncols() {
                let y_col = problem.y.column(t);
                let (a, _) = subproblem_solve(&x0, &y_col, problem.gamma, &problem.inner).unwrap();
                grad += &ft_grad(&x0, &y_col, &a).unwrap();
            }
            grad
        })
    });
    group.finish();
}

fn bench_oracle_grid(c: &mut Criterion) {
    let reg = ProxRegularizer::l1(0.8).unwrap();
    let grid = GridSpec::cube(3, 6.0, 61).unwrap();
    let y = Array1::from_vec(vec![1.3, -0.4, 2.2]);
    let mut group = c.benchmark_group("prox_oracle_grid_3d");
    group.sample_size(20);
    group.bench_function("refined_scan_226k_points", |b| {
        b.iter(|| prox_oracle(&reg, black_box(&y), 1.0, &grid).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_nmf_gradient, bench_oracle_grid);
criterion_main!(benches);
