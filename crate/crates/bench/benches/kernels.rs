use std::hint::black_box;

use bkflow_core::xi::{truncated_projection_difference, window_difference};
use bkflow_core::{eig_unitary, s_matrix, FlowOptions, LatticePotential, SeededRng, UnitaryFamily};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn crossing() -> LatticePotential {
    LatticePotential::new(vec![0, 4], vec![2.0, 2.0]).unwrap()
}

fn scattering(c: &mut Criterion) {
    let pot = SeededRng::new(4004, 0).potential(8, 10, 3.0);
    c.bench_function("s_matrix", |b| b.iter(|| s_matrix(black_box(&pot), black_box(0.7)).unwrap()));
    let mut g = c.benchmark_group("eig_unitary");
    for n in [2usize, 16, 64] {
        let u = SeededRng::new(1, 3).unitary(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| b.iter(|| eig_unitary(u).unwrap()));
    }
    g.finish();
}

fn xi(c: &mut Criterion) {
    let pot = crossing();
    let mut g = c.benchmark_group("window_difference");
    g.sample_size(10);
    for l in [50usize, 100] {
        g.bench_with_input(BenchmarkId::from_parameter(l), &l, |b, &l| {
            b.iter(|| window_difference(&pot, 1.88, l).unwrap())
        });
    }
    g.finish();
    let mut g = c.benchmark_group("dirichlet_difference");
    g.sample_size(10);
    for l in [50usize, 100] {
        g.bench_with_input(BenchmarkId::from_parameter(l), &l, |b, &l| {
            b.iter(|| truncated_projection_difference(&pot, 1.3, l).unwrap())
        });
    }
    g.finish();
}

fn flow(c: &mut Criterion) {
    let pot = crossing();
    let opts = FlowOptions::default();
    c.bench_function("spectral_flow", |b| {
        b.iter(|| {
            let mut fam =
                UnitaryFamily::new(1.18, 1.88, opts.initial_nodes, |l| Ok(s_matrix(&pot, l)?.s)).unwrap();
            fam.spectral_flow(std::f64::consts::PI, &opts).unwrap()
        })
    });
}

criterion_group!(benches, scattering, xi, flow);
criterion_main!(benches);
