//! Criterion benchmarks over the golden two-period tree: exact LP interior
//! queries, vertex enumeration, the dual minimax solve, and the full
//! beneficial-exchange pipeline.

use colarb_core::arbitrage::{
    check_no_collective_arbitrage, collective_martingale_polytope, martingale_polytope,
};
use colarb_core::beneficial::beneficial_pipeline;
use colarb_core::fixtures;
use colarb_core::minimax::solve_minimax;
use colarb_core::optim::vertex_enumerate;
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn bench_interior_lp(c: &mut Criterion) {
    let model = fixtures::fig1();
    let polytope = martingale_polytope(&model, 0).unwrap();
    c.bench_function("interior_point_tree_agent", |b| {
        b.iter(|| black_box(polytope.interior().exists()))
    });
    let collective = collective_martingale_polytope(&model, &model.exchange).unwrap();
    c.bench_function("interior_point_collective", |b| {
        b.iter(|| black_box(collective.interior().exists()))
    });
}

fn bench_vertex_enumeration(c: &mut Criterion) {
    let model = fixtures::fig1();
    let polytope = martingale_polytope(&model, 0).unwrap();
    c.bench_function("vertex_enumerate_tree_agent", |b| {
        b.iter(|| black_box(vertex_enumerate(&polytope.set, 24).unwrap().len()))
    });
}

fn bench_collective_arbitrage(c: &mut Criterion) {
    let model = fixtures::fig1();
    c.bench_function("check_no_collective_arbitrage", |b| {
        b.iter(|| {
            black_box(
                check_no_collective_arbitrage(&model, &model.exchange)
                    .unwrap()
                    .holds(),
            )
        })
    });
}

fn bench_minimax(c: &mut Criterion) {
    let model = fixtures::fig1();
    c.bench_function("solve_minimax_tree_agent", |b| {
        b.iter(|| black_box(solve_minimax(&model, 0).unwrap().lambda))
    });
}

fn bench_pipeline(c: &mut Criterion) {
    let model = fixtures::fig1();
    c.bench_function("beneficial_pipeline_tree", |b| {
        b.iter(|| {
            black_box(
                beneficial_pipeline(&model, &model.exchange)
                    .unwrap()
                    .has_certificate(),
            )
        })
    });
}

criterion_group!(
    benches,
    bench_interior_lp,
    bench_vertex_enumeration,
    bench_collective_arbitrage,
    bench_minimax,
    bench_pipeline
);
criterion_main!(benches);
