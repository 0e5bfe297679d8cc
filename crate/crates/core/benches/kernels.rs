//! Hot kernels on a rayon pool of every available core versus a one-thread
//! pool. `--no-default-features` times the plain sequential iterators; both
//! ids then run the same code path.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nsdi::bohmian::{advance_walkers, sample_initial, NodeRegularization};
use nsdi::grid::Grid2D;
use nsdi::ground_state::{relax_ground_state, RelaxParams};
use nsdi::observables::entanglement;
use nsdi::par;
use nsdi::potential::build_potential;
use nsdi::propagator::{SplitOperator, TimeMode};
use nsdi::tdqmc::{tdqmc_init, tdqmc_step, TdqmcParams};
use nsdi::wavefunction::WaveFunction2D;

const DT: f64 = 0.03;
const FIELD: f64 = 0.05;

fn ground_state() -> WaveFunction2D {
    let grid = Arc::new(Grid2D::new(40.0, 256).unwrap());
    relax_ground_state(grid, &RelaxParams::default()).unwrap().psi
}

fn modes() -> [(&'static str, usize); 2] {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    [("one-thread", 1), ("all-cores", cores)]
}

fn kernels(c: &mut Criterion) {
    let psi0 = ground_state();
    let pot = build_potential(psi0.grid.clone());

    let mut g = c.benchmark_group("split_operator_step_256");
    for (label, workers) in modes() {
        let pool = par::Pool::new(workers);
        let mut op = SplitOperator::new(&pot, DT, TimeMode::Real).unwrap();
        let mut psi = psi0.clone();
        g.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| pool.install(|| op.step(black_box(&mut psi), FIELD).unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("walker_advance_10k");
    let mut op = SplitOperator::new(&pot, DT, TimeMode::Real).unwrap();
    let prev = psi0.clone();
    let mut next = psi0.clone();
    op.step(&mut next, FIELD).unwrap();
    for (label, workers) in modes() {
        let pool = par::Pool::new(workers);
        let ens0 = sample_initial(&psi0, 10_000, 1).unwrap();
        g.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter_batched_ref(
                || ens0.clone(),
                |ens| {
                    pool.install(|| {
                        advance_walkers(ens, &prev, &next, DT, NodeRegularization::default())
                    })
                },
                criterion::BatchSize::LargeInput,
            )
        });
    }
    g.finish();

    let mut g = c.benchmark_group("tdqmc_step_500");
    for (label, workers) in modes() {
        let pool = par::Pool::new(workers);
        let mut ens = tdqmc_init(&psi0, 500, 2, TdqmcParams::default()).unwrap();
        g.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| pool.install(|| tdqmc_step(black_box(&mut ens), FIELD, DT).unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("rdm_entropy_256");
    g.sample_size(10);
    for (label, workers) in modes() {
        let pool = par::Pool::new(workers);
        g.bench_function(BenchmarkId::from_parameter(label), |b| {
            b.iter(|| pool.install(|| entanglement(black_box(&psi0), 256).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
