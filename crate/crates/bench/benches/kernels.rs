use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use twophoton_bench::{correlator_params, fluctuator, grid, B_TILDE};
use twophoton_core::correlator::k_analytic;
use twophoton_core::dynamics::{propagate_effective, solve_volterra_unchecked};
use twophoton_core::floquet::{gap_at, resonance_gap, DriveConfig};
use twophoton_core::noise::sample_keyed;
use twophoton_core::spectrum::{lineshape_numeric_at, NumericOptions};
use twophoton_core::{BlochVector, CorrelationMode};

fn floquet(c: &mut Criterion) {
    let drive = DriveConfig::new(1.0, 0.05, 0.97).unwrap();
    c.bench_function("floquet gap N=10", |b| b.iter(|| gap_at(black_box(&drive), 10).unwrap()));
    c.bench_function("three-photon resonance search", |b| {
        b.iter(|| resonance_gap(1.0, black_box(0.05), 1.0 / 3.0, 10).unwrap())
    });
}

fn dynamics(c: &mut Criterion) {
    let cfg = fluctuator();
    let grid = grid();
    let real = sample_keyed(&cfg, grid.end(), 1, 0).unwrap();
    c.bench_function("sample realization", |b| {
        b.iter(|| sample_keyed(&cfg, grid.end(), 1, black_box(7)).unwrap())
    });
    c.bench_function("effective propagation", |b| {
        b.iter(|| propagate_effective(0.0, B_TILDE, &cfg, black_box(&real), BlochVector::up(), &grid).unwrap())
    });
    let params = correlator_params();
    let kernel: Vec<f64> = (0..2001)
        .map(|i| k_analytic(i as f64 * 0.1, 0.0, &params, CorrelationMode::InPhase).unwrap())
        .collect();
    c.bench_function("volterra 2001 points", |b| {
        b.iter(|| solve_volterra_unchecked(black_box(&kernel), 0.1).unwrap())
    });
}

fn spectrum(c: &mut Criterion) {
    let params = correlator_params();
    c.bench_function("correlator closed form", |b| {
        b.iter(|| k_analytic(black_box(3.0), 0.1, &params, CorrelationMode::InPhase).unwrap())
    });
    let opts = NumericOptions::default();
    c.bench_function("numeric lineshape point", |b| {
        b.iter(|| lineshape_numeric_at(black_box(1.0), black_box(0.7), &opts).unwrap())
    });
}

criterion_group!(benches, floquet, dynamics, spectrum);
criterion_main!(benches);
