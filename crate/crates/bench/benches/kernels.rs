//! Criterion benchmarks for the hot numerical kernels: the covering-number
//! center sweep, the outward radial integration, the split-step field
//! update, and the few-body Hamiltonian application.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use condensate::gp::{gp_step, ExternalPotential, GPField};
use condensate::grid::{PeriodicGrid, SpectralOps};
use condensate::manybody::{apply_hamiltonian_with, pair_values_by_offset, ManyBodyState};
use condensate::potentials::{covering_number_with_resolution, scaled_potential, PotentialSpec};
use condensate::radial::{integrate_zero_energy, RadialGrid};
use condensate::scattering::find_minimal_r;

fn spec() -> PotentialSpec {
    PotentialSpec::square(0.25, 0.5, 1.0, 50.0, 1e-4, 0.5).unwrap()
}

fn bench_covering(c: &mut Criterion) {
    c.bench_function("covering_number r1=0.25 b2=1 res=16", |b| {
        b.iter(|| covering_number_with_resolution(black_box(0.25), black_box(1.0), 16).unwrap())
    });
}

fn bench_radial(c: &mut Criterion) {
    let grid = RadialGrid::aligned(2.0, 1.0 / 8192.0, &[0.25, 0.5, 1.0]);
    let spec = spec();
    c.bench_function("zero-energy integration 16k points", |b| {
        b.iter(|| {
            let ivp = integrate_zero_energy(&|r| 0.5 * spec.v(black_box(r)), &grid);
            black_box(ivp.u.last().copied())
        })
    });
}

fn bench_minimal_radius(c: &mut Criterion) {
    let spec = spec();
    c.bench_function("shell construction N=100", |b| {
        b.iter(|| black_box(find_minimal_r(&spec, 100, 0.5).unwrap().r_beta))
    });
}

fn bench_gp_step(c: &mut Criterion) {
    let grid = PeriodicGrid::new(3, 16, 10.0);
    let field = GPField::gaussian(grid, 1.2);
    let pot = ExternalPotential::gaussian_well(1.0, 2.5, 5.0);
    c.bench_function("field split step 16^3", |b| {
        b.iter(|| black_box(gp_step(&field, 0.5, &pot, 1e-4).unwrap().time))
    });
}

fn bench_hamiltonian_apply(c: &mut Criterion) {
    let spec = spec();
    let grid = PeriodicGrid::new(1, 32, 8.0);
    let phi = GPField::gaussian(grid, 1.0);
    let psi = ManyBodyState::product(&phi, 3);
    let ops = SpectralOps::new();
    let v1 = scaled_potential(&spec, 3, 1.0).unwrap();
    let pair = pair_values_by_offset(&grid, &v1);
    let a_vals = vec![0.0; grid.num_points()];
    c.bench_function("three-body H apply 32^3 total", |b| {
        b.iter(|| {
            let h = apply_hamiltonian_with(&psi, &pair, &a_vals, &ops).unwrap();
            black_box(h.amplitudes[0])
        })
    });
}

criterion_group!(
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = bench_covering,
        bench_radial,
        bench_minimal_radius,
        bench_gp_step,
        bench_hamiltonian_apply
);
criterion_main!(kernels);
