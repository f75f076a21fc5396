//! Microbenchmarks of the hot kernels: guidance-drift evaluation, path
//! stepping, transition-phase sampling, and the grid density solver.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use dualist_core::catalog::{equal_three_level_box, equal_two_level_box, ground_box};
use dualist_core::dynamics::{fp_evolve, simulate_path, FpDrift, IntegratorConfig, ParticleState};
use dualist_core::rng::stream;
use dualist_core::spectral::PhaseVector;
use dualist_core::ste::SteSampler;
use dualist_core::DensityField;

fn bench_drift(c: &mut Criterion) {
    let sys = equal_three_level_box();
    let theta = PhaseVector(vec![0.3, 1.1]);
    let node = dualist_core::NodePolicy::default();
    c.bench_function("drift_three_level", |b| {
        let mut x: f64 = 0.1;
        b.iter(|| {
            x = 0.1 + (x * 7919.0).fract() * 0.8;
            black_box(sys.drift(&theta, 0.25, &[x], &node).unwrap())
        })
    });
}

fn bench_path(c: &mut Criterion) {
    let sys = equal_two_level_box();
    let cfg = IntegratorConfig::new(1e-3);
    c.bench_function("simulate_path_1k_steps", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            let mut rng = stream(seed, 0);
            let state = ParticleState {
                q: vec![0.4],
                theta: PhaseVector::zeros(1),
                t: 0.0,
            };
            black_box(simulate_path(&sys, state, 1.0, 1.0, &cfg, 100, &mut rng).unwrap())
        })
    });
}

fn bench_ste_sampler(c: &mut Criterion) {
    let sys = equal_three_level_box();
    let sampler = SteSampler::at_point(&sys, 0.2, &[0.37]).unwrap();
    c.bench_function("ste_sample_three_level", |b| {
        let mut rng = stream(11, 0);
        b.iter(|| black_box(sampler.sample(&mut rng).unwrap()))
    });
}

fn bench_fp_step(c: &mut Criterion) {
    let sys = ground_box();
    let theta = PhaseVector::zeros(0);
    let rho0 = DensityField::uniform(sys.grid(), 0.0);
    c.bench_function("fp_evolve_10_steps", |b| {
        b.iter(|| {
            black_box(
                fp_evolve(FpDrift::System(&sys, &theta), sys.hbar, &rho0, 0.01, 10).unwrap(),
            )
        })
    });
}

criterion_group!(benches, bench_drift, bench_path, bench_ste_sampler, bench_fp_step);
criterion_main!(benches);
