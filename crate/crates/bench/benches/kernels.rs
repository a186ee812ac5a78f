//! Per-call cost of the solver step, a diagnostics sample, and one particle step.

use criterion::{black_box, criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use swarmfp_core::particles::em_step_in_place;
use swarmfp_core::{
    build_grid, project_density, sample_initial, step, DiagnosticsContext, ModelKind, ModelParams, SolverState,
};

fn params() -> ModelParams {
    ModelParams::new(0.5, 0.5, 1.0, 1.0, 0.0, 2.0).unwrap()
}

fn solver_step(c: &mut Criterion) {
    let p = params();
    let mut g = c.benchmark_group("solver_step");
    for n in [1200, 4800] {
        let grid = build_grid(-12.0, 12.0, n).unwrap();
        let f0 = project_density(|x| (-(x - 2.0) * (x - 2.0) / 0.5).exp(), &grid, true).unwrap();
        let state = SolverState::new(f0, 0.0, &p);
        for kind in [ModelKind::ContinuousKappa, ModelKind::DiscontinuousDrift] {
            g.bench_with_input(BenchmarkId::new(kind.name(), n), &state, |b, s| {
                b.iter(|| step(black_box(s), 1e-3, &p, kind).unwrap())
            });
        }
    }
    g.finish();
}

fn diagnostics_sample(c: &mut Criterion) {
    let p = params();
    let grid = build_grid(-12.0, 12.0, 1200).unwrap();
    let ctx = DiagnosticsContext::new(&p, &grid).unwrap();
    let f = project_density(|x| (-(x - 1.0) * (x - 1.0) / 0.8).exp(), &grid, true).unwrap();
    c.bench_function("diagnostics_evaluate/1200", |b| b.iter(|| ctx.evaluate(black_box(&f), 1.5).unwrap()));
}

fn particle_step(c: &mut Criterion) {
    let p = params();
    let grid = build_grid(-12.0, 12.0, 1200).unwrap();
    let f0 = project_density(|x| (-(x - 2.0) * (x - 2.0) / 0.5).exp(), &grid, true).unwrap();
    let mut g = c.benchmark_group("em_step");
    for n in [10_000, 100_000] {
        let e = sample_initial(&f0, n, 42).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &e, |b, e| {
            b.iter_batched_ref(|| e.clone(), |e| em_step_in_place(e, 1e-3, &p), BatchSize::LargeInput)
        });
    }
    g.finish();
}

criterion_group!(benches, solver_step, diagnostics_sample, particle_step);
criterion_main!(benches);
