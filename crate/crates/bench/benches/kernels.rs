use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use bsplit_core::collision::{CollisionOperator, QuadratureSpec};
use bsplit_core::grid::{SpaceGrid, VelocityGrid};
use bsplit_core::homogeneous::{collision_step, StepperConfig};
use bsplit_core::initial_data::{make_perturbation, MomentProjector, PerturbationSpec};
use bsplit_core::params::PhysParams;
use bsplit_core::transport::{mollify, MollifierSpec, TransportOperator};

fn perturbed_slice(grid: &VelocityGrid) -> Vec<f64> {
    let space = SpaceGrid::new(1, 0).unwrap();
    let spec = PerturbationSpec {
        amplitude: 1e-2,
        ..PerturbationSpec::default()
    };
    make_perturbation(&spec, grid, &space).unwrap().values
}

fn bench_collision(c: &mut Criterion) {
    let params = PhysParams::hard_potential_defaults();
    let mut group = c.benchmark_group("collision");
    group.sample_size(10);
    for n in [6usize, 8] {
        let grid = VelocityGrid::new(5.0, n).unwrap();
        let op = CollisionOperator::new(&grid, &params, &QuadratureSpec::default()).unwrap();
        let f = perturbed_slice(&grid);
        group.bench_function(format!("rhs_slice_n{n}"), |b| {
            b.iter(|| op.rhs_slice(&f))
        });
        let projector = MomentProjector::new(&grid).unwrap();
        let stepper = StepperConfig {
            dt: 5e-4,
            ..StepperConfig::default()
        };
        group.bench_function(format!("rk4_substep_n{n}"), |b| {
            b.iter_batched(
                || f.clone(),
                |f0| collision_step(&op, Some(&projector), &f0, &stepper, 5e-4).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn bench_transport(c: &mut Criterion) {
    let velocity = VelocityGrid::new(5.0, 6).unwrap();
    let space = SpaceGrid::new(16, 1).unwrap();
    let pert = PerturbationSpec {
        amplitude: 1e-2,
        spatial_modes: 3,
        ..PerturbationSpec::default()
    };
    let field = make_perturbation(&pert, &velocity, &space).unwrap();
    let op = TransportOperator::new(&space, &velocity);
    let moll = MollifierSpec::new(0.05).unwrap();
    let mut group = c.benchmark_group("transport");
    group.bench_function("free_stream_step", |b| {
        b.iter(|| op.transport_step(&field, 0.05).unwrap())
    });
    group.bench_function("mollify", |b| b.iter(|| mollify(&field, &space, &moll)));
    group.finish();
}

criterion_group!(benches, bench_collision, bench_transport);
criterion_main!(benches);
