use bsplit_core::collision::{CollisionOperator, QuadratureSpec};
use bsplit_core::grid::{SpaceGrid, VelocityGrid};
use bsplit_core::homogeneous::{collision_step, Scheme, StepperConfig};
use bsplit_core::initial_data::{make_perturbation, MomentProjector, PerturbationKind, PerturbationSpec};
use bsplit_core::params::PhysParams;

fn moments(grid: &VelocityGrid, f: &[f64]) -> [f64; 5] {
    let vol = grid.cell_volume();
    let mut m = [0.0; 5];
    for (j, &v) in grid.nodes().iter().enumerate() {
        m[0] += f[j];
        m[1] += v[0] * f[j];
        m[2] += v[1] * f[j];
        m[3] += v[2] * f[j];
        m[4] += (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) * f[j];
    }
    for x in &mut m { *x *= vol; }
    m
}

fn main() {
    let velocity = VelocityGrid::new(5.0, 6).unwrap();
    let space = SpaceGrid::new(16, 1).unwrap();
    let spec = PerturbationSpec {
        kind: PerturbationKind::RandomFourier,
        amplitude: 1e-3,
        ..PerturbationSpec::default()
    };
    let f0 = make_perturbation(&spec, &velocity, &space).unwrap();
    let slice = f0.slice(3).to_vec();
    let params = PhysParams::hard_potential_defaults();
    // moment defect of the rhs itself, default vs doubled hyperplane
    for (label, quad) in [
        ("default", QuadratureSpec::default()),
        ("dbl-hyp", QuadratureSpec::default().with_doubled_hyperplane()),
    ] {
        let op = CollisionOperator::new(&velocity, &params, &quad).unwrap();
        let r = op.rhs_slice(&slice);
        let m = moments(&velocity, &r);
        println!("rhs moment defect {label}: {:+.3e} {:+.3e} {:+.3e} {:+.3e} {:+.3e}", m[0], m[1], m[2], m[3], m[4]);
    }
    // unprojected runs at several dt
    let op = CollisionOperator::new(&velocity, &params, &QuadratureSpec::default()).unwrap();
    let _ = MomentProjector::new(&velocity);
    for dt in [5e-4, 2.5e-4, 1e-4] {
        let stepper = StepperConfig { scheme: Scheme::ExplicitEuler, dt, ..StepperConfig::default() };
        let m0 = moments(&velocity, &slice);
        let mut state = slice.clone();
        let mut t = 0.0;
        let mut failed = None;
        for _ in 0..10 {
            match collision_step(&op, None, &state, &stepper, 0.05) {
                Ok((s, _)) => { state = s; t += 0.05; }
                Err(e) => { failed = Some(e.to_string()); break; }
            }
        }
        let m1 = moments(&velocity, &state);
        let drift = m0.iter().zip(&m1).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
        println!("off dt {dt:.1e}: reached t {t:.2}, max drift {drift:.3e}, fail: {failed:?}");
    }
}
