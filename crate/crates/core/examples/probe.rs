use bsplit_core::collision::{CollisionOperator, Density, QuadratureSpec};
use bsplit_core::diagnostics::{cancellation_check, check_quadrature_default, weighted_sup_slice};
use bsplit_core::field::DistributionField;
use bsplit_core::grid::{SpaceGrid, VelocityGrid};
use bsplit_core::homogeneous::{Scheme, StepperConfig};
use bsplit_core::initial_data::{make_perturbation, PerturbationKind, PerturbationSpec};
use bsplit_core::params::PhysParams;
use bsplit_core::splitting::{self, SplittingSchedule, StopReason};
use bsplit_core::diagnostics::BarrierSpec;

fn euler(dt: f64) -> StepperConfig {
    StepperConfig {
        scheme: Scheme::ExplicitEuler,
        dt,
        ..StepperConfig::default()
    }
}

fn loose() -> BarrierSpec {
    BarrierSpec { delta: 1e3, c1: 0.1, q: 8.0 }
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    let params = PhysParams::hard_potential_defaults();
    match which.as_str() {
        "c2" => {
            let velocity = VelocityGrid::new(5.0, 6).unwrap();
            let space = SpaceGrid::new(16, 1).unwrap();
            let spec = PerturbationSpec {
                kind: PerturbationKind::RandomFourier,
                amplitude: 1e-3,
                ..PerturbationSpec::default()
            };
            let f0 = make_perturbation(&spec, &velocity, &space).unwrap();
            let op = CollisionOperator::new(&velocity, &params, &QuadratureSpec::default())
                .unwrap();
            let schedule = SplittingSchedule::new(1.0, 20).unwrap();
            let out = splitting::run(
                &op, &space, &f0, &schedule, &euler(5e-4), &loose(), &Default::default(),
            )
            .unwrap();
            println!("stop {:?}", out.report.stop);
            let h0 = &out.report.rows[0].hydro;
            for r in &out.report.rows {
                let h = &r.hydro;
                println!(
                    "t {:.4} kind {:?} dm {:+.3e} dp0 {:+.3e} de {:+.3e}",
                    r.time,
                    r.kind,
                    h.mass - h0.mass,
                    h.momentum[0] - h0.momentum[0],
                    h.energy - h0.energy
                );
            }
        }
        "c4" => {
            let grid = VelocityGrid::new(6.0, 16).unwrap();
            let op = CollisionOperator::new(&grid, &params, &QuadratureSpec::default()).unwrap();
            let space = SpaceGrid::new(1, 0).unwrap();
            let pert = PerturbationSpec { amplitude: 1e-2, ..PerturbationSpec::default() };
            let field = make_perturbation(&pert, &grid, &space).unwrap();
            let dens_f = Density::maxwellian_plus(&grid, field.slice(0));
            let dens_m = Density::maxwellian_only(&grid);
            let points: [[f64; 3]; 10] = [
                [0.375, 0.375, 0.375],
                [1.875, 0.375, -0.375],
                [0.375, 1.125, 2.625],
                [-1.125, 0.375, 0.375],
                [0.375, -1.875, 1.125],
                [2.625, -0.375, 0.375],
                [-0.375, -0.375, -1.875],
                [1.125, 1.125, -1.125],
                [0.375, 2.625, 0.375],
                [-2.625, 1.125, -0.375],
            ];
            let base = check_quadrature_default();
            let doubled = base.with_doubled_hyperplane();
            let mut all = base.clone();
            all.n_radii *= 2;
            all.n_directions *= 2;
            all.n_hyperplane *= 2;
            for v in points {
                let a = cancellation_check(&op, &dens_f, v, &base).rel_err;
                let b = cancellation_check(&op, &dens_f, v, &doubled).rel_err;
                let c = cancellation_check(&op, &dens_f, v, &all).rel_err;
                let am = cancellation_check(&op, &dens_m, v, &base).rel_err;
                let bm = cancellation_check(&op, &dens_m, v, &doubled).rel_err;
                let cm = cancellation_check(&op, &dens_m, v, &all).rel_err;
                println!(
                    "v {:?} |v| {:.2}  M+f: {:.3}% {:.3}% {:.3}%   M: {:.3}% {:.3}% {:.3}%",
                    v,
                    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt(),
                    100.0 * a, 100.0 * b, 100.0 * c,
                    100.0 * am, 100.0 * bm, 100.0 * cm
                );
            }
        }
        "c9" => {
            let velocity = VelocityGrid::new(5.0, 6).unwrap();
            let space = SpaceGrid::new(8, 1).unwrap();
            let spec = PerturbationSpec {
                kind: PerturbationKind::RandomFourier,
                amplitude: 1e-2,
                ..PerturbationSpec::default()
            };
            let f0 = make_perturbation(&spec, &velocity, &space).unwrap();
            let op = CollisionOperator::new(&velocity, &params, &QuadratureSpec::default())
                .unwrap();
            let run_n = |intervals: usize| {
                let schedule = SplittingSchedule::new(1.0, intervals).unwrap();
                let out = splitting::run(
                    &op, &space, &f0, &schedule, &euler(1.0 / 2048.0), &loose(), &Default::default(),
                )
                .unwrap();
                assert_eq!(out.report.stop, StopReason::Completed);
                out.state.field
            };
            let fields: Vec<DistributionField> =
                [16, 32, 64].iter().map(|&n| run_n(n)).collect();
            for (a, b, label) in [(0usize, 1usize, "16-32"), (1, 2, "32-64")] {
                let fa = &fields[a];
                let fb = &fields[b];
                let mut diff = fa.clone();
                for (x, y) in diff.values.iter_mut().zip(&fb.values) {
                    *x -= y;
                }
                // locate argmax of weighted sup and report raw values there
                let mut best = (0usize, 0usize, 0.0f64);
                let mut sup0 = 0.0f64;
                for xi in 0..space.len() {
                    let s = diff.slice(xi);
                    let w = weighted_sup_slice(&velocity, s, 8.0);
                    if w > best.2 {
                        // find node
                        let mut arg = 0;
                        let mut mx = 0.0;
                        for (j, &vv) in velocity.nodes().iter().enumerate() {
                            let r2 = vv[0] * vv[0] + vv[1] * vv[1] + vv[2] * vv[2];
                            let val = (1.0 + r2).powf(4.0) * s[j].abs();
                            if val > mx {
                                mx = val;
                                arg = j;
                            }
                        }
                        best = (xi, arg, w);
                    }
                    sup0 = sup0.max(s.iter().fold(0.0f64, |m, &x| m.max(x.abs())));
                }
                let node = velocity.nodes()[best.1];
                println!(
                    "{label}: wsup {:.3e} at x-slice {} node {:?}  raw diff {:.3e}  unweighted sup {:.3e}",
                    best.2, best.0, node,
                    fields[a].slice(best.0)[best.1] - fields[b].slice(best.0)[best.1],
                    sup0
                );
            }
        }
        _ => eprintln!("usage: probe c2|c4|c9"),
    }
}
