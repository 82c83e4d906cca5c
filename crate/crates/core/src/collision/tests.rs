use std::f64::consts::PI;

use super::checks::{conv_power_at, kernel_abs_domination, kernel_symmetry_check};
use super::*;
use crate::grid::VelocityGrid;
use crate::params::PhysParams;

fn hard_params() -> PhysParams {
    PhysParams::hard_potential_defaults()
}

#[test]
fn angular_b_cutoff_and_examples() {
    let xs = AngularCrossSection::new(&hard_params());
    assert_eq!(angular_b(-0.2, &xs), 0.0);
    assert_eq!(angular_b(0.0, &xs), 0.0);
    // cos t = 1/2 gives sin(t/2) = 1/2, so b = 2^3
    assert!((angular_b(0.5, &xs) - 8.0).abs() < 1e-12);
}

#[test]
fn angular_b_small_angle_power() {
    // b ~ (t/2)^{-(d-1)-2s} as t -> 0
    let xs = AngularCrossSection::new(&hard_params());
    let t: f64 = 1e-3;
    let ratio = angular_b(t.cos(), &xs) * (0.5 * t).powf(3.0);
    assert!((ratio - 1.0).abs() < 1e-6);
}

#[test]
fn cancellation_constant_closed_form() {
    // For gamma = 1, s = 1/2, d = 3 the angular integral reduces to
    // 8 pi int_0^{pi/4} (sec^3 p + sec p) dp = 8 pi (sqrt(2)/2 + 1.5 ln(1 + sqrt(2)))
    let params = hard_params();
    let xs = AngularCrossSection::new(&params);
    let c = cancellation_constant(&params, &xs, 4096).unwrap();
    let oracle = 8.0 * PI * (0.5 * 2.0f64.sqrt() + 1.5 * (1.0 + 2.0f64.sqrt()).ln());
    assert!(c.value > 0.0);
    assert!(
        ((c.value - oracle) / oracle).abs() < 1e-6,
        "got {}, oracle {}",
        c.value,
        oracle
    );
}

#[test]
fn cancellation_constant_converges_off_half() {
    // away from s = 1/2 the substitution must still tame the endpoint
    let params = PhysParams::new(0.5, 0.75, 1.0, 3).unwrap();
    let xs = AngularCrossSection::new(&params);
    let coarse = cancellation_constant(&params, &xs, 2048).unwrap();
    let fine = cancellation_constant(&params, &xs, 4096).unwrap();
    assert!(coarse.value > 0.0);
    assert!(((fine.value - coarse.value) / fine.value).abs() < 5e-3);
}

#[test]
fn kf_rejects_degenerate_direction() {
    let grid = VelocityGrid::new(6.0, 8).unwrap();
    let params = hard_params();
    let quad = QuadratureSpec::default();
    let dens = Density::maxwellian_only(&grid);
    let err = kf(&dens, [1.0, 0.0, 0.0], [1.0, 0.0, 0.0], &quad, &params);
    assert!(matches!(err, Err(CoreError::DegenerateDirection(_))));
}

#[test]
fn kf_matches_analytic_maxwellian_oracle() {
    // K_M(0, e1) with gamma = 0, s = 1/2: the hyperplane integral is
    // 4 * 2 pi (2 pi)^{-3/2} int_1^inf (1 + rho^2) e^{-rho^2/2} rho d rho
    // = 16 e^{-1/2} / sqrt(2 pi)
    let grid = VelocityGrid::new(6.0, 8).unwrap();
    let params = PhysParams::new(0.0, 0.5, 1.0, 3).unwrap();
    let quad = QuadratureSpec {
        n_hyperplane: 400,
        ..QuadratureSpec::default()
    };
    let dens = Density::maxwellian_only(&grid);
    let got = kf(&dens, [0.0; 3], [1.0, 0.0, 0.0], &quad, &params).unwrap();
    let oracle = 16.0 * (-0.5f64).exp() / (2.0 * PI).sqrt();
    assert!(
        ((got - oracle) / oracle).abs() < 1e-4,
        "got {got}, oracle {oracle}"
    );
}

#[test]
fn kf_self_converges_under_node_doubling() {
    let grid = VelocityGrid::new(6.0, 8).unwrap();
    let params = hard_params();
    let quad = QuadratureSpec {
        n_hyperplane: 24,
        ..QuadratureSpec::default()
    };
    let dens = Density::maxwellian_only(&grid);
    let v = [0.3, -0.2, 0.5];
    let vp = [1.1, 0.4, -0.3];
    let base = kf(&dens, v, vp, &quad, &params).unwrap();
    let fine = kf(&dens, v, vp, &quad.with_doubled_hyperplane(), &params).unwrap();
    assert!(((fine - base) / fine).abs() < 2e-2, "base {base}, fine {fine}");
}

#[test]
fn kf_nonnegative_for_nonnegative_density() {
    let grid = VelocityGrid::new(6.0, 8).unwrap();
    let params = hard_params();
    let quad = QuadratureSpec::default();
    let dens = Density::maxwellian_only(&grid);
    for vp in [[0.5, 0.0, 0.0], [1.0, 1.0, 0.0], [-2.0, 0.5, 1.5]] {
        let val = kf(&dens, [0.1, 0.2, -0.3], vp, &quad, &params).unwrap();
        assert!(val >= 0.0);
    }
}

#[test]
fn kf_symmetric_under_reflection() {
    let grid = VelocityGrid::new(6.0, 12).unwrap();
    let params = hard_params();
    let quad = QuadratureSpec::default();
    let f: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&v| {
            let r2: f64 = v.iter().map(|c| c * c).sum();
            0.05 * (1.0 + v[0]) * (-0.4 * r2).exp()
        })
        .collect();
    let dens = Density::maxwellian_plus(&grid, &f);
    for (v, u) in [
        ([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
        ([0.4, -0.7, 0.2], [0.3, 0.8, -0.5]),
        ([1.0, 1.0, 1.0], [0.0, 0.0, 0.9]),
    ] {
        assert!(kernel_symmetry_check(&dens, v, u, &quad, &params).unwrap());
    }
}

#[test]
fn kf_linear_in_kernel_argument() {
    let grid = VelocityGrid::new(6.0, 8).unwrap();
    let params = hard_params();
    let quad = QuadratureSpec::default();
    let f: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&v| (-0.5 * v.iter().map(|c| c * c).sum::<f64>()).exp())
        .collect();
    let g: Vec<f64> = grid.nodes().iter().map(|&v| 0.1 * v[0] * v[1]).collect();
    let combo: Vec<f64> = f.iter().zip(&g).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
    let v = [0.2, 0.1, -0.4];
    let vp = [1.0, -0.5, 0.3];
    let kf_f = kf(&Density::perturbation(&grid, &f), v, vp, &quad, &params).unwrap();
    let kf_g = kf(&Density::perturbation(&grid, &g), v, vp, &quad, &params).unwrap();
    let kf_c = kf(&Density::perturbation(&grid, &combo), v, vp, &quad, &params).unwrap();
    let expect = 2.0 * kf_f - 3.0 * kf_g;
    assert!((kf_c - expect).abs() <= 1e-12 * expect.abs().max(1.0));
}

#[test]
fn kf_dominated_by_absolute_density() {
    let grid = VelocityGrid::new(6.0, 8).unwrap();
    let params = hard_params();
    let quad = QuadratureSpec::default();
    let f: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&v| 0.2 * v[0] * (-0.6 * v.iter().map(|c| c * c).sum::<f64>()).exp())
        .collect();
    assert!(kernel_abs_domination(
        &grid,
        &f,
        [0.1, 0.0, 0.3],
        [0.9, 0.2, -0.1],
        &quad,
        &params
    )
    .unwrap());
}

#[test]
fn power_kernel_values() {
    let sp = 0.5;
    assert!((power_kernel(2.0, 1.0, sp) - 2.0).abs() < 1e-15);
    assert!((power_kernel(3.0, -1.0, sp) - 1.0 / 3.0).abs() < 1e-15);
    // inside half a cell: equivalent-sphere average 3/(k+3) r_eq^k
    let r_eq = sp * (3.0 / (4.0 * PI)).powf(1.0 / 3.0);
    assert!((power_kernel(0.1, 1.0, sp) - 0.75 * r_eq).abs() < 1e-15);
}

#[test]
fn maxwellian_first_moment_from_grid() {
    // int M |w| dw = 2 sqrt(2/pi); grid sums at two resolutions bracket it
    let oracle = maxwellian_first_moment();
    let conv_at = |n: usize| {
        let g = VelocityGrid::new(6.0, n).unwrap();
        let m: Vec<f64> = g.nodes().iter().map(|&v| maxwellian(v)).collect();
        conv_power_at(&g, &m, [0.0; 3], 1.0)
    };
    let coarse = conv_at(16);
    let fine = conv_at(32);
    assert!(((coarse - oracle) / oracle).abs() < 2e-2);
    assert!(((fine - oracle) / oracle).abs() < 5e-3);
    assert!((fine - oracle).abs() <= (coarse - oracle).abs());
}

#[test]
fn convolve_table_matches_direct_sum() {
    let grid = VelocityGrid::new(6.0, 8).unwrap();
    let params = hard_params();
    let op = CollisionOperator::new(&grid, &params, &QuadratureSpec::default()).unwrap();
    let f: Vec<f64> = grid.nodes().iter().map(|&v| maxwellian(v)).collect();
    let table = op.convolve_gamma(&f);
    for i in [0, 13, 200, 511] {
        let direct = conv_power_at(&grid, &f, grid.node(i), params.gamma);
        assert!((table[i] - direct).abs() <= 1e-12 * direct.abs().max(1.0));
    }
}

#[test]
fn q_s_annihilates_constants() {
    let grid = VelocityGrid::new(6.0, 8).unwrap();
    let params = hard_params();
    let op = CollisionOperator::new(&grid, &params, &QuadratureSpec::default()).unwrap();
    let dens = Density::maxwellian_only(&grid);
    for v in [[0.0; 3], [1.2, -0.7, 0.3]] {
        assert_eq!(op.q_s(&dens, |_| 1.0, v), 0.0);
    }
}

#[test]
fn rhs_is_exactly_zero_at_equilibrium() {
    let grid = VelocityGrid::new(6.0, 8).unwrap();
    let params = hard_params();
    let op = CollisionOperator::new(&grid, &params, &QuadratureSpec::default()).unwrap();
    let zero = vec![0.0; grid.len()];
    let rhs = op.rhs_slice(&zero);
    assert!(rhs.iter().all(|&r| r == 0.0));
}

#[test]
fn cancellation_identity_on_maxwellian() {
    // int [K_M(v, v') - K_M(v', v)] dv' = C (M * |.|^gamma)(v)
    let grid = VelocityGrid::new(6.0, 16).unwrap();
    let params = hard_params();
    let op = CollisionOperator::new(&grid, &params, &QuadratureSpec::default()).unwrap();
    let dens = Density::maxwellian_only(&grid);
    for v in [[0.375, 0.375, 0.375], [1.875, 0.375, -0.375]] {
        let lhs = op.cancellation_lhs(&dens, v);
        let rhs = op.q_ns(op.convolve_density_at(&dens, v), 1.0);
        let rel = (lhs - rhs).abs() / rhs.abs();
        assert!(rel < 0.25, "v {v:?}: lhs {lhs}, rhs {rhs}, rel {rel}");
    }
}
