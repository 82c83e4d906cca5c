//! Inequality checks on the kernel `K_f` and the power convolution.

use crate::error::{CoreError, Result};
use crate::field::bracket_weight;
use crate::grid::VelocityGrid;
use crate::params::PhysParams;
use crate::util::{add, norm, sub};

use super::{kf, power_kernel, CollisionOperator, Density, QuadratureSpec};

/// Whether `K_f(v, v+u) = K_f(v, v-u)` within relative tolerance 1e-10.
pub fn kernel_symmetry_check(
    dens: &Density,
    v: [f64; 3],
    u: [f64; 3],
    quad: &QuadratureSpec,
    params: &PhysParams,
) -> Result<bool> {
    if norm(u) == 0.0 {
        return Err(CoreError::Precondition("u must be nonzero".into()));
    }
    let plus = kf(dens, v, add(v, u), quad, params)?;
    let minus = kf(dens, v, sub(v, u), quad, params)?;
    let scale_val = plus.abs().max(minus.abs()).max(1e-300);
    Ok((plus - minus).abs() <= 1e-10 * scale_val)
}

/// Annulus bound check for `K_f`: the second-moment integral inside `B_r`
/// and the mass integral outside, each against the comparison quantity from
/// the convolution `int |f(v-w)| |w|^{gamma+2s} dw`.
#[derive(Debug, Clone, Copy)]
pub struct BoundCheckReport {
    pub inside_lhs: f64,
    pub inside_rhs: f64,
    pub outside_lhs: f64,
    pub outside_rhs: f64,
}

impl BoundCheckReport {
    pub fn inside_ratio(&self) -> f64 {
        if self.inside_rhs == 0.0 {
            0.0
        } else {
            self.inside_lhs / self.inside_rhs
        }
    }

    pub fn outside_ratio(&self) -> f64 {
        if self.outside_rhs == 0.0 {
            0.0
        } else {
            self.outside_lhs / self.outside_rhs
        }
    }
}

pub fn kernel_bound_check(
    op: &CollisionOperator,
    f: &[f64],
    v: [f64; 3],
    r: f64,
) -> Result<BoundCheckReport> {
    if r <= 0.0 {
        return Err(CoreError::Precondition("r must be positive".into()));
    }
    let dens = Density::perturbation(&op.grid, f);
    let geom = op.geometry();
    let mut inside = 0.0;
    let mut outside = 0.0;
    for a in 0..geom.n_dirs() {
        for k in 0..geom.n_radii() {
            let rad = geom.radius(k);
            let kv = geom.kf_at(&dens, v, a, k).abs();
            // paired hemisphere contributes the identical value
            let w = 2.0 * kv * geom.outer_weight(a, k);
            if rad < r {
                inside += rad * rad * w;
            } else {
                outside += w;
            }
        }
    }
    let abs_f: Vec<f64> = f.iter().map(|x| x.abs()).collect();
    let conv = conv_power_at(&op.grid, &abs_f, v, op.params.gamma + 2.0 * op.params.s);
    let s = op.params.s;
    Ok(BoundCheckReport {
        inside_lhs: inside,
        inside_rhs: r.powf(2.0 - 2.0 * s) * conv,
        outside_lhs: outside,
        outside_rhs: r.powf(-2.0 * s) * conv,
    })
}

/// `int f(v+w) |w|^kappa dw` by direct grid summation at an arbitrary point.
pub fn conv_power_at(grid: &VelocityGrid, f: &[f64], v: [f64; 3], kappa: f64) -> f64 {
    let vol = grid.cell_volume();
    let mut acc = 0.0;
    for (j, &w) in grid.nodes().iter().enumerate() {
        if f[j] != 0.0 {
            acc += f[j] * power_kernel(norm(sub(w, v)), kappa, grid.spacing);
        }
    }
    acc * vol
}

/// Report for the weighted convolution upper bound
/// `int f(v+w)|w|^kappa dw <= C N <v>^kappa` for `f <= N <v>^{-q}`.
#[derive(Debug, Clone, Copy)]
pub struct ConvBoundReport {
    pub lhs: f64,
    pub envelope_n: f64,
    pub comparison: f64,
}

impl ConvBoundReport {
    pub fn ratio(&self) -> f64 {
        if self.comparison == 0.0 {
            0.0
        } else {
            self.lhs / self.comparison
        }
    }
}

pub fn convolution_bound_check(
    grid: &VelocityGrid,
    f: &[f64],
    v: [f64; 3],
    kappa: f64,
    q: f64,
    params: &PhysParams,
) -> Result<ConvBoundReport> {
    if q <= params.dim as f64 + kappa.max(0.0) {
        return Err(CoreError::Precondition(format!(
            "convolution bound requires q > dim + max(kappa, 0), got q = {q}"
        )));
    }
    let abs_f: Vec<f64> = f.iter().map(|x| x.abs()).collect();
    let envelope_n = grid
        .nodes()
        .iter()
        .zip(&abs_f)
        .map(|(&w, &fv)| bracket_weight(w, q) * fv)
        .fold(0.0f64, f64::max);
    let lhs = conv_power_at(grid, &abs_f, v, kappa);
    let comparison = envelope_n * bracket_weight(v, kappa);
    Ok(ConvBoundReport {
        lhs,
        envelope_n,
        comparison,
    })
}

/// Pointwise check `|K_f| <= K_{|f|}` at one kernel evaluation.
pub fn kernel_abs_domination(
    grid: &VelocityGrid,
    f: &[f64],
    v: [f64; 3],
    v_prime: [f64; 3],
    quad: &QuadratureSpec,
    params: &PhysParams,
) -> Result<bool> {
    let signed = kf(&Density::perturbation(grid, f), v, v_prime, quad, params)?;
    let dominating = kf(
        &Density::perturbation(grid, f).with_abs(),
        v,
        v_prime,
        quad,
        params,
    )?;
    Ok(signed.abs() <= dominating * (1.0 + 1e-12) + 1e-300)
}
