//! The non-cutoff collision operator in Carleman form, `Q = Q_s + Q_ns`.
//!
//! `Q_s(f, g)(v)` is a principal-value integro-differential operator whose
//! kernel `K_f(v, v')` is an integral of the first argument over the
//! hyperplane through `v` orthogonal to `v' - v`. `Q_ns(f, g) = C (f * |.|^g) g`
//! with the cancellation constant `C` shared by the cancellation identity.
//!
//! For the concrete angular cross-section used here,
//! `b(cos t) = |sin(t/2)|^{-(d-1)-2s}` cut off at `cos t <= 0`, the hyperplane
//! integrand simplifies: with `u = v' - v`, `r^2 = |u|^2 + |w|^2` and
//! `cos(t/2) = |w|/r`, the cutoff is exactly `|w| > |u|` and
//! `b = (r/|u|)^{d-1+2s}`.

mod checks;
mod geometry;

pub use checks::{
    conv_power_at, convolution_bound_check, kernel_abs_domination, kernel_bound_check,
    kernel_symmetry_check, BoundCheckReport, ConvBoundReport,
};
pub use geometry::PolarGeometry;

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::field::maxwellian;
use crate::grid::VelocityGrid;
use crate::params::PhysParams;
use crate::util::{add, norm, orthobasis, scale, sub};

/// Concrete angular cross-section `b(cos t)`.
#[derive(Debug, Clone, Copy)]
pub struct AngularCrossSection {
    pub s: f64,
    pub dim: usize,
    pub cutoff_negative_cos: bool,
}

impl AngularCrossSection {
    pub fn new(params: &PhysParams) -> Self {
        Self {
            s: params.s,
            dim: params.dim,
            cutoff_negative_cos: true,
        }
    }
}

/// `b(cos t) = |sin(t/2)|^{-(d-1)-2s}`, zero for `cos t <= 0` when the
/// cutoff flag is set.
pub fn angular_b(cos_theta: f64, xs: &AngularCrossSection) -> f64 {
    debug_assert!((-1.0..=1.0).contains(&cos_theta));
    if xs.cutoff_negative_cos && cos_theta <= 0.0 {
        return 0.0;
    }
    let sin_half_sq = 0.5 * (1.0 - cos_theta);
    if sin_half_sq <= 0.0 {
        return f64::INFINITY;
    }
    let expo = (xs.dim as f64 - 1.0) + 2.0 * xs.s;
    sin_half_sq.powf(-0.5 * expo)
}

/// Quadrature resolutions for the singular integrals.
///
/// `r_min` is relative to the velocity grid spacing, `r_max` relative to the
/// truncation radius `R`. `n_directions` counts polar bands on the unit
/// hemisphere; the azimuthal count is twice that. `n_hyperplane` counts
/// radial nodes per hyperplane; the in-plane azimuthal count equals it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub n_radii: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub n_directions: usize,
    pub n_hyperplane: usize,
}

impl Default for QuadratureSpec {
    /// Defaults tuned for time stepping: the extended outer range keeps the
    /// gain/loss balance of the kernel at tail nodes, which the stability of
    /// long runs depends on.
    fn default() -> Self {
        Self {
            n_radii: 12,
            r_min: 0.25,
            r_max: 3.5,
            n_directions: 3,
            n_hyperplane: 8,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.r_min <= 0.0 || self.r_max <= 0.0 {
            return Err(CoreError::InvalidParameter(
                "quadrature radii must be positive".into(),
            ));
        }
        if self.n_radii < 2 || self.n_directions < 1 || self.n_hyperplane < 2 {
            return Err(CoreError::InvalidParameter(
                "quadrature node counts too small".into(),
            ));
        }
        Ok(())
    }

    pub fn with_doubled_hyperplane(&self) -> Self {
        Self {
            n_hyperplane: self.n_hyperplane * 2,
            ..*self
        }
    }
}

/// Radial mask on `<v>` applied to the kernel argument of `Q_s`; used by the
/// good/bad decomposition.
#[derive(Debug, Clone, Copy)]
pub struct RadialMask {
    pub threshold: f64,
    pub keep_below: bool,
}

impl RadialMask {
    #[inline]
    fn admits(&self, bracket: f64) -> bool {
        if self.keep_below {
            bracket < self.threshold
        } else {
            bracket >= self.threshold
        }
    }
}

/// The density fed to the kernel `K_f`: an optional grid perturbation
/// (trilinearly interpolated, zero outside the grid) plus the analytic
/// Maxwellian, with optional absolute value and radial mask.
#[derive(Clone, Copy)]
pub struct Density<'a> {
    grid: &'a VelocityGrid,
    f: Option<&'a [f64]>,
    include_maxwellian: bool,
    abs_value: bool,
    mask: Option<RadialMask>,
}

impl<'a> Density<'a> {
    /// `M + f` with `f` a grid slice.
    pub fn maxwellian_plus(grid: &'a VelocityGrid, f: &'a [f64]) -> Self {
        Self {
            grid,
            f: Some(f),
            include_maxwellian: true,
            abs_value: false,
            mask: None,
        }
    }

    /// The perturbation alone.
    pub fn perturbation(grid: &'a VelocityGrid, f: &'a [f64]) -> Self {
        Self {
            grid,
            f: Some(f),
            include_maxwellian: false,
            abs_value: false,
            mask: None,
        }
    }

    /// The analytic Maxwellian alone.
    pub fn maxwellian_only(grid: &'a VelocityGrid) -> Self {
        Self {
            grid,
            f: None,
            include_maxwellian: true,
            abs_value: false,
            mask: None,
        }
    }

    pub fn with_abs(mut self) -> Self {
        self.abs_value = true;
        self
    }

    pub fn with_mask(mut self, mask: RadialMask) -> Self {
        self.mask = Some(mask);
        self
    }

    #[inline]
    pub fn eval(&self, v: [f64; 3]) -> f64 {
        if let Some(mask) = &self.mask {
            let bracket = (1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if !mask.admits(bracket) {
                return 0.0;
            }
        }
        let mut d = 0.0;
        if self.include_maxwellian {
            d += maxwellian(v);
        }
        if let Some(f) = self.f {
            d += self.grid.interpolate(f, v);
        }
        if self.abs_value {
            d.abs()
        } else {
            d
        }
    }
}

/// The constant `C` shared by `Q_ns` and the cancellation identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CancellationConstant {
    pub value: f64,
    pub gamma: f64,
    pub s: f64,
    pub quadrature_error_estimate: f64,
}

/// `C = |S^{d-2}| int_0^{pi/2} sin^{d-2}(t) b(cos t) [cos^{-d-gamma}(t/2) - 1] dt`,
/// computed with a substitution that removes the `t^{1-2s}` endpoint
/// singularity, refined until the relative change under node doubling is
/// below `tol`.
pub fn cancellation_constant(
    params: &PhysParams,
    xs: &AngularCrossSection,
    n_nodes: usize,
) -> Result<CancellationConstant> {
    let d = params.dim as f64;
    if params.gamma + d <= 0.0 {
        return Err(CoreError::Precondition(format!(
            "cancellation constant requires gamma + dim > 0, got {}",
            params.gamma + d
        )));
    }
    let sphere_d2 = match params.dim {
        2 => 2.0,      // |S^0|
        3 => 2.0 * PI, // |S^1|
        _ => {
            return Err(CoreError::InvalidParameter(format!(
                "cancellation constant implemented for dim 2 and 3, got {}",
                params.dim
            )))
        }
    };
    let integral = |n: usize| -> f64 {
        // t = (pi/2) u^{1/(2-2s)} flattens the t^{1-2s} behavior at 0
        let p = 1.0 / (2.0 - 2.0 * xs.s);
        let du = 1.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let u = (i as f64 + 0.5) * du;
            let t = 0.5 * PI * u.powf(p);
            let dt_du = 0.5 * PI * p * u.powf(p - 1.0);
            let b = angular_b(t.cos(), xs);
            let half = 0.5 * t;
            let bracket = half.cos().powf(-(d + params.gamma)) - 1.0;
            acc += t.sin().powf(d - 2.0) * b * bracket * dt_du * du;
        }
        params.kernel_const * sphere_d2 * acc
    };
    let n = n_nodes.max(64);
    let coarse = integral(n / 2);
    let fine = integral(n);
    let err = (fine - coarse).abs();
    if !(fine.is_finite() && err <= 0.05 * fine.abs()) {
        return Err(CoreError::QuadratureNotConverged(format!(
            "cancellation constant: coarse {coarse:.6e}, fine {fine:.6e}"
        )));
    }
    Ok(CancellationConstant {
        value: fine,
        gamma: params.gamma,
        s: params.s,
        quadrature_error_estimate: err,
    })
}

/// Hyperplane kernel `K_f(v, v')` by direct in-plane polar quadrature.
///
/// The off-grid density is whatever `dens` evaluates to; callers pass
/// `M + f`, the perturbation alone, or a masked density.
pub fn kf(
    dens: &Density,
    v: [f64; 3],
    v_prime: [f64; 3],
    quad: &QuadratureSpec,
    params: &PhysParams,
) -> Result<f64> {
    let u = sub(v_prime, v);
    let u_norm = norm(u);
    let threshold = 1e-12 * dens.grid.spacing;
    if u_norm < threshold {
        return Err(CoreError::DegenerateDirection(u_norm));
    }
    let u_hat = scale(u, 1.0 / u_norm);
    let (e1, e2) = orthobasis(u_hat);
    let rho_max = geometry::hyperplane_rho_max(dens.grid, quad);
    Ok(kf_polar(
        dens,
        v,
        u_norm,
        e1,
        e2,
        quad.n_hyperplane,
        quad.n_hyperplane,
        rho_max,
        params,
    ))
}

/// Shared in-plane polar rule for `K_f`: radial midpoints on
/// `(|u|, rho_max]`, azimuthal midpoints on `[0, 2 pi)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn kf_polar(
    dens: &Density,
    v: [f64; 3],
    u_norm: f64,
    e1: [f64; 3],
    e2: [f64; 3],
    n_rho: usize,
    n_phi: usize,
    rho_max: f64,
    params: &PhysParams,
) -> f64 {
    if u_norm >= rho_max {
        return 0.0;
    }
    let d = params.dim as f64;
    let d_rho = (rho_max - u_norm) / n_rho as f64;
    let d_phi = 2.0 * PI / n_phi as f64;
    let u_sq = u_norm * u_norm;
    let mut acc = 0.0;
    for i in 0..n_rho {
        let rho = u_norm + (i as f64 + 0.5) * d_rho;
        let r = (u_sq + rho * rho).sqrt();
        // b(cos t) = (r/|u|)^{d-1+2s} on the admitted range |w| > |u|
        let b = (r / u_norm).powf(d - 1.0 + 2.0 * params.s);
        let weight =
            params.kernel_const * r.powf(params.gamma) * b * r.powf(2.0 - d) * rho * d_rho * d_phi;
        let mut ring = 0.0;
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * d_phi;
            let (sin_p, cos_p) = phi.sin_cos();
            let w = add(scale(e1, rho * cos_p), scale(e2, rho * sin_p));
            ring += dens.eval(add(v, w));
        }
        acc += ring * weight;
    }
    (2.0f64).powf(d - 1.0) / u_norm * acc
}

/// Everything needed to evaluate the collision operator on one velocity
/// grid: the precomputed polar geometry, the cancellation constant, the
/// Maxwellian convolution table, and the node-offset power kernels.
pub struct CollisionOperator {
    pub grid: VelocityGrid,
    pub params: PhysParams,
    pub xs: AngularCrossSection,
    pub quad: QuadratureSpec,
    pub cancellation: CancellationConstant,
    geom: PolarGeometry,
    conv_m_gamma: Vec<f64>,
    offset_gamma: Vec<f64>,
    offset_gamma_2s: Vec<f64>,
    /// Lazily built tables for the fast right-hand side:
    /// `K_M(v_i, v_i + r_k w_a)` and the Maxwellian pair
    /// `M(v_i + r w) + M(v_i - r w) - 2 M(v_i)`, layout `i * n_ak + ak`.
    maxwellian_tables: std::sync::OnceLock<(Vec<f64>, Vec<f64>)>,
    /// Lazily built dense matrix of the `f`-linear part of `Q_s` in the
    /// right-hand side, row-major `i * len + j`; only for small grids.
    linear_rows: std::sync::OnceLock<Option<Vec<f64>>>,
}

/// Grids up to this many nodes collapse the linear `Q_s` terms into a dense
/// matrix (8 MB at the threshold); larger grids use the stencil loop.
const DENSE_LINEAR_MAX_NODES: usize = 1000;

impl CollisionOperator {
    pub fn new(grid: &VelocityGrid, params: &PhysParams, quad: &QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        if params.dim != 3 {
            return Err(CoreError::InvalidParameter(
                "grid-based collision evaluation supports dim = 3 only".into(),
            ));
        }
        let xs = AngularCrossSection::new(params);
        let cancellation = cancellation_constant(params, &xs, 4096)?;
        let geom = PolarGeometry::build(grid, params, quad);
        let offset_gamma = offset_power_table(grid, params.gamma);
        let offset_gamma_2s = offset_power_table(grid, params.gamma + 2.0 * params.s);
        let m_values: Vec<f64> = grid.nodes().iter().map(|&v| maxwellian(v)).collect();
        let conv_m_gamma = convolve_table(grid, &m_values, &offset_gamma);
        Ok(Self {
            grid: grid.clone(),
            params: *params,
            xs,
            quad: *quad,
            cancellation,
            geom,
            conv_m_gamma,
            offset_gamma,
            offset_gamma_2s,
            maxwellian_tables: std::sync::OnceLock::new(),
            linear_rows: std::sync::OnceLock::new(),
        })
    }

    fn maxwellian_tables(&self) -> &(Vec<f64>, Vec<f64>) {
        self.maxwellian_tables.get_or_init(|| {
            let grid = &self.grid;
            let geom = &self.geom;
            let n_ak = geom.n_ak();
            let dens_m = Density::maxwellian_only(grid);
            let tables: Vec<(Vec<f64>, Vec<f64>)> = (0..grid.len())
                .into_par_iter()
                .map(|i| {
                    let v = grid.node(i);
                    let m_center = maxwellian(v);
                    let mut k_m = Vec::with_capacity(n_ak);
                    let mut pair_m = Vec::with_capacity(n_ak);
                    for a in 0..geom.n_dirs() {
                        let omega = geom.dir(a);
                        for k in 0..geom.n_radii() {
                            let r = geom.radius(k);
                            k_m.push(geom.kf_at(&dens_m, v, a, k));
                            pair_m.push(
                                maxwellian(add(v, scale(omega, r)))
                                    + maxwellian(sub(v, scale(omega, r)))
                                    - 2.0 * m_center,
                            );
                        }
                    }
                    (k_m, pair_m)
                })
                .collect();
            let mut k_m = Vec::with_capacity(grid.len() * n_ak);
            let mut pair_m = Vec::with_capacity(grid.len() * n_ak);
            for (km_i, pm_i) in tables {
                k_m.extend(km_i);
                pair_m.extend(pm_i);
            }
            (k_m, pair_m)
        })
    }

    /// Dense rows of the `f`-linear part of the `Q_s` contribution to the
    /// right-hand side: `Q_s(M, f) + Q_s(f, M)` as one matrix, exact
    /// reorganization of the per-pair stencil loop.
    fn linear_rows(&self) -> Option<&[f64]> {
        self.linear_rows
            .get_or_init(|| {
                let len = self.grid.len();
                if len > DENSE_LINEAR_MAX_NODES {
                    return None;
                }
                let n = self.grid.n_per_axis as i32;
                let n_ak = self.geom.n_ak();
                let (k_m_all, pair_m_all) = self.maxwellian_tables();
                let rows: Vec<Vec<f64>> = (0..len)
                    .into_par_iter()
                    .map(|i| {
                        let iz = i as i32 % n;
                        let iy = (i as i32 / n) % n;
                        let ix = i as i32 / (n * n);
                        let mut row = vec![0.0; len];
                        let in_grid = |d: &[i32; 3]| {
                            let jx = ix + d[0];
                            let jy = iy + d[1];
                            let jz = iz + d[2];
                            if jx < 0 || jx >= n || jy < 0 || jy >= n || jz < 0 || jz >= n {
                                None
                            } else {
                                Some(((jx * n + jy) * n + jz) as usize)
                            }
                        };
                        for ak in 0..n_ak {
                            let w = self.geom.outer_weight_flat(ak);
                            let km = k_m_all[i * n_ak + ak];
                            let pm = pair_m_all[i * n_ak + ak];
                            // pair_f * K_M: the centered second difference of f
                            for (d, sw) in self.geom.pair_stencil(ak).entries() {
                                if let Some(j) = in_grid(d) {
                                    row[j] += w * km * sw;
                                }
                            }
                            row[i] -= 2.0 * w * km;
                            // pair_M * K_f: the merged hyperplane stencil of f
                            for (d, sw) in self.geom.kf_stencil(ak).entries() {
                                if let Some(j) = in_grid(d) {
                                    row[j] += w * pm * sw;
                                }
                            }
                        }
                        row
                    })
                    .collect();
                let mut flat = Vec::with_capacity(len * len);
                for row in rows {
                    flat.extend(row);
                }
                Some(flat)
            })
            .as_deref()
    }

    /// `Q_s(dens, g)(v)`: principal value in polar coordinates around `v`
    /// with symmetric pairing `v' <-> 2v - v'`.
    pub fn q_s<G: Fn([f64; 3]) -> f64>(&self, dens: &Density, g: G, v: [f64; 3]) -> f64 {
        let g_center = g(v);
        let mut acc = 0.0;
        for a in 0..self.geom.n_dirs() {
            let omega = self.geom.dir(a);
            for k in 0..self.geom.n_radii() {
                let r = self.geom.radius(k);
                let vp = add(v, scale(omega, r));
                let vm = sub(v, scale(omega, r));
                let pair = g(vp) + g(vm) - 2.0 * g_center;
                if pair == 0.0 {
                    continue;
                }
                let kf_val = self.geom.kf_at(dens, v, a, k);
                acc += pair * kf_val * self.geom.outer_weight(a, k);
            }
        }
        acc
    }

    /// `Q_ns(dens, g)(v) = C (dens * |.|^gamma)(v) g(v)`; the convolution
    /// factor is returned separately by [`Self::convolve_at`].
    pub fn q_ns(&self, conv_at_v: f64, g_at_v: f64) -> f64 {
        self.cancellation.value * conv_at_v * g_at_v
    }

    /// `Q(dens, g)(v) = Q_s + Q_ns` for an arbitrary evaluation point.
    pub fn q_total<G: Fn([f64; 3]) -> f64>(&self, dens: &Density, g: G, v: [f64; 3]) -> f64 {
        let conv = self.convolve_density_at(dens, v);
        let g_v = g(v);
        self.q_s(dens, &g, v) + self.q_ns(conv, g_v)
    }

    /// `(dens * |.|^gamma)(v)` by direct grid summation, Maxwellian part
    /// analytic when present.
    pub fn convolve_density_at(&self, dens: &Density, v: [f64; 3]) -> f64 {
        let mut acc = 0.0;
        let vol = self.grid.cell_volume();
        for &w in self.grid.nodes() {
            let val = dens.eval(w);
            if val != 0.0 {
                acc += val * power_kernel(norm(sub(v, w)), self.params.gamma, self.grid.spacing);
            }
        }
        acc * vol
    }

    /// `(f * |.|^gamma)` at every node via the offset table.
    pub fn convolve_gamma(&self, f: &[f64]) -> Vec<f64> {
        convolve_table(&self.grid, f, &self.offset_gamma)
    }

    /// `(f * |.|^{gamma+2s})` at every node via the offset table.
    pub fn convolve_gamma_2s(&self, f: &[f64]) -> Vec<f64> {
        convolve_table(&self.grid, f, &self.offset_gamma_2s)
    }

    pub fn conv_m_gamma(&self) -> &[f64] {
        &self.conv_m_gamma
    }

    pub fn geometry(&self) -> &PolarGeometry {
        &self.geom
    }

    /// Collision right-hand side of the perturbative equation on one spatial
    /// slice: `2 [Q(M+f, f) + Q(f, M)]`, which equals `2 Q(M+f, M+f)` by
    /// `Q(M, M) = 0`. The zero perturbation maps to the exact zero slice.
    pub fn rhs_slice(&self, f: &[f64]) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.grid.len());
        if f.iter().all(|&x| x == 0.0) {
            // exact fixed point: every term carries a factor of f
            return vec![0.0; self.grid.len()];
        }
        let conv_f = self.convolve_gamma(f);
        let c = self.cancellation.value;
        let n = self.grid.n_per_axis as i32;
        let len = self.grid.len();
        let n_ak = self.geom.n_ak();
        if let Some(rows) = self.linear_rows() {
            // Q_s(M+f, f) + Q_s(f, M): the f-linear terms are one dense
            // matrix row, the quadratic pair_f * K_f part runs whole-grid
            let mut quad = vec![0.0; len];
            self.geom.quadratic_all(f, self.grid.n_per_axis, &mut quad);
            return (0..len)
                .into_par_iter()
                .map(|i| {
                    let row = &rows[i * len..(i + 1) * len];
                    let mut qs = quad[i];
                    for (a, b) in row.iter().zip(f) {
                        qs += a * b;
                    }
                    let qns = c
                        * ((self.conv_m_gamma[i] + conv_f[i]) * f[i]
                            + conv_f[i] * maxwellian(self.grid.node(i)));
                    2.0 * (qs + qns)
                })
                .collect();
        }
        let (k_m_all, pair_m_all) = self.maxwellian_tables();
        (0..len)
            .into_par_iter()
            .map(|i| {
                let iz = i as i32 % n;
                let iy = (i as i32 / n) % n;
                let ix = i as i32 / (n * n);
                let k_m = &k_m_all[i * n_ak..(i + 1) * n_ak];
                let pair_m = &pair_m_all[i * n_ak..(i + 1) * n_ak];
                // Q_s(M+f, f) + Q_s(f, M) with K_{M+f} = K_M + K_f; the
                // perturbation kernel and pair come from the merged stencils
                let mut qs = 0.0;
                let mut ak = 0;
                for a in 0..self.geom.n_dirs() {
                    for k in 0..self.geom.n_radii() {
                        let w = self.geom.outer_weight(a, k);
                        let kf_f = self.geom.kf_grid(f, n, ix, iy, iz, ak);
                        let pair_f = self.geom.pair_grid(f, n, ix, iy, iz, ak) - 2.0 * f[i];
                        qs += (pair_f * (k_m[ak] + kf_f) + pair_m[ak] * kf_f) * w;
                        ak += 1;
                    }
                }
                let qns = c
                    * ((self.conv_m_gamma[i] + conv_f[i]) * f[i]
                        + conv_f[i] * maxwellian(self.grid.node(i)));
                2.0 * (qs + qns)
            })
            .collect()
    }

    /// The left-hand side of the cancellation identity,
    /// `int [K_f(v,v') - K_f(v',v)] dv'`, with the same paired polar rule
    /// used by `q_s`.
    pub fn cancellation_lhs(&self, dens: &Density, v: [f64; 3]) -> f64 {
        let mut acc = 0.0;
        for a in 0..self.geom.n_dirs() {
            let omega = self.geom.dir(a);
            for k in 0..self.geom.n_radii() {
                let r = self.geom.radius(k);
                let vp = add(v, scale(omega, r));
                let vm = sub(v, scale(omega, r));
                // K_f(v, v + r w) = K_f(v, v - r w) by hyperplane symmetry
                let k_out = self.geom.kf_at(dens, v, a, k);
                let k_in_p = self.geom.kf_at(dens, vp, a, k);
                let k_in_m = self.geom.kf_at(dens, vm, a, k);
                acc += (2.0 * k_out - k_in_p - k_in_m) * self.geom.outer_weight(a, k);
            }
        }
        acc
    }
}

/// `|w|^kappa` regularized at the origin by the equivalent-sphere cell
/// average, so node-coincident convolution terms stay finite.
#[inline]
pub fn power_kernel(dist: f64, kappa: f64, spacing: f64) -> f64 {
    let r_eq = spacing * (3.0 / (4.0 * PI)).powf(1.0 / 3.0);
    if dist < 0.5 * spacing {
        3.0 / (kappa + 3.0) * r_eq.powf(kappa)
    } else {
        dist.powf(kappa)
    }
}

/// Table of `|offset|^kappa * cell_volume` over the `(2n-1)^3` lattice of
/// node differences.
pub fn offset_power_table(grid: &VelocityGrid, kappa: f64) -> Vec<f64> {
    let n = grid.n_per_axis as isize;
    let m = (2 * n - 1) as usize;
    let vol = grid.cell_volume();
    let sp = grid.spacing;
    let mut tab = vec![0.0; m * m * m];
    for dx in -(n - 1)..n {
        for dy in -(n - 1)..n {
            for dz in -(n - 1)..n {
                let dist = sp * ((dx * dx + dy * dy + dz * dz) as f64).sqrt();
                let idx = (((dx + n - 1) as usize * m) + (dy + n - 1) as usize) * m
                    + (dz + n - 1) as usize;
                tab[idx] = power_kernel(dist, kappa, sp) * vol;
            }
        }
    }
    tab
}

/// Dense lattice convolution of a grid function against an offset table.
pub fn convolve_table(grid: &VelocityGrid, f: &[f64], table: &[f64]) -> Vec<f64> {
    let n = grid.n_per_axis;
    let m = 2 * n - 1;
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let iz = i % n;
            let iy = (i / n) % n;
            let ix = i / (n * n);
            let mut acc = 0.0;
            let mut j = 0;
            for jx in 0..n {
                let ox = (ix + n - 1 - jx) * m * m;
                for jy in 0..n {
                    let oy = ox + (iy + n - 1 - jy) * m;
                    let base = oy + iz + n - 1;
                    for jz in 0..n {
                        acc += f[j] * table[base - jz];
                        j += 1;
                    }
                }
            }
            acc
        })
        .collect()
}

/// Closed-form check value: `int M(w) |w| dw = 2 sqrt(2/pi)` for the 3D
/// standard Maxwellian.
pub fn maxwellian_first_moment() -> f64 {
    2.0 * (2.0 / PI).sqrt()
}

/// Dimension-generic Maxwellian second moment `int |v|^2 M dv = dim`.
pub fn maxwellian_energy(dim: usize) -> f64 {
    dim as f64
}

#[cfg(test)]
mod tests;
