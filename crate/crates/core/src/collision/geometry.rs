//! Precomputed polar quadrature geometry for the principal-value operator.
//!
//! The outer rule integrates over `v' = v + r w` with log-spaced radii and a
//! product grid of hemisphere directions (the paired point `2v - v'` carries
//! the other hemisphere). For each direction and radius, the in-plane
//! hyperplane nodes of `K_f` are precomputed as offsets and static weights,
//! then translated to the evaluation point.
//!
//! Because the evaluation points are lattice nodes and the offsets are fixed,
//! the trilinear interpolation of a grid perturbation collapses into sparse
//! integer-offset stencils that are merged once at build time; this is the
//! fast path used by the solver right-hand side.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::grid::VelocityGrid;
use crate::params::PhysParams;
use crate::util::{add, orthobasis, scale};

use super::{Density, QuadratureSpec};

#[derive(Debug, Clone, Copy)]
struct HyperNode {
    offset: [f64; 3],
    weight: f64,
}

/// Sparse lattice stencil: `sum_j w_j f[i + d_j]` with out-of-grid entries
/// treated as zero.
#[derive(Debug, Clone, Default)]
pub struct LatticeStencil {
    entries: Vec<([i32; 3], f64)>,
}

impl LatticeStencil {
    fn from_offsets(grid: &VelocityGrid, nodes: &[([f64; 3], f64)]) -> Self {
        let n = grid.n_per_axis as i32;
        let mut map: HashMap<[i32; 3], f64> = HashMap::new();
        for &(off, w) in nodes {
            if w == 0.0 {
                continue;
            }
            // node i sits at continuous cell coordinate i; v_i + off lands at
            // i + off/spacing on each axis
            let mut base = [0i32; 3];
            let mut frac = [0f64; 3];
            for a in 0..3 {
                let u = off[a] / grid.spacing;
                let f = u.floor();
                base[a] = f as i32;
                frac[a] = u - f;
            }
            for dx in 0..2 {
                let wx = if dx == 0 { 1.0 - frac[0] } else { frac[0] };
                for dy in 0..2 {
                    let wy = if dy == 0 { 1.0 - frac[1] } else { frac[1] };
                    for dz in 0..2 {
                        let wz = if dz == 0 { 1.0 - frac[2] } else { frac[2] };
                        let cw = w * wx * wy * wz;
                        if cw == 0.0 {
                            continue;
                        }
                        let key = [base[0] + dx, base[1] + dy, base[2] + dz];
                        // offsets beyond the grid extent can never land on a
                        // node from any evaluation point
                        if key.iter().any(|d| d.abs() >= n) {
                            continue;
                        }
                        *map.entry(key).or_insert(0.0) += cw;
                    }
                }
            }
        }
        let mut entries: Vec<([i32; 3], f64)> = map.into_iter().collect();
        entries.sort_by_key(|(d, _)| *d);
        Self { entries }
    }

    /// Apply the stencil to a grid function at node `(ix, iy, iz)`.
    #[inline]
    pub fn apply(&self, f: &[f64], n: i32, ix: i32, iy: i32, iz: i32) -> f64 {
        let mut acc = 0.0;
        for &(d, w) in &self.entries {
            let jx = ix + d[0];
            let jy = iy + d[1];
            let jz = iz + d[2];
            if jx < 0 || jx >= n || jy < 0 || jy >= n || jz < 0 || jz >= n {
                continue;
            }
            acc += w * f[((jx * n + jy) * n + jz) as usize];
        }
        acc
    }

    pub(crate) fn entries(&self) -> &[([i32; 3], f64)] {
        &self.entries
    }

    /// Overwrite `out` with the stencil applied at every grid node, using
    /// contiguous shifted runs per entry instead of per-node bounds checks.
    pub(crate) fn apply_all(&self, f: &[f64], n: usize, out: &mut [f64]) {
        out.fill(0.0);
        let n_i = n as i32;
        for &(d, w) in &self.entries {
            let dflat = (d[0] * n_i + d[1]) * n_i + d[2];
            let x_lo = (-d[0]).max(0) as usize;
            let x_hi = (n_i - d[0].max(0)) as usize;
            let y_lo = (-d[1]).max(0) as usize;
            let y_hi = (n_i - d[1].max(0)) as usize;
            let z_lo = (-d[2]).max(0) as usize;
            let z_hi = (n_i - d[2].max(0)) as usize;
            for ix in x_lo..x_hi {
                for iy in y_lo..y_hi {
                    let base = (ix * n + iy) * n;
                    let src_base = (base as i32 + dflat) as usize;
                    let dst = &mut out[base + z_lo..base + z_hi];
                    let src = &f[src_base + z_lo..src_base + z_hi];
                    for (a, b) in dst.iter_mut().zip(src) {
                        *a += w * b;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PolarGeometry {
    dirs: Vec<[f64; 3]>,
    radii: Vec<f64>,
    /// per (dir, radius): angular weight x r^2 x radial weight
    outer: Vec<f64>,
    /// per (dir, radius): hyperplane nodes with kernel factors folded in
    hyper: Vec<Vec<HyperNode>>,
    /// per (dir, radius): merged interpolation stencil equivalent to `hyper`
    kf_stencil: Vec<LatticeStencil>,
    /// per (dir, radius): stencil for `f(v + r w) + f(v - r w)`
    pair_stencil: Vec<LatticeStencil>,
}

pub(crate) fn hyperplane_rho_max(grid: &VelocityGrid, quad: &QuadratureSpec) -> f64 {
    quad.r_max * grid.radius
}

impl PolarGeometry {
    pub fn build(grid: &VelocityGrid, params: &PhysParams, quad: &QuadratureSpec) -> Self {
        let n_mu = quad.n_directions;
        let n_az = 2 * quad.n_directions;
        let d_mu = 1.0 / n_mu as f64;
        let d_az = 2.0 * PI / n_az as f64;
        let mut dirs = Vec::with_capacity(n_mu * n_az);
        for i in 0..n_mu {
            let mu = (i as f64 + 0.5) * d_mu;
            let sin_t = (1.0 - mu * mu).sqrt();
            for j in 0..n_az {
                let phi = (j as f64 + 0.5) * d_az;
                dirs.push([sin_t * phi.cos(), sin_t * phi.sin(), mu]);
            }
        }
        let ang_w = d_mu * d_az;

        let r_min = quad.r_min * grid.spacing;
        let r_max = quad.r_max * grid.radius;
        let d_xi = (r_max / r_min).ln() / quad.n_radii as f64;
        let radii: Vec<f64> = (0..quad.n_radii)
            .map(|k| r_min * ((k as f64 + 0.5) * d_xi).exp())
            .collect();

        let rho_max = hyperplane_rho_max(grid, quad);
        let s = params.s;
        let gamma = params.gamma;
        let n_rho = quad.n_hyperplane;
        let n_phi = quad.n_hyperplane;
        let d_phi = 2.0 * PI / n_phi as f64;

        let mut outer = Vec::with_capacity(dirs.len() * radii.len());
        let mut hyper = Vec::with_capacity(dirs.len() * radii.len());
        let mut kf_stencil = Vec::with_capacity(dirs.len() * radii.len());
        let mut pair_stencil = Vec::with_capacity(dirs.len() * radii.len());
        for dir in &dirs {
            let (e1, e2) = orthobasis(*dir);
            for &r in &radii {
                // d v' in polar coordinates, paired over both hemispheres
                outer.push(ang_w * r * r * r * d_xi);
                let mut nodes = Vec::with_capacity(n_rho * n_phi);
                if r < rho_max {
                    let d_rho = (rho_max - r) / n_rho as f64;
                    let pref = 4.0 * params.kernel_const * r.powf(-3.0 - 2.0 * s);
                    for i in 0..n_rho {
                        let rho = r + (i as f64 + 0.5) * d_rho;
                        let rr = (r * r + rho * rho).sqrt();
                        let w_static =
                            pref * rr.powf(gamma + 1.0 + 2.0 * s) * rho * d_rho * d_phi;
                        for j in 0..n_phi {
                            let phi = (j as f64 + 0.5) * d_phi;
                            let (sin_p, cos_p) = phi.sin_cos();
                            let offset =
                                add(scale(e1, rho * cos_p), scale(e2, rho * sin_p));
                            nodes.push(HyperNode {
                                offset,
                                weight: w_static,
                            });
                        }
                    }
                }
                let offsets: Vec<([f64; 3], f64)> =
                    nodes.iter().map(|h| (h.offset, h.weight)).collect();
                kf_stencil.push(LatticeStencil::from_offsets(grid, &offsets));
                pair_stencil.push(LatticeStencil::from_offsets(
                    grid,
                    &[(scale(*dir, r), 1.0), (scale(*dir, -r), 1.0)],
                ));
                hyper.push(nodes);
            }
        }
        Self {
            dirs,
            radii,
            outer,
            hyper,
            kf_stencil,
            pair_stencil,
        }
    }

    pub fn n_dirs(&self) -> usize {
        self.dirs.len()
    }

    pub fn n_radii(&self) -> usize {
        self.radii.len()
    }

    pub fn dir(&self, a: usize) -> [f64; 3] {
        self.dirs[a]
    }

    pub fn radius(&self, k: usize) -> f64 {
        self.radii[k]
    }

    /// Radial log-weight x `r^2` x angular weight for pair `(a, k)`.
    pub fn outer_weight(&self, a: usize, k: usize) -> f64 {
        self.outer[a * self.radii.len() + k]
    }

    /// Outer weight by flattened index `ak = a * n_radii + k`.
    #[inline]
    pub fn outer_weight_flat(&self, ak: usize) -> f64 {
        self.outer[ak]
    }

    /// `K_dens(v, v + r_k dir_a)`, translated precomputed nodes.
    #[inline]
    pub fn kf_at(&self, dens: &Density, v: [f64; 3], a: usize, k: usize) -> f64 {
        let nodes = &self.hyper[a * self.radii.len() + k];
        let mut acc = 0.0;
        for node in nodes {
            let val = dens.eval(add(v, node.offset));
            if val != 0.0 {
                acc += val * node.weight;
            }
        }
        acc
    }

    /// Fast path for the kernel of a grid perturbation evaluated at node
    /// `(ix, iy, iz)`: the merged interpolation stencil.
    #[inline]
    pub fn kf_grid(&self, f: &[f64], n: i32, ix: i32, iy: i32, iz: i32, ak: usize) -> f64 {
        self.kf_stencil[ak].apply(f, n, ix, iy, iz)
    }

    /// Fast path for `f(v + r w) + f(v - r w)` at a grid node.
    #[inline]
    pub fn pair_grid(&self, f: &[f64], n: i32, ix: i32, iy: i32, iz: i32, ak: usize) -> f64 {
        self.pair_stencil[ak].apply(f, n, ix, iy, iz)
    }

    pub(crate) fn kf_stencil(&self, ak: usize) -> &LatticeStencil {
        &self.kf_stencil[ak]
    }

    /// Quadratic `Q_s` contribution `(pair_f - 2 f) * K_f` summed over all
    /// direction/radius pairs, for every node at once.
    pub(crate) fn quadratic_all(&self, f: &[f64], n: usize, out: &mut [f64]) {
        out.fill(0.0);
        let len = out.len();
        let mut kf_vec = vec![0.0; len];
        let mut pair_vec = vec![0.0; len];
        for ak in 0..self.n_ak() {
            if self.kf_stencil[ak].entries.is_empty() {
                continue;
            }
            self.kf_stencil[ak].apply_all(f, n, &mut kf_vec);
            self.pair_stencil[ak].apply_all(f, n, &mut pair_vec);
            let w = self.outer[ak];
            for i in 0..len {
                out[i] += (pair_vec[i] - 2.0 * f[i]) * kf_vec[i] * w;
            }
        }
    }

    pub(crate) fn pair_stencil(&self, ak: usize) -> &LatticeStencil {
        &self.pair_stencil[ak]
    }

    pub fn n_ak(&self) -> usize {
        self.outer.len()
    }
}
