//! The transport substep `d f / dt = -2 v . grad_x f` solved exactly in the
//! spatial frequency domain, and the spatial mollification applied at odd
//! partition points.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{CoreError, Result};
use crate::field::DistributionField;
use crate::grid::{SpaceGrid, VelocityGrid};

/// Cached FFT plans for one spatial grid.
pub struct TransportOperator {
    space: SpaceGrid,
    velocity: VelocityGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Signed frequency for bin `i` of an `n`-point transform; the Nyquist bin
/// of even `n` is reported as `-n/2`.
fn signed_freq(i: usize, n: usize) -> i64 {
    let i = i as i64;
    let n = n as i64;
    if 2 * i < n {
        i
    } else {
        i - n
    }
}

impl TransportOperator {
    pub fn new(space: &SpaceGrid, velocity: &VelocityGrid) -> Self {
        let mut planner = FftPlanner::new();
        let n = space.n_per_axis.max(1);
        Self {
            space: *space,
            velocity: velocity.clone(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// `f(x - 2 tau v, v)`: spatial mode `k` picks up the phase
    /// `exp(-i 4 pi tau k . v)`. The Nyquist bin of an even grid keeps only
    /// the real part of its phase so the output stays real.
    pub fn transport_step(&self, field: &DistributionField, tau: f64) -> Result<DistributionField> {
        field.matches(&self.space, &self.velocity)?;
        if self.space.spatial_dims == 0 || tau == 0.0 {
            return Ok(field.clone());
        }
        let n = self.space.n_per_axis;
        let dims = self.space.spatial_dims;
        let n_v = field.n_velocity;
        let n_x = field.n_space;
        let mut out = field.clone();

        let columns: Vec<Vec<f64>> = (0..n_v)
            .into_par_iter()
            .map(|j| {
                let v = self.velocity.node(j);
                let mut buf: Vec<Complex64> = (0..n_x)
                    .map(|xi| Complex64::new(field.values[xi * n_v + j], 0.0))
                    .collect();
                // forward transform along each spatial axis
                for axis in 0..dims {
                    self.fft_axis(&mut buf, axis, true);
                }
                // separable phase multiplier
                for (flat, c) in buf.iter_mut().enumerate() {
                    let mut m = Complex64::new(1.0, 0.0);
                    let mut rem = flat;
                    for axis in (0..dims).rev() {
                        let i = rem % n;
                        rem /= n;
                        let k = signed_freq(i, n);
                        let theta = 4.0 * PI * tau * k as f64 * v[axis];
                        if n % 2 == 0 && 2 * i == n {
                            m *= Complex64::new(theta.cos(), 0.0);
                        } else {
                            m *= Complex64::new(theta.cos(), -theta.sin());
                        }
                    }
                    *c *= m;
                }
                for axis in 0..dims {
                    self.fft_axis(&mut buf, axis, false);
                }
                let scale = 1.0 / n_x as f64;
                buf.iter().map(|c| c.re * scale).collect()
            })
            .collect();
        for (j, col) in columns.iter().enumerate() {
            for (xi, &val) in col.iter().enumerate() {
                out.values[xi * n_v + j] = val;
            }
        }
        out.time_stamp = field.time_stamp + tau;
        Ok(out)
    }

    /// In-place 1D transforms along one axis of the lexicographic spatial
    /// lattice.
    fn fft_axis(&self, buf: &mut [Complex64], axis: usize, forward: bool) {
        let n = self.space.n_per_axis;
        let dims = self.space.spatial_dims;
        if dims == 1 {
            if forward {
                self.forward.process(buf);
            } else {
                self.inverse.process(buf);
            }
            return;
        }
        // stride of the chosen axis in the lexicographic flattening
        let stride = n.pow((dims - 1 - axis) as u32);
        let lines = buf.len() / n;
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for l in 0..lines {
            // decompose the line index into the non-axis coordinates
            let block = l / stride;
            let offset = l % stride;
            let start = block * stride * n + offset;
            for (i, c) in line.iter_mut().enumerate() {
                *c = buf[start + i * stride];
            }
            if forward {
                self.forward.process(&mut line);
            } else {
                self.inverse.process(&mut line);
            }
            for (i, c) in line.iter().enumerate() {
                buf[start + i * stride] = *c;
            }
        }
    }
}

/// Smooth even bump mollifier in space at scale `h`.
#[derive(Debug, Clone, Copy)]
pub struct MollifierSpec {
    pub h: f64,
}

impl MollifierSpec {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(CoreError::InvalidParameter(
                "mollification scale must be positive".into(),
            ));
        }
        Ok(Self { h })
    }
}

/// Discrete mollification kernel: `exp(-1/(1-|y/h|^2))` sampled on the
/// periodic lattice inside `|y| < h` and renormalized to exact unit mass.
/// When `h` is below the lattice spacing the kernel degenerates to the
/// identity.
pub fn mollifier_kernel(space: &SpaceGrid, spec: &MollifierSpec) -> Vec<(Vec<isize>, f64)> {
    let dims = space.spatial_dims;
    if dims == 0 {
        return vec![(Vec::new(), 1.0)];
    }
    let n = space.n_per_axis as isize;
    let dx = space.spacing();
    let reach = ((spec.h / dx).ceil() as isize).min(n / 2);
    let mut offsets: Vec<Vec<isize>> = vec![Vec::new()];
    for _ in 0..dims {
        let mut next = Vec::new();
        for base in &offsets {
            for o in -reach..=reach {
                let mut b = base.clone();
                b.push(o);
                next.push(b);
            }
        }
        offsets = next;
    }
    let mut kernel = Vec::new();
    let mut total = 0.0;
    for off in offsets {
        let r2: f64 = off
            .iter()
            .map(|&o| {
                let y = o as f64 * dx / spec.h;
                y * y
            })
            .sum();
        if r2 < 1.0 {
            let w = (-1.0 / (1.0 - r2)).exp();
            total += w;
            kernel.push((off, w));
        }
    }
    for (_, w) in &mut kernel {
        *w /= total;
    }
    kernel
}

/// Circular convolution in space with the discrete bump kernel; velocity
/// untouched. Linear, positivity preserving, and sup-norm non-expansive per
/// velocity node.
pub fn mollify(
    field: &DistributionField,
    space: &SpaceGrid,
    spec: &MollifierSpec,
) -> DistributionField {
    let kernel = mollifier_kernel(space, spec);
    if space.spatial_dims == 0 || kernel.len() == 1 {
        return field.clone();
    }
    let n = space.n_per_axis as isize;
    let dims = space.spatial_dims;
    let n_v = field.n_velocity;
    let mut out = field.clone();
    let values: Vec<f64> = (0..field.n_space)
        .into_par_iter()
        .flat_map_iter(|xi| {
            // coordinates of node xi (lexicographic)
            let mut idx = vec![0isize; dims];
            let mut rem = xi;
            for a in (0..dims).rev() {
                idx[a] = (rem % n as usize) as isize;
                rem /= n as usize;
            }
            let mut acc = vec![0.0; n_v];
            for (off, w) in &kernel {
                let mut flat = 0usize;
                for a in 0..dims {
                    let c = (idx[a] - off[a]).rem_euclid(n) as usize;
                    flat = flat * n as usize + c;
                }
                let src = field.slice(flat);
                for (av, sv) in acc.iter_mut().zip(src) {
                    *av += w * sv;
                }
            }
            acc.into_iter()
        })
        .collect();
    out.values = values;
    out
}

/// `sup_x |mollify(f)(x, v)| <= sup_x |f(x, v)|` for every velocity node.
pub fn linf_nonexpansive_check(
    field: &DistributionField,
    space: &SpaceGrid,
    spec: &MollifierSpec,
) -> bool {
    let smoothed = mollify(field, space, spec);
    let n_v = field.n_velocity;
    for j in 0..n_v {
        let sup = |f: &DistributionField| {
            (0..f.n_space)
                .map(|xi| f.values[xi * n_v + j].abs())
                .fold(0.0f64, f64::max)
        };
        if sup(&smoothed) > sup(field) * (1.0 + 1e-12) + 1e-300 {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::maxwellian;
    use crate::grid::{build_grids, GridConfig};

    fn grids(n_x: usize) -> (VelocityGrid, SpaceGrid) {
        build_grids(&GridConfig {
            velocity_radius: 6.0,
            velocity_n: 6,
            space_n: n_x,
            spatial_dims: 1,
        })
        .unwrap()
    }

    fn wave_field(vg: &VelocityGrid, sg: &SpaceGrid, k: i64) -> DistributionField {
        let mut f = DistributionField::zeros(sg, vg);
        for xi in 0..sg.len() {
            let x = sg.coords(xi)[0];
            let slice = f.slice_mut(xi);
            for (j, &v) in vg.nodes().iter().enumerate() {
                slice[j] = maxwellian(v) * (2.0 * PI * k as f64 * x).cos();
            }
        }
        f
    }

    #[test]
    fn constant_in_space_is_unchanged() {
        let (vg, sg) = grids(16);
        let op = TransportOperator::new(&sg, &vg);
        let f = wave_field(&vg, &sg, 0);
        let out = op.transport_step(&f, 0.37).unwrap();
        for (a, b) in f.values.iter().zip(&out.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_matches_characteristics() {
        let (vg, sg) = grids(16);
        let op = TransportOperator::new(&sg, &vg);
        let k = 2i64;
        let f = wave_field(&vg, &sg, k);
        let tau = 0.23;
        let out = op.transport_step(&f, tau).unwrap();
        for xi in 0..sg.len() {
            let x = sg.coords(xi)[0];
            for (j, &v) in vg.nodes().iter().enumerate() {
                let expect =
                    maxwellian(v) * (2.0 * PI * k as f64 * (x - 2.0 * tau * v[0])).cos();
                let got = out.values[xi * f.n_velocity + j];
                assert!(
                    (got - expect).abs() < 1e-12,
                    "xi {xi} j {j}: {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn transport_composes_as_a_group() {
        let (vg, sg) = grids(16);
        let op = TransportOperator::new(&sg, &vg);
        // band-limited data: no Nyquist content
        let mut f = wave_field(&vg, &sg, 1);
        let g = wave_field(&vg, &sg, 3);
        for (a, b) in f.values.iter_mut().zip(&g.values) {
            *a += 0.5 * b;
        }
        let once = op.transport_step(&f, 0.4).unwrap();
        let twice = op
            .transport_step(&op.transport_step(&f, 0.15).unwrap(), 0.25)
            .unwrap();
        for (a, b) in once.values.iter().zip(&twice.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn transport_preserves_spatial_integrals() {
        let (vg, sg) = grids(16);
        let op = TransportOperator::new(&sg, &vg);
        let f = wave_field(&vg, &sg, 2);
        let out = op.transport_step(&f, 0.71).unwrap();
        let n_v = f.n_velocity;
        for j in (0..n_v).step_by(37) {
            let mean = |fld: &DistributionField| {
                (0..fld.n_space)
                    .map(|xi| fld.values[xi * n_v + j])
                    .sum::<f64>()
            };
            assert!((mean(&f) - mean(&out)).abs() < 1e-12);
        }
    }

    #[test]
    fn two_dimensional_transport_matches_characteristics() {
        let (vg, _) = grids(8);
        let sg = SpaceGrid::new(8, 2).unwrap();
        let op = TransportOperator::new(&sg, &vg);
        let mut f = DistributionField::zeros(&sg, &vg);
        for xi in 0..sg.len() {
            let x = sg.coords(xi);
            let slice = f.slice_mut(xi);
            for (j, &v) in vg.nodes().iter().enumerate() {
                slice[j] = maxwellian(v) * (2.0 * PI * (x[0] + 2.0 * x[1])).sin();
            }
        }
        let tau = 0.11;
        let out = op.transport_step(&f, tau).unwrap();
        for xi in 0..sg.len() {
            let x = sg.coords(xi);
            for (j, &v) in vg.nodes().iter().enumerate() {
                let arg = (x[0] - 2.0 * tau * v[0]) + 2.0 * (x[1] - 2.0 * tau * v[1]);
                let expect = maxwellian(v) * (2.0 * PI * arg).sin();
                let got = out.values[xi * f.n_velocity + j];
                assert!((got - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mollifier_kernel_is_even_nonnegative_unit_mass() {
        let (_, sg) = grids(32);
        let spec = MollifierSpec::new(4.0 / 32.0).unwrap();
        let kernel = mollifier_kernel(&sg, &spec);
        let total: f64 = kernel.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-14);
        for (off, w) in &kernel {
            assert!(*w >= 0.0);
            let mirrored: Vec<isize> = off.iter().map(|o| -o).collect();
            let partner = kernel.iter().find(|(o, _)| *o == mirrored).unwrap();
            assert!((w - partner.1).abs() < 1e-15);
        }
    }

    #[test]
    fn mollify_preserves_constants_and_means() {
        let (vg, sg) = grids(32);
        let spec = MollifierSpec::new(0.1).unwrap();
        let constant = wave_field(&vg, &sg, 0);
        let out = mollify(&constant, &sg, &spec);
        for (a, b) in constant.values.iter().zip(&out.values) {
            assert!((a - b).abs() < 1e-14);
        }
        let f = wave_field(&vg, &sg, 3);
        let out = mollify(&f, &sg, &spec);
        let n_v = f.n_velocity;
        for j in (0..n_v).step_by(41) {
            let mean = |fld: &DistributionField| {
                (0..fld.n_space)
                    .map(|xi| fld.values[xi * n_v + j])
                    .sum::<f64>()
            };
            assert!((mean(&f) - mean(&out)).abs() < 1e-13);
        }
    }

    #[test]
    fn mollify_error_scales_like_h_squared() {
        let (vg, sg) = grids(64);
        let f = wave_field(&vg, &sg, 1);
        let err = |h: f64| {
            let spec = MollifierSpec::new(h).unwrap();
            let out = mollify(&f, &sg, &spec);
            f.values
                .iter()
                .zip(&out.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
        };
        let e1 = err(8.0 / 64.0);
        let e2 = err(4.0 / 64.0);
        let ratio = e1 / e2;
        assert!(
            (3.0..6.0).contains(&ratio),
            "expected ratio near 4, got {ratio} ({e1:.3e} / {e2:.3e})"
        );
    }

    #[test]
    fn mollify_is_sup_norm_nonexpansive() {
        let (vg, sg) = grids(32);
        let spec = MollifierSpec::new(0.12).unwrap();
        let mut f = wave_field(&vg, &sg, 2);
        assert!(linf_nonexpansive_check(&f, &sg, &spec));
        // spike in space
        for v in f.slice_mut(5) {
            *v += 1.0;
        }
        assert!(linf_nonexpansive_check(&f, &sg, &spec));
    }
}
