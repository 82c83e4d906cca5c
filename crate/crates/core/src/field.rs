use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{CoreError, Result};
use crate::grid::{SpaceGrid, VelocityGrid};

/// Normalized Maxwellian `(2 pi)^{-3/2} exp(-|v|^2 / 2)`.
pub fn maxwellian(v: [f64; 3]) -> f64 {
    maxwellian_d(v[0] * v[0] + v[1] * v[1] + v[2] * v[2], 3)
}

/// Maxwellian in dimension `dim`, as a function of `|v|^2`.
pub fn maxwellian_d(v_sq: f64, dim: usize) -> f64 {
    (2.0 * PI).powf(-(dim as f64) / 2.0) * (-0.5 * v_sq).exp()
}

/// `<v>^q = (1 + |v|^2)^{q/2}`.
pub fn bracket_weight(v: [f64; 3], q: f64) -> f64 {
    let b = 1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    if q == 2.0 {
        b
    } else {
        b.powf(0.5 * q)
    }
}

/// Perturbation `f` around the Maxwellian on the product grid; the physical
/// density is `M + f`. Layout is space-major: `values[xi * n_v + vj]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    pub values: Vec<f64>,
    pub n_space: usize,
    pub n_velocity: usize,
    pub time_stamp: f64,
}

impl DistributionField {
    pub fn zeros(space: &SpaceGrid, velocity: &VelocityGrid) -> Self {
        Self {
            values: vec![0.0; space.len() * velocity.len()],
            n_space: space.len(),
            n_velocity: velocity.len(),
            time_stamp: 0.0,
        }
    }

    pub fn slice(&self, xi: usize) -> &[f64] {
        &self.values[xi * self.n_velocity..(xi + 1) * self.n_velocity]
    }

    pub fn slice_mut(&mut self, xi: usize) -> &mut [f64] {
        &mut self.values[xi * self.n_velocity..(xi + 1) * self.n_velocity]
    }

    pub fn check_finite(&self) -> Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(CoreError::NonFinite(format!(
                    "field value at flat index {i} is {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn matches(&self, space: &SpaceGrid, velocity: &VelocityGrid) -> Result<()> {
        if self.n_space != space.len() || self.n_velocity != velocity.len() {
            return Err(CoreError::GridMismatch(format!(
                "field is {}x{}, grids are {}x{}",
                self.n_space,
                self.n_velocity,
                space.len(),
                velocity.len()
            )));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Minimum of `M + f` over the grid; the positivity monitor.
    pub fn min_density(&self, velocity: &VelocityGrid) -> f64 {
        let mut min = f64::INFINITY;
        for xi in 0..self.n_space {
            let s = self.slice(xi);
            for (j, &fv) in s.iter().enumerate() {
                let d = maxwellian(velocity.node(j)) + fv;
                if d < min {
                    min = d;
                }
            }
        }
        min
    }
}

/// Per-exponent record of `sup <v>^q |f|` values observed on a field.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecayEnvelope {
    bounds: BTreeMap<u64, f64>,
}

impl DecayEnvelope {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, q: f64, value: f64) {
        let key = q.to_bits();
        let entry = self.bounds.entry(key).or_insert(0.0);
        if value > *entry {
            *entry = value;
        }
    }

    pub fn get(&self, q: f64) -> Option<f64> {
        self.bounds.get(&q.to_bits()).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.bounds.iter().map(|(k, v)| (f64::from_bits(*k), *v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VelocityGrid;

    #[test]
    fn maxwellian_at_origin() {
        // (2 pi)^{-3/2}
        let expect = (2.0 * PI).powf(-1.5);
        assert!((maxwellian([0.0; 3]) - expect).abs() < 1e-12);
        assert!((expect - 0.063_493_6).abs() < 1e-6);
    }

    #[test]
    fn maxwellian_even() {
        let v = [1.3, -0.4, 2.2];
        let neg = [-v[0], -v[1], -v[2]];
        assert_eq!(maxwellian(v), maxwellian(neg));
    }

    #[test]
    fn maxwellian_grid_mass() {
        // Gaussian normalization; oracle below is a high-resolution 1D product
        // quadrature of the same truncated integral.
        let g = VelocityGrid::new(6.0, 24).unwrap();
        let sum: f64 = g.nodes().iter().map(|&v| maxwellian(v)).sum();
        let mass = sum * g.cell_volume();

        let oracle = {
            // 1D midpoint on [-6, 6] at grid resolution, cubed by separability
            let n = 24;
            let h = 12.0 / n as f64;
            let one_d: f64 = (0..n)
                .map(|i| {
                    let x = -6.0 + (i as f64 + 0.5) * h;
                    (2.0 * PI).powf(-0.5) * (-0.5 * x * x).exp() * h
                })
                .sum();
            one_d.powi(3)
        };
        assert!((mass - oracle).abs() < 1e-9);
        assert!((mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bracket_weight_values() {
        assert_eq!(bracket_weight([0.0; 3], 7.3), 1.0);
        assert!((bracket_weight([1.0, 0.0, 0.0], 2.0) - 2.0).abs() < 1e-15);
        assert!((bracket_weight([3.0, 4.0, 0.0], 1.0) - 26.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn maxwellian_log_concave_along_ray() {
        // second finite differences of log M along a ray are negative
        let dir = [0.6, 0.64, 0.48];
        let h = 0.25;
        for k in 1..10 {
            let t = k as f64 * h;
            let at = |t: f64| maxwellian([dir[0] * t, dir[1] * t, dir[2] * t]).ln();
            let second = at(t + h) - 2.0 * at(t) + at(t - h);
            assert!(second < 0.0);
        }
    }

    #[test]
    fn decay_envelope_monotone_in_q_outside_unit_ball() {
        let g = VelocityGrid::new(6.0, 8).unwrap();
        // field supported outside |v| > 1
        let vals: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&v| {
                let r2 = v.iter().map(|c| c * c).sum::<f64>();
                if r2 > 1.0 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let sup = |q: f64| {
            g.nodes()
                .iter()
                .zip(&vals)
                .map(|(&v, &f)| bracket_weight(v, q) * f.abs())
                .fold(0.0f64, f64::max)
        };
        assert!(sup(4.0) < sup(6.0));
        assert!(sup(6.0) < sup(8.0));
    }
}
