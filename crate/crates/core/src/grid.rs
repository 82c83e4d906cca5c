use crate::error::{CoreError, Result};

/// Truncated cell-centered Cartesian lattice on `[-R, R]^3` in velocity space.
///
/// Node ordering is lexicographic in `(ix, iy, iz)`, which is the order used
/// by snapshots and by every flattened field buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    pub radius: f64,
    pub n_per_axis: usize,
    pub spacing: f64,
    nodes: Vec<[f64; 3]>,
}

impl VelocityGrid {
    pub fn new(radius: f64, n_per_axis: usize) -> Result<Self> {
        if radius <= 0.0 {
            return Err(CoreError::Grid(format!(
                "velocity radius must be positive, got {radius}"
            )));
        }
        if n_per_axis < 4 {
            return Err(CoreError::Grid(format!(
                "velocity n_per_axis must be >= 4, got {n_per_axis}"
            )));
        }
        let spacing = 2.0 * radius / n_per_axis as f64;
        let coord = |i: usize| -radius + (i as f64 + 0.5) * spacing;
        let mut nodes = Vec::with_capacity(n_per_axis.pow(3));
        for ix in 0..n_per_axis {
            for iy in 0..n_per_axis {
                for iz in 0..n_per_axis {
                    nodes.push([coord(ix), coord(iy), coord(iz)]);
                }
            }
        }
        Ok(Self {
            radius,
            n_per_axis,
            spacing,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> [f64; 3] {
        self.nodes[i]
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    /// Axis coordinate of node index `i` along one axis.
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.radius + (i as f64 + 0.5) * self.spacing
    }

    pub fn flat_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n_per_axis + iy) * self.n_per_axis + iz
    }

    /// Trilinear interpolation of a grid function, zero outside the node hull.
    pub fn interpolate(&self, values: &[f64], v: [f64; 3]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        let n = self.n_per_axis as isize;
        let mut base = [0isize; 3];
        let mut frac = [0f64; 3];
        for a in 0..3 {
            // continuous cell coordinate: node i sits at u = i
            let u = (v[a] + self.radius) / self.spacing - 0.5;
            let i0 = u.floor();
            base[a] = i0 as isize;
            frac[a] = u - i0;
            if base[a] < -1 || base[a] >= n {
                return 0.0;
            }
        }
        let mut acc = 0.0;
        for dx in 0..2isize {
            let ix = base[0] + dx;
            if ix < 0 || ix >= n {
                continue;
            }
            let wx = if dx == 0 { 1.0 - frac[0] } else { frac[0] };
            for dy in 0..2isize {
                let iy = base[1] + dy;
                if iy < 0 || iy >= n {
                    continue;
                }
                let wy = if dy == 0 { 1.0 - frac[1] } else { frac[1] };
                for dz in 0..2isize {
                    let iz = base[2] + dz;
                    if iz < 0 || iz >= n {
                        continue;
                    }
                    let wz = if dz == 0 { 1.0 - frac[2] } else { frac[2] };
                    let idx = ((ix * n + iy) * n + iz) as usize;
                    acc += wx * wy * wz * values[idx];
                }
            }
        }
        acc
    }
}

/// Periodic lattice on the unit torus; `spatial_dims = 0` is the
/// space-homogeneous mode with a single node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceGrid {
    pub n_per_axis: usize,
    pub spatial_dims: usize,
}

impl SpaceGrid {
    pub fn new(n_per_axis: usize, spatial_dims: usize) -> Result<Self> {
        if spatial_dims > 3 {
            return Err(CoreError::Grid(format!(
                "spatial_dims must be in 0..=3, got {spatial_dims}"
            )));
        }
        if spatial_dims == 0 {
            return Ok(Self {
                n_per_axis: 1,
                spatial_dims: 0,
            });
        }
        if n_per_axis == 0 {
            return Err(CoreError::Grid("space n_per_axis must be >= 1".into()));
        }
        Ok(Self {
            n_per_axis,
            spatial_dims,
        })
    }

    pub fn len(&self) -> usize {
        self.n_per_axis.pow(self.spatial_dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n_per_axis as f64
    }

    /// Coordinates of spatial node `i` on the unit torus (lexicographic).
    pub fn coords(&self, mut i: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        let n = self.n_per_axis;
        for a in (0..self.spatial_dims).rev() {
            out[a] = (i % n) as f64 * self.spacing();
            i /= n;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub velocity_radius: f64,
    pub velocity_n: usize,
    pub space_n: usize,
    pub spatial_dims: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            velocity_radius: 6.0,
            velocity_n: 16,
            space_n: 1,
            spatial_dims: 0,
        }
    }
}

pub fn build_grids(config: &GridConfig) -> Result<(VelocityGrid, SpaceGrid)> {
    let vg = VelocityGrid::new(config.velocity_radius, config.velocity_n)?;
    let sg = SpaceGrid::new(config.space_n, config.spatial_dims)?;
    Ok((vg, sg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_bounds() {
        let g = VelocityGrid::new(6.0, 12).unwrap();
        assert!((g.spacing - 1.0).abs() < 1e-15);
        let g = VelocityGrid::new(8.0, 16).unwrap();
        assert_eq!(g.len(), 16 * 16 * 16);
        for n in g.nodes() {
            for c in n {
                assert!(c.abs() <= 8.0);
            }
        }
    }

    #[test]
    fn odd_grid_contains_origin() {
        let g = VelocityGrid::new(6.0, 15).unwrap();
        assert!(g
            .nodes()
            .iter()
            .any(|n| n.iter().all(|c| c.abs() < 1e-12)));
    }

    #[test]
    fn rejects_small_grid() {
        assert!(VelocityGrid::new(6.0, 3).is_err());
    }

    #[test]
    fn homogeneous_space_grid_single_node() {
        let g = SpaceGrid::new(16, 0).unwrap();
        assert_eq!(g.len(), 1);
        let g = SpaceGrid::new(16, 1).unwrap();
        assert_eq!(g.len(), 16);
        let g = SpaceGrid::new(4, 2).unwrap();
        assert_eq!(g.len(), 16);
    }

    #[test]
    fn interpolation_reproduces_nodes_and_vanishes_outside() {
        let g = VelocityGrid::new(6.0, 8).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|i| (i as f64).sin()).collect();
        for i in [0usize, 17, 300, g.len() - 1] {
            let v = g.node(i);
            assert!((g.interpolate(&vals, v) - vals[i]).abs() < 1e-12);
        }
        assert_eq!(g.interpolate(&vals, [7.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn interpolation_is_exact_for_linear_functions_inside_hull() {
        let g = VelocityGrid::new(6.0, 8).unwrap();
        let lin = |v: [f64; 3]| 0.3 + 0.5 * v[0] - 0.2 * v[1] + 0.1 * v[2];
        let vals: Vec<f64> = g.nodes().iter().map(|&n| lin(n)).collect();
        let v = [0.3, -1.2, 2.7];
        assert!((g.interpolate(&vals, v) - lin(v)).abs() < 1e-12);
    }
}
