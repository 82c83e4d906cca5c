use crate::error::{CoreError, Result};

/// Kernel exponents and dimension for the collision kernel
/// `B(z, cos t) = C_b |z|^gamma b(cos t)` with `b(cos t) ~ t^{-(d-1)-2s}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    pub gamma: f64,
    pub s: f64,
    pub kernel_const: f64,
    pub dim: usize,
}

impl PhysParams {
    pub fn new(gamma: f64, s: f64, kernel_const: f64, dim: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&s) || s <= 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "s must lie in (0,1), got {s}"
            )));
        }
        if dim == 0 {
            return Err(CoreError::InvalidParameter("dim must be >= 1".into()));
        }
        if gamma <= -(dim as f64) {
            return Err(CoreError::InvalidParameter(format!(
                "gamma must exceed -dim, got gamma={gamma}, dim={dim}"
            )));
        }
        if kernel_const <= 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "kernel_const must be positive, got {kernel_const}"
            )));
        }
        Ok(Self {
            gamma,
            s,
            kernel_const,
            dim,
        })
    }

    pub fn hard_potential_defaults() -> Self {
        Self {
            gamma: 1.0,
            s: 0.5,
            kernel_const: 1.0,
            dim: 3,
        }
    }

    /// True iff gamma + 2s lies in [0, 2], the standing assumption of the
    /// estimates this artifact verifies.
    pub fn regime_ok(&self) -> bool {
        let x = self.gamma + 2.0 * self.s;
        (0.0..=2.0).contains(&x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_flag() {
        let p = PhysParams::new(1.0, 0.5, 1.0, 3).unwrap();
        assert!(p.regime_ok());
        let p = PhysParams::new(2.0, 0.9, 1.0, 3).unwrap();
        assert!(!p.regime_ok()); // gamma + 2s = 3.8
        let p = PhysParams::new(-0.5, 0.25, 1.0, 3).unwrap();
        assert!(p.regime_ok()); // gamma + 2s = 0
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PhysParams::new(1.0, 0.0, 1.0, 3).is_err());
        assert!(PhysParams::new(1.0, 1.0, 1.0, 3).is_err());
        assert!(PhysParams::new(-3.0, 0.5, 1.0, 3).is_err());
        assert!(PhysParams::new(1.0, 0.5, 0.0, 3).is_err());
    }
}
