//! Discretization mesh and moving-average kernel for linear fractional
//! stable motion.

use crate::error::{Error, Result};

/// Riemann-sum mesh: the kernel is truncated after `truncation` time units
/// and each unit interval carries `resolution` innovations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LfsmMesh {
    pub truncation: usize,
    pub resolution: usize,
}

impl Default for LfsmMesh {
    fn default() -> Self {
        LfsmMesh {
            truncation: 600,
            resolution: 256,
        }
    }
}

impl LfsmMesh {
    pub fn validate(&self) -> Result<()> {
        if self.truncation == 0 {
            return Err(Error::InvalidParameter(
                "lfsm truncation out of [1,inf)".into(),
            ));
        }
        if self.resolution == 0 {
            return Err(Error::InvalidParameter(
                "lfsm resolution out of [1,inf)".into(),
            ));
        }
        Ok(())
    }
}

/// Kernel weights `a[u] = (u/m)^d - ((u-m)/m)_+^d` for `u = 1..=m*M`, with
/// `(z)_+^d = 0` for `z <= 0`. Index 0 is an unused zero so that `a[u]`
/// aligns with the lag `u` of the discrete moving average.
pub(crate) fn moving_average_kernel(d: f64, mesh: LfsmMesh) -> Vec<f64> {
    let m = mesh.resolution;
    let klen = m * mesh.truncation;
    let mf = m as f64;
    let mut a = vec![0.0; klen + 1];
    for (u, slot) in a.iter_mut().enumerate().skip(1) {
        let lead = (u as f64 / mf).powf(d);
        let trail = if u > m {
            ((u - m) as f64 / mf).powf(d)
        } else {
            0.0
        };
        *slot = lead - trail;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_has_plateau_cutoff_at_one_unit() {
        // Below one unit only the leading term contributes.
        let mesh = LfsmMesh {
            truncation: 3,
            resolution: 4,
        };
        let d = 0.25;
        let a = moving_average_kernel(d, mesh);
        assert_eq!(a.len(), 13);
        assert_eq!(a[0], 0.0);
        for u in 1..=4usize {
            assert_eq!(a[u], (u as f64 / 4.0).powf(d), "u={u}");
        }
        for u in 5..=12usize {
            let expect = (u as f64 / 4.0).powf(d) - ((u - 4) as f64 / 4.0).powf(d);
            assert_eq!(a[u], expect, "u={u}");
        }
    }

    #[test]
    fn kernel_decays_for_negative_exponent() {
        let mesh = LfsmMesh::default();
        let a = moving_average_kernel(-0.2, mesh);
        // Long-lag weights must shrink, otherwise the truncation at M units
        // would dominate the sum.
        let early: f64 = a[1..=256].iter().map(|v| v.abs()).sum();
        let late: f64 = a[a.len() - 256..].iter().map(|v| v.abs()).sum();
        assert!(late < early * 1e-2, "early {early}, late {late}");
    }
}
