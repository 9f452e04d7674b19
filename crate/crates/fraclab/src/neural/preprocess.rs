//! Input normalization for the network.
//!
//! A path enters the network as its increment sequence, standardized to
//! zero mean and unit sample standard deviation. Differencing removes the
//! level `b` and turns a drift `c*t` into a constant killed by the mean,
//! and division by the standard deviation removes the scale `a`, so
//! `a*x + b + c*t` maps to the same representation as `x` for any `a > 0`.

use crate::error::{Error, Result};

/// Increment standard deviations below this are treated as degenerate;
/// the path carries no usable signal and would blow up under division.
pub const DEGENERATE_SD: f64 = 1e-12;

/// Standardized increment sequence of a path: one element shorter than
/// the path, zero mean, unit sample (n-1 denominator) standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedIncrements {
    values: Vec<f64>,
}

impl StandardizedIncrements {
    /// Standardizes the increments of `path`. Needs at least 3 points so
    /// the sample standard deviation of the increments exists.
    pub fn new(path: &[f64]) -> Result<Self> {
        if path.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "path length out of [3,inf): {}",
                path.len()
            )));
        }
        if path.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("path contains a non-finite value".into()));
        }
        let m = path.len() - 1;
        let mut values: Vec<f64> = path.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = values.iter().sum::<f64>() / m as f64;
        let var = values.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (m - 1) as f64;
        let sd = var.sqrt();
        if sd < DEGENERATE_SD {
            return Err(Error::DegenerateInput(format!(
                "increment standard deviation {sd:.3e} below {DEGENERATE_SD:.0e}"
            )));
        }
        for v in values.iter_mut() {
            *v = (*v - mean) / sd;
        }
        Ok(StandardizedIncrements { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_example() {
        // increments (2, -1), mean 0.5, sample sd sqrt(4.5)
        let s = StandardizedIncrements::new(&[0.0, 2.0, 1.0]).unwrap();
        let expect = 1.5 / 4.5f64.sqrt();
        assert!((s.values()[0] - expect).abs() < 1e-15);
        assert!((s.values()[1] + expect).abs() < 1e-15);
    }

    #[test]
    fn output_is_standardized() {
        let path: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin() * 3.0 + i as f64).collect();
        let s = StandardizedIncrements::new(&path).unwrap();
        assert_eq!(s.len(), 49);
        let m = s.values().iter().sum::<f64>() / 49.0;
        let var = s.values().iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 48.0;
        assert!(m.abs() < 1e-9);
        assert!((var.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn affine_transform_maps_to_same_representation() {
        let path: Vec<f64> = (0..80).map(|i| ((i * i) as f64).sqrt().sin()).collect();
        let base = StandardizedIncrements::new(&path).unwrap();
        let moved: Vec<f64> = path
            .iter()
            .enumerate()
            .map(|(i, v)| 5.0 * v + 7.0 - 0.3 * i as f64)
            .collect();
        let s = StandardizedIncrements::new(&moved).unwrap();
        for (a, b) in s.values().iter().zip(base.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_increments_are_degenerate() {
        // a pure ramp differences to a constant: zero variance
        match StandardizedIncrements::new(&[0.0, 1.0, 2.0, 3.0]) {
            Err(Error::DegenerateInput(_)) => {}
            other => panic!("expected degenerate input, got {other:?}"),
        }
    }

    #[test]
    fn rejects_short_and_non_finite_paths() {
        assert!(StandardizedIncrements::new(&[0.0, 1.0]).is_err());
        match StandardizedIncrements::new(&[0.0, f64::NAN, 1.0]) {
            Err(Error::NonFinite(_)) => {}
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }
}
