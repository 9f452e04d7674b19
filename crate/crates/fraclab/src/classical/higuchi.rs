//! Higuchi's curve-length method.
//!
//! For stride `k` and offset `m`, the normalized curve length is
//!
//! ```text
//! L_m(k) = (N - 1) / (floor((N - m) / k) k^2) * sum_i |x(m + i k) - x(m + (i-1) k)|
//! ```
//!
//! and `L(k)`, the mean over offsets, scales like `k^(-D)` with fractal
//! dimension `D`. For self-affine paths `H = 2 - D`, so the estimate is
//! `2 + slope` of the log-log fit.

use super::{check_finite_input, check_min_len, ols_slope, resolve_levels, HurstEstimate};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HiguchiConfig {
    /// Largest stride of the curve-length sweep.
    pub k_max: usize,
    /// Shortest series the statistic is considered meaningful on.
    pub min_len: usize,
    pub pre_differenced: bool,
}

impl Default for HiguchiConfig {
    fn default() -> Self {
        HiguchiConfig {
            k_max: 20,
            min_len: 100,
            pre_differenced: false,
        }
    }
}

pub fn higuchi(series: &[f64], cfg: &HiguchiConfig) -> Result<HurstEstimate> {
    check_finite_input(series)?;
    let levels = resolve_levels(series, cfg.pre_differenced);
    check_min_len(levels.len(), cfg.min_len.max(3), "higuchi")?;
    if cfg.k_max < 2 {
        return Err(Error::InvalidParameter(format!(
            "higuchi k_max out of [2,inf): {}",
            cfg.k_max
        )));
    }
    let n = levels.len();
    if cfg.k_max * 2 >= n {
        return Err(Error::InvalidParameter(format!(
            "higuchi k_max {} too large for series of length {n}",
            cfg.k_max
        )));
    }

    let mut log_k = Vec::with_capacity(cfg.k_max);
    let mut log_l = Vec::with_capacity(cfg.k_max);
    for k in 1..=cfg.k_max {
        let mut total = 0.0;
        for m in 0..k {
            let steps = (n - 1 - m) / k;
            let mut length = 0.0;
            for i in 1..=steps {
                length += (levels[m + i * k] - levels[m + (i - 1) * k]).abs();
            }
            total += length * (n - 1) as f64 / (steps as f64 * k as f64 * k as f64);
        }
        let l = total / k as f64;
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::DegenerateInput(format!(
                "higuchi curve length vanished at stride {k} (constant series?)"
            )));
        }
        log_k.push((k as f64).ln());
        log_l.push(l.ln());
    }

    // L(k) ~ k^(-D) and H = 2 - D.
    HurstEstimate::from_raw(2.0 + ols_slope(&log_k, &log_l))
}
