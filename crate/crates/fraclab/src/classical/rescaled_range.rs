//! Rescaled-range (R/S) analysis.
//!
//! The series of increments is cut into blocks of size `s`; within each
//! block, `R` is the range of the mean-adjusted cumulative sums and `S`
//! the standard deviation. `E[R/S] ~ c s^H`, so the estimate is the slope
//! of `log mean(R/S)` against `log s` over a dyadic grid of block sizes.

use super::{
    check_finite_input, check_min_len, dyadic_sizes, ols_slope, resolve_increments, HurstEstimate,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RescaledRangeConfig {
    /// Block sizes of the fit; `None` picks powers of two from 8 up to a
    /// quarter of the increment count.
    pub block_sizes: Option<Vec<usize>>,
    pub min_len: usize,
    pub pre_differenced: bool,
}

impl Default for RescaledRangeConfig {
    fn default() -> Self {
        RescaledRangeConfig {
            block_sizes: None,
            min_len: 128,
            pre_differenced: false,
        }
    }
}

pub fn rescaled_range(series: &[f64], cfg: &RescaledRangeConfig) -> Result<HurstEstimate> {
    check_finite_input(series)?;
    let incr = resolve_increments(series, cfg.pre_differenced);
    check_min_len(incr.len(), cfg.min_len.max(16), "rescaled range")?;
    let n = incr.len();

    let sizes = match &cfg.block_sizes {
        Some(s) => s.clone(),
        None => dyadic_sizes(8, n / 4),
    };
    if sizes.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "rescaled range needs at least 2 block sizes, got {}",
            sizes.len()
        )));
    }

    let mut log_s = Vec::with_capacity(sizes.len());
    let mut log_rs = Vec::with_capacity(sizes.len());
    for &s in &sizes {
        if s < 2 || s > n {
            return Err(Error::InvalidParameter(format!(
                "rescaled range block size out of [2,{n}]: {s}"
            )));
        }
        let blocks = n / s;
        let mut acc = 0.0;
        let mut used = 0usize;
        for b in 0..blocks {
            let chunk = &incr[b * s..(b + 1) * s];
            let mean = chunk.iter().sum::<f64>() / s as f64;
            let mut cum = 0.0;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut var = 0.0;
            for &x in chunk {
                cum += x - mean;
                lo = lo.min(cum);
                hi = hi.max(cum);
                var += (x - mean) * (x - mean);
            }
            let sd = (var / s as f64).sqrt();
            if sd > 0.0 {
                acc += (hi - lo) / sd;
                used += 1;
            }
        }
        if used == 0 {
            return Err(Error::DegenerateInput(format!(
                "rescaled range: every block of size {s} is constant"
            )));
        }
        log_s.push((s as f64).ln());
        log_rs.push((acc / used as f64).ln());
    }

    HurstEstimate::from_raw(ols_slope(&log_s, &log_rs))
}
