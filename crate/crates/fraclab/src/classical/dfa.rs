//! Detrended fluctuation analysis of order 1.
//!
//! The profile (cumulative sum of mean-centered increments) is cut into
//! boxes of size `s`; in every box a straight line is removed and the
//! root-mean-square residual `F(s)` collected. `F(s) ~ s^H` for
//! self-affine paths, fitted on a dyadic grid of box sizes.

use super::{
    check_finite_input, check_min_len, dyadic_sizes, ols_slope, resolve_increments, HurstEstimate,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DfaConfig {
    /// Box sizes of the fit; `None` picks powers of two from 8 up to a
    /// quarter of the profile length.
    pub box_sizes: Option<Vec<usize>>,
    pub min_len: usize,
    pub pre_differenced: bool,
}

impl Default for DfaConfig {
    fn default() -> Self {
        DfaConfig {
            box_sizes: None,
            min_len: 128,
            pre_differenced: false,
        }
    }
}

pub fn dfa(series: &[f64], cfg: &DfaConfig) -> Result<HurstEstimate> {
    check_finite_input(series)?;
    let incr = resolve_increments(series, cfg.pre_differenced);
    check_min_len(incr.len(), cfg.min_len.max(16), "dfa")?;
    let n = incr.len();

    let mean = incr.iter().sum::<f64>() / n as f64;
    let mut profile = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &x in &incr {
        acc += x - mean;
        profile.push(acc);
    }

    let sizes = match &cfg.box_sizes {
        Some(s) => s.clone(),
        None => dyadic_sizes(8, n / 4),
    };
    if sizes.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "dfa needs at least 2 box sizes, got {}",
            sizes.len()
        )));
    }

    let mut log_s = Vec::with_capacity(sizes.len());
    let mut log_f = Vec::with_capacity(sizes.len());
    for &s in &sizes {
        if s < 4 || s > n {
            return Err(Error::InvalidParameter(format!(
                "dfa box size out of [4,{n}]: {s}"
            )));
        }
        let boxes = n / s;
        // Linear detrend: regressor sums over a box depend on s only.
        let sf = s as f64;
        let sum_t = sf * (sf - 1.0) / 2.0;
        let sum_tt = sf * (sf - 1.0) * (2.0 * sf - 1.0) / 6.0;
        let det = sf * sum_tt - sum_t * sum_t;
        let mut total = 0.0;
        for b in 0..boxes {
            let chunk = &profile[b * s..(b + 1) * s];
            let mut sum_y = 0.0;
            let mut sum_ty = 0.0;
            for (t, &y) in chunk.iter().enumerate() {
                sum_y += y;
                sum_ty += t as f64 * y;
            }
            let slope = (sf * sum_ty - sum_t * sum_y) / det;
            let intercept = (sum_y - slope * sum_t) / sf;
            for (t, &y) in chunk.iter().enumerate() {
                let r = y - (intercept + slope * t as f64);
                total += r * r;
            }
        }
        let f = (total / (boxes * s) as f64).sqrt();
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::DegenerateInput(format!(
                "dfa fluctuation vanished at box size {s}"
            )));
        }
        log_s.push(sf.ln());
        log_f.push(f.ln());
    }

    HurstEstimate::from_raw(ols_slope(&log_s, &log_f))
}
