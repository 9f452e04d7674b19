//! Madogram and variogram estimators.
//!
//! The p-th order variation at lag `l`, `V_p(l) = mean |x(i+l) - x(i)|^p`,
//! scales like `l^(pH)` for self-affine paths. The madogram uses `p = 1`
//! (robust against heavy tails), the variogram `p = 2`.

use super::{check_finite_input, check_min_len, ols_slope, resolve_levels, HurstEstimate};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MadogramConfig {
    pub lags: Vec<usize>,
    pub min_len: usize,
    pub pre_differenced: bool,
}

impl Default for MadogramConfig {
    fn default() -> Self {
        MadogramConfig {
            lags: vec![1, 2],
            min_len: 100,
            pre_differenced: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariogramConfig {
    pub lags: Vec<usize>,
    pub min_len: usize,
    pub pre_differenced: bool,
}

impl Default for VariogramConfig {
    fn default() -> Self {
        VariogramConfig {
            lags: vec![1, 2],
            min_len: 100,
            pre_differenced: false,
        }
    }
}

fn variation_fit(
    series: &[f64],
    lags: &[usize],
    min_len: usize,
    pre_differenced: bool,
    p: f64,
    what: &str,
) -> Result<f64> {
    check_finite_input(series)?;
    let levels = resolve_levels(series, pre_differenced);
    check_min_len(levels.len(), min_len.max(3), what)?;
    if lags.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "{what} needs at least 2 lags, got {}",
            lags.len()
        )));
    }
    let n = levels.len();
    let mut log_lag = Vec::with_capacity(lags.len());
    let mut log_v = Vec::with_capacity(lags.len());
    for &lag in lags {
        if lag == 0 || lag >= n {
            return Err(Error::InvalidParameter(format!(
                "{what} lag out of [1,{}): {lag}",
                n
            )));
        }
        let mut acc = 0.0;
        for i in 0..n - lag {
            acc += (levels[i + lag] - levels[i]).abs().powf(p);
        }
        let v = acc / (n - lag) as f64;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::DegenerateInput(format!(
                "{what} variation vanished at lag {lag}"
            )));
        }
        log_lag.push((lag as f64).ln());
        log_v.push(v.ln());
    }
    Ok(ols_slope(&log_lag, &log_v))
}

pub fn madogram(series: &[f64], cfg: &MadogramConfig) -> Result<HurstEstimate> {
    let slope = variation_fit(
        series,
        &cfg.lags,
        cfg.min_len,
        cfg.pre_differenced,
        1.0,
        "madogram",
    )?;
    HurstEstimate::from_raw(slope)
}

pub fn variogram(series: &[f64], cfg: &VariogramConfig) -> Result<HurstEstimate> {
    let slope = variation_fit(
        series,
        &cfg.lags,
        cfg.min_len,
        cfg.pre_differenced,
        2.0,
        "variogram",
    )?;
    HurstEstimate::from_raw(slope / 2.0)
}
