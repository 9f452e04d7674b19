//! Scaling-law estimators of the Hurst exponent.
//!
//! Every estimator conceptually measures the level path of the process.
//! Inputs are level paths by default; setting `pre_differenced` in a config
//! declares that the slice already contains increments, and the estimator
//! integrates or differences internally as its statistic requires.
//!
//! Estimates come back raw (the fitted slope can land outside (0, 1) on
//! short or adversarial inputs) together with a value clipped to
//! `[CLIP_LO, CLIP_HI]` and a flag saying whether clipping fired.

mod dfa;
mod higuchi;
mod madogram;
mod rescaled_range;
mod whittle;

pub use dfa::{dfa, DfaConfig};
pub use higuchi::{higuchi, HiguchiConfig};
pub use madogram::{madogram, variogram, MadogramConfig, VariogramConfig};
pub use rescaled_range::{rescaled_range, RescaledRangeConfig};
pub use whittle::{whittle, WhittleConfig};

use crate::error::{Error, Result};

pub const CLIP_LO: f64 = 0.01;
pub const CLIP_HI: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurstEstimate {
    /// The fitted value before clipping.
    pub raw: f64,
    /// `raw` clipped to `[CLIP_LO, CLIP_HI]`.
    pub estimate: f64,
    pub clipped: bool,
}

impl HurstEstimate {
    pub(crate) fn from_raw(raw: f64) -> Result<Self> {
        if !raw.is_finite() {
            return Err(Error::NonFinite(format!("hurst estimate: {raw}")));
        }
        let estimate = raw.clamp(CLIP_LO, CLIP_HI);
        Ok(HurstEstimate {
            raw,
            estimate,
            clipped: estimate != raw,
        })
    }
}

/// Dispatchable estimator selection, with default configurations. Used by
/// the benchmark matrix and the command line tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicalEstimator {
    Higuchi,
    Madogram,
    Variogram,
    RescaledRange,
    Dfa,
    Whittle,
}

impl ClassicalEstimator {
    pub const ALL: [ClassicalEstimator; 6] = [
        ClassicalEstimator::Higuchi,
        ClassicalEstimator::Madogram,
        ClassicalEstimator::Variogram,
        ClassicalEstimator::RescaledRange,
        ClassicalEstimator::Dfa,
        ClassicalEstimator::Whittle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassicalEstimator::Higuchi => "higuchi",
            ClassicalEstimator::Madogram => "madogram",
            ClassicalEstimator::Variogram => "variogram",
            ClassicalEstimator::RescaledRange => "rs",
            ClassicalEstimator::Dfa => "dfa",
            ClassicalEstimator::Whittle => "whittle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "higuchi" => Some(ClassicalEstimator::Higuchi),
            "madogram" => Some(ClassicalEstimator::Madogram),
            "variogram" => Some(ClassicalEstimator::Variogram),
            "rs" | "rescaled-range" => Some(ClassicalEstimator::RescaledRange),
            "dfa" => Some(ClassicalEstimator::Dfa),
            "whittle" => Some(ClassicalEstimator::Whittle),
            _ => None,
        }
    }

    /// Runs the estimator with its default configuration on a level path
    /// (or on increments when `pre_differenced`).
    pub fn estimate(self, series: &[f64], pre_differenced: bool) -> Result<HurstEstimate> {
        match self {
            ClassicalEstimator::Higuchi => higuchi(
                series,
                &HiguchiConfig {
                    pre_differenced,
                    ..HiguchiConfig::default()
                },
            ),
            ClassicalEstimator::Madogram => madogram(
                series,
                &MadogramConfig {
                    pre_differenced,
                    ..MadogramConfig::default()
                },
            ),
            ClassicalEstimator::Variogram => variogram(
                series,
                &VariogramConfig {
                    pre_differenced,
                    ..VariogramConfig::default()
                },
            ),
            ClassicalEstimator::RescaledRange => rescaled_range(
                series,
                &RescaledRangeConfig {
                    pre_differenced,
                    ..RescaledRangeConfig::default()
                },
            ),
            ClassicalEstimator::Dfa => dfa(
                series,
                &DfaConfig {
                    pre_differenced,
                    ..DfaConfig::default()
                },
            ),
            ClassicalEstimator::Whittle => whittle(
                series,
                &WhittleConfig {
                    pre_differenced,
                    ..WhittleConfig::default()
                },
            ),
        }
    }
}

impl std::fmt::Display for ClassicalEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Level path from possibly pre-differenced input. The reconstructed path
/// starts at 0, which no estimator here is sensitive to.
pub(crate) fn resolve_levels(series: &[f64], pre_differenced: bool) -> Vec<f64> {
    if !pre_differenced {
        return series.to_vec();
    }
    let mut levels = Vec::with_capacity(series.len() + 1);
    levels.push(0.0);
    let mut acc = 0.0;
    for x in series {
        acc += x;
        levels.push(acc);
    }
    levels
}

/// Increment series from possibly pre-differenced input.
pub(crate) fn resolve_increments(series: &[f64], pre_differenced: bool) -> Vec<f64> {
    if pre_differenced {
        series.to_vec()
    } else {
        series.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

pub(crate) fn check_min_len(len: usize, min_len: usize, what: &str) -> Result<()> {
    if len < min_len {
        return Err(Error::DegenerateInput(format!(
            "{what} needs at least {min_len} points, got {len}"
        )));
    }
    Ok(())
}

pub(crate) fn check_finite_input(series: &[f64]) -> Result<()> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(pos) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput(format!(
            "non-finite value at position {pos}"
        )));
    }
    Ok(())
}

/// Least-squares slope of `y` against `x`; the workhorse of every
/// log-log fit here.
pub(crate) fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        num += (xi - mx) * (yi - my);
        den += (xi - mx) * (xi - mx);
    }
    num / den
}

/// Geometric grid of window sizes: powers of two from `lo` while they stay
/// at or below `hi`.
pub(crate) fn dyadic_sizes(lo: usize, hi: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut s = lo;
    while s <= hi {
        out.push(s);
        s *= 2;
    }
    out
}
