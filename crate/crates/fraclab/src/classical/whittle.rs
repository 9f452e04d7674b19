//! Whittle estimation on the increment periodogram.
//!
//! The spectral density of fGn, up to a scale factor profiled out of the
//! likelihood, is
//!
//! ```text
//! g_H(l) = 2 (1 - cos l) sum_{|k| <= K} |l + 2 pi k|^(-2H - 1)
//! ```
//!
//! The concentrated Whittle objective over the positive Fourier
//! frequencies `l_j = 2 pi j / n` is
//!
//! ```text
//! W(H) = mean_j log g_H(l_j) + log mean_j I(l_j) / g_H(l_j)
//! ```
//!
//! minimized by a coarse grid pass followed by golden-section refinement.
//! Increments are centered and scaled to unit variance first; that only
//! touches the zero frequency and an additive constant of the objective,
//! and makes the estimate invariant under affine input maps.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{check_finite_input, check_min_len, resolve_increments, HurstEstimate};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WhittleConfig {
    /// Number of aliases `K` in the spectral density sum.
    pub truncation: usize,
    /// Nodes of the coarse grid scan over the search interval.
    pub grid_points: usize,
    /// Width of the final golden-section bracket.
    pub tolerance: f64,
    /// Search interval for the exponent.
    pub bounds: (f64, f64),
    pub min_len: usize,
    pub pre_differenced: bool,
}

impl Default for WhittleConfig {
    fn default() -> Self {
        WhittleConfig {
            truncation: 200,
            grid_points: 25,
            tolerance: 1e-6,
            bounds: (0.01, 0.99),
            min_len: 128,
            pre_differenced: false,
        }
    }
}

// Above this many (frequency, alias) log terms the precomputed table would
// cost more memory than the powf calls are worth.
const LOG_TABLE_LIMIT: usize = 4_000_000;

pub fn whittle(series: &[f64], cfg: &WhittleConfig) -> Result<HurstEstimate> {
    check_finite_input(series)?;
    let mut incr = resolve_increments(series, cfg.pre_differenced);
    check_min_len(incr.len(), cfg.min_len.max(32), "whittle")?;
    let (lo, hi) = cfg.bounds;
    if !(lo > 0.0 && hi < 1.0 && lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "whittle bounds out of (0,1): ({lo}, {hi})"
        )));
    }
    if cfg.grid_points < 3 {
        return Err(Error::InvalidParameter(format!(
            "whittle grid_points out of [3,inf): {}",
            cfg.grid_points
        )));
    }

    let n = incr.len();
    let mean = incr.iter().sum::<f64>() / n as f64;
    let var = incr.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    if !(var > 0.0) {
        return Err(Error::DegenerateInput(
            "whittle: increments have zero variance".into(),
        ));
    }
    let sd = var.sqrt();
    for x in &mut incr {
        *x = (*x - mean) / sd;
    }

    // Periodogram at the positive Fourier frequencies, Nyquist excluded.
    let mut buf: Vec<Complex64> = incr.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let nf = (n - 1) / 2;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * n as f64);
    let peri: Vec<f64> = (1..=nf).map(|j| buf[j].norm_sqr() * norm).collect();
    let freqs: Vec<f64> = (1..=nf)
        .map(|j| 2.0 * std::f64::consts::PI * j as f64 / n as f64)
        .collect();
    let cos_term: Vec<f64> = freqs.iter().map(|l| 2.0 * (1.0 - l.cos())).collect();

    let k = cfg.truncation;
    let terms = 2 * k + 1;
    let log_table: Option<Vec<f64>> = if nf * terms <= LOG_TABLE_LIMIT {
        let mut t = Vec::with_capacity(nf * terms);
        for &l in &freqs {
            for ki in -(k as i64)..=(k as i64) {
                t.push((l + 2.0 * std::f64::consts::PI * ki as f64).abs().ln());
            }
        }
        Some(t)
    } else {
        None
    };

    let alias_sum = |j: usize, s: f64| -> f64 {
        match &log_table {
            Some(t) => t[j * terms..(j + 1) * terms]
                .iter()
                .map(|&lg| (-s * lg).exp())
                .sum(),
            None => {
                let l = freqs[j];
                let mut acc = 0.0;
                for ki in -(k as i64)..=(k as i64) {
                    acc += (l + 2.0 * std::f64::consts::PI * ki as f64).abs().powf(-s);
                }
                acc
            }
        }
    };

    let objective = |h: f64| -> f64 {
        let s = 2.0 * h + 1.0;
        let mut sum_log_g = 0.0;
        let mut sum_ratio = 0.0;
        for j in 0..nf {
            let g = cos_term[j] * alias_sum(j, s);
            sum_log_g += g.ln();
            sum_ratio += peri[j] / g;
        }
        let w = sum_log_g / nf as f64 + (sum_ratio / nf as f64).ln();
        if w.is_finite() {
            w
        } else {
            f64::INFINITY
        }
    };

    let step = (hi - lo) / (cfg.grid_points - 1) as f64;
    let mut best_h = f64::NAN;
    let mut best_w = f64::INFINITY;
    for i in 0..cfg.grid_points {
        let h = lo + step * i as f64;
        let w = objective(h);
        if w < best_w {
            best_w = w;
            best_h = h;
        }
    }
    if !best_w.is_finite() {
        return Err(Error::OptimizationFailure(
            "whittle objective is non-finite over the whole grid".into(),
        ));
    }

    let a = (best_h - step).max(lo);
    let b = (best_h + step).min(hi);
    let h = golden_min(a, b, cfg.tolerance, objective);
    HurstEstimate::from_raw(h)
}

fn golden_min(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}
