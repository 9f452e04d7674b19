//! Error metrics and reports over (estimate, truth) pairs.
//!
//! Relative metrics divide by the truth, which explodes near zero;
//! pairs whose truth is below [`REL_TRUTH_THRESHOLD`] in magnitude are
//! excluded from the relative metrics only. Quantiles follow the linear
//! interpolation convention `h = (n - 1) p` (type 7), and skewness is the
//! population moment ratio `m3 / m2^(3/2)`.

mod emit;
mod matrix;

pub use emit::{histogram_csv, matrix_csv, matrix_jsonl, matrix_text, pairs_jsonl, report_csv};
pub use matrix::{
    benchmark_matrix, benchmark_matrix_detailed, BenchmarkMatrix, DetailedMatrix, DtRule,
    MatrixRow, MatrixSpec, NamedEstimator,
};

use crate::error::{Error, Result};

/// Pairs with `|truth|` below this take no part in relative metrics.
pub const REL_TRUTH_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub count: usize,
    /// Pairs that qualified for the relative metrics.
    pub used_relative: usize,
    pub rmse: f64,
    pub mae: f64,
    /// Mean of `|error| / |truth|`, in percent.
    pub mre_percent: f64,
    pub max_abs: f64,
    pub abs_q50: f64,
    pub abs_q95: f64,
    pub rel_q50_percent: f64,
    pub rel_q95_percent: f64,
    /// Population skewness of the signed errors.
    pub skewness_signed: f64,
    /// Population skewness of the absolute errors.
    pub skewness_abs: f64,
}

/// Type-7 quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    assert!((0.0..=1.0).contains(&p), "p out of [0,1]: {p}");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Type-7 quantile; sorts a copy.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    quantile_sorted(&s, p)
}

/// Population skewness `m3 / m2^(3/2)`. Zero-variance samples map to 0.
pub fn skewness(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    for x in xs {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if m2 == 0.0 {
        0.0
    } else {
        m3 / m2.powf(1.5)
    }
}

/// Full error report over `(estimate, truth)` pairs.
pub fn compute_report(pairs: &[(f64, f64)]) -> Result<ErrorReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (i, (e, t)) in pairs.iter().enumerate() {
        if !e.is_finite() || !t.is_finite() {
            return Err(Error::NonFinite(format!(
                "pair {i} of error report: ({e}, {t})"
            )));
        }
    }
    let n = pairs.len() as f64;
    let signed: Vec<f64> = pairs.iter().map(|(e, t)| e - t).collect();
    let abs: Vec<f64> = signed.iter().map(|d| d.abs()).collect();

    let rmse = (abs.iter().map(|d| d * d).sum::<f64>() / n).sqrt();
    let mae = abs.iter().sum::<f64>() / n;
    let max_abs = abs.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut abs_sorted = abs.clone();
    abs_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let abs_q50 = quantile_sorted(&abs_sorted, 0.5);
    let abs_q95 = quantile_sorted(&abs_sorted, 0.95);

    let mut rel: Vec<f64> = pairs
        .iter()
        .filter(|(_, t)| t.abs() >= REL_TRUTH_THRESHOLD)
        .map(|(e, t)| (e - t).abs() / t.abs() * 100.0)
        .collect();
    let used_relative = rel.len();
    let (mre_percent, rel_q50_percent, rel_q95_percent) = if rel.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let mre = rel.iter().sum::<f64>() / rel.len() as f64;
        rel.sort_by(|a, b| a.partial_cmp(b).unwrap());
        (
            mre,
            quantile_sorted(&rel, 0.5),
            quantile_sorted(&rel, 0.95),
        )
    };

    Ok(ErrorReport {
        count: pairs.len(),
        used_relative,
        rmse,
        mae,
        mre_percent,
        max_abs,
        abs_q50,
        abs_q95,
        rel_q50_percent,
        rel_q95_percent,
        skewness_signed: skewness(&signed),
        skewness_abs: skewness(&abs),
    })
}

/// Symmetric absolute-error band around a point estimate, clipped to the
/// admissible range [0, 1] of the exponent:
/// `(max(est - q, 0), min(est + q, 1))`.
pub fn confidence_interval(estimate: f64, abs_q: f64) -> (f64, f64) {
    ((estimate - abs_q).max(0.0), (estimate + abs_q).min(1.0))
}

/// Interval implied by a relative error quantile `q` (in percent): if
/// `|est - H| / H <= q/100`, then `H` lies in
/// `[est / (1 + q/100), est / (1 - q/100)]`, clipped to [0, 1]. A quantile
/// of 100% or more leaves the upper end unbounded, hence 1.
pub fn rel_confidence_interval(estimate: f64, rel_q_percent: f64) -> (f64, f64) {
    let r = rel_q_percent / 100.0;
    let lo = (estimate / (1.0 + r)).max(0.0);
    let hi = if r < 1.0 {
        (estimate / (1.0 - r)).min(1.0)
    } else {
        1.0
    };
    (lo, hi)
}

/// Relative error quantiles among pairs whose truth lies near `center`.
/// The window starts at `half_width` and widens in steps of 0.05 until at
/// least `min_pairs` qualify; reports how wide it ended up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizedRelQuantiles {
    pub center: f64,
    pub half_width: f64,
    pub pairs: usize,
    pub rel_q50_percent: f64,
    pub rel_q95_percent: f64,
}

pub fn localized_rel_quantiles(
    pairs: &[(f64, f64)],
    center: f64,
    half_width: f64,
    min_pairs: usize,
) -> Result<LocalizedRelQuantiles> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut w = half_width;
    loop {
        let mut rel: Vec<f64> = pairs
            .iter()
            .filter(|(_, t)| (t - center).abs() <= w && t.abs() >= REL_TRUTH_THRESHOLD)
            .map(|(e, t)| (e - t).abs() / t.abs() * 100.0)
            .collect();
        if rel.len() >= min_pairs {
            rel.sort_by(|a, b| a.partial_cmp(b).unwrap());
            return Ok(LocalizedRelQuantiles {
                center,
                half_width: w,
                pairs: rel.len(),
                rel_q50_percent: quantile_sorted(&rel, 0.5),
                rel_q95_percent: quantile_sorted(&rel, 0.95),
            });
        }
        if w > 1.0 {
            return Err(Error::DegenerateInput(format!(
                "only {} pairs near truth {center}, need {min_pairs}",
                rel.len()
            )));
        }
        w += 0.05;
    }
}

/// Jarque-Bera normality diagnostic of the signed errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorDiagnostics {
    pub count: usize,
    pub skewness_signed: f64,
    pub excess_kurtosis: f64,
    pub jarque_bera: f64,
    /// 99% critical value of the chi-squared distribution with 2 degrees
    /// of freedom.
    pub jb_critical_1pct: f64,
    pub normal_at_1pct: bool,
}

pub const JB_CRITICAL_1PCT: f64 = 9.210340371976184;

pub fn error_diagnostics(pairs: &[(f64, f64)]) -> Result<ErrorDiagnostics> {
    if pairs.len() < 8 {
        return Err(Error::DegenerateInput(format!(
            "diagnostics need at least 8 pairs, got {}",
            pairs.len()
        )));
    }
    let errs: Vec<f64> = pairs.iter().map(|(e, t)| e - t).collect();
    let n = errs.len() as f64;
    let mean = errs.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for x in &errs {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return Err(Error::DegenerateInput(
            "diagnostics: zero-variance errors".into(),
        ));
    }
    let skew = m3 / m2.powf(1.5);
    let exkurt = m4 / (m2 * m2) - 3.0;
    let jb = n / 6.0 * (skew * skew + exkurt * exkurt / 4.0);
    Ok(ErrorDiagnostics {
        count: errs.len(),
        skewness_signed: skew,
        excess_kurtosis: exkurt,
        jarque_bera: jb,
        jb_critical_1pct: JB_CRITICAL_1PCT,
        normal_at_1pct: jb <= JB_CRITICAL_1PCT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate_linearly() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert_eq!(quantile(&xs, 0.5), 2.5);
        // h = 3 * 0.95 = 2.85
        assert!((quantile(&xs, 0.95) - 3.85).abs() < 1e-15);
    }

    #[test]
    fn skewness_of_symmetric_sample_is_zero() {
        let xs = [-2.0, -1.0, 0.0, 1.0, 2.0];
        assert_eq!(skewness(&xs), 0.0);
        assert!(skewness(&[5.0, 5.0, 5.0]) == 0.0);
    }

    #[test]
    fn skewness_sign_tracks_tail() {
        assert!(skewness(&[0.0, 0.0, 0.0, 0.0, 10.0]) > 1.0);
        assert!(skewness(&[0.0, 0.0, 0.0, 0.0, -10.0]) < -1.0);
    }

    #[test]
    fn report_on_tiny_example() {
        let pairs = [(0.5, 0.4), (0.3, 0.3), (0.7, 0.9)];
        let r = compute_report(&pairs).unwrap();
        assert_eq!(r.count, 3);
        assert_eq!(r.used_relative, 3);
        let expect_rmse = ((0.01f64 + 0.0 + 0.04) / 3.0).sqrt();
        assert!((r.rmse - expect_rmse).abs() < 1e-12);
        assert!((r.max_abs - 0.2).abs() < 1e-12);
        assert!((r.mae - 0.1).abs() < 1e-12);
    }

    #[test]
    fn relative_metrics_skip_tiny_truths() {
        let pairs = [(0.5, 0.5), (1.0, 0.001)];
        let r = compute_report(&pairs).unwrap();
        assert_eq!(r.used_relative, 1);
        assert_eq!(r.mre_percent, 0.0);
    }

    #[test]
    fn relative_metrics_are_nan_when_nothing_qualifies() {
        let pairs = [(0.5, 0.001)];
        let r = compute_report(&pairs).unwrap();
        assert_eq!(r.used_relative, 0);
        assert!(r.mre_percent.is_nan());
        assert!(r.rel_q95_percent.is_nan());
    }

    #[test]
    fn report_rejects_non_finite() {
        assert!(compute_report(&[(f64::NAN, 0.5)]).is_err());
        assert!(compute_report(&[]).is_err());
    }

    #[test]
    fn confidence_interval_clips_to_unit_range() {
        assert_eq!(confidence_interval(0.5, 0.1), (0.4, 0.6));
        let (lo, hi) = confidence_interval(0.95, 0.2);
        assert!((lo - 0.75).abs() < 1e-15);
        assert_eq!(hi, 1.0);
        assert_eq!(confidence_interval(0.05, 0.2).0, 0.0);
    }

    #[test]
    fn rel_interval_inverts_the_ratio_bound() {
        let (lo, hi) = rel_confidence_interval(0.5, 100.0 / 3.0);
        // |est - H| <= H/3 gives H in [est / (4/3), est / (2/3)].
        assert!((lo - 0.375).abs() < 1e-12, "{lo}");
        assert!((hi - 0.75).abs() < 1e-12, "{hi}");
        // Quantiles of 100% or more cannot bound H from above.
        assert_eq!(rel_confidence_interval(0.5, 130.0).1, 1.0);
    }

    #[test]
    fn localized_quantiles_widen_to_reach_floor() {
        let pairs: Vec<(f64, f64)> = (0..100)
            .map(|i| {
                let t = i as f64 / 100.0;
                (t + 0.01, t)
            })
            .collect();
        let loc = localized_rel_quantiles(&pairs, 0.5, 0.1, 30).unwrap();
        assert!(loc.pairs >= 30);
        assert!(loc.half_width >= 0.1 && loc.half_width < 0.3);
        let narrow = localized_rel_quantiles(&pairs, 0.5, 0.02, 30).unwrap();
        assert!(narrow.half_width > 0.02, "window must have widened");
    }

    #[test]
    fn diagnostics_flag_normal_and_heavy_samples() {
        // Deterministic normal-ish scores through the probit of a uniform
        // grid would be overkill; a coarse triangle-shaped sample already
        // passes JB at 1% while an extreme outlier sample fails it.
        let normal_ish: Vec<(f64, f64)> = (1..100)
            .map(|i| {
                let u = i as f64 / 100.0;
                // crude symmetric bell via inverse-ish map
                let z = (u - 0.5) * 2.0;
                (z - z * z * z / 3.0, 0.0)
            })
            .collect();
        let d = error_diagnostics(&normal_ish).unwrap();
        assert!(d.jarque_bera < JB_CRITICAL_1PCT, "JB {}", d.jarque_bera);
        assert!(d.normal_at_1pct);

        let mut heavy = normal_ish;
        heavy.push((50.0, 0.0));
        let d = error_diagnostics(&heavy).unwrap();
        assert!(d.jarque_bera > JB_CRITICAL_1PCT, "JB {}", d.jarque_bera);
        assert!(!d.normal_at_1pct);
    }
}
