//! Shared statistics helpers for integration tests.
#![allow(dead_code)]

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Ordinary least squares slope of y on x.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        num += (xi - mx) * (yi - my);
        den += (xi - mx) * (xi - mx);
    }
    num / den
}

/// Standard normal CDF (Abramowitz-Stegun 7.1.26, |err| < 1.5e-7).
pub fn normal_cdf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs() / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erf = 1.0 - poly * (-x * x).exp();
    0.5 * (1.0 + sign * erf)
}

/// Kolmogorov-Smirnov distance of the sample against the standard normal.
pub fn ks_distance_standard_normal(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in s.iter().enumerate() {
        let cdf = normal_cdf(*x);
        let hi = (i + 1) as f64 / n - cdf;
        let lo = cdf - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// Standardize to zero mean and unit (population) variance.
pub fn standardized(xs: &[f64]) -> Vec<f64> {
    let m = mean(xs);
    let sd = variance(xs).sqrt();
    xs.iter().map(|x| (x - m) / sd).collect()
}

/// Entrywise empirical covariance of row-vectors `paths` (biased, zero-mean
/// assumed NOT; subtracts the sample mean per coordinate).
pub fn empirical_covariance(paths: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = paths[0].len();
    let count = paths.len() as f64;
    let mut means = vec![0.0; n];
    for p in paths {
        for (m, v) in means.iter_mut().zip(p) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= count;
    }
    let mut cov = vec![vec![0.0; n]; n];
    for p in paths {
        for i in 0..n {
            let di = p[i] - means[i];
            for j in 0..=i {
                cov[i][j] += di * (p[j] - means[j]);
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            cov[i][j] /= count;
            cov[j][i] = cov[i][j];
        }
    }
    cov
}

/// Checks a sample covariance against a target Gaussian covariance: every
/// entry within `hard_se` standard errors, at most `soft_frac` of entries
/// beyond `soft_se`. The standard error of entry (i,j) over `count`
/// Gaussian draws is sqrt((c_ii c_jj + c_ij^2) / count).
pub fn assert_covariance_close(
    sample: &[Vec<f64>],
    target: &[Vec<f64>],
    count: usize,
    soft_se: f64,
    soft_frac: f64,
    hard_se: f64,
    label: &str,
) {
    let n = target.len();
    let mut checked = 0usize;
    let mut soft_fail = 0usize;
    for i in 0..n {
        for j in 0..=i {
            let se = ((target[i][i] * target[j][j] + target[i][j] * target[i][j])
                / count as f64)
                .sqrt();
            let dev = (sample[i][j] - target[i][j]).abs();
            checked += 1;
            if dev > soft_se * se {
                soft_fail += 1;
            }
            assert!(
                dev <= hard_se * se,
                "{label}: cov[{i}][{j}] = {} vs {} deviates {:.2} SE",
                sample[i][j],
                target[i][j],
                dev / se
            );
        }
    }
    let frac = soft_fail as f64 / checked as f64;
    assert!(
        frac <= soft_frac,
        "{label}: {soft_fail}/{checked} entries beyond {soft_se} SE"
    );
}
