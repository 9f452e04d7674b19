//! Plain-text renderers for reports and benchmark matrices.
//!
//! Floats go through the default formatter, which prints the shortest
//! string that parses back to the same bits, so CSV round-trips are exact.
//! JSON has no NaN, so unavailable metrics become `null` there and stay
//! `NaN` in CSV.

use super::{BenchmarkMatrix, ErrorReport};

const REPORT_HEADER: &str = "count,used_relative,rmse,mae,mre_percent,max_abs,abs_q50,abs_q95,rel_q50_percent,rel_q95_percent,skewness_signed,skewness_abs";

fn report_fields(r: &ErrorReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        r.count,
        r.used_relative,
        r.rmse,
        r.mae,
        r.mre_percent,
        r.max_abs,
        r.abs_q50,
        r.abs_q95,
        r.rel_q50_percent,
        r.rel_q95_percent,
        r.skewness_signed,
        r.skewness_abs
    )
}

/// One labelled report per row.
pub fn report_csv(rows: &[(String, ErrorReport)]) -> String {
    let mut out = format!("label,{REPORT_HEADER}\n");
    for (label, r) in rows {
        out.push_str(label);
        out.push(',');
        out.push_str(&report_fields(r));
        out.push('\n');
    }
    out
}

/// Long-form CSV: one row per (estimator, evaluation length) cell.
pub fn matrix_csv(m: &BenchmarkMatrix) -> String {
    let mut out = format!("estimator,eval_len,{REPORT_HEADER}\n");
    for row in &m.rows {
        for (n, cell) in m.eval_lengths.iter().zip(&row.cells) {
            out.push_str(&format!("{},{},{}\n", row.name, n, report_fields(cell)));
        }
    }
    out
}

/// Aligned RMSE grid for terminals, estimators down, lengths across.
pub fn matrix_text(m: &BenchmarkMatrix) -> String {
    let name_w = m
        .rows
        .iter()
        .map(|r| r.name.len())
        .max()
        .unwrap_or(0)
        .max("estimator".len());
    let mut out = format!("{:<name_w$}", "estimator");
    for n in &m.eval_lengths {
        out.push_str(&format!(" {:>9}", format!("n={n}")));
    }
    out.push('\n');
    for row in &m.rows {
        out.push_str(&format!("{:<name_w$}", row.name));
        for cell in &row.cells {
            out.push_str(&format!(" {:>9.4}", cell.rmse));
        }
        out.push('\n');
    }
    out
}

fn json_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "null".into()
    }
}

/// One JSON object per line and per cell, for downstream tooling.
pub fn matrix_jsonl(m: &BenchmarkMatrix) -> String {
    let mut out = String::new();
    for row in &m.rows {
        for (n, c) in m.eval_lengths.iter().zip(&row.cells) {
            out.push_str(&format!(
                concat!(
                    "{{\"estimator\":\"{}\",\"eval_len\":{},\"count\":{},\"used_relative\":{},",
                    "\"rmse\":{},\"mae\":{},\"mre_percent\":{},\"max_abs\":{},",
                    "\"abs_q50\":{},\"abs_q95\":{},\"rel_q50_percent\":{},\"rel_q95_percent\":{},",
                    "\"skewness_signed\":{},\"skewness_abs\":{}}}\n"
                ),
                row.name,
                n,
                c.count,
                c.used_relative,
                json_num(c.rmse),
                json_num(c.mae),
                json_num(c.mre_percent),
                json_num(c.max_abs),
                json_num(c.abs_q50),
                json_num(c.abs_q95),
                json_num(c.rel_q50_percent),
                json_num(c.rel_q95_percent),
                json_num(c.skewness_signed),
                json_num(c.skewness_abs),
            ));
        }
    }
    out
}

/// One JSON object per `(estimate, truth)` pair, keyed by estimator,
/// evaluation length, and trajectory index, for external plotting.
pub fn pairs_jsonl(estimator: &str, eval_len: usize, pairs: &[(f64, f64)]) -> String {
    let mut out = String::new();
    for (i, (e, t)) in pairs.iter().enumerate() {
        out.push_str(&format!(
            "{{\"estimator\":\"{estimator}\",\"eval_len\":{eval_len},\"index\":{i},\
             \"estimate\":{},\"truth\":{}}}\n",
            json_num(*e),
            json_num(*t),
        ));
    }
    out
}

/// Equal-width histogram as CSV rows `bin_lo,bin_hi,count`.
pub fn histogram_csv(xs: &[f64], bins: usize) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    if xs.is_empty() || bins == 0 {
        return out;
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        out.push_str(&format!("{lo},{hi},{}\n", xs.len()));
        return out;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in xs {
        let mut b = ((x - lo) / width) as usize;
        if b >= bins {
            b = bins - 1;
        }
        counts[b] += 1;
    }
    for (b, c) in counts.iter().enumerate() {
        let a = lo + width * b as f64;
        let z = if b + 1 == bins {
            hi
        } else {
            lo + width * (b + 1) as f64
        };
        out.push_str(&format!("{a},{z},{c}\n"));
    }
    out
}
