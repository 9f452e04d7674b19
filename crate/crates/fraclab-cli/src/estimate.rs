//! `fraclab estimate`: run estimators on measured series from a CSV file.

use std::path::PathBuf;

use fraclab::classical::ClassicalEstimator;
use fraclab::eval::{confidence_interval, rel_confidence_interval};
use fraclab::io::{load_series, HeaderMode};
use fraclab::neural::{load_model, LstmModel};
use fraclab::{Error, Result};

use crate::config::{
    default_out_dir, header_mode_name, load_config, parse_f64, parse_header_mode, parse_name_list,
    parse_path, pick, pick_opt, Echo,
};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Config file supplying any of the settings below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Series CSV: one series per row, or a single column for one series.
    #[arg(long)]
    input: Option<String>,
    /// First row handling: auto, present, or absent.
    #[arg(long)]
    header: Option<String>,
    /// Comma-separated classical estimators
    /// (higuchi, madogram, variogram, rs, dfa, whittle).
    #[arg(long)]
    estimators: Option<String>,
    /// Trained model file to apply alongside the classical estimators.
    #[arg(long)]
    model: Option<String>,
    /// Absolute-error quantile; prints `(est - q, est + q)` clipped to [0, 1].
    #[arg(long)]
    ci_abs: Option<String>,
    /// Relative-error quantile in percent; prints the inverted interval.
    #[arg(long)]
    ci_rel: Option<String>,
    /// Estimates CSV path.
    #[arg(long)]
    out: Option<String>,
    /// Directory for default outputs and the config echo.
    #[arg(long)]
    out_dir: Option<String>,
}

/// Tags a per-series failure with the series number, keeping the variant
/// so the exit code still reflects the cause.
fn with_series(index: usize, e: Error) -> Error {
    match e {
        Error::DegenerateInput(m) => Error::DegenerateInput(format!("series {index}: {m}")),
        Error::InvalidParameter(m) => Error::InvalidParameter(format!("series {index}: {m}")),
        Error::NonFinite(m) => Error::NonFinite(format!("series {index}: {m}")),
        other => other,
    }
}

enum Interval {
    None,
    Abs(f64),
    Rel(f64),
}

impl Interval {
    fn around(&self, estimate: f64) -> Option<(f64, f64)> {
        match self {
            Interval::None => None,
            Interval::Abs(q) => Some(confidence_interval(estimate, *q)),
            Interval::Rel(q) => Some(rel_confidence_interval(estimate, *q)),
        }
    }
}

pub fn run(args: &Args) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    cfg.expect_command("estimate")?;

    let input = pick_opt("input", &args.input, &mut cfg, parse_path)?
        .ok_or_else(|| Error::InvalidParameter("input: a series CSV file is required".into()))?;
    let header = pick("header", &args.header, &mut cfg, HeaderMode::Auto, parse_header_mode)?;
    let names = pick("estimators", &args.estimators, &mut cfg, Vec::new(), parse_name_list)?;
    let model_path = pick_opt("model", &args.model, &mut cfg, parse_path)?;
    let ci_abs = pick_opt("ci_abs", &args.ci_abs, &mut cfg, parse_f64)?;
    let ci_rel = pick_opt("ci_rel", &args.ci_rel, &mut cfg, parse_f64)?;
    let out_dir = pick(
        "out_dir",
        &args.out_dir,
        &mut cfg,
        default_out_dir("estimate"),
        parse_path,
    )?;
    let out = pick("out", &args.out, &mut cfg, out_dir.join("estimates.csv"), parse_path)?;
    cfg.finish()?;

    let classical: Vec<ClassicalEstimator> = names
        .iter()
        .map(|n| {
            ClassicalEstimator::parse(n).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "estimators: unknown estimator {n:?} (higuchi, madogram, variogram, rs, dfa, whittle)"
                ))
            })
        })
        .collect::<Result<_>>()?;
    if classical.is_empty() && model_path.is_none() {
        return Err(Error::InvalidParameter(
            "select at least one estimator or a model".into(),
        ));
    }
    let interval = match (ci_abs, ci_rel) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidParameter(
                "ci_abs and ci_rel are mutually exclusive".into(),
            ))
        }
        (Some(q), None) if q >= 0.0 => Interval::Abs(q),
        (None, Some(q)) if q >= 0.0 => Interval::Rel(q),
        (None, None) => Interval::None,
        _ => {
            return Err(Error::InvalidParameter(
                "confidence quantiles must be nonnegative".into(),
            ))
        }
    };

    let mut echo = Echo::new("estimate");
    echo.push("input", input.display());
    echo.push("header", header_mode_name(header));
    echo.push("estimators", names.join(","));
    if let Some(p) = &model_path {
        echo.push("model", p.display());
    }
    if let Interval::Abs(q) = interval {
        echo.push("ci_abs", q);
    }
    if let Interval::Rel(q) = interval {
        echo.push("ci_rel", q);
    }
    echo.push("out_dir", out_dir.display());
    echo.push("out", out.display());
    echo.announce(&out_dir)?;

    let model: Option<(String, LstmModel<f32>)> = match &model_path {
        Some(p) => {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            Some((name, load_model(p)?))
        }
        None => None,
    };

    let series = load_series(&input, header)?;

    let mut csv = String::from("series,n,estimator,estimate,raw,ci_lo,ci_hi\n");
    for (si, s) in series.iter().enumerate() {
        let number = si + 1;
        let mut rows: Vec<(String, f64, f64)> = Vec::new();
        for est in &classical {
            let h = est.estimate(s, false).map_err(|e| with_series(number, e))?;
            rows.push((est.name().to_string(), h.estimate, h.raw));
        }
        if let Some((name, m)) = &model {
            let v = m.estimate(s).map_err(|e| with_series(number, e))?;
            rows.push((name.clone(), v, v));
        }
        for (name, estimate, raw) in rows {
            let ci = interval.around(estimate);
            match ci {
                Some((lo, hi)) => {
                    println!("series {number} (n={}) {name}: {estimate:.4} ci ({lo:.4}, {hi:.4})", s.len());
                    csv.push_str(&format!("{number},{},{name},{estimate},{raw},{lo},{hi}\n", s.len()));
                }
                None => {
                    println!("series {number} (n={}) {name}: {estimate:.4}", s.len());
                    csv.push_str(&format!("{number},{},{name},{estimate},{raw},,\n", s.len()));
                }
            }
        }
    }

    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&out, csv)?;
    println!("wrote estimates to {}", out.display());
    Ok(())
}
