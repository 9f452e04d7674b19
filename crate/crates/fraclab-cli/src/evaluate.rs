//! `fraclab evaluate`: cross-evaluate estimators on labelled trajectories
//! over a grid of lengths and write a report bundle.

use std::path::PathBuf;
use std::time::Instant;

use fraclab::classical::ClassicalEstimator;
use fraclab::eval::{
    benchmark_matrix_detailed, error_diagnostics, localized_rel_quantiles, matrix_csv,
    matrix_text, pairs_jsonl, DtRule, MatrixSpec, NamedEstimator,
};
use fraclab::generators::Generator;
use fraclab::neural::{load_model, LstmModel};
use fraclab::seed::SeedScheme;
use fraclab::{Error, Result};

use crate::config::{
    default_out_dir, load_config, parse_f64, parse_f64_list, parse_name_list, parse_path,
    parse_u64, parse_usize, parse_usize_list, pick, DtArg, Echo,
};
use crate::process_args::{resolve_process, HurstPolicy, ProcessFlags};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Config file supplying any of the settings below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    process: ProcessFlags,
    /// Comma-separated classical estimators to include as matrix rows.
    #[arg(long)]
    estimators: Option<String>,
    /// Comma-separated trained model files; each becomes a matrix row.
    #[arg(long)]
    models: Option<String>,
    /// Comma-separated evaluation lengths.
    #[arg(long)]
    eval_lengths: Option<String>,
    /// Trajectories per evaluation length.
    #[arg(long)]
    count: Option<String>,
    /// Grid spacing: a number or `1/n`.
    #[arg(long)]
    dt: Option<String>,
    /// Master seed for the evaluation batches.
    #[arg(long)]
    seed: Option<String>,
    /// Truth values around which relative errors are summarized.
    #[arg(long)]
    localize_centers: Option<String>,
    /// Initial half width of each localization window.
    #[arg(long)]
    localize_half_width: Option<String>,
    /// Minimum pairs per localization window before it stops widening.
    #[arg(long)]
    localize_min_pairs: Option<String>,
    /// Directory for the report bundle and the config echo.
    #[arg(long)]
    out_dir: Option<String>,
}

pub fn run(args: &Args) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    cfg.expect_command("evaluate")?;

    let process = resolve_process(&args.process, &mut cfg, HurstPolicy::ForcedUniform)?;
    let names = pick("estimators", &args.estimators, &mut cfg, Vec::new(), parse_name_list)?;
    let model_paths = pick("models", &args.models, &mut cfg, Vec::new(), parse_name_list)?;
    let eval_lengths = pick(
        "eval_lengths",
        &args.eval_lengths,
        &mut cfg,
        vec![1600usize],
        parse_usize_list,
    )?;
    let count = pick("count", &args.count, &mut cfg, 1000u64, parse_u64)?;
    let dt = pick("dt", &args.dt, &mut cfg, DtArg::OneOverN, crate::config::parse_dt)?;
    let seed = pick("seed", &args.seed, &mut cfg, 0u64, parse_u64)?;
    let centers = pick(
        "localize_centers",
        &args.localize_centers,
        &mut cfg,
        vec![0.1, 0.3, 0.5, 0.7, 0.9],
        parse_f64_list,
    )?;
    let half_width = pick(
        "localize_half_width",
        &args.localize_half_width,
        &mut cfg,
        0.05,
        parse_f64,
    )?;
    let min_pairs = pick(
        "localize_min_pairs",
        &args.localize_min_pairs,
        &mut cfg,
        30usize,
        parse_usize,
    )?;
    let out_dir = pick(
        "out_dir",
        &args.out_dir,
        &mut cfg,
        default_out_dir(&seed.to_string()),
        parse_path,
    )?;
    cfg.finish()?;

    if eval_lengths.is_empty() || eval_lengths.contains(&0) {
        return Err(Error::InvalidParameter(
            "eval_lengths: need at least one nonzero length".into(),
        ));
    }
    if count == 0 {
        return Err(Error::InvalidParameter("count: need at least one trajectory".into()));
    }

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
    if classical.is_empty() && model_paths.is_empty() {
        return Err(Error::InvalidParameter(
            "select at least one estimator or model row".into(),
        ));
    }

    let mut echo = Echo::new("evaluate");
    process.echo(&mut echo);
    echo.push("estimators", names.join(","));
    if !model_paths.is_empty() {
        echo.push("models", model_paths.join(","));
    }
    echo.push(
        "eval_lengths",
        eval_lengths.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
    );
    echo.push("count", count);
    echo.push("dt", dt);
    echo.push("seed", seed);
    echo.push(
        "localize_centers",
        centers.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","),
    );
    echo.push("localize_half_width", half_width);
    echo.push("localize_min_pairs", min_pairs);
    echo.push("out_dir", out_dir.display());
    echo.announce(&out_dir)?;

    // Model rows are named by file stem; if two stems collide the full path
    // keeps the rows distinguishable.
    let models: Vec<(String, LstmModel<f32>)> = model_paths
        .iter()
        .map(|p| {
            let path = PathBuf::from(p);
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.clone());
            Ok((stem, load_model(&path)?))
        })
        .collect::<Result<_>>()?;
    let mut row_names: Vec<String> = classical.iter().map(|e| e.name().to_string()).collect();
    for (i, (stem, _)) in models.iter().enumerate() {
        let clash = row_names.iter().any(|n| n == stem);
        row_names.push(if clash { model_paths[i].clone() } else { stem.clone() });
    }

    let mut estimators: Vec<NamedEstimator<'_>> = Vec::new();
    for (i, est) in classical.iter().enumerate() {
        let e = *est;
        estimators.push(NamedEstimator {
            name: row_names[i].clone(),
            estimate: Box::new(move |p| e.estimate(p, false).map(|h| h.estimate)),
        });
    }
    for (i, (_, model)) in models.iter().enumerate() {
        estimators.push(NamedEstimator {
            name: row_names[classical.len() + i].clone(),
            estimate: Box::new(move |p| model.estimate(p)),
        });
    }

    let spec = MatrixSpec {
        params: process.params,
        hurst_sampling: process.sampling(),
        eval_lengths,
        count,
        seeds: SeedScheme::new(seed),
        dt: match dt {
            DtArg::OneOverN => DtRule::OneOverN,
            DtArg::Fixed(v) => DtRule::Fixed(v),
        },
        fou_scheme: process.fou_scheme,
        lfsm_mesh: process.lfsm_mesh,
    };

    let started = Instant::now();
    let detailed = benchmark_matrix_detailed(&Generator::new(), &estimators, &spec)?;
    eprintln!("evaluation: {:.3} s", started.elapsed().as_secs_f64());

    let table = matrix_text(&detailed.matrix);
    print!("{table}");

    std::fs::write(out_dir.join("report.txt"), &table)?;
    std::fs::write(out_dir.join("report.csv"), matrix_csv(&detailed.matrix))?;

    let mut dump = String::new();
    for (ri, row) in detailed.matrix.rows.iter().enumerate() {
        for (li, &n) in detailed.matrix.eval_lengths.iter().enumerate() {
            dump.push_str(&pairs_jsonl(&row.name, n, &detailed.pairs[ri][li]));
        }
    }
    std::fs::write(out_dir.join("pairs.jsonl"), dump)?;

    let mut diag = String::from(
        "estimator,eval_len,count,skewness_signed,excess_kurtosis,jarque_bera,jb_critical_1pct,normal_at_1pct\n",
    );
    for (ri, row) in detailed.matrix.rows.iter().enumerate() {
        for (li, &n) in detailed.matrix.eval_lengths.iter().enumerate() {
            let pairs = &detailed.pairs[ri][li];
            if pairs.len() < 8 {
                continue;
            }
            let d = error_diagnostics(pairs)?;
            diag.push_str(&format!(
                "{},{n},{},{},{},{},{},{}\n",
                row.name, d.count, d.skewness_signed, d.excess_kurtosis, d.jarque_bera,
                d.jb_critical_1pct, d.normal_at_1pct
            ));
        }
    }
    std::fs::write(out_dir.join("diagnostics.csv"), diag)?;

    let mut localized = String::from(
        "estimator,eval_len,center,half_width,pairs,rel_q50_percent,rel_q95_percent\n",
    );
    for (ri, row) in detailed.matrix.rows.iter().enumerate() {
        for (li, &n) in detailed.matrix.eval_lengths.iter().enumerate() {
            let pairs = &detailed.pairs[ri][li];
            if pairs.len() < min_pairs {
                continue;
            }
            for &center in &centers {
                // A window can run out of qualifying pairs even after
                // widening; such centers are skipped, not fatal.
                match localized_rel_quantiles(pairs, center, half_width, min_pairs) {
                    Ok(q) => localized.push_str(&format!(
                        "{},{n},{center},{},{},{},{}\n",
                        row.name, q.half_width, q.pairs, q.rel_q50_percent, q.rel_q95_percent
                    )),
                    Err(Error::DegenerateInput(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
        }
    }
    std::fs::write(out_dir.join("localized.csv"), localized)?;

    for f in ["report.txt", "report.csv", "pairs.jsonl", "diagnostics.csv", "localized.csv"] {
        println!("wrote {}", out_dir.join(f).display());
    }
    Ok(())
}
