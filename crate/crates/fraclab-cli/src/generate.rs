//! `fraclab generate`: simulate a trajectory batch and store it.

use std::path::PathBuf;
use std::time::Instant;

use fraclab::generators::{BatchRequest, Generator};
use fraclab::{io, Error, Result, SeedScheme};

use crate::config::{
    default_out_dir, load_config, parse_dt, parse_path, parse_u64, parse_usize, pick, DtArg, Echo,
};
use crate::process_args::{resolve_process, HurstPolicy, ProcessFlags};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OutputFormat {
    Binary,
    Csv,
}

impl OutputFormat {
    fn name(self) -> &'static str {
        match self {
            OutputFormat::Binary => "binary",
            OutputFormat::Csv => "csv",
        }
    }

    fn default_file(self) -> &'static str {
        match self {
            OutputFormat::Binary => "trajectories.bin",
            OutputFormat::Csv => "trajectories.csv",
        }
    }
}

fn parse_format(key: &str, s: &str) -> Result<OutputFormat> {
    match s {
        "binary" => Ok(OutputFormat::Binary),
        "csv" => Ok(OutputFormat::Csv),
        _ => Err(Error::InvalidParameter(format!(
            "{key}: expected binary or csv, got {s:?}"
        ))),
    }
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Config file supplying any of the settings below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    process: ProcessFlags,
    /// Samples per trajectory.
    #[arg(long)]
    n: Option<String>,
    /// Trajectories to generate.
    #[arg(long)]
    count: Option<String>,
    /// Grid step: a number, or `1/n` for unit-time paths.
    #[arg(long)]
    dt: Option<String>,
    /// Master seed; every trajectory derives from (seed, index).
    #[arg(long)]
    seed: Option<String>,
    /// Batch file format: binary or csv.
    #[arg(long)]
    format: Option<String>,
    /// Batch file path.
    #[arg(long)]
    out: Option<String>,
    /// Directory for default outputs and the config echo.
    #[arg(long)]
    out_dir: Option<String>,
}

pub fn run(args: &Args) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    cfg.expect_command("generate")?;

    let process = resolve_process(
        &args.process,
        &mut cfg,
        HurstPolicy::Selectable(crate::config::HurstArg::Uniform),
    )?;
    let n = pick("n", &args.n, &mut cfg, 1600, parse_usize)?;
    let count = pick("count", &args.count, &mut cfg, 100, parse_u64)?;
    let dt = pick("dt", &args.dt, &mut cfg, DtArg::OneOverN, parse_dt)?;
    let seed = pick("seed", &args.seed, &mut cfg, 0, parse_u64)?;
    let format = pick("format", &args.format, &mut cfg, OutputFormat::Binary, parse_format)?;
    let out_dir = pick(
        "out_dir",
        &args.out_dir,
        &mut cfg,
        default_out_dir(&seed.to_string()),
        parse_path,
    )?;
    let out = pick(
        "out",
        &args.out,
        &mut cfg,
        out_dir.join(format.default_file()),
        parse_path,
    )?;
    cfg.finish()?;

    let mut echo = Echo::new("generate");
    process.echo(&mut echo);
    echo.push("n", n);
    echo.push("count", count);
    echo.push("dt", dt);
    echo.push("seed", seed);
    echo.push("format", format.name());
    echo.push("out_dir", out_dir.display());
    echo.push("out", out.display());
    echo.announce(&out_dir)?;

    let mut req = BatchRequest::new(process.params, n, dt.resolve(n), count, SeedScheme::new(seed));
    req.hurst_sampling = process.sampling();
    req.fou_scheme = process.fou_scheme;
    req.lfsm_mesh = process.lfsm_mesh;

    let gen = Generator::new();
    let start = Instant::now();
    let batch = gen.batch(&req)?;
    let took = start.elapsed().as_secs_f64();

    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    match format {
        OutputFormat::Binary => io::save_trajectories(&out, &batch)?,
        OutputFormat::Csv => io::save_trajectories_csv(&out, &batch)?,
    }

    println!("wrote {count} trajectories of length {n} to {}", out.display());
    eprintln!(
        "generation: {took:.3} s ({:.0} paths/s)",
        count as f64 / took.max(1e-9)
    );
    Ok(())
}
