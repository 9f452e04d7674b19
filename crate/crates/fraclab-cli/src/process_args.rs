//! Process selection shared by generate, train, and evaluate.

use fraclab::generators::{FouScheme, HurstSampling, LfsmMesh};
use fraclab::process::{FbmParams, FouParams, LfsmParams, ProcessKind, ProcessParams};
use fraclab::{Error, Result};

use crate::config::{
    fou_scheme_name, parse_f64, parse_fou_scheme, parse_hurst, parse_usize, pick, ConfigMap, Echo,
    HurstArg,
};

/// Flags describing the stochastic process. Only the flags matching the
/// selected process may be set; the rest must stay untouched, and the
/// same goes for config file keys.
#[derive(Debug, clap::Args)]
pub struct ProcessFlags {
    /// Process family: fbm, fou, or lfsm.
    #[arg(long)]
    process: Option<String>,
    /// Hurst exponent: a value in (0, 1), or `uniform` to draw one per
    /// trajectory as its label.
    #[arg(long)]
    hurst: Option<String>,
    /// Mean-reversion rate (fou).
    #[arg(long)]
    kappa: Option<String>,
    /// Long-run mean (fou).
    #[arg(long)]
    theta: Option<String>,
    /// Noise amplitude (fou).
    #[arg(long)]
    sigma: Option<String>,
    /// Initial value (fou).
    #[arg(long)]
    x0: Option<String>,
    /// Integration scheme (fou): euler-maruyama or exponential-euler.
    #[arg(long)]
    fou_scheme: Option<String>,
    /// Stability index in (0, 2] (lfsm).
    #[arg(long)]
    alpha: Option<String>,
    /// Driving noise scale (lfsm).
    #[arg(long)]
    scale: Option<String>,
    /// Kernel history length in time units (lfsm).
    #[arg(long)]
    lfsm_truncation: Option<String>,
    /// Kernel mesh points per time unit (lfsm).
    #[arg(long)]
    lfsm_resolution: Option<String>,
}

/// How a command treats the Hurst setting.
#[derive(Debug, Clone, Copy)]
pub enum HurstPolicy {
    /// `hurst` may be `uniform` or a fixed value; carries the default.
    Selectable(HurstArg),
    /// Labels are always drawn uniformly; a `hurst` setting is an error.
    ForcedUniform,
}

#[derive(Debug, Clone)]
pub struct ResolvedProcess {
    pub params: ProcessParams,
    pub hurst: HurstArg,
    pub fou_scheme: FouScheme,
    pub lfsm_mesh: LfsmMesh,
}

impl ResolvedProcess {
    pub fn sampling(&self) -> HurstSampling {
        match self.hurst {
            HurstArg::Uniform => HurstSampling::Uniform,
            HurstArg::Fixed(_) => HurstSampling::Fixed,
        }
    }

    /// Appends the process block in canonical key order.
    pub fn echo(&self, echo: &mut Echo) {
        echo.push("process", self.params.kind());
        echo.push("hurst", self.hurst);
        match &self.params {
            ProcessParams::Fbm(_) => {}
            ProcessParams::Fou(p) => {
                echo.push("kappa", p.kappa);
                echo.push("theta", p.theta);
                echo.push("sigma", p.sigma);
                echo.push("x0", p.x0);
                echo.push("fou_scheme", fou_scheme_name(self.fou_scheme));
            }
            ProcessParams::Lfsm(p) => {
                echo.push("alpha", p.alpha);
                echo.push("scale", p.scale);
                echo.push("lfsm_truncation", self.lfsm_mesh.truncation);
                echo.push("lfsm_resolution", self.lfsm_mesh.resolution);
            }
        }
    }
}

fn forbid(key: &str, flag: &Option<String>, cfg: &mut ConfigMap, kind: ProcessKind) -> Result<()> {
    if flag.is_some() || cfg.take(key).is_some() {
        return Err(Error::InvalidParameter(format!(
            "{key} does not apply to process {kind}"
        )));
    }
    Ok(())
}

/// Resolves the process block. Settings for the two unselected process
/// families are rejected rather than ignored.
pub fn resolve_process(
    flags: &ProcessFlags,
    cfg: &mut ConfigMap,
    policy: HurstPolicy,
) -> Result<ResolvedProcess> {
    let kind = pick("process", &flags.process, cfg, ProcessKind::Fbm, |k, s| {
        ProcessKind::parse(s)
            .ok_or_else(|| Error::InvalidParameter(format!("{k}: expected fbm, fou, or lfsm")))
    })?;

    let hurst = match policy {
        HurstPolicy::Selectable(default) => pick("hurst", &flags.hurst, cfg, default, parse_hurst)?,
        HurstPolicy::ForcedUniform => {
            if flags.hurst.is_some() || cfg.take("hurst").is_some() {
                return Err(Error::InvalidParameter(
                    "hurst cannot be set here: labels are always drawn uniformly".into(),
                ));
            }
            HurstArg::Uniform
        }
    };
    // Parameter structs need a concrete exponent even when each
    // trajectory draws its own; the placeholder is never used then.
    let h = match hurst {
        HurstArg::Uniform => 0.5,
        HurstArg::Fixed(v) => v,
    };

    let mut fou_scheme = FouScheme::default();
    let mut lfsm_mesh = LfsmMesh::default();
    let params = match kind {
        ProcessKind::Fbm => {
            for (key, flag) in [
                ("kappa", &flags.kappa),
                ("theta", &flags.theta),
                ("sigma", &flags.sigma),
                ("x0", &flags.x0),
                ("fou_scheme", &flags.fou_scheme),
                ("alpha", &flags.alpha),
                ("scale", &flags.scale),
                ("lfsm_truncation", &flags.lfsm_truncation),
                ("lfsm_resolution", &flags.lfsm_resolution),
            ] {
                forbid(key, flag, cfg, kind)?;
            }
            ProcessParams::Fbm(FbmParams { hurst: h })
        }
        ProcessKind::Fou => {
            for (key, flag) in [
                ("alpha", &flags.alpha),
                ("scale", &flags.scale),
                ("lfsm_truncation", &flags.lfsm_truncation),
                ("lfsm_resolution", &flags.lfsm_resolution),
            ] {
                forbid(key, flag, cfg, kind)?;
            }
            let p = FouParams {
                hurst: h,
                kappa: pick("kappa", &flags.kappa, cfg, 1.0, parse_f64)?,
                theta: pick("theta", &flags.theta, cfg, 0.0, parse_f64)?,
                sigma: pick("sigma", &flags.sigma, cfg, 1.0, parse_f64)?,
                x0: pick("x0", &flags.x0, cfg, 0.0, parse_f64)?,
            };
            fou_scheme = pick(
                "fou_scheme",
                &flags.fou_scheme,
                cfg,
                FouScheme::default(),
                parse_fou_scheme,
            )?;
            ProcessParams::Fou(p)
        }
        ProcessKind::Lfsm => {
            for (key, flag) in [
                ("kappa", &flags.kappa),
                ("theta", &flags.theta),
                ("sigma", &flags.sigma),
                ("x0", &flags.x0),
                ("fou_scheme", &flags.fou_scheme),
            ] {
                forbid(key, flag, cfg, kind)?;
            }
            let p = LfsmParams {
                hurst: h,
                alpha: pick("alpha", &flags.alpha, cfg, 1.5, parse_f64)?,
                scale: pick("scale", &flags.scale, cfg, 1.0, parse_f64)?,
            };
            lfsm_mesh = LfsmMesh {
                truncation: pick(
                    "lfsm_truncation",
                    &flags.lfsm_truncation,
                    cfg,
                    lfsm_mesh.truncation,
                    parse_usize,
                )?,
                resolution: pick(
                    "lfsm_resolution",
                    &flags.lfsm_resolution,
                    cfg,
                    lfsm_mesh.resolution,
                    parse_usize,
                )?,
            };
            ProcessParams::Lfsm(p)
        }
    };

    // A fixed exponent must be a valid one; uniform sampling validates
    // everything else through the same path with the placeholder.
    params.validate()?;

    Ok(ResolvedProcess {
        params,
        hurst,
        fou_scheme,
        lfsm_mesh,
    })
}
