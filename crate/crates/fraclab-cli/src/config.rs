//! Flat `key = value` run configuration.
//!
//! Every subcommand resolves its settings in three layers: built-in
//! defaults, then an optional config file, then command line flags, the
//! later layers winning. The fully resolved configuration is echoed to
//! stdout and saved as `config.txt` next to the outputs; feeding that
//! file back through `--config` replays the run and rewrites the same
//! output bytes.
//!
//! `--threads` is deliberately not a config key: results never depend on
//! it, so it is an execution knob rather than part of a run's identity.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use fraclab::generators::FouScheme;
use fraclab::io::HeaderMode;
use fraclab::{Error, Result};

/// Key-value pairs from a config file, consumed key by key so leftovers
/// can be rejected.
#[derive(Debug, Default)]
pub struct ConfigMap {
    values: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn empty() -> Self {
        ConfigMap::default()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Accepts `key = value` lines, blank lines, and `#` comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("config line {}: no '=' in {line:?}", i + 1))
            })?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "config line {}: empty key",
                    i + 1
                )));
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "config line {}: duplicate key {key:?}",
                    i + 1
                )));
            }
        }
        Ok(ConfigMap { values })
    }

    pub fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    /// Consumes the `command` key, if present, and checks it names the
    /// subcommand actually invoked.
    pub fn expect_command(&mut self, name: &str) -> Result<()> {
        if let Some(c) = self.take("command") {
            if c != name {
                return Err(Error::InvalidParameter(format!(
                    "config is for command {c:?}, but {name:?} was invoked"
                )));
            }
        }
        Ok(())
    }

    /// Rejects any key no command setting consumed.
    pub fn finish(self) -> Result<()> {
        match self.values.keys().next() {
            Some(k) => Err(Error::InvalidParameter(format!("unknown config key {k:?}"))),
            None => Ok(()),
        }
    }
}

/// Resolves one setting: flag wins over the file value, which wins over
/// the default. Both the flag and the file value go through the same
/// parser, so the two spellings can never drift apart.
pub fn pick<T>(
    key: &str,
    flag: &Option<String>,
    cfg: &mut ConfigMap,
    default: T,
    parse: impl Fn(&str, &str) -> Result<T>,
) -> Result<T> {
    let file_value = cfg.take(key);
    match flag.as_deref().or(file_value.as_deref()) {
        Some(s) => parse(key, s),
        None => Ok(default),
    }
}

/// [`pick`] without a default; `None` when neither layer sets the key.
pub fn pick_opt<T>(
    key: &str,
    flag: &Option<String>,
    cfg: &mut ConfigMap,
    parse: impl Fn(&str, &str) -> Result<T>,
) -> Result<Option<T>> {
    let file_value = cfg.take(key);
    match flag.as_deref().or(file_value.as_deref()) {
        Some(s) => Ok(Some(parse(key, s)?)),
        None => Ok(None),
    }
}

fn bad(key: &str, value: &str, want: &str) -> Error {
    Error::InvalidParameter(format!("{key}: expected {want}, got {value:?}"))
}

pub fn parse_f64(key: &str, s: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| bad(key, s, "a number"))?;
    if !v.is_finite() {
        return Err(bad(key, s, "a finite number"));
    }
    Ok(v)
}

pub fn parse_u64(key: &str, s: &str) -> Result<u64> {
    s.parse().map_err(|_| bad(key, s, "a nonnegative integer"))
}

pub fn parse_usize(key: &str, s: &str) -> Result<usize> {
    s.parse().map_err(|_| bad(key, s, "a nonnegative integer"))
}

pub fn parse_path(_key: &str, s: &str) -> Result<PathBuf> {
    Ok(PathBuf::from(s))
}

/// Comma-separated positive integers.
pub fn parse_usize_list(key: &str, s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| parse_usize(key, p.trim()))
        .collect()
}

/// Comma-separated numbers.
pub fn parse_f64_list(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|p| parse_f64(key, p.trim())).collect()
}

/// Comma-separated names, blanks dropped, so an empty string means none.
pub fn parse_name_list(_key: &str, s: &str) -> Result<Vec<String>> {
    Ok(s.split(',')
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty())
        .collect())
}

/// A Hurst setting: `uniform` for per-trajectory labels, or one value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HurstArg {
    Uniform,
    Fixed(f64),
}

impl Display for HurstArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HurstArg::Uniform => f.write_str("uniform"),
            HurstArg::Fixed(v) => write!(f, "{v}"),
        }
    }
}

pub fn parse_hurst(key: &str, s: &str) -> Result<HurstArg> {
    if s == "uniform" {
        return Ok(HurstArg::Uniform);
    }
    Ok(HurstArg::Fixed(parse_f64(key, s)?))
}

/// A grid step: `1/n` for unit-time paths, or one value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtArg {
    OneOverN,
    Fixed(f64),
}

impl DtArg {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            DtArg::OneOverN => 1.0 / n as f64,
            DtArg::Fixed(v) => v,
        }
    }
}

impl Display for DtArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DtArg::OneOverN => f.write_str("1/n"),
            DtArg::Fixed(v) => write!(f, "{v}"),
        }
    }
}

pub fn parse_dt(key: &str, s: &str) -> Result<DtArg> {
    if s == "1/n" {
        return Ok(DtArg::OneOverN);
    }
    Ok(DtArg::Fixed(parse_f64(key, s)?))
}

pub fn parse_fou_scheme(key: &str, s: &str) -> Result<FouScheme> {
    match s {
        "euler-maruyama" => Ok(FouScheme::EulerMaruyama),
        "exponential-euler" => Ok(FouScheme::ExponentialEuler),
        _ => Err(bad(key, s, "euler-maruyama or exponential-euler")),
    }
}

pub fn fou_scheme_name(scheme: FouScheme) -> &'static str {
    match scheme {
        FouScheme::EulerMaruyama => "euler-maruyama",
        FouScheme::ExponentialEuler => "exponential-euler",
    }
}

pub fn parse_header_mode(key: &str, s: &str) -> Result<HeaderMode> {
    HeaderMode::parse(s).ok_or_else(|| bad(key, s, "auto, present, or absent"))
}

pub fn header_mode_name(mode: HeaderMode) -> &'static str {
    match mode {
        HeaderMode::Auto => "auto",
        HeaderMode::Present => "present",
        HeaderMode::Absent => "absent",
    }
}

/// The resolved configuration, in a fixed key order, rendered exactly as
/// the config file format expects it back.
#[derive(Debug, Clone)]
pub struct Echo {
    lines: Vec<(String, String)>,
}

impl Echo {
    pub fn new(command: &str) -> Self {
        Echo {
            lines: vec![("command".into(), command.into())],
        }
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// Prints the block to stdout and pins a copy beside the outputs.
    pub fn announce(&self, out_dir: &Path) -> Result<()> {
        print!("{}", self.render());
        std::fs::create_dir_all(out_dir)?;
        std::fs::write(out_dir.join("config.txt"), self.render())?;
        Ok(())
    }
}

/// Default output directory: `runs/<timestamp>-<label>`, where the label
/// is the run's seed when it has one and the command name otherwise.
pub fn default_out_dir(label: &str) -> PathBuf {
    let stamp = chrono::Utc::now().format("%Y%m%d-%H%M%S");
    PathBuf::from("runs").join(format!("{stamp}-{label}"))
}

/// Loads `--config` when given, otherwise starts from an empty map.
pub fn load_config(path: &Option<PathBuf>) -> Result<ConfigMap> {
    match path {
        Some(p) => ConfigMap::from_file(p),
        None => Ok(ConfigMap::empty()),
    }
}
