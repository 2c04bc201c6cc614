//! Run configuration: flags override the config file, which overrides the
//! built-in defaults (10 dB, n = 500 on both hops, k = 250, eta = 0.5,
//! beta = 0.5, alpha = 0).

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use fbrelay::{Backend, LinConvention, ProtocolKind, SnrValue, TopologyConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Closed,
    Quad,
    Mc,
}

impl FromStr for BackendKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "closed" | "closed_form" | "closed-form" => Ok(BackendKind::Closed),
            "quad" | "quadrature" => Ok(BackendKind::Quad),
            "mc" | "monte_carlo" | "monte-carlo" => Ok(BackendKind::Mc),
            other => Err(CliError::Input(format!("backend: unknown backend '{other}' (expected closed|quad|mc)"))),
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Protocols: comma-separated list of dt, df, sc, mrc, or "all".
    #[arg(long)]
    pub protocol: Option<String>,
    /// Total transmit SNR in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    /// Source share of the power budget, in (0, 1].
    #[arg(long)]
    pub eta: Option<f64>,
    /// S-R distance relative to S-D.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Path-loss exponent (0 disables path loss).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Blocklength of both hops.
    #[arg(long = "n")]
    pub n: Option<u32>,
    /// Source-hop blocklength (overrides --n).
    #[arg(long)]
    pub n_s: Option<u32>,
    /// Relay-hop blocklength (overrides --n).
    #[arg(long)]
    pub n_r: Option<u32>,
    /// Payload in bits.
    #[arg(long)]
    pub k: Option<u32>,
    /// Linearization convention: paper or bits.
    #[arg(long)]
    pub convention: Option<String>,
    /// Backends: comma-separated list of closed, quad, mc.
    #[arg(long)]
    pub backend: Option<String>,
    /// Monte Carlo trials; scientific notation such as 1e6 is accepted.
    #[arg(long)]
    pub trials: Option<String>,
    /// Monte Carlo seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Accept blocklengths below 100.
    #[arg(long)]
    pub allow_short_blocklength: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl OneOrMany {
    fn joined(&self) -> String {
        match self {
            OneOrMany::One(s) => s.clone(),
            OneOrMany::Many(v) => v.join(","),
        }
    }
}

/// Keys accepted in the config file; names match the long flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    protocol: Option<OneOrMany>,
    snr_db: Option<f64>,
    eta: Option<f64>,
    beta: Option<f64>,
    alpha: Option<f64>,
    n: Option<u32>,
    n_s: Option<u32>,
    n_r: Option<u32>,
    k: Option<u32>,
    convention: Option<String>,
    backend: Option<OneOrMany>,
    trials: Option<f64>,
    seed: Option<u64>,
    format: Option<Format>,
    output: Option<PathBuf>,
    allow_short_blocklength: Option<bool>,
}

impl FileConfig {
    fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("config: cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("config: {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub protocols: Vec<ProtocolKind>,
    pub snr_db: f64,
    pub eta: f64,
    pub beta: f64,
    pub alpha: f64,
    pub n_s: u32,
    pub n_r: u32,
    pub k: u32,
    #[serde(serialize_with = "as_display")]
    pub convention: LinConvention,
    pub backends: Vec<BackendKind>,
    pub trials: u64,
    pub seed: u64,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub allow_short_blocklength: bool,
}

fn as_display<S: serde::Serializer>(c: &LinConvention, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(c)
}

pub fn parse_protocols(s: &str) -> CliResult<Vec<ProtocolKind>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(ProtocolKind::ALL.to_vec());
    }
    let v = s
        .split(',')
        .map(|p| p.trim().parse::<ProtocolKind>())
        .collect::<fbrelay::Result<Vec<_>>>()?;
    if v.is_empty() {
        return Err(CliError::Input("protocol: empty list".into()));
    }
    Ok(v)
}

fn parse_backends(s: &str) -> CliResult<Vec<BackendKind>> {
    s.split(',').map(BackendKind::from_str).collect()
}

/// Accepts integers and integral scientific notation (`1e6`).
pub fn parse_count(field: &str, v: f64) -> CliResult<u64> {
    if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64) {
        return Err(CliError::Input(format!("{field}: expected a non-negative integer, got {v}")));
    }
    Ok(v as u64)
}

fn parse_trials(s: &str) -> CliResult<u64> {
    if let Ok(v) = s.trim().parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("trials: cannot parse '{s}'")))?;
    parse_count("trials", v)
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> CliResult<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let d = TopologyConfig::default();

        let protocols = match (&args.protocol, &file.protocol) {
            (Some(s), _) => parse_protocols(s)?,
            (None, Some(f)) => parse_protocols(&f.joined())?,
            (None, None) => ProtocolKind::ALL.to_vec(),
        };
        let backends = match (&args.backend, &file.backend) {
            (Some(s), _) => parse_backends(s)?,
            (None, Some(f)) => parse_backends(&f.joined())?,
            (None, None) => vec![BackendKind::Closed],
        };
        let convention = match args.convention.as_ref().or(file.convention.as_ref()) {
            Some(s) => s.parse::<LinConvention>()?,
            None => LinConvention::default(),
        };
        let trials = match (&args.trials, file.trials) {
            (Some(s), _) => parse_trials(s)?,
            (None, Some(v)) => parse_count("trials", v)?,
            (None, None) => DEFAULT_TRIALS,
        };
        let n_s = args.n_s.or(args.n).or(file.n_s).or(file.n).unwrap_or(d.n_s);
        let n_r = args.n_r.or(args.n).or(file.n_r).or(file.n).unwrap_or(d.n_r);
        let snr_db = args.snr_db.or(file.snr_db).unwrap_or_else(|| d.total_snr.to_db());
        if !snr_db.is_finite() {
            return Err(CliError::Input(format!("snr_db: non-finite value {snr_db}")));
        }

        Ok(RunConfig {
            protocols,
            snr_db,
            eta: args.eta.or(file.eta).unwrap_or(d.eta),
            beta: args.beta.or(file.beta).unwrap_or(d.beta),
            alpha: args.alpha.or(file.alpha).unwrap_or(d.path_loss_exp),
            n_s,
            n_r,
            k: args.k.or(file.k).unwrap_or(d.k),
            convention,
            backends,
            trials,
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            format: args.format.or(file.format).unwrap_or(Format::Csv),
            output: args.output.clone().or(file.output),
            allow_short_blocklength: args.allow_short_blocklength || file.allow_short_blocklength.unwrap_or(false),
        })
    }

    pub fn topology(&self) -> CliResult<TopologyConfig> {
        Ok(TopologyConfig {
            total_snr: SnrValue::from_db(self.snr_db)?,
            eta: self.eta,
            beta: self.beta,
            path_loss_exp: self.alpha,
            n_s: self.n_s,
            n_r: self.n_r,
            k: self.k,
            allow_short_blocklength: self.allow_short_blocklength,
        })
    }

    pub fn backends(&self) -> Vec<Backend> {
        self.backends
            .iter()
            .map(|b| match b {
                BackendKind::Closed => Backend::ClosedForm,
                BackendKind::Quad => Backend::QuadTrueQ,
                BackendKind::Mc => Backend::monte_carlo(self.trials, self.seed),
            })
            .collect()
    }

    /// `key = value` lines describing the effective configuration.
    pub fn echo(&self) -> Vec<String> {
        let join = |v: Vec<&str>| v.join(",");
        vec![
            format!("protocol = {}", join(self.protocols.iter().map(|p| p.as_str()).collect())),
            format!("snr_db = {}", self.snr_db),
            format!("eta = {}", self.eta),
            format!("beta = {}", self.beta),
            format!("alpha = {}", self.alpha),
            format!("n_s = {}", self.n_s),
            format!("n_r = {}", self.n_r),
            format!("k = {}", self.k),
            format!("convention = {}", self.convention),
            format!(
                "backend = {}",
                join(
                    self.backends
                        .iter()
                        .map(|b| match b {
                            BackendKind::Closed => "closed",
                            BackendKind::Quad => "quad",
                            BackendKind::Mc => "mc",
                        })
                        .collect()
                )
            ),
            format!("trials = {}", self.trials),
            format!("seed = {}", self.seed),
            format!("allow_short_blocklength = {}", self.allow_short_blocklength),
        ]
    }
}

/// Comma-separated values, or `start:stop:step` for evenly spaced integers.
pub fn parse_u32_grid(field: &str, s: &str) -> CliResult<Vec<u32>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let bad = |what: &str| CliError::Input(format!("{field}: {what} in '{s}'"));
    if s.contains(':') {
        let parts: Vec<u32> = s
            .split(':')
            .map(|p| p.trim().parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("expected start:stop:step"))?;
        let [start, stop, step] = parts[..] else {
            return Err(bad("expected start:stop:step"));
        };
        if step == 0 || stop < start {
            return Err(bad("need step > 0 and stop >= start"));
        }
        return Ok((start..=stop).step_by(step as usize).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse::<u32>().map_err(|_| bad("expected integers")))
        .collect()
}

pub fn parse_f64_list(field: &str, s: &str) -> CliResult<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("{field}: cannot parse '{p}'")))
        })
        .collect()
}
