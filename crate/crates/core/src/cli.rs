//! Command-line parsing.
//!
//! Every setting can come from a flag or from a `key=value` config file given
//! with `--config` (keys are the long flag names without dashes). Flags win
//! over the file; the file wins over the defaults. Defaults reproduce the
//! synthetic benchmark: K=5, d=50, n=300, 50 runs, sigma=1, empirical radii.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;
use thiserror::Error;

use crate::env::InstanceTemplate;
use crate::harness::{Coupling, ExperimentSpec};
use crate::policy::PolicyKind;
use crate::types::{AlgoConfig, ContextDistSpec, ContextKind, ModelKind, RadiusMode, DEFAULT_MAXIMIZER_TOL};

pub const DEFAULT_ARMS: usize = 5;
pub const DEFAULT_DIM: usize = 50;
pub const DEFAULT_HORIZON: usize = 300;
pub const DEFAULT_RUNS: usize = 50;
pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_OUT: &str = "osom";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("unknown flag: {0}")]
    UnknownFlag(String),
    #[error("invalid value for --{flag}: {reason}")]
    InvalidValue { flag: String, reason: String },
    #[error("missing required value: {0}")]
    MissingRequired(String),
    #[error("cannot read config file {path}: {reason}")]
    Config { path: String, reason: String },
    /// `--help` or `--version`; carries the rendered text.
    #[error("{0}")]
    Help(String),
}

#[derive(Debug, Parser, Default)]
#[command(
    name = "osom",
    version,
    allow_negative_numbers = true,
    about = "Simulate OSOM, UCB and OFUL on synthetic bandit instances"
)]
struct RawArgs {
    /// Reward model: simple | complex
    #[arg(long)]
    model: Option<String>,
    /// Number of arms
    #[arg(short = 'K', long = "arms", visible_alias = "K")]
    arms: Option<String>,
    /// Context dimension
    #[arg(short = 'd', long = "dim", visible_alias = "d")]
    dim: Option<String>,
    /// Horizon
    #[arg(short = 'n', long = "horizon", visible_alias = "n")]
    horizon: Option<String>,
    /// Number of seeded runs per policy
    #[arg(long)]
    runs: Option<String>,
    /// Base seed; run r uses seed + r
    #[arg(long)]
    seed: Option<String>,
    /// Noise standard deviation
    #[arg(long)]
    sigma: Option<String>,
    /// Global failure probability in (0, 1)
    #[arg(long)]
    delta: Option<String>,
    /// Confidence radius: theoretical | empirical
    #[arg(long)]
    mode: Option<String>,
    /// Comma-separated subset of ucb,oful,osom
    #[arg(long)]
    policies: Option<String>,
    /// coupled | independent
    #[arg(long)]
    coupling: Option<String>,
    /// Output path prefix
    #[arg(long)]
    out: Option<String>,
    /// Context distribution: sphere | hypercube
    #[arg(long)]
    context: Option<String>,
    /// Lower covariance eigenvalue bound (default 1/d)
    #[arg(long = "rho-min")]
    rho_min: Option<String>,
    /// Context sub-Gaussian parameter (default 1/d)
    #[arg(long = "rho-max")]
    rho_max: Option<String>,
    /// Tolerance of the optimistic maximizer
    #[arg(long = "maximizer-tol")]
    maximizer_tol: Option<String>,
    /// key=value config file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

const KEYS: [&str; 16] = [
    "model",
    "arms",
    "dim",
    "horizon",
    "runs",
    "seed",
    "sigma",
    "delta",
    "mode",
    "policies",
    "coupling",
    "out",
    "context",
    "rho-min",
    "rho-max",
    "maximizer-tol",
];

/// A parsed command line: what to run and where to write it.
#[derive(Debug, Clone, PartialEq)]
pub struct CliArgs {
    pub spec: ExperimentSpec,
    pub out: PathBuf,
}

fn map_clap(err: clap::Error) -> CliError {
    let msg = err.to_string();
    match err.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Help(err.render().to_string()),
        ErrorKind::UnknownArgument => {
            let flag = err
                .get(clap::error::ContextKind::InvalidArg)
                .map(|v| v.to_string())
                .unwrap_or(msg);
            CliError::UnknownFlag(flag)
        }
        ErrorKind::MissingRequiredArgument | ErrorKind::NoEquals => CliError::MissingRequired(msg),
        _ => {
            let flag = err
                .get(clap::error::ContextKind::InvalidArg)
                .map(|v| v.to_string())
                .unwrap_or_default();
            if msg.contains("a value is required") {
                CliError::MissingRequired(flag)
            } else {
                CliError::InvalidValue { flag, reason: msg }
            }
        }
    }
}

fn read_config(path: &PathBuf) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_config(&text)
}

/// Parses `key=value` lines; `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::InvalidValue {
            flag: "config".into(),
            reason: format!("expected key=value, got `{line}`"),
        })?;
        let key = k.trim().replace('_', "-");
        let key = match key.as_str() {
            "K" => "arms".to_string(),
            "d" => "dim".to_string(),
            "n" => "horizon".to_string(),
            _ => key,
        };
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::UnknownFlag(format!("{key} (in config file)")));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e: T::Err| CliError::InvalidValue {
                flag: key.to_string(),
                reason: format!("`{v}`: {e}"),
            }),
        }
    }
}

fn invalid(flag: &str, e: impl std::fmt::Display) -> CliError {
    CliError::InvalidValue {
        flag: flag.to_string(),
        reason: e.to_string(),
    }
}

/// Parses `argv` (including the program name) into a validated experiment.
pub fn parse_args<I, S>(argv: I) -> Result<CliArgs, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let raw = RawArgs::try_parse_from(argv).map_err(map_clap)?;
    let mut values = match &raw.config {
        Some(path) => read_config(path)?,
        None => BTreeMap::new(),
    };
    let flags = [
        ("model", &raw.model),
        ("arms", &raw.arms),
        ("dim", &raw.dim),
        ("horizon", &raw.horizon),
        ("runs", &raw.runs),
        ("seed", &raw.seed),
        ("sigma", &raw.sigma),
        ("delta", &raw.delta),
        ("mode", &raw.mode),
        ("policies", &raw.policies),
        ("coupling", &raw.coupling),
        ("out", &raw.out),
        ("context", &raw.context),
        ("rho-min", &raw.rho_min),
        ("rho-max", &raw.rho_max),
        ("maximizer-tol", &raw.maximizer_tol),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            values.insert(key.to_string(), v.clone());
        }
    }
    build(&Settings { values })
}

fn build(s: &Settings) -> Result<CliArgs, CliError> {
    let model: ModelKind = s.parse("model", ModelKind::Simple)?;
    let arms: usize = s.parse("arms", DEFAULT_ARMS)?;
    let dim: usize = s.parse("dim", DEFAULT_DIM)?;
    let horizon: usize = s.parse("horizon", DEFAULT_HORIZON)?;
    let runs: usize = s.parse("runs", DEFAULT_RUNS)?;
    let seed: u64 = s.parse("seed", DEFAULT_SEED)?;
    let sigma: f64 = s.parse("sigma", DEFAULT_SIGMA)?;
    let delta: f64 = s.parse("delta", DEFAULT_DELTA)?;
    let mode: RadiusMode = s.parse("mode", RadiusMode::Empirical)?;
    let coupling: Coupling = s.parse("coupling", Coupling::Coupled)?;
    let context: ContextKind = s.parse("context", ContextKind::UnitSphereUniform)?;
    let tol: f64 = s.parse("maximizer-tol", DEFAULT_MAXIMIZER_TOL)?;
    let out = PathBuf::from(s.get("out").unwrap_or(DEFAULT_OUT));

    if arms == 0 {
        return Err(invalid("arms", "need at least one arm"));
    }
    if dim == 0 {
        return Err(invalid("dim", "dimension must be positive"));
    }
    if runs == 0 {
        return Err(invalid("runs", "need at least one run"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", format!("must be positive, got {sigma}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    if horizon <= arms {
        return Err(invalid("horizon", format!("must exceed the arm count {arms}")));
    }
    if context == ContextKind::Custom {
        return Err(invalid(
            "context",
            "custom contexts are only available through the library",
        ));
    }

    let policies = match s.get("policies") {
        None => PolicyKind::ALL.to_vec(),
        Some(list) => {
            let mut out = Vec::new();
            for name in list.split(',').map(str::trim).filter(|n| !n.is_empty()) {
                let p: PolicyKind = name.parse().map_err(|e| invalid("policies", e))?;
                if !out.contains(&p) {
                    out.push(p);
                }
            }
            if out.is_empty() {
                return Err(invalid("policies", "no policy given"));
            }
            out
        }
    };

    let iso = 1.0 / dim as f64;
    let rho_min: f64 = s.parse("rho-min", iso)?;
    let rho_max: f64 = s.parse("rho-max", iso)?;
    let context = ContextDistSpec::new(context, rho_min, rho_max, dim).map_err(|e| {
        let flag = if rho_min > iso || rho_min <= 0.0 {
            "rho-min"
        } else {
            "rho-max"
        };
        invalid(flag, e)
    })?;
    let cfg = AlgoConfig::new(delta, horizon, mode, tol).map_err(|e| invalid("maximizer-tol", e))?;

    Ok(CliArgs {
        spec: ExperimentSpec {
            template: InstanceTemplate {
                model,
                arms,
                dim,
                sigma,
                context,
            },
            policies,
            runs,
            base_seed: seed,
            cfg,
            coupling,
        },
        out,
    })
}
