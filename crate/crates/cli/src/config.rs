//! Run configuration: command-line flags layered over an optional flat
//! `key = value` file whose keys are the long flag names.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use noisy_spins::params::stream_rng;
use noisy_spins::spectra::OmegaSampler;
use noisy_spins::ModelParams;
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Number of spins (sites).
    #[arg(long)]
    pub n: Option<usize>,
    /// Common precession frequency Ω.
    #[arg(long, allow_negative_numbers = true)]
    pub omega_big: Option<f64>,
    /// Spacing Δ_y of uniformly spaced detunings ω_j = jΔ_y.
    #[arg(long)]
    pub delta_y: Option<f64>,
    /// File with one detuning per line (overrides the default detunings).
    #[arg(long)]
    pub omega_file: Option<PathBuf>,
    #[arg(long)]
    pub g_plus: Option<f64>,
    #[arg(long)]
    pub g_zero: Option<f64>,
    /// Comma-separated g₊ values.
    #[arg(long)]
    pub g_grid: Option<String>,
    /// Comma-separated Δω values, or `lo:hi:count`.
    #[arg(long, allow_hyphen_values = true)]
    pub d_omega_grid: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker thread cap (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Flat `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// How a command picks detunings when no file is given.
#[derive(Debug, Clone, Copy)]
pub enum OmegaDefault {
    /// `ω_j ~ Uni(−w, w)` from the run seed.
    Random(f64),
    /// `ω_j = jΔ_y`, `j = 1..=n`.
    Uniform,
}

/// Per-command defaults.
#[derive(Debug, Clone, Copy)]
pub struct Defaults {
    pub n: usize,
    /// `None` means `−(n + 3)`.
    pub omega_big: Option<f64>,
    pub g_plus: f64,
    pub omega: OmegaDefault,
}

/// The resolved configuration, echoed into every metadata sidecar.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub params: ModelParams,
    pub delta_y: f64,
    pub g_grid: Vec<f64>,
    pub d_omega_grid: Vec<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: Format,
    pub threads: Option<usize>,
    /// Subcommand-specific settings after merging.
    pub extra: BTreeMap<String, String>,
}

/// Merges flag values with the config file, tracking which file keys were
/// consumed so that unknown keys can be reported.
pub struct Resolver {
    file: BTreeMap<String, String>,
    used: std::cell::RefCell<Vec<String>>,
}

impl Resolver {
    pub fn new(path: Option<&Path>) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => parse_config_file(p)?,
            None => BTreeMap::new(),
        };
        Ok(Self { file, used: Default::default() })
    }

    pub fn get<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.used.borrow_mut().push(key.to_string());
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(v) => v.parse().map(Some).map_err(|e| CliError::Usage(format!("config key `{key}`: {e}"))),
            None => Ok(None),
        }
    }

    /// Errors on keys nobody asked for (typos, flags of other commands).
    pub fn finish(&self) -> Result<(), CliError> {
        let used = self.used.borrow();
        match self.file.keys().find(|k| !used.contains(k)) {
            Some(k) => Err(CliError::Usage(format!("unknown config key `{k}`"))),
            None => Ok(()),
        }
    }
}

pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("{}:{}: expected `key = value`", path.display(), i + 1)));
        };
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        out.insert(key, v.trim().trim_matches('"').to_string());
    }
    Ok(out)
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = |e: String| CliError::Usage(format!("bad grid `{s}`: {e}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let lo: f64 = parts[0].trim().parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
        let hi: f64 = parts[1].trim().parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
        let count: usize = parts[2].trim().parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
        if count < 2 {
            return Err(bad("need at least two points".into()));
        }
        return Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect());
    }
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| t.trim().parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))).collect()
}

fn read_omega_file(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse::<f64>().map_err(|e| CliError::Usage(format!("{}: `{l}`: {e}", path.display()))))
        .collect()
}

pub const DEFAULT_SEED: u64 = 20240601;

impl RunConfig {
    /// Resolves the common flags. Subcommand flags are read from the same
    /// resolver by the caller before `Resolver::finish`.
    pub fn resolve(command: &str, args: &CommonArgs, defaults: Defaults, res: &Resolver) -> Result<Self, CliError> {
        let seed = res.get("seed", args.seed)?.unwrap_or(DEFAULT_SEED);
        let delta_y = res.get("delta-y", args.delta_y)?.unwrap_or(2.0);
        let omega_file: Option<PathBuf> = res.get("omega-file", args.omega_file.clone().map(|p| p.display().to_string()))?.map(PathBuf::from);
        let n_flag = res.get("n", args.n)?;
        let omega = match &omega_file {
            Some(path) => {
                let w = read_omega_file(path)?;
                if let Some(n) = n_flag {
                    if n != w.len() {
                        return Err(CliError::Usage(format!("--n {n} disagrees with {} detunings in {}", w.len(), path.display())));
                    }
                }
                w
            }
            None => {
                let n = n_flag.unwrap_or(defaults.n);
                match defaults.omega {
                    OmegaDefault::Uniform => (1..=n).map(|j| j as f64 * delta_y).collect(),
                    OmegaDefault::Random(w) => OmegaSampler::Uniform { lo: -w, hi: w }
                        .sample(n, &mut stream_rng(seed, 0))
                        .map_err(|e| CliError::Usage(e.to_string()))?,
                }
            }
        };
        let n = omega.len();
        let omega_big = res.get("omega-big", args.omega_big)?.or(defaults.omega_big).unwrap_or(-(n as f64 + 3.0));
        let g_plus = res.get("g-plus", args.g_plus)?.unwrap_or(defaults.g_plus);
        let g_zero = res.get("g-zero", args.g_zero)?.unwrap_or(0.0);
        let params = ModelParams::new(omega_big, omega, g_plus, g_zero).map_err(|e| CliError::Usage(e.to_string()))?;
        let g_grid = match res.get::<String>("g-grid", args.g_grid.clone())? {
            Some(s) => parse_list(&s)?,
            None => Vec::new(),
        };
        let d_omega_grid = match res.get::<String>("d-omega-grid", args.d_omega_grid.clone())? {
            Some(s) => parse_list(&s)?,
            None => Vec::new(),
        };
        let out_dir = res.get("out-dir", args.out_dir.clone().map(|p| p.display().to_string()))?.map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
        let format = res.get("format", args.format)?.unwrap_or(Format::Csv);
        let threads = res.get("threads", args.threads)?;
        res.get::<String>("config", None)?;
        Ok(Self {
            command: command.to_string(),
            params,
            delta_y,
            g_grid,
            d_omega_grid,
            seed,
            out_dir,
            format,
            threads,
            extra: BTreeMap::new(),
        })
    }
}
