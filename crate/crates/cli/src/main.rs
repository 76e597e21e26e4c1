//! `noisy-spins`: figure data, exact diagonalization, Bethe solutions,
//! random-detuning sweeps and the acceptance suite.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage error, 3 numerical
//! or I/O failure.

mod commands;
mod config;
mod output;

use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CommonArgs, Defaults, OmegaDefault, Resolver, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<noisy_spins::Error> for CliError {
    fn from(e: noisy_spins::Error) -> Self {
        match e {
            noisy_spins::Error::InvalidParams(_) | noisy_spins::Error::TooLarge { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "noisy-spins", version = output::VERSION, about = "Spin correlations under collective noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full n = 6 spectrum and its slow singlet cluster.
    Fig1 {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Bethe root loci of the maximal-spin state (n = 20).
    Fig2 {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Decay rate per spin versus 1/g₊: ED, Bethe at n = 8 and 60, large n.
    Fig3 {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Singlet eigenvalue flow under a detuning shift.
    Fig4 {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Exact diagonalization, optionally restricted to one S^z_tot sector.
    Ed {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_negative_numbers = true)]
        sector: Option<i32>,
    },
    /// Bethe roots continued along the g₊ grid.
    BetheSolve {
        #[command(flatten)]
        common: CommonArgs,
        /// `string` (dominant decay) or `max-spin`.
        #[arg(long)]
        branch: Option<String>,
    },
    /// Relaxation rates over random detuning draws, with a Weibull fit.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        draws: Option<usize>,
        /// Half-width w of ω_j ~ Uni(−w, w).
        #[arg(long)]
        omega_width: Option<f64>,
    },
    /// Runs the acceptance criteria and writes a JSON report.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// Negative control: `flip-interaction`.
        #[arg(long)]
        inject_fault: Option<String>,
        #[arg(long)]
        a4_trajectories: Option<usize>,
    },
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Fig1 { common }
            | Command::Fig2 { common }
            | Command::Fig3 { common }
            | Command::Fig4 { common }
            | Command::Ed { common, .. }
            | Command::BetheSolve { common, .. }
            | Command::Sweep { common, .. }
            | Command::Validate { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Fig1 { .. } => "fig1",
            Command::Fig2 { .. } => "fig2",
            Command::Fig3 { .. } => "fig3",
            Command::Fig4 { .. } => "fig4",
            Command::Ed { .. } => "ed",
            Command::BetheSolve { .. } => "bethe-solve",
            Command::Sweep { .. } => "sweep",
            Command::Validate { .. } => "validate",
        }
    }

    fn defaults(&self) -> Defaults {
        let random = |n| Defaults { n, omega_big: Some(1.0), g_plus: 800.0, omega: OmegaDefault::Random(0.2) };
        match self {
            Command::Fig1 { .. } | Command::Validate { .. } => random(6),
            Command::Fig4 { .. } => random(5),
            Command::Sweep { .. } => random(4),
            Command::Ed { .. } => random(4),
            Command::Fig2 { .. } => Defaults { n: 20, omega_big: None, g_plus: 1e4, omega: OmegaDefault::Uniform },
            Command::Fig3 { .. } => Defaults { n: 8, omega_big: None, g_plus: 100.0, omega: OmegaDefault::Uniform },
            Command::BetheSolve { .. } => Defaults { n: 6, omega_big: None, g_plus: 100.0, omega: OmegaDefault::Uniform },
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let cmd = cli.command;
    let common = cmd.common();
    let res = Resolver::new(common.config.as_deref())?;
    let mut cfg = RunConfig::resolve(cmd.name(), common, cmd.defaults(), &res)?;

    // subcommand flags, also settable from the config file
    enum Job {
        Plain,
        Ed(Option<i32>),
        Bethe(String),
        Sweep(usize, f64),
        Validate(Option<noisy_spins::validation::Fault>, usize),
    }
    let job = match &cmd {
        Command::Ed { sector, .. } => Job::Ed(res.get("sector", *sector)?),
        Command::BetheSolve { branch, .. } => Job::Bethe(res.get("branch", branch.clone())?.unwrap_or_else(|| "string".into())),
        Command::Sweep { draws, omega_width, .. } => {
            Job::Sweep(res.get("draws", *draws)?.unwrap_or(200), res.get("omega-width", *omega_width)?.unwrap_or(0.2))
        }
        Command::Validate { inject_fault, a4_trajectories, .. } => Job::Validate(
            commands::parse_fault(&res, inject_fault.clone())?,
            res.get("a4-trajectories", *a4_trajectories)?.unwrap_or(20_000),
        ),
        _ => Job::Plain,
    };
    res.finish()?;
    match &job {
        Job::Ed(s) => {
            cfg.extra.insert("sector".into(), s.map_or("all".into(), |s| s.to_string()));
        }
        Job::Bethe(b) => {
            cfg.extra.insert("branch".into(), b.clone());
        }
        Job::Sweep(d, w) => {
            cfg.extra.insert("draws".into(), d.to_string());
            cfg.extra.insert("omega-width".into(), w.to_string());
        }
        Job::Validate(f, a4) => {
            cfg.extra.insert("inject-fault".into(), if f.is_some() { "flip-interaction".into() } else { "none".into() });
            cfg.extra.insert("a4-trajectories".into(), a4.to_string());
        }
        Job::Plain => {}
    }

    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    log::debug!("resolved config: {cfg:?}");

    match (cmd, job) {
        (Command::Fig1 { .. }, _) => commands::fig1(&cfg)?,
        (Command::Fig2 { .. }, _) => commands::fig2(&cfg)?,
        (Command::Fig3 { .. }, _) => commands::fig3(&cfg)?,
        (Command::Fig4 { .. }, _) => commands::fig4(&cfg)?,
        (_, Job::Ed(s)) => commands::ed(&cfg, s)?,
        (_, Job::Bethe(b)) => commands::bethe_solve(&cfg, &b)?,
        (_, Job::Sweep(d, w)) => commands::sweep(&cfg, d, w)?,
        (_, Job::Validate(f, a4)) => return commands::validate(&cfg, f, a4),
        _ => unreachable!("every subcommand has a job"),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("noisy-spins: {e}");
            ExitCode::from(e.code())
        }
    }
}
