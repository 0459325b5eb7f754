//! `ewalk`: command-line workbench for the energy-constrained walker.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ewalk_core::lifetime::expected_lifetime_exact;
use ewalk_core::model::{Interval, ModelParams};
use ewalk_harness::battery;
use ewalk_harness::campaign::{run_campaign, CampaignError};
use ewalk_harness::config::{
    ConfigError, ExperimentConfig, Regime, DEFAULT_SEED_ROOT, DEFAULT_WORK_BUDGET,
};
use ewalk_harness::report::RegimeReport;

#[derive(Parser)]
#[command(
    name = "ewalk",
    version,
    about = "Lifetime experiments for a random walker that refuels at the boundary"
)]
struct Cli {
    /// Seed root override (defaults to the config value or a fixed constant).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 keeps the library default.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Per-cell work budget override, in walker steps or table draws.
    #[arg(long, global = true)]
    budget: Option<u128>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report rendering.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Experiment config file (JSON). Its regime selects the campaign.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Record per-cell wall clock in runtime_ms (off by default because
    /// timings differ between runs, breaking byte-identical output).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    Meagre,
    Confined,
    Critical,
    Sweep,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Regime {
        match r {
            RegimeArg::Meagre => Regime::Meagre,
            RegimeArg::Confined => Regime::Confined,
            RegimeArg::Critical => Regime::Critical,
            RegimeArg::Sweep => Regime::Sweep,
        }
    }
}

/// One model cell on the command line.
#[derive(Args)]
struct CellArgs {
    /// Interval sites N, or "inf" for the half line.
    #[arg(long)]
    interval: String,
    /// Energy capacity M.
    #[arg(long)]
    capacity: u64,
    /// Start site.
    #[arg(long, default_value_t = 1)]
    x0: u64,
    /// Start energy (defaults to the capacity).
    #[arg(long)]
    y0: Option<u64>,
}

impl CellArgs {
    fn params(&self) -> Result<ModelParams, CliError> {
        let interval = if self.interval == "inf" {
            Interval::Infinite
        } else {
            let n: u64 = self
                .interval
                .parse()
                .map_err(|_| CliError::Config(format!("bad --interval {:?}", self.interval)))?;
            Interval::Finite(n)
        };
        ModelParams::new(interval, self.capacity).map_err(CliError::from)
    }

    fn start(&self) -> (u64, u64) {
        (self.x0, self.y0.unwrap_or(self.capacity))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo lifetimes on one cell, checked against exact values.
    Simulate {
        #[command(flatten)]
        cell: CellArgs,
        #[arg(long, default_value_t = 10_000)]
        runs: u64,
        /// Largest k for the boundary-visit tail rows P(kappa >= k).
        #[arg(long, default_value_t = 10)]
        kappa_max: u64,
    },
    /// Exact excursion laws and extinction probability for one cell.
    Excursion {
        #[command(flatten)]
        cell: CellArgs,
        #[arg(long, default_value_t = 500)]
        horizon: u64,
    },
    /// Exact lifetime mean and law for one cell, two routes cross-checked.
    ExactLifetime {
        #[command(flatten)]
        cell: CellArgs,
        #[arg(long, default_value_t = 4_000)]
        horizon: u64,
    },
    /// Special-function suite: transform root, moment table, theta facts.
    Limits,
    /// Run the exact validation battery, or a regime campaign given
    /// --config / --regime.
    Validate {
        /// Built-in campaign to run instead of the battery.
        #[arg(long, value_enum)]
        regime: Option<RegimeArg>,
    },
    /// Phase-diagram sweep of exact mean lifetimes over (N, M) cells.
    Sweep,
    /// Re-emit a saved JSON report in the chosen format.
    Report {
        /// Path to a JSON report produced with --format json.
        #[arg(long)]
        input: String,
    },
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Budget(String),
    Run(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Run(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Budget(m) | CliError::Run(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ewalk_core::Error> for CliError {
    fn from(e: ewalk_core::Error) -> Self {
        match e {
            ewalk_core::Error::InvalidParams(_) => CliError::Config(e.to_string()),
            ewalk_core::Error::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Run(e.to_string()),
        }
    }
}

impl From<CampaignError> for CliError {
    fn from(e: CampaignError) -> Self {
        match e {
            CampaignError::Budget { .. } => CliError::Budget(e.to_string()),
            CampaignError::Config(c) => CliError::from(c),
            CampaignError::Stats(s) => CliError::Run(s.to_string()),
            CampaignError::Core(c) => CliError::from(c),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(cli));
}

fn run(cli: Cli) -> i32 {
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: cannot size the thread pool: {e}");
            return 2;
        }
    }
    let report = match dispatch(&cli) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return e.code();
        }
    };
    let rendered = match cli.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &rendered) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 2;
            }
        }
        None => print!("{rendered}"),
    }
    if report.all_pass() {
        0
    } else {
        for row in report.failed() {
            eprintln!(
                "FAIL {}: observed {:.9e}, theoretical {:.9e}, tolerance {:.3e}",
                row.statistic, row.observed, row.theoretical, row.tolerance
            );
        }
        1
    }
}

/// Load the config (if any) and apply CLI overrides to it.
fn effective_config(cli: &Cli, fallback: Regime) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::builtin(fallback),
    };
    if let Some(seed) = cli.seed {
        cfg.seed_root = seed;
    }
    if let Some(budget) = cli.budget {
        cfg.work_budget = budget;
    }
    cfg.timing |= cli.timing;
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<RegimeReport, CliError> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED_ROOT);
    let budget = cli.budget.unwrap_or(DEFAULT_WORK_BUDGET);
    match &cli.command {
        Command::Simulate {
            cell,
            runs,
            kappa_max,
        } => {
            let params = cell.params()?;
            let (x0, y0) = cell.start();
            let cost = expected_lifetime_exact(&params, x0, y0)? * *runs as f64;
            if cost > budget as f64 {
                return Err(CliError::Budget(format!(
                    "simulation needs ~{cost:.3e} steps, budget {budget}"
                )));
            }
            Ok(battery::simulate_summary(
                &params,
                (x0, y0),
                *runs,
                *kappa_max,
                seed,
                cli.timing,
            )?)
        }
        Command::Excursion { cell, horizon } => {
            let params = cell.params()?;
            let (x0, y0) = cell.start();
            Ok(battery::excursion_summary(&params, x0, y0, *horizon)?)
        }
        Command::ExactLifetime { cell, horizon } => {
            let params = cell.params()?;
            let (x0, y0) = cell.start();
            Ok(battery::exact_lifetime_summary(&params, x0, y0, *horizon)?)
        }
        Command::Limits => Ok(battery::limits_summary()?),
        Command::Validate { regime } => {
            if cli.config.is_some() && regime.is_some() {
                return Err(CliError::Config(
                    "--regime and --config both select a campaign; pass one".into(),
                ));
            }
            let fallback = regime.map_or(Regime::Validate, Regime::from);
            let cfg = effective_config(cli, fallback)?;
            Ok(run_campaign(&cfg)?)
        }
        Command::Sweep => {
            let cfg = effective_config(cli, Regime::Sweep)?;
            if cfg.regime != Regime::Sweep {
                return Err(CliError::Config(format!(
                    "the sweep subcommand needs a sweep config, got regime {}",
                    cfg.regime.tag()
                )));
            }
            Ok(run_campaign(&cfg)?)
        }
        Command::Report { input } => {
            let text = std::fs::read_to_string(input)
                .map_err(|e| CliError::Config(format!("cannot read {input}: {e}")))?;
            RegimeReport::from_json(&text)
                .map_err(|e| CliError::Config(format!("cannot parse {input}: {e}")))
        }
    }
}
