//! Campaign configuration: JSON in, validated plan out.

use ewalk_core::model::{Interval, ModelParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Meagre,
    Confined,
    Critical,
    Validate,
    Sweep,
}

impl Regime {
    pub fn tag(&self) -> &'static str {
        match self {
            Regime::Meagre => "meagre",
            Regime::Confined => "confined",
            Regime::Critical => "critical",
            Regime::Validate => "validate",
            Regime::Sweep => "sweep",
        }
    }
}

/// Interval width in a config file: a site count or the string "inf".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntervalSpec {
    Sites(u64),
    Name(InfName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfName {
    Inf,
}

impl IntervalSpec {
    pub fn to_interval(self) -> Interval {
        match self {
            IntervalSpec::Sites(n) => Interval::Finite(n),
            IntervalSpec::Name(_) => Interval::Infinite,
        }
    }

    pub fn infinite() -> Self {
        IntervalSpec::Name(InfName::Inf)
    }
}

/// One experimental cell: a model, a start, and a run count (0 = exact-only).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub interval: IntervalSpec,
    pub capacity: u64,
    /// Start state (x0, y0); defaults to (1, capacity).
    #[serde(default)]
    pub start: Option<(u64, u64)>,
    #[serde(default)]
    pub runs: u64,
}

impl CellSpec {
    /// Build a cell in code; `sites = None` means the half line.
    pub fn new(sites: Option<u64>, capacity: u64, start: (u64, u64), runs: u64) -> Self {
        CellSpec {
            interval: match sites {
                Some(n) => IntervalSpec::Sites(n),
                None => IntervalSpec::infinite(),
            },
            capacity,
            start: Some(start),
            runs,
        }
    }

    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        ModelParams::new(self.interval.to_interval(), self.capacity)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn start(&self) -> (u64, u64) {
        self.start.unwrap_or((1, self.capacity))
    }

    pub fn interval_sites(&self) -> Option<u64> {
        match self.interval {
            IntervalSpec::Sites(n) => Some(n),
            IntervalSpec::Name(_) => None,
        }
    }
}

/// Synthetic triangular-array check: a geometric number of draws from an
/// exact conditional excursion law, scaled to a unit exponential.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub success_prob: f64,
    pub n_sites: u64,
    pub capacity: u64,
    pub replicates: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            success_prob: 1e-4,
            n_sites: 30,
            capacity: 4500,
            replicates: 1000,
        }
    }
}

/// Per-criterion tolerance defaults. Limit theorems come with no rates, so
/// the finite-size bands are engineering declarations, overridable here.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative band for Monte Carlo means against limit means.
    pub mean_rel: f64,
    /// Relative band for Monte Carlo variances against limit variances.
    pub var_rel: f64,
    /// Absolute band for the extinction-atom mass against its normal limit.
    pub atom_abs: f64,
    /// Minimum fraction of runs concentrating at the atom for deep starts.
    pub concentration_min: f64,
    /// KS band for scaled lifetimes against the unit exponential.
    pub ks: f64,
    /// KS band for the synthetic triangular-array check.
    pub ks_synthetic: f64,
    /// Relative band for the conditional leg mean against N.
    pub leg_mean_rel: f64,
    /// Leg-variance band scale: tolerance is leg_var_scale / N, covering the
    /// first-order finite-size deficit of about 3/N.
    pub leg_var_scale: f64,
    /// Cap on sigma^2 p / mu^2 below which the exponential limit applies.
    pub condition_max: f64,
    /// Relative band for finite-size MGF points against the critical limit.
    pub mgf_rel: f64,
    /// Relative band for exact mean lifetimes against limit means.
    pub mean_vs_limit_rel: f64,
    /// Relative agreement demanded of the gain derivative at zero vs mu.
    pub derivative_rel: f64,
    /// Relative agreement demanded of the Levy representation of the gain.
    pub levy_rel: f64,
    /// Relative band for sweep cells against the crossover curve 1 + mu.
    pub sweep_rel: f64,
    /// Relative band for theta along the meagre edge of the sweep.
    pub theta_edge_rel: f64,
    /// Relative band for theta against its confined asymptote 4 cos^M(pi/N) / N.
    pub theta_conf_rel: f64,
    /// Meagre cells must satisfy M <= meagre_ratio_max * N^2 (or N = inf).
    pub meagre_ratio_max: f64,
    /// Confined cells must satisfy M >= confined_ratio_min * N^2.
    pub confined_ratio_min: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mean_rel: 0.05,
            var_rel: 0.10,
            atom_abs: 0.03,
            concentration_min: 0.95,
            ks: 0.07,
            ks_synthetic: 0.05,
            leg_mean_rel: 0.05,
            leg_var_scale: 3.5,
            condition_max: 0.05,
            mgf_rel: 0.05,
            mean_vs_limit_rel: 0.05,
            derivative_rel: 1e-6,
            levy_rel: 1e-6,
            sweep_rel: 0.10,
            theta_edge_rel: 0.05,
            theta_conf_rel: 0.02,
            meagre_ratio_max: 0.05,
            confined_ratio_min: 1.0,
        }
    }
}

/// Seed root used when neither config nor CLI provides one.
pub const DEFAULT_SEED_ROOT: u64 = 0x5EED_0001;
/// Default per-cell work budget, in walker steps or table draws.
pub const DEFAULT_WORK_BUDGET: u128 = 100_000_000;

fn default_seed_root() -> u64 {
    DEFAULT_SEED_ROOT
}

fn default_work_budget() -> u128 {
    DEFAULT_WORK_BUDGET
}

fn default_mgf_fractions() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}

fn default_rho_sweep() -> Vec<f64> {
    vec![0.25, 1.0, 4.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SamplerChoice {
    #[default]
    Auto,
    Direct,
    Renewal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub regime: Regime,
    #[serde(default)]
    pub cells: Vec<CellSpec>,
    #[serde(default = "default_seed_root")]
    pub seed_root: u64,
    /// Rough cap on per-cell work, in walker steps or table draws.
    #[serde(default = "default_work_budget")]
    pub work_budget: u128,
    #[serde(default)]
    pub sampler: SamplerChoice,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Fractions of the MGF abscissa at which critical cells compare the
    /// exact transform to the limit.
    #[serde(default = "default_mgf_fractions")]
    pub mgf_fractions: Vec<f64>,
    /// Aspect ratios whose limit means the critical campaign reports.
    #[serde(default = "default_rho_sweep")]
    pub rho_sweep: Vec<f64>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
    /// Record wall-clock per cell. Off by default: timings vary between
    /// runs, so enabling this breaks byte-identical re-runs.
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn from_path(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_string(),
            source,
        })?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.regime == Regime::Validate && !self.cells.is_empty() {
            return Err(ConfigError::Invalid(
                "the validate battery takes no cells".into(),
            ));
        }
        for (i, cell) in self.cells.iter().enumerate() {
            let params = cell.params()?;
            let (x, y) = cell.start();
            if y > cell.capacity {
                return Err(ConfigError::Invalid(format!(
                    "cell {i}: start energy {y} exceeds capacity {}",
                    cell.capacity
                )));
            }
            if let Some(n) = cell.interval_sites() {
                if x > n {
                    return Err(ConfigError::Invalid(format!(
                        "cell {i}: start site {x} outside 0..={n}"
                    )));
                }
            }
            let ratio = cell
                .interval_sites()
                .map(|n| cell.capacity as f64 / (n as f64 * n as f64));
            match self.regime {
                Regime::Meagre => {
                    if let Some(r) = ratio {
                        if r > self.tolerances.meagre_ratio_max {
                            return Err(ConfigError::Invalid(format!(
                                "cell {i}: M/N^2 = {r:.4} above the meagre cap {}",
                                self.tolerances.meagre_ratio_max
                            )));
                        }
                    }
                    if cell.runs == 0 {
                        return Err(ConfigError::Invalid(format!(
                            "cell {i}: meagre cells need runs >= 1"
                        )));
                    }
                }
                Regime::Confined => {
                    let r = ratio.ok_or_else(|| {
                        ConfigError::Invalid(format!(
                            "cell {i}: confined cells need a finite interval"
                        ))
                    })?;
                    if r < self.tolerances.confined_ratio_min {
                        return Err(ConfigError::Invalid(format!(
                            "cell {i}: M/N^2 = {r:.4} below the confined floor {}",
                            self.tolerances.confined_ratio_min
                        )));
                    }
                    if cell.runs == 0 {
                        return Err(ConfigError::Invalid(format!(
                            "cell {i}: confined cells need runs >= 1"
                        )));
                    }
                }
                Regime::Critical | Regime::Sweep => {
                    if ratio.is_none() {
                        return Err(ConfigError::Invalid(format!(
                            "cell {i}: {} cells need a finite interval",
                            self.regime.tag()
                        )));
                    }
                }
                Regime::Validate => {}
            }
            let _ = params;
        }
        if self.regime != Regime::Validate && self.cells.is_empty() {
            return Err(ConfigError::Invalid("no cells configured".into()));
        }
        for f in &self.mgf_fractions {
            if !(*f > 0.0 && *f < 1.0) {
                return Err(ConfigError::Invalid(format!(
                    "mgf fraction {f} outside (0, 1)"
                )));
            }
        }
        if let Some(s) = &self.synthetic {
            if !(s.success_prob > 0.0 && s.success_prob < 1.0) || s.replicates == 0 {
                return Err(ConfigError::Invalid("bad synthetic check spec".into()));
            }
        }
        Ok(())
    }

    /// Built-in campaign for a regime, used when no config file is given.
    pub fn builtin(regime: Regime) -> Self {
        let cells = match regime {
            Regime::Meagre => vec![
                CellSpec {
                    interval: IntervalSpec::infinite(),
                    capacity: 500,
                    start: Some((1, 500)),
                    runs: 20_000,
                },
                // Deep start: the lifetime concentrates at its initial fuel.
                CellSpec {
                    interval: IntervalSpec::Sites(200),
                    capacity: 500,
                    start: Some((100, 500)),
                    runs: 20_000,
                },
            ],
            Regime::Confined => vec![CellSpec {
                interval: IntervalSpec::Sites(8),
                capacity: 128,
                start: Some((1, 128)),
                runs: 500,
            }],
            Regime::Critical => vec![CellSpec {
                interval: IntervalSpec::Sites(40),
                capacity: 1600,
                start: Some((1, 1600)),
                runs: 0,
            }],
            Regime::Sweep => {
                let mut cells = Vec::new();
                for n in [40u64, 64] {
                    for ratio in [0.01f64, 0.1, 1.0, 2.0] {
                        let m = ((n * n) as f64 * ratio).round() as u64;
                        cells.push(CellSpec {
                            interval: IntervalSpec::Sites(n),
                            capacity: m.max(1),
                            start: Some((1, m.max(1))),
                            runs: 0,
                        });
                    }
                }
                cells
            }
            Regime::Validate => Vec::new(),
        };
        let synthetic = if regime == Regime::Confined {
            Some(SyntheticSpec::default())
        } else {
            None
        };
        ExperimentConfig {
            regime,
            cells,
            seed_root: default_seed_root(),
            work_budget: default_work_budget(),
            sampler: SamplerChoice::Auto,
            tolerances: Tolerances::default(),
            mgf_fractions: default_mgf_fractions(),
            rho_sweep: default_rho_sweep(),
            synthetic,
            timing: false,
        }
    }
}
