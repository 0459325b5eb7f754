//! Regime experiment drivers.
//!
//! Each driver takes a validated [`ExperimentConfig`], runs the cells of its
//! regime, and returns a [`RegimeReport`] with one row per checked statistic.
//! Rows compare an observed quantity (Monte Carlo or exact) against the
//! regime's theoretical prediction at the tolerance pinned in the config.
//!
//! Budget policy: a cell is first costed for direct simulation
//! (`runs * E[lifetime]` elementary steps). If that exceeds the work budget,
//! regimes with a renewal-level sampler fall back to it (cost is the expected
//! number of table draws); cells that fit neither way produce a budget error
//! (campaigns that must run them) or an explicitly recorded skip row (the
//! phase-diagram sweep, where partial coverage is still useful).

use std::time::Instant;

use ewalk_core::excursion::exit_moments;
use ewalk_core::lifetime::{
    expected_lifetime_exact, extinction_prob, first_excursion_law, reentry_excursion_law,
    ExcursionLaw,
};
use ewalk_core::limits::{
    confined_scale, critical_gain, critical_gain_levy, critical_mean, dm_moments,
    meagre_mean_limit, normal_sf, rational_to_f64, CriticalLaw,
};
use ewalk_core::model::{simulate_batch, ModelParams};
use ewalk_core::rng::{derive_seed, RunRng};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{CellSpec, ExperimentConfig, Regime, SamplerChoice, SyntheticSpec};
use crate::report::{RegimeReport, ReportRow};
use crate::sampler::{sample_geometric, ConditionalTable, RenewalSampler};
use crate::stats::ks_statistic;

/// Seed stream index reserved for the synthetic compound-geometric check so
/// it never collides with per-cell streams (cells use their cell index).
const SYNTHETIC_STREAM: u64 = 0x53_59_4E_54;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error(transparent)]
    Core(#[from] ewalk_core::Error),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
    #[error("work budget exceeded: {detail}")]
    Budget { detail: String },
}

pub type Result<T> = std::result::Result<T, CampaignError>;

/// Dispatch a config to its regime driver.
pub fn run_campaign(cfg: &ExperimentConfig) -> Result<RegimeReport> {
    match cfg.regime {
        Regime::Meagre => run_meagre(cfg),
        Regime::Confined => run_confined(cfg),
        Regime::Critical => run_critical(cfg),
        Regime::Sweep => sweep_phase_diagram(cfg),
        Regime::Validate => crate::battery::validate_battery(cfg),
    }
}

struct CellCtx {
    params: ModelParams,
    start: (u64, u64),
    runs: u64,
    seed: u64,
    timer: Option<Instant>,
}

impl CellCtx {
    fn new(cfg: &ExperimentConfig, cell: &CellSpec, index: u64) -> Result<Self> {
        Ok(CellCtx {
            params: cell.params()?,
            start: cell.start(),
            runs: cell.runs,
            seed: derive_seed(cfg.seed_root, index),
            timer: if cfg.timing {
                Some(Instant::now())
            } else {
                None
            },
        })
    }

    fn row(&self, cfg: &ExperimentConfig, statistic: &str) -> ReportRow {
        let runtime_ms = self.timer.map_or(0, |t| t.elapsed().as_millis() as u64);
        ReportRow::new(
            cfg.regime.tag(),
            self.params.interval_sites(),
            self.params.capacity(),
            self.start.0,
            self.start.1,
            self.runs,
            statistic,
            cfg.seed_root,
        )
        .runtime(runtime_ms)
    }
}

fn direct_cost(params: &ModelParams, start: (u64, u64), runs: u64) -> Result<f64> {
    let mean = expected_lifetime_exact(params, start.0, start.1)?;
    Ok(mean * runs as f64)
}

/// Meagre-fuel campaign: lifetimes scaled by capacity against the
/// square-root-tail limit family (mean curve, low-order moments at the
/// full-tank edge, extinction atom and concentration away from it).
pub fn run_meagre(cfg: &ExperimentConfig) -> Result<RegimeReport> {
    let tol = &cfg.tolerances;
    let mut report = RegimeReport::new();
    for (index, cell) in cfg.cells.iter().enumerate() {
        let ctx = CellCtx::new(cfg, cell, index as u64)?;
        let m = ctx.params.capacity() as f64;
        let (x0, y0) = ctx.start;
        let a = (x0 as f64) * (x0 as f64) / m;
        let u = y0 as f64 / m;

        let cost = direct_cost(&ctx.params, ctx.start, ctx.runs)?;
        if cost > cfg.work_budget as f64 {
            return Err(CampaignError::Budget {
                detail: format!(
                    "meagre cell {index} needs ~{cost:.3e} steps, budget {}",
                    cfg.work_budget
                ),
            });
        }
        let walker = ewalk_core::model::WalkerState::new(ctx.start.0, ctx.start.1);
        let samples = simulate_batch(&ctx.params, walker, ctx.runs, ctx.seed)?;
        let scaled: Vec<f64> = samples.iter().map(|s| s.lambda as f64 / m).collect();
        let mean_scaled = ewalk_core::numeric::mean(&scaled);

        let limit_mean = meagre_mean_limit(a, u)?;
        report.push(
            ctx.row(cfg, "mean_lifetime_vs_meagre_mean_limit")
                .within_rel(mean_scaled, limit_mean, tol.mean_rel),
        );

        if x0 * x0 <= ctx.params.capacity() / 100 && y0 == ctx.params.capacity() {
            // Near the full-tank edge the centered scaled lifetime follows
            // the square-root-tail law; check its first two moments.
            let centered: Vec<f64> = scaled.iter().map(|v| v - 1.0).collect();
            let moments = dm_moments(2);
            let m1 = rational_to_f64(&moments[0]);
            let m2 = rational_to_f64(&moments[1]);
            let obs_mean = ewalk_core::numeric::mean(&centered);
            let obs_var = ewalk_core::numeric::sample_variance(&centered);
            report.push(ctx.row(cfg, "centered_mean_vs_limit_moment").within_rel(
                obs_mean,
                m1,
                tol.mean_rel,
            ));
            report.push(
                ctx.row(cfg, "centered_variance_vs_limit_moment")
                    .within_rel(obs_var, m2 - m1 * m1, tol.var_rel),
            );
        } else {
            // Away from the edge the law splits into an atom at the initial
            // fuel (extinction before any boundary visit) plus mass near it.
            let atom_obs =
                samples.iter().filter(|s| s.lambda == y0).count() as f64 / ctx.runs as f64;
            let atom_limit = 1.0 - 2.0 * normal_sf((a / u).sqrt());
            report.push(ctx.row(cfg, "extinction_atom_vs_normal_limit").within_abs(
                atom_obs,
                atom_limit,
                tol.atom_abs,
            ));
            let lo = 0.99 * u;
            let hi = u * (1.0 + 1e-12);
            let near =
                scaled.iter().filter(|&&v| v >= lo && v <= hi).count() as f64 / ctx.runs as f64;
            report.push(
                ctx.row(cfg, "concentration_near_initial_fuel")
                    .at_least(near, tol.concentration_min),
            );
        }
    }
    Ok(report)
}

fn confined_lifetimes(
    cfg: &ExperimentConfig,
    ctx: &CellCtx,
    index: usize,
) -> Result<(Vec<u64>, &'static str)> {
    let direct = direct_cost(&ctx.params, ctx.start, ctx.runs)?;
    let choose_direct = match cfg.sampler {
        SamplerChoice::Direct => true,
        SamplerChoice::Renewal => false,
        SamplerChoice::Auto => direct <= cfg.work_budget as f64,
    };
    if choose_direct {
        if direct > cfg.work_budget as f64 {
            return Err(CampaignError::Budget {
                detail: format!(
                    "confined cell {index} direct simulation needs ~{direct:.3e} steps, budget {}",
                    cfg.work_budget
                ),
            });
        }
        let walker = ewalk_core::model::WalkerState::new(ctx.start.0, ctx.start.1);
        let samples = simulate_batch(&ctx.params, walker, ctx.runs, ctx.seed)?;
        return Ok((samples.into_iter().map(|s| s.lambda).collect(), "direct"));
    }
    let sampler = RenewalSampler::new(&ctx.params, ctx.start.0, ctx.start.1)?;
    let renewal = sampler.expected_draws() * ctx.runs as f64;
    if renewal > cfg.work_budget as f64 {
        return Err(CampaignError::Budget {
            detail: format!(
                "confined cell {index} needs ~{direct:.3e} steps direct, \
                 ~{renewal:.3e} draws renewal-level, budget {}",
                cfg.work_budget
            ),
        });
    }
    Ok((sampler.sample_batch(ctx.seed, ctx.runs), "renewal"))
}

fn conditional_moments(law: &ExcursionLaw) -> (f64, f64) {
    let mass = law.finite_mass();
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (n, &p) in law.durations.iter().enumerate() {
        let nf = n as f64;
        m1 += nf * p;
        m2 += nf * nf * p;
    }
    let mean = m1 / mass;
    (mean, m2 / mass - mean * mean)
}

/// Confined campaign: scaled lifetime against the unit exponential plus the
/// excursion-moment and condition-quantity facts that drive that limit, and
/// an optional synthetic compound-geometric check with a known leg law.
pub fn run_confined(cfg: &ExperimentConfig) -> Result<RegimeReport> {
    let tol = &cfg.tolerances;
    let mut report = RegimeReport::new();
    for (index, cell) in cfg.cells.iter().enumerate() {
        let ctx = CellCtx::new(cfg, cell, index as u64)?;
        let n_sites = cell.interval_sites().expect("confined cells are finite");
        let n = n_sites as f64;
        let m = ctx.params.capacity();

        let (lifetimes, route) = confined_lifetimes(cfg, &ctx, index)?;
        let scale = confined_scale(n_sites, m)?;
        let scaled: Vec<f64> = lifetimes.iter().map(|&l| l as f64 * scale).collect();
        // The observed law lives on a lattice of pitch `scale`; a continuous
        // CDF cannot beat that resolution, so it is added to the KS budget.
        let ks = ks_statistic(&scaled, |x| 1.0 - (-x).exp())?;
        report.push(
            ctx.row(
                cfg,
                &format!("ks_scaled_lifetime_vs_unit_exponential_{route}"),
            )
            .within_abs(ks, 0.0, tol.ks + scale),
        );

        let reentry = reentry_excursion_law(&ctx.params)?;
        let theta = reentry.defect;
        let (leg_mean, leg_var) = conditional_moments(&reentry);
        report.push(ctx.row(cfg, "leg_mean_vs_interval_width").within_rel(
            leg_mean,
            n,
            tol.leg_mean_rel,
        ));
        report.push(ctx.row(cfg, "leg_variance_vs_cubic_growth").within_rel(
            leg_var,
            n * n * n / 3.0,
            tol.leg_var_scale / n,
        ));
        let condition = leg_var * theta / (leg_mean * leg_mean);
        report.push(ctx.row(cfg, "exponential_condition_quantity").within_abs(
            condition,
            0.0,
            tol.condition_max,
        ));
        let theta_asym = 4.0 / n * (std::f64::consts::PI / n).cos().powi(m as i32);
        report.push(ctx.row(cfg, "extinction_vs_confined_asymptote").within_rel(
            theta,
            theta_asym,
            tol.theta_conf_rel,
        ));
    }
    if let Some(synth) = &cfg.synthetic {
        synthetic_rows(cfg, synth, &mut report)?;
    }
    Ok(report)
}

/// Compound-geometric control experiment: legs drawn from a known exit law,
/// a geometric number of them, scaled sum against the unit exponential.
/// Isolates the renewal-to-exponential step from the walker dynamics.
fn synthetic_rows(
    cfg: &ExperimentConfig,
    synth: &SyntheticSpec,
    report: &mut RegimeReport,
) -> Result<()> {
    let tol = &cfg.tolerances;
    let timer = if cfg.timing {
        Some(Instant::now())
    } else {
        None
    };
    let params = ModelParams::new(
        ewalk_core::model::Interval::Finite(synth.n_sites),
        synth.capacity,
    )?;
    let law = reentry_excursion_law(&params)?;
    let table = ConditionalTable::from_law(&law)?;
    let (mu, sigma2) = conditional_moments(&law);
    let p = synth.success_prob;
    let seed = derive_seed(cfg.seed_root, SYNTHETIC_STREAM);
    let sums: Vec<f64> = (0..synth.replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = RunRng::for_run(seed, rep);
            let legs = sample_geometric(&mut rng, p);
            let mut total = 0u64;
            for _ in 0..legs {
                total += table.draw(&mut rng);
            }
            total as f64 * p / mu
        })
        .collect();
    let ks = ks_statistic(&sums, |x| 1.0 - (-x).exp())?;
    let runtime_ms = timer.map_or(0, |t| t.elapsed().as_millis() as u64);
    let base = |statistic: &str| {
        ReportRow::new(
            cfg.regime.tag(),
            Some(synth.n_sites),
            synth.capacity,
            0,
            0,
            synth.replicates,
            statistic,
            cfg.seed_root,
        )
        .runtime(runtime_ms)
    };
    report.push(
        base("ks_synthetic_compound_vs_unit_exponential").within_abs(
            ks,
            0.0,
            tol.ks_synthetic + p / mu,
        ),
    );
    let condition = sigma2 * p / (mu * mu);
    report.push(base("synthetic_condition_quantity").within_abs(condition, 0.0, tol.condition_max));
    Ok(())
}

/// Critical-window campaign: exact finite-system lifetime transforms against
/// the window limit law (mean curve, transform values inside the joint
/// domain, derivative-mean identity, Levy representation, monotone mean).
pub fn run_critical(cfg: &ExperimentConfig) -> Result<RegimeReport> {
    let tol = &cfg.tolerances;
    let mut report = RegimeReport::new();
    for (index, cell) in cfg.cells.iter().enumerate() {
        let ctx = CellCtx::new(cfg, cell, index as u64)?;
        let n_sites = cell.interval_sites().expect("critical cells are finite");
        let n = n_sites as f64;
        let m = ctx.params.capacity() as f64;
        let rho = m / (n * n);
        let law = CriticalLaw::new(rho)?;

        let exact_mean = expected_lifetime_exact(&ctx.params, ctx.start.0, ctx.start.1)?;
        report.push(ctx.row(cfg, "mean_lifetime_vs_critical_limit").within_rel(
            exact_mean / m,
            1.0 + law.mean,
            tol.mean_vs_limit_rel,
        ));

        // d/ds G(rho, s) at 0+ equals the limit mean; Richardson-extrapolated
        // central differences D(h) = (G(h) - G(-h)) / 2h, with h shrunk when
        // the mean is large so the h^2 term stays inside the relative band.
        let h = 1e-3 / law.mean.max(1.0);
        let d1 = (critical_gain(rho, h)? - critical_gain(rho, -h)?) / (2.0 * h);
        let d2 = (critical_gain(rho, 0.5 * h)? - critical_gain(rho, -0.5 * h)?) / h;
        let slope = (4.0 * d2 - d1) / 3.0;
        report.push(ctx.row(cfg, "gain_derivative_vs_limit_mean").within_rel(
            slope,
            law.mean,
            tol.derivative_rel,
        ));

        let s_half = 0.5;
        report.push(ctx.row(cfg, "levy_representation_vs_gain").within_rel(
            critical_gain_levy(rho, s_half)?,
            critical_gain(rho, s_half)?,
            tol.levy_rel,
        ));

        for &fraction in &cfg.mgf_fractions {
            let s = fraction * law.s_max;
            // Finite-system transform of lambda/M, shifted by the exact
            // (M+1)-step final leg so both sides describe the same variable.
            let finite =
                ewalk_core::lifetime::compound_mgf(&ctx.params, ctx.start.0, ctx.start.1, s / m)?
                    * (s * (m + 1.0) / m).exp();
            let limit = s.exp() * law.mgf(s)?;
            report.push(
                ctx.row(cfg, &format!("mgf_vs_limit_at_fraction_{fraction}"))
                    .within_rel(finite, limit, tol.mgf_rel),
            );
        }
    }

    // The limit mean is strictly increasing in rho; check consecutive pairs
    // of the configured sweep.
    let timer = if cfg.timing {
        Some(Instant::now())
    } else {
        None
    };
    let means: Vec<f64> = cfg
        .rho_sweep
        .iter()
        .map(|&r| critical_mean(r))
        .collect::<ewalk_core::Result<_>>()?;
    let runtime_ms = timer.map_or(0, |t| t.elapsed().as_millis() as u64);
    for w in means.windows(2).zip(cfg.rho_sweep.windows(2)) {
        let (pair, rhos) = w;
        let mut row = ReportRow::new(
            cfg.regime.tag(),
            None,
            0,
            0,
            0,
            0,
            &format!("limit_mean_increase_rho_{}_to_{}", rhos[0], rhos[1]),
            cfg.seed_root,
        )
        .runtime(runtime_ms);
        row.observed = pair[1] - pair[0];
        row.theoretical = 0.0;
        row.tolerance = 0.0;
        row.pass = pair[1] > pair[0];
        report.push(row);
    }
    Ok(report)
}

/// Phase-diagram sweep: exact expected lifetime over a grid of (width,
/// capacity) cells against the crossover curve 1 + mu(M / N^2), which spans
/// all three regimes for starts at (1, M). Records theta per cell and its
/// meagre-edge scaling where the ratio is small.
pub fn sweep_phase_diagram(cfg: &ExperimentConfig) -> Result<RegimeReport> {
    let tol = &cfg.tolerances;
    let mut report = RegimeReport::new();
    for (index, cell) in cfg.cells.iter().enumerate() {
        let ctx = CellCtx::new(cfg, cell, index as u64)?;
        let n_sites = cell.interval_sites().expect("sweep cells are finite");
        let n = n_sites as f64;
        let m = ctx.params.capacity();
        let ratio = m as f64 / (n * n);

        // Exact lifetime needs the two excursion tables: O(N * M) work.
        let need = (n_sites as u128) * (m as u128);
        if need > cfg.work_budget {
            let mut row = ctx.row(cfg, "skipped_budget");
            row.observed = need as f64;
            row.theoretical = cfg.work_budget as f64;
            row.tolerance = 0.0;
            row.pass = true;
            report.push(row);
            continue;
        }

        let exact_mean = expected_lifetime_exact(&ctx.params, ctx.start.0, ctx.start.1)?;
        let crossover = 1.0 + critical_mean(ratio)?;
        report.push(ctx.row(cfg, "lifetime_mean_vs_crossover_curve").within_rel(
            exact_mean / m as f64,
            crossover,
            tol.sweep_rel,
        ));

        let mut ratio_row = ctx.row(cfg, "capacity_over_squared_width");
        ratio_row.observed = ratio;
        ratio_row.theoretical = ratio;
        ratio_row.tolerance = 0.0;
        ratio_row.pass = true;
        report.push(ratio_row);

        let theta = reentry_excursion_law(&ctx.params)?.defect;
        let mut theta_row = ctx.row(cfg, "extinction_probability");
        theta_row.observed = theta;
        theta_row.theoretical = theta;
        theta_row.tolerance = 0.0;
        theta_row.pass = true;
        report.push(theta_row);

        if ratio <= 0.01 {
            let scaled = theta * (m as f64 * std::f64::consts::PI / 2.0).sqrt();
            report.push(ctx.row(cfg, "theta_scaled_meagre_edge").within_rel(
                scaled,
                1.0,
                tol.theta_edge_rel,
            ));
        }
    }
    Ok(report)
}

/// Exact first-excursion moment summary used by the excursion CLI surface.
pub fn excursion_cell_moments(params: &ModelParams, x: u64) -> Result<(f64, f64)> {
    match params.interval() {
        ewalk_core::model::Interval::Finite(n) => Ok(exit_moments(n, x)?),
        ewalk_core::model::Interval::Infinite => Err(CampaignError::Core(
            ewalk_core::Error::InvalidParams("exit moments diverge on the half line".into()),
        )),
    }
}

/// Extinction probability from a given start, for CLI surfaces.
pub fn cell_extinction(params: &ModelParams, x: u64, y: u64) -> Result<f64> {
    Ok(extinction_prob(params, x, y)?)
}

/// First-excursion law from a given start, for CLI surfaces.
pub fn cell_first_law(params: &ModelParams, x: u64, y: u64) -> Result<ExcursionLaw> {
    Ok(first_excursion_law(params, x, y)?)
}
