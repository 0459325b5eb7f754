//! Exact lifetime laws through the renewal structure of boundary visits.
//!
//! A walker started in the interior either never reaches a boundary within
//! its fuel (extinction at a deterministic time equal to the initial energy)
//! or reaches one and regenerates. Between consecutive boundary visits the
//! elapsed time is one forced entry step plus a fresh interior exit time
//! capped by the capacity, so the lifetime decomposes as a stopped renewal
//! sum with two defective increment laws: one for the first leg (no entry
//! step, fuel y), one for every later leg (entry step, fuel M).
//!
//! Everything here is deterministic; the Monte Carlo layer lives in
//! [`crate::model`].

pub mod brute;

use crate::error::{Error, Result};
use crate::excursion::{exit_pmf_dp, one_sided_pmf, one_sided_tail, ExitLawTable};
use crate::model::{Interval, ModelParams};

/// Largest number of live DP cells accepted before erroring out.
const MAX_GRID_CELLS: u128 = 100_000_000;

fn require_state(params: &ModelParams, x: u64, y: u64) -> Result<()> {
    if y > params.capacity() {
        return Err(Error::InvalidParams(format!(
            "initial energy {y} exceeds capacity {}",
            params.capacity()
        )));
    }
    if let Interval::Finite(n) = params.interval() {
        if x > n {
            return Err(Error::InvalidParams(format!("start {x} outside 0..={n}")));
        }
    }
    Ok(())
}

fn is_boundary_site(params: &ModelParams, x: u64) -> bool {
    match params.interval() {
        Interval::Finite(n) => x == 0 || x == n,
        Interval::Infinite => x == 0,
    }
}

/// P(no boundary visit happens before the fuel y runs out) for an interior
/// start at x, i.e. the tail of the boundary-hitting time beyond y.
pub fn extinction_prob(params: &ModelParams, x: u64, y: u64) -> Result<f64> {
    require_state(params, x, y)?;
    if is_boundary_site(params, x) {
        return Err(Error::InvalidParams(format!(
            "start {x} is a boundary site"
        )));
    }
    match params.interval() {
        Interval::Finite(n) => {
            if x == 1 || x == n - 1 {
                crate::excursion::exit_tail_cosine(n, y)
            } else {
                let table = exit_pmf_dp(n, x, y)?;
                Ok(table.tail_at(y))
            }
        }
        Interval::Infinite => {
            if x == 1 {
                Ok(one_sided_tail(y))
            } else {
                // A wall this far out cannot be reached within y steps, so the
                // finite-interval exit law agrees with the one-sided one.
                let table = exit_pmf_dp(x + y + 2, x, y)?;
                Ok(table.tail_at(y))
            }
        }
    }
}

/// Defective duration law of one renewal leg. `durations[n]` is the chance
/// the leg takes exactly n steps; `defect` is the chance the walker never
/// reaches a boundary again and dies instead.
#[derive(Debug, Clone)]
pub struct ExcursionLaw {
    pub durations: Vec<f64>,
    pub defect: f64,
}

impl ExcursionLaw {
    /// Mass of the finite part.
    pub fn finite_mass(&self) -> f64 {
        crate::numeric::pairwise_sum(&self.durations)
    }

    /// sum n * durations[n], the unnormalized mean of the finite part.
    pub fn partial_mean(&self) -> f64 {
        let weighted: Vec<f64> = self
            .durations
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .collect();
        crate::numeric::pairwise_sum(&weighted)
    }

    /// Conditional MGF of the leg duration given it is finite.
    pub fn conditional_mgf(&self, s: f64) -> f64 {
        let mass = self.finite_mass();
        let acc: f64 = self
            .durations
            .iter()
            .enumerate()
            .map(|(n, p)| (s * n as f64).exp() * p)
            .sum();
        acc / mass
    }
}

/// Law of the first leg from an interior start (x, y): duration is the
/// boundary-hitting time itself, supported on 1..=y, defect is
/// [`extinction_prob`].
pub fn first_excursion_law(params: &ModelParams, x: u64, y: u64) -> Result<ExcursionLaw> {
    require_state(params, x, y)?;
    if is_boundary_site(params, x) {
        return Err(Error::InvalidParams(format!(
            "start {x} is a boundary site"
        )));
    }
    let table: ExitLawTable = match params.interval() {
        Interval::Finite(n) => exit_pmf_dp(n, x, y)?,
        Interval::Infinite => exit_pmf_dp(x + y + 2, x, y)?,
    };
    let mut durations = vec![0.0; y as usize + 1];
    for n in 1..=y {
        durations[n as usize] = table.pmf_at(n);
    }
    Ok(ExcursionLaw {
        durations,
        defect: table.tail_at(y),
    })
}

/// Law of every later leg: one forced entry step plus an exit time from the
/// near-boundary site with a full tank, supported on 2..=M+1.
pub fn reentry_excursion_law(params: &ModelParams) -> Result<ExcursionLaw> {
    let m = params.capacity();
    let mut durations = vec![0.0; m as usize + 2];
    let defect;
    match params.interval() {
        Interval::Finite(n) => {
            let table = exit_pmf_dp(n, 1, m)?;
            for tau in 1..=m {
                durations[tau as usize + 1] = table.pmf_at(tau);
            }
            defect = table.tail_at(m);
        }
        Interval::Infinite => {
            for tau in 1..=m {
                durations[tau as usize + 1] = one_sided_pmf(tau);
            }
            defect = one_sided_tail(m);
        }
    }
    Ok(ExcursionLaw { durations, defect })
}

/// Exact lifetime distribution truncated at t_max.
#[derive(Debug, Clone)]
pub struct LifetimeLaw {
    /// pmf[t] = P(lifetime = t) for t = 0..=t_max (possibly truncated early
    /// once the surviving mass drops below 1e-16).
    pub pmf: Vec<f64>,
    /// Mass still alive beyond the last recorded time.
    pub residual: f64,
}

impl LifetimeLaw {
    pub fn total_mass(&self) -> f64 {
        crate::numeric::pairwise_sum(&self.pmf) + self.residual
    }

    /// sum t * pmf[t] over the recorded range; a lower bound for the mean.
    pub fn partial_mean(&self) -> f64 {
        let weighted: Vec<f64> = self
            .pmf
            .iter()
            .enumerate()
            .map(|(t, p)| t as f64 * p)
            .collect();
        crate::numeric::pairwise_sum(&weighted)
    }

    /// Total variation distance against another truncated law, counting the
    /// residuals as mass at distinct phantom points.
    pub fn tv_distance(&self, other: &LifetimeLaw) -> f64 {
        let len = self.pmf.len().max(other.pmf.len());
        let mut acc = 0.0;
        for t in 0..len {
            let p = self.pmf.get(t).copied().unwrap_or(0.0);
            let q = other.pmf.get(t).copied().unwrap_or(0.0);
            acc += (p - q).abs();
        }
        0.5 * (acc + (self.residual - other.residual).abs())
    }

    /// P(lifetime > t) within the recorded range.
    pub fn tail_at(&self, t: u64) -> f64 {
        let mut acc = self.residual;
        for n in ((t + 1) as usize..self.pmf.len()).rev() {
            acc += self.pmf[n];
        }
        acc
    }
}

fn interior_width(params: &ModelParams, x0: u64, y0: u64) -> Result<u64> {
    Ok(match params.interval() {
        Interval::Finite(n) => n - 1,
        // Position plus remaining fuel never increases, so the walker stays
        // below max(x0 + y0, M + 1) at all times.
        Interval::Infinite => (x0 + y0).max(params.capacity() + 1),
    })
}

/// Forward evolution of the full (position, energy) occupation measure,
/// harvesting extinction mass at every step. Exact up to f64 rounding.
pub fn lifetime_pmf_dp(params: &ModelParams, x0: u64, y0: u64, t_max: u64) -> Result<LifetimeLaw> {
    require_state(params, x0, y0)?;
    let m = params.capacity() as usize;
    let width = interior_width(params, x0, y0)? as usize;
    let cells = (width as u128) * (m as u128 + 1);
    if cells > MAX_GRID_CELLS {
        return Err(Error::BudgetExceeded {
            need: cells,
            budget: MAX_GRID_CELLS,
        });
    }
    let has_high_wall = matches!(params.interval(), Interval::Finite(_));
    let idx = |x: usize, e: usize| (x - 1) * (m + 1) + e;

    let mut grid = vec![0.0f64; cells as usize];
    let mut bnd_low = 0.0f64;
    let mut bnd_high = 0.0f64;
    match params.interval() {
        Interval::Finite(_) if x0 == 0 => bnd_low = 1.0,
        Interval::Finite(n) if x0 == n => bnd_high = 1.0,
        Interval::Infinite if x0 == 0 => bnd_low = 1.0,
        _ => grid[idx(x0 as usize, y0 as usize)] = 1.0,
    }

    let mut pmf = Vec::with_capacity((t_max + 1).min(1 << 20) as usize);
    let mut alive = 1.0f64;
    for t in 0..=t_max {
        // Interior sites with an empty tank die now.
        let mut dead = 0.0;
        for x in 1..=width {
            let cell = &mut grid[idx(x, 0)];
            dead += *cell;
            *cell = 0.0;
        }
        pmf.push(dead);
        alive -= dead;
        if alive < 1e-16 {
            break;
        }
        if t == t_max {
            break;
        }

        let mut next = vec![0.0f64; cells as usize];
        let mut to_low = 0.0f64;
        let mut to_high = 0.0f64;
        for x in 1..=width {
            for e in 1..=m {
                let mass = grid[idx(x, e)];
                if mass == 0.0 {
                    continue;
                }
                let half = 0.5 * mass;
                if x == 1 {
                    to_low += half;
                } else {
                    next[idx(x - 1, e - 1)] += half;
                }
                if x == width && has_high_wall {
                    to_high += half;
                } else {
                    next[idx(x + 1, e - 1)] += half;
                }
            }
        }
        // Mass that reached a boundary on the previous step is forced back
        // into the interior with a full tank now.
        next[idx(1, m)] += bnd_low;
        if has_high_wall {
            next[idx(width, m)] += bnd_high;
        }
        bnd_low = to_low;
        bnd_high = to_high;
        grid = next;
    }
    Ok(LifetimeLaw {
        pmf,
        residual: alive.max(0.0),
    })
}

/// Lifetime distribution assembled from the renewal decomposition: the
/// defective first-leg law convolved with the renewal sequence of the
/// re-entry law, plus the deterministic M+1 tail of the fatal final leg.
/// Agrees with [`lifetime_pmf_dp`] and runs in O(t_max * M).
pub fn lifetime_pmf_renewal(
    params: &ModelParams,
    x0: u64,
    y0: u64,
    t_max: u64,
) -> Result<LifetimeLaw> {
    require_state(params, x0, y0)?;
    if is_boundary_site(params, x0) {
        // One forced step into the interior with a full tank, then shift.
        if t_max == 0 {
            return Ok(LifetimeLaw {
                pmf: vec![0.0],
                residual: 1.0,
            });
        }
        let inner = lifetime_pmf_renewal_interior(params, 1, params.capacity(), t_max - 1)?;
        let mut pmf = Vec::with_capacity(inner.pmf.len() + 1);
        pmf.push(0.0);
        pmf.extend_from_slice(&inner.pmf);
        return Ok(LifetimeLaw {
            pmf,
            residual: inner.residual,
        });
    }
    lifetime_pmf_renewal_interior(params, x0, y0, t_max)
}

fn lifetime_pmf_renewal_interior(
    params: &ModelParams,
    x0: u64,
    y0: u64,
    t_max: u64,
) -> Result<LifetimeLaw> {
    let m = params.capacity();
    let first = first_excursion_law(params, x0, y0)?;
    let reentry = reentry_excursion_law(params)?;
    let theta = reentry.defect;

    let mut pmf = vec![0.0f64; t_max as usize + 1];
    if y0 <= t_max {
        pmf[y0 as usize] += first.defect;
    }

    // Renewal sequence of the defective re-entry law, then the first-leg
    // convolution. f[s] is the chance the last boundary visit happens at
    // time s; the fatal leg then adds a deterministic M + 1.
    let horizon = t_max.saturating_sub(m + 1) as usize;
    if horizon >= 1 {
        let mut g = vec![0.0f64; horizon + 1];
        g[0] = 1.0;
        for t in 1..=horizon {
            let mut acc = 0.0;
            let j_hi = t.min(reentry.durations.len() - 1);
            for j in 2..=j_hi {
                acc += reentry.durations[j] * g[t - j];
            }
            g[t] = acc;
        }
        for t in 1..=horizon {
            let mut f = 0.0;
            let j_hi = t.min(first.durations.len() - 1);
            for j in 1..=j_hi {
                f += first.durations[j] * g[t - j];
            }
            pmf[t + m as usize + 1] += theta * f;
        }
    }

    let mass = crate::numeric::pairwise_sum(&pmf);
    Ok(LifetimeLaw {
        pmf,
        residual: (1.0 - mass).max(0.0),
    })
}

/// Closed-form expected lifetime. For an interior start (x, y) with hitting
/// tail q = extinction_prob(x, y) and re-entry defect theta:
///
/// E = q y + (1 - q)(M + 1) + E[tau 1(tau <= y)]
///     + (1 - q) ((1 - theta) + E[tau' 1(tau' <= M)]) / theta,
///
/// where tau is the exit time from x and tau' the exit time from the
/// boundary-adjacent site. A boundary start adds its forced step.
pub fn expected_lifetime_exact(params: &ModelParams, x0: u64, y0: u64) -> Result<f64> {
    require_state(params, x0, y0)?;
    if is_boundary_site(params, x0) {
        return Ok(1.0 + expected_lifetime_exact_interior(params, 1, params.capacity())?);
    }
    expected_lifetime_exact_interior(params, x0, y0)
}

fn expected_lifetime_exact_interior(params: &ModelParams, x0: u64, y0: u64) -> Result<f64> {
    let m = params.capacity();
    let first = first_excursion_law(params, x0, y0)?;
    let reentry = reentry_excursion_law(params)?;
    let q = first.defect;
    let theta = reentry.defect;
    // E[tau' 1(tau' <= M)] from the re-entry law, whose legs are 1 + tau'.
    let reentry_partial = reentry.partial_mean() - (1.0 - theta);
    Ok(q * y0 as f64
        + (1.0 - q) * (m as f64 + 1.0)
        + first.partial_mean()
        + (1.0 - q) * ((1.0 - theta) + reentry_partial) / theta)
}

/// Exact MGF of the time of the last boundary visit for an interior start:
/// E[e^{s S}] = q + (1 - q) theta psi_first(s) / (1 - (1 - theta) psi_re(s)),
/// where the psi are conditional leg MGFs. Defined while
/// (1 - theta) psi_re(s) < 1.
pub fn compound_mgf(params: &ModelParams, x0: u64, y0: u64, s: f64) -> Result<f64> {
    require_state(params, x0, y0)?;
    if is_boundary_site(params, x0) {
        return Err(Error::InvalidParams(format!(
            "start {x0} is a boundary site"
        )));
    }
    if y0 == 0 {
        // Immediate extinction: the last-visit time is 0 with certainty.
        return Ok(1.0);
    }
    let first = first_excursion_law(params, x0, y0)?;
    let reentry = reentry_excursion_law(params)?;
    let q = first.defect;
    if q >= 1.0 {
        // The fuel cannot reach a boundary from here; last visit is at 0.
        return Ok(1.0);
    }
    let theta = reentry.defect;
    let psi_first = first.conditional_mgf(s);
    let ratio = (1.0 - theta) * reentry.conditional_mgf(s);
    if ratio >= 1.0 {
        return Err(Error::Domain {
            what: "compound_mgf",
            detail: format!("(1 - theta) psi(s) = {ratio} >= 1 at s = {s}"),
        });
    }
    Ok(q + (1.0 - q) * theta * psi_first / (1.0 - ratio))
}
