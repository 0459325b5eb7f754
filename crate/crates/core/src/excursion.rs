//! Exit-time analytics for the fair walk on {0, .., N}.
//!
//! Everything here concerns tau, the first time a fair +-1 walk started at an
//! interior site x hits {0, N}. Two independent routes are provided and cross
//! checked in the tests: a substochastic dynamic program over interior sites,
//! and closed spectral sums
//!
//!   P_1(tau = n) = (2/N) sum_{k=1..ceil((N-1)/2)} cos^(n-1)(pi(2k-1)/N) sin^2(pi(2k-1)/N),
//!   P_1(tau > n) = (2/N) [ S0(N, m, n) + S0(N, m, n+1) ],
//!
//! where S0(N, m, n) = sum_{k=1..m} cos^n(pi(2k-1)/N) and m = ceil((N-1)/2).
//! The one-sided laws (absorption at 0 only) have binomial closed forms used
//! for large-interval work.

use crate::error::{Error, Result};

/// Work cap for DP tables: interior sites times steps.
pub const DEFAULT_TABLE_BUDGET: u128 = 4_000_000_000;

/// Exact exit-time table from one start site.
///
/// `pmf[i]` is P_x(tau = i + 1); `mass_at_zero` is 1 exactly when the start
/// is already on the boundary. `exit_low`/`exit_high` split the accumulated
/// exit mass by endpoint; `tail` is the probability of still being interior
/// after the last tabulated step. All entries sum to one.
#[derive(Debug, Clone)]
pub struct ExitLawTable {
    pub n: u64,
    pub x: u64,
    pub mass_at_zero: f64,
    pub pmf: Vec<f64>,
    pub tail: f64,
    pub exit_low: f64,
    pub exit_high: f64,
}

impl ExitLawTable {
    /// P_x(tau = n) for n within the tabulated horizon.
    pub fn pmf_at(&self, n: u64) -> f64 {
        if n == 0 {
            self.mass_at_zero
        } else {
            self.pmf.get(n as usize - 1).copied().unwrap_or(0.0)
        }
    }

    /// P_x(tau > n); exact for n within the horizon.
    pub fn tail_at(&self, n: u64) -> f64 {
        if n as usize >= self.pmf.len() {
            return self.tail;
        }
        let mut t = self.tail;
        for i in (n as usize..self.pmf.len()).rev() {
            t += self.pmf[i];
        }
        t
    }

    /// Partial first moment sum_{n <= horizon} n P_x(tau = n).
    pub fn partial_mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .rev()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }
}

/// Exit-time law by forward substochastic evolution over interior sites.
///
/// Boundary mass is harvested at each step, never renormalised. Requires
/// 2 <= N and x <= N; a start on the boundary yields the degenerate table.
pub fn exit_pmf_dp(n: u64, x: u64, n_max: u64) -> Result<ExitLawTable> {
    exit_pmf_dp_budgeted(n, x, n_max, DEFAULT_TABLE_BUDGET)
}

pub fn exit_pmf_dp_budgeted(n: u64, x: u64, n_max: u64, budget: u128) -> Result<ExitLawTable> {
    if n < 2 {
        return Err(Error::InvalidParams(format!(
            "interval length N = {n} is below 2"
        )));
    }
    if x > n {
        return Err(Error::InvalidParams(format!("start {x} outside 0..={n}")));
    }
    let need = (n as u128 - 1) * n_max as u128;
    if need > budget {
        return Err(Error::BudgetExceeded { need, budget });
    }
    if x == 0 || x == n {
        return Ok(ExitLawTable {
            n,
            x,
            mass_at_zero: 1.0,
            pmf: vec![0.0; n_max as usize],
            tail: 0.0,
            exit_low: if x == 0 { 1.0 } else { 0.0 },
            exit_high: if x == 0 { 0.0 } else { 1.0 },
        });
    }

    let sites = (n - 1) as usize; // interior sites 1..=N-1, index i = site i+1
    let mut cur = vec![0.0f64; sites];
    let mut next = vec![0.0f64; sites];
    cur[x as usize - 1] = 1.0;
    let mut pmf = Vec::with_capacity(n_max as usize);
    let mut exit_low = 0.0f64;
    let mut exit_high = 0.0f64;

    for _ in 0..n_max {
        next.iter_mut().for_each(|v| *v = 0.0);
        let low = 0.5 * cur[0];
        let high = 0.5 * cur[sites - 1];
        for (i, &mass) in cur.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let half = 0.5 * mass;
            if i > 0 {
                next[i - 1] += half;
            }
            if i + 1 < sites {
                next[i + 1] += half;
            }
        }
        exit_low += low;
        exit_high += high;
        pmf.push(low + high);
        std::mem::swap(&mut cur, &mut next);
    }

    let tail: f64 = cur.iter().rev().sum();
    Ok(ExitLawTable {
        n,
        x,
        mass_at_zero: 0.0,
        pmf,
        tail,
        exit_low,
        exit_high,
    })
}

/// Grow a DP table until the interior tail drops below `tail_tol` (or the
/// step budget runs out, which is an error).
pub fn exit_pmf_dp_auto(n: u64, x: u64, tail_tol: f64, budget: u128) -> Result<ExitLawTable> {
    let mut n_max = 4 * n.max(16);
    loop {
        let table = exit_pmf_dp_budgeted(n, x, n_max, budget)?;
        if table.tail <= tail_tol {
            return Ok(table);
        }
        n_max = n_max.checked_mul(2).ok_or(Error::BudgetExceeded {
            need: u128::MAX,
            budget,
        })?;
    }
}

fn m_of(n: u64) -> u64 {
    // ceil((N-1)/2)
    n / 2
}

/// cos(theta)^n for potentially huge n, sign handled exactly.
fn cos_pow(c: f64, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if c == 0.0 {
        return 0.0;
    }
    if n <= i32::MAX as u64 {
        c.powi(n as i32)
    } else {
        let mag = (n as f64 * c.abs().ln()).exp();
        if c < 0.0 && n % 2 == 1 {
            -mag
        } else {
            mag
        }
    }
}

/// S0(N, m, n) = sum_{k=1..m} cos^n(pi(2k-1)/N).
pub fn cosine_power_sum(n_sites: u64, m: u64, power: u64) -> f64 {
    let nf = n_sites as f64;
    let mut acc = 0.0;
    for k in 1..=m {
        let angle = std::f64::consts::PI * (2 * k - 1) as f64 / nf;
        acc += cos_pow(angle.cos(), power);
    }
    acc
}

/// P_1(tau = n) in closed form. Exactly zero when N and n are both even.
pub fn exit_pmf_cosine(n_sites: u64, n: u64) -> Result<f64> {
    if n_sites < 2 {
        return Err(Error::InvalidParams(format!(
            "interval length N = {n_sites} is below 2"
        )));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let nf = n_sites as f64;
    let mut acc = 0.0;
    for k in 1..=m_of(n_sites) {
        let angle = std::f64::consts::PI * (2 * k - 1) as f64 / nf;
        let (s, c) = angle.sin_cos();
        acc += cos_pow(c, n - 1) * s * s;
    }
    Ok(2.0 / nf * acc)
}

/// P_1(tau > n) in closed form via the two-power identity.
pub fn exit_tail_cosine(n_sites: u64, n: u64) -> Result<f64> {
    if n_sites < 2 {
        return Err(Error::InvalidParams(format!(
            "interval length N = {n_sites} is below 2"
        )));
    }
    let m = m_of(n_sites);
    let s = cosine_power_sum(n_sites, m, n) + cosine_power_sum(n_sites, m, n + 1);
    Ok((2.0 / n_sites as f64 * s).clamp(0.0, 1.0))
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// P_1(tau_0 = n) for the walk on the half line: zero at even n, and
/// 2^(-1-2j) C(2j, j) / (j+1) at n = 2j+1.
pub fn one_sided_pmf(n: u64) -> f64 {
    if n == 0 || n % 2 == 0 {
        return 0.0;
    }
    let j = (n - 1) / 2;
    let ln =
        ln_binomial(2 * j, j) - (1 + 2 * j) as f64 * std::f64::consts::LN_2 - ((j + 1) as f64).ln();
    ln.exp()
}

/// P_1(tau_0 > n) for the walk on the half line: 2^(-2j) C(2j, j) with
/// j = ceil(n/2), using that tau_0 is odd from site 1.
pub fn one_sided_tail(n: u64) -> f64 {
    let j = n.div_ceil(2);
    (ln_binomial(2 * j, j) - 2.0 * j as f64 * std::f64::consts::LN_2).exp()
}

/// Exact mean and variance of tau from site x: mean x(N-x) and variance
/// x(N-x)(x^2 + (N-x)^2 - 2)/3.
pub fn exit_moments(n: u64, x: u64) -> Result<(f64, f64)> {
    if n < 2 || x > n {
        return Err(Error::InvalidParams(format!(
            "need 0 <= x <= N and N >= 2, got N={n} x={x}"
        )));
    }
    let xf = x as f64;
    let yf = (n - x) as f64;
    let mean = xf * yf;
    let var = xf * yf / 3.0 * (xf * xf + yf * yf - 2.0);
    Ok((mean, var))
}

/// Truncated spectral estimate of P_1(tau > n) with a certified relative
/// error bracket.
#[derive(Debug, Clone, Copy)]
pub struct TailExpansion {
    pub n_sites: u64,
    pub k0: u64,
    pub n: u64,
    /// Leading sum S0(N, k0, n).
    pub s0: f64,
    /// Central estimate (4/N) S0(N, k0, n).
    pub estimate: f64,
    /// Bound on the relative error of the estimate.
    pub delta_bound: f64,
}

impl TailExpansion {
    pub fn lower(&self) -> f64 {
        self.estimate * (1.0 - self.delta_bound)
    }

    pub fn upper(&self) -> f64 {
        self.estimate * (1.0 + self.delta_bound)
    }

    /// Whether an exactly computed tail falls inside the bracket.
    pub fn contains(&self, exact: f64) -> bool {
        exact >= self.lower() && exact <= self.upper()
    }
}

/// P_1(tau > n) ~ (4/N) S0(N, k0, n) (1 + Delta) with
/// |Delta| <= 4 pi^2 k0^2 / N^2 + 2 (1 + N^2/(4 pi^2 n k0)) exp(-2 pi^2 n k0^2 / N^2).
///
/// A wide bracket is a valid answer; N below 8 is rejected, and k0 may not
/// exceed ceil((N-1)/2).
pub fn tail_expansion(n_sites: u64, k0: u64, n: u64) -> Result<TailExpansion> {
    if n_sites < 8 {
        return Err(Error::InvalidParams(format!(
            "tail expansion needs N >= 8, got {n_sites}"
        )));
    }
    if k0 < 1 || k0 > m_of(n_sites) {
        return Err(Error::InvalidParams(format!(
            "k0 = {k0} outside 1..={}",
            m_of(n_sites)
        )));
    }
    if n < 1 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    let nf = n_sites as f64;
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let s0 = cosine_power_sum(n_sites, k0, n);
    let k0f = k0 as f64;
    let nn = n as f64;
    let delta_bound = 4.0 * pi2 * k0f * k0f / (nf * nf)
        + 2.0
            * (1.0 + nf * nf / (4.0 * pi2 * nn * k0f))
            * (-2.0 * pi2 * nn * k0f * k0f / (nf * nf)).exp();
    Ok(TailExpansion {
        n_sites,
        k0,
        n,
        s0,
        estimate: 4.0 / nf * s0,
        delta_bound,
    })
}

/// (N/4) P_1(tau > floor(y N^2)): the scaled tail whose large-N limit is the
/// alternating theta sum implemented in `limits::theta_tail`.
pub fn scaled_exit_tail(n_sites: u64, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::InvalidParams(format!("y must be positive, got {y}")));
    }
    let steps = (y * (n_sites as f64) * (n_sites as f64)).floor();
    if steps > 1e18 {
        return Err(Error::InvalidParams(format!(
            "scaled horizon {steps} too large"
        )));
    }
    Ok(n_sites as f64 / 4.0 * exit_tail_cosine(n_sites, steps as u64)?)
}
