//! Limit laws of the scaled lifetime.
//!
//! Three families appear depending on how the energy capacity M compares with
//! the squared interval length:
//!
//! * meagre supplies: a Darling-Mandelbrot type law whose MGF is 1/K(t) with
//!   K(t) = 1 - sum_{l>=1} t^l / ((2l-1) l!), plus the one-sided half-stable
//!   law and the explicit mean surface for general starts;
//! * confined supplies: a unit exponential on the scale 4 cos^M(pi/N) / N^2;
//! * the critical window: a compound law with MGF 1/(1 - G(rho, s)) built
//!   from the interval theta sum H(y) = sum_{k>=1} exp(-pi^2 (2k-1)^2 y / 2).
//!
//! H and its derivative sums are evaluated through the modular (Poisson
//! resummed) series for small arguments, so integrands that probe y near 0
//! stay cheap and fully accurate.

use crate::error::{Error, Result};
use crate::quad::integrate;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::f64::consts::PI;

const SQRT_2PI: f64 = 2.5066282746310002;

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / SQRT_2PI
}

/// Standard normal upper tail, accurate far into the tail via erfc.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

// ---------------------------------------------------------------------------
// Darling-Mandelbrot family: K, its companion integral, MGF, moments.
// ---------------------------------------------------------------------------

/// t * integral_0^1 u^(-1/2) e^(u t) du = sum_{l>=1} 2 l t^l / ((2l-1) l!).
pub fn sqrt_exp_integral(t: f64) -> f64 {
    let mut acc = 0.0;
    let mut term = 1.0; // t^l / l!
    let mut l = 1u32;
    loop {
        term *= t / l as f64;
        acc += 2.0 * l as f64 * term / (2.0 * l as f64 - 1.0);
        if term.abs() * 3.0 < 1e-18 * (1.0 + acc.abs()) && (l as f64) > t.abs() + 8.0 {
            return acc;
        }
        l += 1;
        if l > 10_000 {
            return acc;
        }
    }
}

/// K(t) = 1 - sum_{l>=1} t^l / ((2l-1) l!), strictly decreasing, K(0) = 1.
pub fn kummer_k(t: f64) -> f64 {
    let mut acc = 0.0;
    let mut term = 1.0; // t^l / l!
    let mut l = 1u32;
    loop {
        term *= t / l as f64;
        acc += term / (2.0 * l as f64 - 1.0);
        if term.abs() < 1e-18 * (1.0 + acc.abs()) && (l as f64) > t.abs() + 8.0 {
            return 1.0 - acc;
        }
        l += 1;
        if l > 10_000 {
            return 1.0 - acc;
        }
    }
}

/// Unique positive root of K, the MGF abscissa of the Darling-Mandelbrot
/// type law. Bisection on [1/2, 1] where K changes sign.
pub fn dm_mgf_abscissa() -> f64 {
    let mut lo = 0.5f64;
    let mut hi = 1.0f64;
    debug_assert!(kummer_k(lo) > 0.0 && kummer_k(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if kummer_k(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// MGF 1/K(t) of the unit-mean lifetime limit law, defined for t below the
/// abscissa where K vanishes.
pub fn dm_mgf(t: f64) -> Result<f64> {
    let k = kummer_k(t);
    if k <= 0.0 {
        return Err(Error::Domain {
            what: "dm_mgf",
            detail: format!(
                "t = {t} is at or beyond the abscissa {:.12}",
                dm_mgf_abscissa()
            ),
        });
    }
    Ok(1.0 / k)
}

/// Exact raw moments of the limit law: m_0 = 1 and
/// m_k = sum_{j=1..k} C(k, j) m_(k-j) / (2j - 1).
/// Returns m_1 .. m_k_max as exact rationals.
pub fn dm_moments(k_max: usize) -> Vec<BigRational> {
    let mut all: Vec<BigRational> = Vec::with_capacity(k_max + 1);
    all.push(BigRational::one());
    // Pascal row for C(k, j), rebuilt incrementally.
    let mut row: Vec<BigInt> = vec![BigInt::one()];
    for k in 1..=k_max {
        let mut next = vec![BigInt::one(); k + 1];
        for j in 1..k {
            next[j] = &row[j - 1] + &row[j];
        }
        row = next;
        let mut m = BigRational::zero();
        for j in 1..=k {
            let c = BigRational::from_integer(row[j].clone());
            let odd = BigRational::from_integer(BigInt::from(2 * j as i64 - 1));
            m += c * &all[k - j] / odd;
        }
        all.push(m);
    }
    all.remove(0);
    all
}

/// The Darling-Mandelbrot type limit: abscissa plus exact moments.
#[derive(Debug, Clone)]
pub struct DmDistribution {
    pub t0: f64,
    pub moments: Vec<BigRational>,
}

impl DmDistribution {
    pub fn compute(k_max: usize) -> Self {
        DmDistribution {
            t0: dm_mgf_abscissa(),
            moments: dm_moments(k_max),
        }
    }

    pub fn moment_f64(&self, k: usize) -> Option<f64> {
        self.moments.get(k - 1).map(rational_to_f64)
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    let numer = r.numer();
    let denom = r.denom();
    // Exact for the sizes used here; falls back to string parsing for huge terms.
    let nf = numer.to_string().parse::<f64>().unwrap_or(f64::NAN);
    let df = denom.to_string().parse::<f64>().unwrap_or(f64::NAN);
    nf / df
}

// ---------------------------------------------------------------------------
// One-sided half-stable law.
// ---------------------------------------------------------------------------

/// P(T > t) = 2 Phi(t^(-1/2)) - 1 for the hitting-time limit of standard
/// Brownian motion from 1; equals 1 for t <= 0.
pub fn stable_half_tail(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    libm::erf(1.0 / (2.0 * t).sqrt())
}

/// Density (2 pi t^3)^(-1/2) exp(-1/(2t)) of the same law; zero for t <= 0.
pub fn stable_half_density(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    (2.0 * PI * t * t * t).sqrt().recip() * (-0.5 / t).exp()
}

// ---------------------------------------------------------------------------
// Meagre-regime mean surface for general starts.
// ---------------------------------------------------------------------------

/// Limiting mean of lambda/M for a start at depth parameter a = x^2/M and
/// initial fuel fraction u = y/M:
/// g(a, u) = u + (4 - 2u - 2a) NormalSF(sqrt(a/u)) + sqrt(2 a u / pi) e^(-a/(2u)).
/// g(0, u) = 2 and g(a, u) -> u as a grows.
pub fn meagre_mean_limit(a: f64, u: f64) -> Result<f64> {
    if !(a >= 0.0) || !(u > 0.0 && u <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "need a >= 0 and 0 < u <= 1, got a={a} u={u}"
        )));
    }
    if a == 0.0 {
        return Ok(2.0);
    }
    let r = (a / u).sqrt();
    Ok(u + (4.0 - 2.0 * u - 2.0 * a) * normal_sf(r)
        + (2.0 * a * u / PI).sqrt() * (-0.5 * a / u).exp())
}

/// Partial derivative of the mean surface in the depth parameter:
/// dg/da = -2 (1 - u) phi(sqrt(a/u)) / sqrt(a u) - 2 NormalSF(sqrt(a/u)).
/// Requires a > 0; the derivative diverges at a = 0 for u < 1.
pub fn meagre_mean_limit_da(a: f64, u: f64) -> Result<f64> {
    if !(a > 0.0) || !(u > 0.0 && u <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "need a > 0 and 0 < u <= 1, got a={a} u={u}"
        )));
    }
    let r = (a / u).sqrt();
    Ok(-2.0 * (1.0 - u) * normal_pdf(r) / (a * u).sqrt() - 2.0 * normal_sf(r))
}

// ---------------------------------------------------------------------------
// Interval theta sum H and friends.
// ---------------------------------------------------------------------------

const THETA_DUAL_CUTOFF: f64 = 0.2;

/// H(y) = sum_{k>=1} exp(-pi^2 (2k-1)^2 y / 2) for y > 0.
///
/// Direct summation for y >= 0.2; for smaller y the modular identity
/// H(y) = (8 pi y)^(-1/2) [1 + 4 sum_j e^(-2 j^2 / y) - 2 sum_j e^(-j^2 / (2y))]
/// converges in a handful of terms.
pub fn theta_tail(y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::InvalidParams(format!(
            "theta sum needs y > 0, got {y}"
        )));
    }
    if y >= THETA_DUAL_CUTOFF {
        let c = PI * PI * y / 2.0;
        let mut acc = 0.0;
        let mut k = 1u64;
        loop {
            let odd = (2 * k - 1) as f64;
            let term = (-c * odd * odd).exp();
            acc += term;
            if term < 1e-18 * (acc + 1e-300) || term == 0.0 {
                return Ok(acc);
            }
            k += 1;
        }
    } else {
        let mut bracket = 1.0;
        for j in 1..=5u64 {
            let jf = (j * j) as f64;
            bracket += 4.0 * (-2.0 * jf / y).exp() - 2.0 * (-jf / (2.0 * y)).exp();
        }
        Ok(bracket / (8.0 * PI * y).sqrt())
    }
}

/// integral_0^y_hi H, by adaptive quadrature after the substitution
/// y = u^2 which removes the inverse square root at the origin.
pub fn theta_tail_integral(y_hi: f64) -> Result<f64> {
    if !(y_hi > 0.0) {
        return Err(Error::InvalidParams(format!(
            "upper limit must be positive, got {y_hi}"
        )));
    }
    let f = |u: f64| {
        if u == 0.0 {
            // limit of 2u H(u^2) as u -> 0
            (2.0 / PI).sqrt() / 2.0
        } else {
            2.0 * u * theta_tail(u * u).expect("positive argument")
        }
    };
    Ok(integrate(&f, 0.0, y_hi.sqrt(), 1e-13))
}

/// integral_y^infinity H in closed form:
/// sum_{k>=1} (2 / (pi^2 (2k-1)^2)) exp(-pi^2 (2k-1)^2 y / 2).
pub fn theta_tail_integral_rest(y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::InvalidParams(format!(
            "lower limit must be positive, got {y}"
        )));
    }
    let c = PI * PI * y / 2.0;
    let mut acc = 0.0;
    let mut k = 1u64;
    loop {
        let odd = (2 * k - 1) as f64;
        let term = 2.0 / (PI * PI * odd * odd) * (-c * odd * odd).exp();
        acc += term;
        if term < 1e-18 * (acc + 1e-300) || term == 0.0 {
            return Ok(acc);
        }
        k += 1;
        if k > 100_000_000 {
            return Ok(acc);
        }
    }
}

/// sum_{k>=1} (2k-1)^2 exp(-beta (2k-1)^2), the derivative sum behind the
/// Levy density of the critical law. Modular form below the cutoff.
fn odd_square_exp_sum(beta: f64) -> f64 {
    if beta >= 0.05 {
        let mut acc = 0.0;
        let hump = (1.0 / beta).sqrt(); // terms grow until (2k-1) ~ hump
        let mut k = 1u64;
        loop {
            let odd = (2 * k - 1) as f64;
            let term = odd * odd * (-beta * odd * odd).exp();
            acc += term;
            if odd > hump && (term < 1e-18 * (acc + 1e-300) || term == 0.0) {
                return acc;
            }
            k += 1;
        }
    } else {
        // Differentiate the modular form of A(beta) = sum_{k odd} e^(-beta k^2).
        let sp = PI.sqrt();
        let mut bracket = 1.0;
        let mut dsum = 0.0;
        for j in 1..=4u64 {
            let jj = (j * j) as f64;
            let e1 = (-PI * PI * jj / beta).exp();
            let e2 = (-PI * PI * jj / (4.0 * beta)).exp();
            bracket += 4.0 * e1 - 2.0 * e2;
            dsum += 4.0 * (PI * PI * jj / (beta * beta)) * e1
                - 2.0 * (PI * PI * jj / (4.0 * beta * beta)) * e2;
        }
        sp / 8.0 * beta.powf(-1.5) * bracket - sp / 4.0 / beta.sqrt() * dsum
    }
}

// ---------------------------------------------------------------------------
// Critical-window compound law.
// ---------------------------------------------------------------------------

/// G(rho, s) = (s / H(rho)) integral_0^1 e^(s v) (H(v rho) - H(rho)) dv,
/// evaluated after v = w^2. Strictly increasing in s with G(rho, 0) = 0.
pub fn critical_gain(rho: f64, s: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParams(format!(
            "rho must be positive, got {rho}"
        )));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let h_rho = theta_tail(rho)?;
    let f = |w: f64| {
        if w == 0.0 {
            (2.0 * PI * rho).sqrt().recip()
        } else {
            let v = w * w;
            2.0 * w * (s * v).exp() * (theta_tail(v * rho).expect("positive") - h_rho)
        }
    };
    // |integral| <= e^(s+) (int_0^1 H(v rho) dv + H(rho)) and the first term
    // equals (1/rho) int_0^rho H <= 1/(4 rho); tolerance follows that size so
    // large-rho cases (H(rho) tiny, G huge) stay well conditioned.
    let i_scale = s.max(0.0).exp() * (0.25 / rho + h_rho);
    let integral = integrate(&f, 0.0, 1.0, 1e-13 * i_scale);
    Ok(s / h_rho * integral)
}

/// Supremum of the MGF domain: the root of G(rho, s) = 1 in s > 0.
pub fn critical_mgf_abscissa(rho: f64) -> Result<f64> {
    let mut hi = 1e-3;
    let mut lo = 0.0;
    for _ in 0..80 {
        if critical_gain(rho, hi)? >= 1.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if critical_gain(rho, hi)? < 1.0 {
        return Err(Error::Domain {
            what: "critical_mgf_abscissa",
            detail: format!("no sign change located below s = {hi}"),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if critical_gain(rho, mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// MGF 1/(1 - G(rho, s)) of the critical limit law, for s with G < 1.
pub fn critical_mgf(rho: f64, s: f64) -> Result<f64> {
    let g = critical_gain(rho, s)?;
    if g >= 1.0 {
        return Err(Error::Domain {
            what: "critical_mgf",
            detail: format!("G(rho, s) = {g} >= 1 at rho={rho}, s={s}"),
        });
    }
    Ok(1.0 / (1.0 - g))
}

/// The gain recomputed through its Levy-measure representation:
/// G(rho, s) = integral_0^1 (e^(s x) - 1) m_rho(x) / x dx, evaluated after
/// x = w^2. An independent route to [`critical_gain`] (different integrand,
/// different series), used as a cross check.
pub fn critical_gain_levy(rho: f64, s: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParams(format!(
            "rho must be positive, got {rho}"
        )));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    // The integrand extends continuously to w = 0 (value 2s * lim w m(w^2)),
    // but starting a hair above zero keeps the code simple; the omitted head
    // is O(w0) * that finite limit, far below the quadrature tolerance.
    let f = |w: f64| {
        let x = w * w;
        2.0 * ((s * x).exp() - 1.0) * critical_levy_density(rho, x).expect("positive rho") / w
    };
    // |G| <= |s| e^(s+) (1 + 1/(4 rho H(rho))); the tolerance tracks that
    // size because the density scales like 1/H(rho).
    let h_rho = theta_tail(rho)?;
    let g_scale = s.abs().max(1.0) * s.max(0.0).exp() * (1.0 + 0.25 / (rho * h_rho));
    Ok(integrate(&f, 1e-10, 1.0, 1e-12 * g_scale))
}

/// Mean of the critical limit law:
/// mu(rho) = (1/(rho H(rho))) integral_0^rho H - 1.
pub fn critical_mean(rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParams(format!(
            "rho must be positive, got {rho}"
        )));
    }
    Ok(theta_tail_integral(rho)? / (rho * theta_tail(rho)?) - 1.0)
}

/// Density x -> m_rho(x) of the Levy measure representation
/// G(rho, s) = integral (e^(s x) - 1) m_rho(x) / x dx, supported on [0, 1]:
/// m_rho(x) = (pi^2 rho x / (2 H(rho))) sum_k (2k-1)^2 e^(-pi^2 (2k-1)^2 rho x / 2).
/// Returns 0 outside the support (and at x = 0, where the density blows up
/// like x^(-1/2) but carries no mass).
pub fn critical_levy_density(rho: f64, x: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParams(format!(
            "rho must be positive, got {rho}"
        )));
    }
    if x <= 0.0 || x > 1.0 {
        return Ok(0.0);
    }
    let beta = PI * PI * rho * x / 2.0;
    Ok(PI * PI * rho * x / (2.0 * theta_tail(rho)?) * odd_square_exp_sum(beta))
}

/// Critical limit law at aspect ratio rho: abscissa and mean, cached.
#[derive(Debug, Clone, Copy)]
pub struct CriticalLaw {
    pub rho: f64,
    pub s_max: f64,
    pub mean: f64,
}

impl CriticalLaw {
    pub fn new(rho: f64) -> Result<Self> {
        Ok(CriticalLaw {
            rho,
            s_max: critical_mgf_abscissa(rho)?,
            mean: critical_mean(rho)?,
        })
    }

    pub fn mgf(&self, s: f64) -> Result<f64> {
        critical_mgf(self.rho, s)
    }
}

// ---------------------------------------------------------------------------
// Confined-regime scale.
// ---------------------------------------------------------------------------

/// 4 cos^M(pi/N) / N^2, evaluated in log space. N >= 3; M may be 0.
pub fn confined_scale(n_sites: u64, m: u64) -> Result<f64> {
    if n_sites < 3 {
        return Err(Error::InvalidParams(format!("need N >= 3, got {n_sites}")));
    }
    let nf = n_sites as f64;
    let ln = 4f64.ln() - 2.0 * nf.ln() + m as f64 * (PI / nf).cos().ln();
    Ok(ln.exp())
}

/// Gaussian-tail stand-in (4/N^2) exp(-pi^2 M / (2 N^2)), accurate while
/// M is well below N^4.
pub fn confined_scale_exp(n_sites: u64, m: u64) -> Result<f64> {
    if n_sites < 3 {
        return Err(Error::InvalidParams(format!("need N >= 3, got {n_sites}")));
    }
    let nf = n_sites as f64;
    Ok(4.0 / (nf * nf) * (-PI * PI * m as f64 / (2.0 * nf * nf)).exp())
}

// ---------------------------------------------------------------------------
// A uniform handle over the three limit families.
// ---------------------------------------------------------------------------

/// Evaluable limit law: MGF everywhere it exists, mean and tail where a
/// closed form is available.
#[derive(Debug, Clone)]
pub enum LimitLaw {
    DarlingMandelbrot(DmDistribution),
    StableHalf,
    UnitExponential,
    Critical(CriticalLaw),
}

impl LimitLaw {
    pub fn mgf(&self, s: f64) -> Result<f64> {
        match self {
            LimitLaw::DarlingMandelbrot(_) => dm_mgf(s),
            LimitLaw::StableHalf => {
                if s > 0.0 {
                    Err(Error::Domain {
                        what: "stable_half_mgf",
                        detail: "the half-stable law has no finite MGF for s > 0".into(),
                    })
                } else if s == 0.0 {
                    Ok(1.0)
                } else {
                    // E e^{sT} = e^{-sqrt(2|s|)} for the unit hitting-time law.
                    Ok((-(2.0 * s.abs()).sqrt()).exp())
                }
            }
            LimitLaw::UnitExponential => {
                if s < 1.0 {
                    Ok(1.0 / (1.0 - s))
                } else {
                    Err(Error::Domain {
                        what: "exponential_mgf",
                        detail: format!("s = {s} is at or beyond the abscissa 1"),
                    })
                }
            }
            LimitLaw::Critical(law) => law.mgf(s),
        }
    }

    pub fn mean(&self) -> Option<f64> {
        match self {
            LimitLaw::DarlingMandelbrot(_) => Some(1.0),
            LimitLaw::StableHalf => None,
            LimitLaw::UnitExponential => Some(1.0),
            LimitLaw::Critical(law) => Some(law.mean),
        }
    }

    /// P(X > t) where a closed form exists.
    pub fn tail(&self, t: f64) -> Option<f64> {
        match self {
            LimitLaw::StableHalf => Some(stable_half_tail(t)),
            LimitLaw::UnitExponential => Some(if t <= 0.0 { 1.0 } else { (-t).exp() }),
            _ => None,
        }
    }
}
