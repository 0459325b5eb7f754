//! Independent brute-force oracle for the lifetime distribution.
//!
//! Every transition probability is a dyadic rational, so the occupation
//! measure at time t has a common denominator 2^t. This module evolves the
//! integer numerators exactly (arbitrary precision) and converts to f64 only
//! at the very end, giving a reference distribution whose only error is one
//! final rounding per probability. It shares no code with the DP or renewal
//! routes beyond the parameter type.

use crate::error::{Error, Result};
use crate::lifetime::LifetimeLaw;
use crate::model::{Interval, ModelParams};
use num_bigint::BigUint;
use num_traits::{One, Zero};

/// Convert h / 2^t to f64 with one rounding.
fn dyadic_to_f64(h: &BigUint, t: u64) -> f64 {
    if h.is_zero() {
        return 0.0;
    }
    let bits = h.bits();
    if bits <= 64 {
        let lead: u64 = h.try_into().expect("fits in u64");
        return libm::ldexp(lead as f64, -(t as i32));
    }
    // Keep the top 64 bits, track the discarded exponent.
    let shift = bits - 64;
    let top: u64 = (h >> shift).try_into().expect("fits in u64");
    libm::ldexp(top as f64, shift as i32 - t as i32)
}

/// Exact forward evolution of the walk, one BigUint numerator per state.
/// Interior splits contribute the parent numerator to both neighbours while
/// the global denominator doubles; forced boundary moves contribute twice
/// the numerator. Extinction numerators are harvested per step.
pub fn lifetime_pmf_brute(
    params: &ModelParams,
    x0: u64,
    y0: u64,
    t_max: u64,
) -> Result<LifetimeLaw> {
    if y0 > params.capacity() {
        return Err(Error::InvalidParams(format!(
            "initial energy {y0} exceeds capacity {}",
            params.capacity()
        )));
    }
    let m = params.capacity() as usize;
    let (width, has_high_wall) = match params.interval() {
        Interval::Finite(n) => {
            if x0 > n {
                return Err(Error::InvalidParams(format!("start {x0} outside 0..={n}")));
            }
            ((n - 1) as usize, true)
        }
        Interval::Infinite => (((x0 + y0).max(params.capacity() + 1)) as usize, false),
    };
    if (width as u128) * (m as u128 + 1) > 4_000_000 {
        return Err(Error::BudgetExceeded {
            need: width as u128 * (m as u128 + 1),
            budget: 4_000_000,
        });
    }
    let idx = |x: usize, e: usize| (x - 1) * (m + 1) + e;

    let mut grid = vec![BigUint::zero(); width * (m + 1)];
    let mut bnd_low = BigUint::zero();
    let mut bnd_high = BigUint::zero();
    let at_boundary = match params.interval() {
        Interval::Finite(n) => x0 == 0 || x0 == n,
        Interval::Infinite => x0 == 0,
    };
    if at_boundary {
        if x0 == 0 {
            bnd_low = BigUint::one();
        } else {
            bnd_high = BigUint::one();
        }
    } else {
        grid[idx(x0 as usize, y0 as usize)] = BigUint::one();
    }

    let mut harvested: Vec<BigUint> = Vec::new();
    for t in 0..=t_max {
        let mut dead = BigUint::zero();
        for x in 1..=width {
            let cell = &mut grid[idx(x, 0)];
            if !cell.is_zero() {
                dead += std::mem::take(cell);
            }
        }
        harvested.push(dead);
        if t == t_max {
            break;
        }
        let any_alive =
            !bnd_low.is_zero() || !bnd_high.is_zero() || grid.iter().any(|c| !c.is_zero());
        if !any_alive {
            break;
        }

        let mut next = vec![BigUint::zero(); width * (m + 1)];
        let mut to_low = BigUint::zero();
        let mut to_high = BigUint::zero();
        for x in 1..=width {
            for e in 1..=m {
                let mass = &grid[idx(x, e)];
                if mass.is_zero() {
                    continue;
                }
                if x == 1 {
                    to_low += mass;
                } else {
                    next[idx(x - 1, e - 1)] += mass;
                }
                if x == width && has_high_wall {
                    to_high += mass;
                } else {
                    next[idx(x + 1, e - 1)] += mass;
                }
            }
        }
        // Forced moves double alongside the global denominator.
        if !bnd_low.is_zero() {
            next[idx(1, m)] += bnd_low << 1;
        }
        if !bnd_high.is_zero() {
            next[idx(width, m)] += bnd_high << 1;
        }
        bnd_low = to_low;
        bnd_high = to_high;
        grid = next;
    }

    let pmf: Vec<f64> = harvested
        .iter()
        .enumerate()
        .map(|(t, h)| dyadic_to_f64(h, t as u64))
        .collect();
    let mass = crate::numeric::pairwise_sum(&pmf);
    Ok(LifetimeLaw {
        pmf,
        residual: (1.0 - mass).max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifetime::lifetime_pmf_dp;
    use crate::model::{Interval, ModelParams};
    use approx::assert_relative_eq;

    fn finite(n: u64, m: u64) -> ModelParams {
        ModelParams::new(Interval::Finite(n), m).unwrap()
    }

    /// Literal depth-first enumeration of every coin sequence: the most
    /// naive possible account of the dynamics, feasible for short horizons.
    fn enumerate_paths(params: &ModelParams, x0: u64, y0: u64, horizon: u64) -> Vec<f64> {
        let mut pmf = vec![0.0f64; horizon as usize + 1];
        let n = match params.interval() {
            Interval::Finite(n) => Some(n),
            Interval::Infinite => None,
        };
        let m = params.capacity();
        // Stack of (x, e, t, coins_used).
        let mut stack = vec![(x0, y0, 0u64, 0i32)];
        while let Some((x, e, t, coins)) = stack.pop() {
            let boundary = x == 0 || Some(x) == n;
            if !boundary && e == 0 {
                pmf[t as usize] += libm::ldexp(1.0, -coins);
                continue;
            }
            if t == horizon {
                continue;
            }
            if boundary {
                let target = if x == 0 { 1 } else { x - 1 };
                stack.push((target, m, t + 1, coins));
            } else {
                stack.push((x - 1, e - 1, t + 1, coins + 1));
                stack.push((x + 1, e - 1, t + 1, coins + 1));
            }
        }
        pmf
    }

    #[test]
    fn dyadic_to_f64_roundtrips() {
        let h = BigUint::from(3u32);
        assert_eq!(dyadic_to_f64(&h, 2), 0.75);
        let big = BigUint::one() << 200;
        assert_relative_eq!(dyadic_to_f64(&big, 201), 0.5, max_relative = 1e-15);
        let odd = (BigUint::one() << 100) + BigUint::one();
        assert_relative_eq!(dyadic_to_f64(&odd, 101), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn brute_agrees_with_path_enumeration() {
        // Horizons small enough for a literal 2^h sweep; probabilities are
        // dyadic with at most 18 coin flips, so f64 sums are exact.
        for (n, m, x, y) in [
            (3u64, 2u64, 1u64, 2u64),
            (4, 2, 2, 1),
            (5, 3, 2, 3),
            (4, 1, 0, 0),
        ] {
            let p = finite(n, m);
            let horizon = 18;
            let paths = enumerate_paths(&p, x, y, horizon);
            let brute = lifetime_pmf_brute(&p, x, y, horizon).unwrap();
            for t in 0..=horizon as usize {
                let b = brute.pmf.get(t).copied().unwrap_or(0.0);
                assert_relative_eq!(b, paths[t], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn brute_agrees_with_dp() {
        for (n, m, x, y) in [
            (3u64, 2u64, 1u64, 2u64),
            (4, 2, 1, 2),
            (5, 4, 3, 4),
            (5, 1, 2, 1),
        ] {
            let p = finite(n, m);
            let brute = lifetime_pmf_brute(&p, x, y, 500).unwrap();
            let dp = lifetime_pmf_dp(&p, x, y, 500).unwrap();
            let tv = brute.tv_distance(&dp);
            assert!(tv <= 1e-13, "tv = {tv} at N={n} M={m} x={x} y={y}");
        }
    }

    #[test]
    fn brute_handles_infinite_interval() {
        let p = ModelParams::new(Interval::Infinite, 3).unwrap();
        let brute = lifetime_pmf_brute(&p, 1, 3, 300).unwrap();
        let dp = lifetime_pmf_dp(&p, 1, 3, 300).unwrap();
        assert!(brute.tv_distance(&dp) <= 1e-13);
    }

    #[test]
    fn budget_guard() {
        let p = ModelParams::new(Interval::Infinite, 10_000).unwrap();
        assert!(matches!(
            lifetime_pmf_brute(&p, 1, 10_000, 5),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
