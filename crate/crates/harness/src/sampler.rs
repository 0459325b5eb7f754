//! Renewal-level lifetime sampler for cells where direct stepping is
//! infeasible (tiny extinction probability per excursion).
//!
//! The decomposition is exact: the number of completed excursions is
//! geometric, leg durations are i.i.d. draws from exact conditional laws,
//! and the fatal final leg contributes a deterministic M + 1. Sampling at
//! this level is therefore a faithful sampler of the lifetime, not an
//! approximation.

use ewalk_core::error::{Error, Result};
use ewalk_core::lifetime::{first_excursion_law, reentry_excursion_law, ExcursionLaw};
use ewalk_core::model::ModelParams;
use ewalk_core::rng::RunRng;

/// Inverse-CDF table over the finite part of a defective duration law.
#[derive(Debug, Clone)]
pub struct ConditionalTable {
    cum: Vec<f64>,
    values: Vec<u64>,
}

impl ConditionalTable {
    pub fn from_law(law: &ExcursionLaw) -> Result<Self> {
        let mass = law.finite_mass();
        if !(mass > 0.0) {
            return Err(Error::InvalidParams(
                "conditional law has no finite part to sample".into(),
            ));
        }
        let mut cum = Vec::new();
        let mut values = Vec::new();
        let mut acc = 0.0;
        for (n, p) in law.durations.iter().enumerate() {
            if *p > 0.0 {
                acc += p / mass;
                cum.push(acc);
                values.push(n as u64);
            }
        }
        // Protect the last bin against rounding shortfall.
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        Ok(ConditionalTable { cum, values })
    }

    pub fn draw(&self, rng: &mut RunRng) -> u64 {
        let u = rng.next_f64();
        // First index with cum > u.
        let mut lo = 0usize;
        let mut hi = self.cum.len() - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.cum[mid] > u {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        self.values[lo]
    }
}

/// Count of failures before the first success at rate p, by inversion:
/// P(G >= g) = (1 - p)^g.
pub fn sample_geometric(rng: &mut RunRng, p: f64) -> u64 {
    debug_assert!(p > 0.0 && p <= 1.0);
    if p >= 1.0 {
        return 0;
    }
    let u = rng.next_f64_open();
    let g = u.ln() / (1.0 - p).ln();
    g as u64
}

/// Samples lifetimes through the renewal decomposition.
#[derive(Debug, Clone)]
pub struct RenewalSampler {
    y0: u64,
    capacity: u64,
    /// Chance the first leg already ends in extinction.
    theta_first: f64,
    /// Per-leg extinction chance after a boundary reset.
    theta: f64,
    first: ConditionalTable,
    reentry: ConditionalTable,
}

impl RenewalSampler {
    pub fn new(params: &ModelParams, x0: u64, y0: u64) -> Result<Self> {
        let first_law = first_excursion_law(params, x0, y0)?;
        let reentry_law = reentry_excursion_law(params)?;
        Ok(RenewalSampler {
            y0,
            capacity: params.capacity(),
            theta_first: first_law.defect,
            theta: reentry_law.defect,
            first: ConditionalTable::from_law(&first_law)?,
            reentry: ConditionalTable::from_law(&reentry_law)?,
        })
    }

    /// Expected number of table draws per sample, for budget planning.
    pub fn expected_draws(&self) -> f64 {
        (1.0 - self.theta_first) * (1.0 + (1.0 - self.theta) / self.theta)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// One lifetime draw: either the fuel runs out on the first leg, or the
    /// walker completes 1 + G legs and then burns a full tank.
    pub fn sample(&self, rng: &mut RunRng) -> u64 {
        if rng.next_f64() < self.theta_first {
            return self.y0;
        }
        let extra_legs = sample_geometric(rng, self.theta);
        let mut last_visit = self.first.draw(rng);
        for _ in 0..extra_legs {
            last_visit += self.reentry.draw(rng);
        }
        self.capacity + 1 + last_visit
    }

    /// Deterministic parallel batch: one derived stream per replicate.
    pub fn sample_batch(&self, seed_root: u64, replicates: u64) -> Vec<u64> {
        use rayon::prelude::*;
        (0..replicates)
            .into_par_iter()
            .map(|i| {
                let mut rng = RunRng::for_run(seed_root, i);
                self.sample(&mut rng)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ewalk_core::lifetime::{expected_lifetime_exact, lifetime_pmf_dp};
    use ewalk_core::model::{simulate_batch, Interval};

    fn finite(n: u64, m: u64) -> ModelParams {
        ModelParams::new(Interval::Finite(n), m).unwrap()
    }

    #[test]
    fn geometric_frequencies() {
        let mut rng = RunRng::for_run(0xBEEF, 3);
        let p = 0.25;
        let n = 200_000;
        let mut count_ge: [u64; 6] = [0; 6];
        for _ in 0..n {
            let g = sample_geometric(&mut rng, p);
            for (k, slot) in count_ge.iter_mut().enumerate() {
                if g >= k as u64 {
                    *slot += 1;
                }
            }
        }
        for (k, slot) in count_ge.iter().enumerate() {
            let expected = (1.0 - p).powi(k as i32);
            let observed = *slot as f64 / n as f64;
            let sigma = (expected * (1.0 - expected) / n as f64).sqrt().max(1e-9);
            assert!(
                (observed - expected).abs() <= 4.0 * sigma,
                "k={k}: observed {observed}, expected {expected}"
            );
        }
    }

    #[test]
    fn table_draw_frequencies_match_law() {
        let p = finite(5, 6);
        let law = reentry_excursion_law(&p).unwrap();
        let table = ConditionalTable::from_law(&law).unwrap();
        let mass = law.finite_mass();
        let mut rng = RunRng::for_run(0xC0FFEE, 0);
        let n = 200_000;
        let mut counts = vec![0u64; law.durations.len()];
        for _ in 0..n {
            counts[table.draw(&mut rng) as usize] += 1;
        }
        for (v, c) in counts.iter().enumerate() {
            let expected = law.durations[v] / mass;
            let observed = *c as f64 / n as f64;
            let sigma = (expected * (1.0 - expected) / n as f64).sqrt().max(1e-9);
            assert!(
                (observed - expected).abs() <= 4.5 * sigma,
                "duration {v}: observed {observed}, expected {expected}"
            );
        }
    }

    #[test]
    fn renewal_sampler_matches_direct_stepping() {
        // A cell where both samplers are cheap: compare means against the
        // closed form and the two empirical means against each other.
        let p = finite(5, 4);
        let sampler = RenewalSampler::new(&p, 2, 3).unwrap();
        let reps = 40_000u64;
        let renewal = sampler.sample_batch(11, reps);
        let direct =
            simulate_batch(&p, ewalk_core::model::WalkerState::new(2, 3), reps, 12).unwrap();
        let exact = expected_lifetime_exact(&p, 2, 3).unwrap();
        let mean_renewal = renewal.iter().map(|v| *v as f64).sum::<f64>() / reps as f64;
        let mean_direct = direct.iter().map(|s| s.lambda as f64).sum::<f64>() / reps as f64;
        // Std of lambda is a few multiples of the mean here; 4 sigma bands.
        let var = renewal
            .iter()
            .map(|v| (*v as f64 - mean_renewal).powi(2))
            .sum::<f64>()
            / (reps - 1) as f64;
        let band = 4.0 * (var / reps as f64).sqrt();
        assert!(
            (mean_renewal - exact).abs() <= band,
            "renewal {mean_renewal} vs exact {exact}"
        );
        assert!(
            (mean_direct - exact).abs() <= band,
            "direct {mean_direct} vs exact {exact}"
        );
    }

    #[test]
    fn renewal_sampler_matches_exact_pmf() {
        // Frequency test on the pmf itself at a handful of points.
        let p = finite(4, 3);
        let sampler = RenewalSampler::new(&p, 1, 3).unwrap();
        let reps = 100_000u64;
        let samples = sampler.sample_batch(99, reps);
        let law = lifetime_pmf_dp(&p, 1, 3, 200).unwrap();
        for t in [3u64, 5, 6, 7, 8, 10, 15] {
            let expected = law.pmf.get(t as usize).copied().unwrap_or(0.0);
            let observed = samples.iter().filter(|v| **v == t).count() as f64 / reps as f64;
            let sigma = (expected * (1.0 - expected) / reps as f64).sqrt().max(1e-9);
            assert!(
                (observed - expected).abs() <= 4.5 * sigma,
                "t={t}: observed {observed}, expected {expected}"
            );
        }
    }

    #[test]
    fn batches_are_deterministic() {
        let p = finite(6, 8);
        let sampler = RenewalSampler::new(&p, 1, 8).unwrap();
        let a = sampler.sample_batch(42, 500);
        let b = sampler.sample_batch(42, 500);
        assert_eq!(a, b);
        let c = sampler.sample_batch(43, 500);
        assert_ne!(a, c);
    }

    #[test]
    fn expected_draws_tracks_theta() {
        let p = finite(5, 40);
        let sampler = RenewalSampler::new(&p, 1, 40).unwrap();
        assert_relative_eq!(
            sampler.expected_draws(),
            (1.0 - sampler.theta_first) / sampler.theta,
            max_relative = 1e-12
        );
    }

    #[test]
    fn zero_fuel_start_is_rejected() {
        // No finite part to sample: the first law is all defect.
        let p = finite(6, 4);
        assert!(RenewalSampler::new(&p, 3, 0).is_err());
    }
}
