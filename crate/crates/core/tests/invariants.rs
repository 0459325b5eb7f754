//! Cross-module consistency checks: spectral tails against their half-line
//! and scaling limits, renewal algebra against direct dynamic programming,
//! and simulated batches against the exact laws they are meant to reproduce.

use approx::assert_relative_eq;
use ewalk_core::excursion::{exit_pmf_dp, exit_tail_cosine, one_sided_tail, scaled_exit_tail};
use ewalk_core::lifetime::{
    compound_mgf, expected_lifetime_exact, extinction_prob, first_excursion_law, lifetime_pmf_dp,
    lifetime_pmf_renewal, reentry_excursion_law,
};
use ewalk_core::limits::theta_tail;
use ewalk_core::model::{simulate_batch, Interval, ModelParams, WalkerState};
use ewalk_core::rng::derive_seed;
use proptest::prelude::*;

fn finite(n: u64, m: u64) -> ModelParams {
    ModelParams::new(Interval::Finite(n), m).unwrap()
}

// Removing the far endpoint can only lengthen the excursion, so the two-sided
// survival probability sits below the one-sided one at every horizon.
#[test]
fn interval_tail_dominated_by_half_line_tail() {
    for n_sites in [8u64, 20, 60] {
        for t in (0..=400).step_by(7) {
            let two_sided = exit_tail_cosine(n_sites, t).unwrap();
            let one_sided = one_sided_tail(t);
            assert!(
                two_sided <= one_sided + 1e-13,
                "N={n_sites} t={t}: {two_sided} > {one_sided}"
            );
            assert!((0.0..=1.0).contains(&two_sided));
        }
    }
    // The gap closes as the interval widens (fixed horizon, growing N).
    let gap_narrow = one_sided_tail(100) - exit_tail_cosine(12, 100).unwrap();
    let gap_wide = one_sided_tail(100) - exit_tail_cosine(60, 100).unwrap();
    assert!(gap_wide < gap_narrow / 100.0);
}

// (N/4) P_1(tau > y N^2) approaches the theta sum; at N = 100 and 200 the
// discretization error is already far below two percent.
#[test]
fn scaled_tail_matches_theta_sum() {
    for n_sites in [100u64, 200] {
        for y in [0.1, 0.3, 1.0] {
            let scaled = scaled_exit_tail(n_sites, y).unwrap();
            assert_relative_eq!(scaled, theta_tail(y).unwrap(), max_relative = 0.02);
        }
    }
}

// A simulated batch reproduces the dynamic-programming lifetime law atom by
// atom within four binomial standard errors.
#[test]
fn empirical_lifetime_matches_dp_law() {
    let params = finite(5, 4);
    let runs = 20_000u64;
    let samples = simulate_batch(&params, WalkerState::new(2, 3), runs, 0xC0DE).unwrap();
    let law = lifetime_pmf_dp(&params, 2, 3, 400).unwrap();
    assert!(law.residual < 1e-12);

    let mut hist = vec![0u64; law.pmf.len()];
    for s in &samples {
        assert!(
            (s.lambda as usize) < hist.len(),
            "lifetime beyond DP horizon"
        );
        hist[s.lambda as usize] += 1;
    }
    for (t, &p) in law.pmf.iter().enumerate() {
        if p < 1e-4 {
            continue;
        }
        let emp = hist[t] as f64 / runs as f64;
        let sigma = (p * (1.0 - p) / runs as f64).sqrt();
        assert!(
            (emp - p).abs() <= 4.0 * sigma + 1.0 / runs as f64,
            "atom t={t}: empirical {emp} vs exact {p}"
        );
    }

    let mean = samples.iter().map(|s| s.lambda as f64).sum::<f64>() / runs as f64;
    let var = samples
        .iter()
        .map(|s| {
            let d = s.lambda as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / (runs as f64 - 1.0);
    let exact = expected_lifetime_exact(&params, 2, 3).unwrap();
    assert!((mean - exact).abs() <= 4.0 * (var / runs as f64).sqrt());
}

// Upper regularized gamma Q(a, x) for a = dof/2 with dof = 3, via
// Q(1/2, x) = erfc(sqrt x) and Q(a+1, x) = Q(a, x) + x^a e^{-x} / Gamma(a+1).
fn chi_square_sf_3(chi2: f64) -> f64 {
    let x = 0.5 * chi2;
    let gamma_3_2 = 0.5 * std::f64::consts::PI.sqrt();
    libm::erfc(x.sqrt()) + x.sqrt() * (-x).exp() / gamma_3_2
}

// Consecutive legs of one walk are independent draws from the conditional
// leg laws. On four sites with capacity three both legs take two values, so
// the joint table is fully specified and a chi-square test applies.
#[test]
fn consecutive_legs_independent() {
    let params = finite(4, 3);
    let runs = 40_000u64;
    let samples = simulate_batch(&params, WalkerState::new(1, 3), runs, 0xFEED).unwrap();

    // First leg: tau from site 1 capped at 3, so 1 or 3 with weights 2/3, 1/3
    // after conditioning. Re-entry leg: 1 + tau' with the same split at 2, 4.
    let first = first_excursion_law(&params, 1, 3).unwrap();
    let reentry = reentry_excursion_law(&params).unwrap();
    assert_relative_eq!(
        first.durations[1] / first.finite_mass(),
        2.0 / 3.0,
        epsilon = 1e-12
    );
    assert_relative_eq!(
        reentry.durations[2] / reentry.finite_mass(),
        2.0 / 3.0,
        epsilon = 1e-12
    );

    let mut counts = [[0u64; 2]; 2];
    let mut kept = 0u64;
    for s in &samples {
        if s.kappa < 2 {
            continue;
        }
        let i = usize::from(s.excursions[0] == 3);
        let j = usize::from(s.excursions[1] == 4);
        counts[i][j] += 1;
        kept += 1;
    }
    assert!(kept > runs / 4, "kept only {kept} of {runs}");

    let marginal = [2.0 / 3.0, 1.0 / 3.0];
    let mut chi2 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = kept as f64 * marginal[i] * marginal[j];
            let diff = counts[i][j] as f64 - expected;
            chi2 += diff * diff / expected;
        }
    }
    let p = chi_square_sf_3(chi2);
    assert!(p > 1e-3, "chi2 = {chi2}, p = {p}");
}

// More fuel can only help: the exact mean lifetime grows with the capacity
// and with the initial energy.
#[test]
fn mean_lifetime_monotone_in_fuel() {
    let mut prev = 0.0;
    for m in 1..=14u64 {
        let params = finite(6, m);
        let mean = expected_lifetime_exact(&params, 2, m).unwrap();
        assert!(mean > prev, "capacity {m}: {mean} <= {prev}");
        prev = mean;
    }
    let params = finite(6, 6);
    let mut prev = 0.0;
    for y in 1..=6u64 {
        let mean = expected_lifetime_exact(&params, 2, y).unwrap();
        assert!(mean > prev, "energy {y}: {mean} <= {prev}");
        prev = mean;
    }
}

// The lifetime decomposes over the last boundary visit: its MGF evaluated
// through the compound form must match the transform of the DP law.
#[test]
fn lifetime_mgf_identity_between_compound_and_dp() {
    let params = finite(5, 4);
    let (x0, y0) = (2u64, 3u64);
    let law = lifetime_pmf_dp(&params, x0, y0, 800).unwrap();
    assert!(law.residual < 1e-14);
    let q = extinction_prob(&params, x0, y0).unwrap();
    for s in [-0.3, -0.05, 0.01] {
        let direct: f64 = law
            .pmf
            .iter()
            .enumerate()
            .map(|(t, &p)| p * (s * t as f64).exp())
            .sum();
        let via_compound = q * (s * y0 as f64).exp()
            + (s * (params.capacity() as f64 + 1.0)).exp()
                * (compound_mgf(&params, x0, y0, s).unwrap() - q);
        assert_relative_eq!(direct, via_compound, epsilon = 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // The tabulated exit law is a probability law: mass plus stored tail is
    // one, and the tail never increases.
    #[test]
    fn exit_table_mass_and_tail(n_sites in 3u64..30, frac in 0.0f64..1.0) {
        let x = 1 + ((n_sites - 2) as f64 * frac) as u64;
        let n_max = 40 * n_sites * n_sites;
        let table = exit_pmf_dp(n_sites, x, n_max).unwrap();
        let mass: f64 = table.pmf.iter().sum();
        prop_assert!((mass + table.tail_at(n_max) - 1.0).abs() < 1e-9);
        let mut prev = 1.0f64;
        for t in (0..=n_max).step_by((n_max as usize / 17).max(1)) {
            let tail = table.tail_at(t);
            prop_assert!(tail <= prev + 1e-15);
            prev = tail;
        }
    }

    // Both leg laws split their unit mass between finite durations and the
    // extinction defect, and the first leg never outlasts the initial fuel.
    #[test]
    fn leg_laws_have_unit_mass(n_sites in 3u64..14, m in 1u64..30, xf in 0.0f64..1.0, yf in 0.0f64..1.0) {
        let x = 1 + ((n_sites - 2) as f64 * xf) as u64;
        let y = 1 + ((m - 1) as f64 * yf) as u64;
        let params = finite(n_sites, m);
        let first = first_excursion_law(&params, x, y).unwrap();
        prop_assert!((first.finite_mass() + first.defect - 1.0).abs() < 1e-12);
        prop_assert!(first.durations.iter().all(|&p| p >= 0.0));
        prop_assert!(first.durations.len() as u64 <= y + 1);
        let reentry = reentry_excursion_law(&params).unwrap();
        prop_assert!((reentry.finite_mass() + reentry.defect - 1.0).abs() < 1e-12);
        prop_assert!(reentry.durations.len() as u64 <= m + 2);
        prop_assert!(reentry.durations.iter().take(2).all(|&p| p == 0.0));
    }

    // Bookkeeping on every simulated run: no boundary visit means the walk
    // spent exactly its initial fuel; otherwise the lifetime is the last
    // visit time plus a full tank plus the forced entry step.
    #[test]
    fn simulated_runs_satisfy_lifetime_bookkeeping(
        n_sites in 3u64..8,
        m in 1u64..6,
        xf in 0.0f64..1.0,
        yf in 0.0f64..1.0,
        seed_root in any::<u64>(),
    ) {
        let x = 1 + ((n_sites - 2) as f64 * xf) as u64;
        let y = 1 + ((m - 1) as f64 * yf) as u64;
        let params = finite(n_sites, m);
        let samples = simulate_batch(&params, WalkerState::new(x, y), 40, seed_root).unwrap();
        for (i, s) in samples.iter().enumerate() {
            prop_assert_eq!(s.seed, derive_seed(seed_root, i as u64));
            prop_assert_eq!(s.excursions.len() as u64, s.kappa);
            prop_assert!(s.extinction_x > 0 && s.extinction_x < n_sites);
            if s.kappa == 0 {
                prop_assert_eq!(s.lambda, y);
            } else {
                let visit_time: u64 = s.excursions.iter().sum();
                prop_assert_eq!(s.lambda, m + 1 + visit_time);
                prop_assert!(s.excursions[0] >= 1 && s.excursions[0] <= y);
                for &leg in &s.excursions[1..] {
                    prop_assert!(leg >= 2 && leg <= m + 1);
                }
            }
        }
    }

    // Batches are reproducible from the seed root alone and distinct roots
    // give distinct histories.
    #[test]
    fn batches_deterministic_in_seed_root(seed_root in any::<u64>()) {
        let params = finite(4, 3);
        let start = WalkerState::new(1, 3);
        let a = simulate_batch(&params, start, 64, seed_root).unwrap();
        let b = simulate_batch(&params, start, 64, seed_root).unwrap();
        prop_assert_eq!(&a, &b);
        let c = simulate_batch(&params, start, 64, seed_root.wrapping_add(1)).unwrap();
        let la: Vec<u64> = a.iter().map(|s| s.lambda).collect();
        let lc: Vec<u64> = c.iter().map(|s| s.lambda).collect();
        prop_assert_ne!(la, lc);
    }

    // The renewal route and the direct state-space evolution produce the
    // same lifetime law on every small cell, boundary starts included.
    #[test]
    fn renewal_law_matches_dp_everywhere(
        n_sites in 3u64..8,
        m in 1u64..6,
        xf in 0.0f64..1.0,
        yf in 0.0f64..1.0,
        boundary in proptest::bool::ANY,
    ) {
        let (x, y) = if boundary {
            (0, m)
        } else {
            (1 + ((n_sites - 2) as f64 * xf) as u64, 1 + ((m - 1) as f64 * yf) as u64)
        };
        let params = finite(n_sites, m);
        let renewal = lifetime_pmf_renewal(&params, x, y, 200).unwrap();
        let dp = lifetime_pmf_dp(&params, x, y, 200).unwrap();
        prop_assert!(renewal.tv_distance(&dp) < 1e-10);
    }
}
