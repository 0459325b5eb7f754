//! The energy-constrained walk.
//!
//! A walker moves on the integer interval {0, .., N} carrying an energy level
//! in {0, .., M}. Interior moves are fair +-1 steps and cost one unit of
//! energy. Reaching an endpoint does not absorb: the next step is forced to
//! the unique interior neighbour and the energy is reset to M. The walk ends
//! at the first time it sits at an interior site with zero energy; that time
//! is the lifetime.
//!
//! With an unbounded interval the position can never exceed `x0 + M`, so the
//! process is identical to the walk on a finite interval of length at least
//! `x0 + M + 1`; `ModelParams::effective_interval` records the bound used by
//! the exact solvers.

use crate::error::{Error, Result};
use crate::rng::{derive_seed, BitSource, RunRng};
use rayon::prelude::*;

/// Default hard cap on the number of simulated steps in one run.
pub const DEFAULT_HORIZON_CAP: u64 = 10_000_000_000;

/// Interval the walk lives on: `{0, .., N}` or the half line `{0, 1, ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interval {
    Finite(u64),
    Infinite,
}

impl Interval {
    pub fn is_finite(self) -> bool {
        matches!(self, Interval::Finite(_))
    }
}

/// Model parameters: the interval and the energy capacity M.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelParams {
    interval: Interval,
    capacity: u64,
}

impl ModelParams {
    /// Requires N >= 3 (both endpoints plus at least one interior site with
    /// two interior neighbours is the smallest nondegenerate case) and M >= 1.
    pub fn new(interval: Interval, capacity: u64) -> Result<Self> {
        if let Interval::Finite(n) = interval {
            if n < 3 {
                return Err(Error::InvalidParams(format!(
                    "interval length N = {n} is below 3"
                )));
            }
        }
        if capacity < 1 {
            return Err(Error::InvalidParams("capacity M must be at least 1".into()));
        }
        Ok(ModelParams { interval, capacity })
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    /// Site count for finite intervals, None on the half line.
    pub fn interval_sites(&self) -> Option<u64> {
        match self.interval {
            Interval::Finite(n) => Some(n),
            Interval::Infinite => None,
        }
    }

    /// Finite interval on which the walk from `x0` is exactly realised.
    /// For a finite model this is N itself; on the half line the position is
    /// bounded by `x0 + M`, so `x0 + M + 2` keeps the far endpoint strictly
    /// unreachable.
    pub fn effective_interval(&self, x0: u64) -> u64 {
        match self.interval {
            Interval::Finite(n) => n,
            Interval::Infinite => self.capacity + x0 + 2,
        }
    }

    fn is_boundary(&self, x: u64) -> bool {
        match self.interval {
            Interval::Finite(n) => x == 0 || x == n,
            Interval::Infinite => x == 0,
        }
    }
}

/// Instantaneous state: position, remaining energy, absorption flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkerState {
    pub x: u64,
    pub energy: u64,
    pub absorbed: bool,
}

impl WalkerState {
    pub fn new(x: u64, energy: u64) -> Self {
        WalkerState {
            x,
            energy,
            absorbed: false,
        }
    }

    /// Position/energy bounds for the given parameters.
    pub fn check_against(&self, params: &ModelParams) -> Result<()> {
        if let Interval::Finite(n) = params.interval() {
            if self.x > n {
                return Err(Error::InvalidParams(format!(
                    "position {} outside interval 0..={n}",
                    self.x
                )));
            }
        }
        if self.energy > params.capacity() {
            return Err(Error::InvalidParams(format!(
                "energy {} above capacity {}",
                self.energy,
                params.capacity()
            )));
        }
        Ok(())
    }

    fn interior(&self, params: &ModelParams) -> bool {
        !params.is_boundary(self.x)
    }
}

/// Outcome of one simulated run.
///
/// `kappa` counts boundary visits strictly before the lifetime, `excursions`
/// holds the gaps between consecutive boundary visits (entry step included
/// for visits after the first when the walk starts on the boundary), and
/// `extinction_x` is the interior site where the energy ran out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LifetimeSample {
    pub lambda: u64,
    pub kappa: u64,
    pub excursions: Vec<u64>,
    pub extinction_x: u64,
    pub seed: u64,
}

/// Simulation knobs. `record_excursions` can be switched off for long runs
/// whose visit counts would dominate memory.
#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub horizon_cap: u64,
    pub record_excursions: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            horizon_cap: DEFAULT_HORIZON_CAP,
            record_excursions: true,
        }
    }
}

/// One transition of the chain.
///
/// Interior with positive energy: fair step to x-1 or x+1, energy drops by
/// one. Interior with zero energy: absorbed, state frozen. Boundary: forced
/// step to the unique interior neighbour with energy reset to M.
pub fn transition_step<B: BitSource>(
    params: &ModelParams,
    state: &WalkerState,
    coin: &mut B,
) -> WalkerState {
    if state.absorbed {
        return *state;
    }
    if state.interior(params) {
        if state.energy == 0 {
            let mut s = *state;
            s.absorbed = true;
            return s;
        }
        let x = if coin.fair_bit() {
            state.x + 1
        } else {
            state.x - 1
        };
        WalkerState {
            x,
            energy: state.energy - 1,
            absorbed: false,
        }
    } else {
        let x = if state.x == 0 { 1 } else { state.x - 1 };
        WalkerState {
            x,
            energy: params.capacity(),
            absorbed: false,
        }
    }
}

/// Run one walk to extinction and collect the renewal bookkeeping.
///
/// The start must not already be absorbed (interior with zero energy).
pub fn simulate_lifetime(
    params: &ModelParams,
    start: WalkerState,
    seed: u64,
) -> Result<LifetimeSample> {
    simulate_lifetime_with(params, start, seed, &SimOptions::default())
}

pub fn simulate_lifetime_with(
    params: &ModelParams,
    start: WalkerState,
    seed: u64,
    opts: &SimOptions,
) -> Result<LifetimeSample> {
    start.check_against(params)?;
    if start.interior(params) && start.energy == 0 {
        return Err(Error::InvalidParams(
            "start state is already absorbed (interior with zero energy)".into(),
        ));
    }
    let mut rng = RunRng::new(seed);
    let mut state = start;
    let mut t: u64 = 0;
    let mut kappa: u64 = 0;
    let mut last_visit: u64 = 0;
    let mut excursions = Vec::new();

    loop {
        if state.interior(params) && state.energy == 0 {
            return Ok(LifetimeSample {
                lambda: t,
                kappa,
                excursions,
                extinction_x: state.x,
                seed,
            });
        }
        if t >= opts.horizon_cap {
            return Err(Error::HorizonExceeded {
                cap: opts.horizon_cap,
                run: None,
            });
        }
        state = transition_step(params, &state, &mut rng);
        t += 1;
        if !state.interior(params) {
            kappa += 1;
            if opts.record_excursions {
                excursions.push(t - last_visit);
            }
            last_visit = t;
        }
    }
}

/// Simulate `n_runs` independent walks. Run `i` uses the stream derived from
/// `(seed_root, i)`, so the output is the same for any thread count and any
/// execution order. Errors carry the index of the offending run.
pub fn simulate_batch(
    params: &ModelParams,
    start: WalkerState,
    n_runs: u64,
    seed_root: u64,
) -> Result<Vec<LifetimeSample>> {
    simulate_batch_with(params, start, n_runs, seed_root, &SimOptions::default())
}

pub fn simulate_batch_with(
    params: &ModelParams,
    start: WalkerState,
    n_runs: u64,
    seed_root: u64,
    opts: &SimOptions,
) -> Result<Vec<LifetimeSample>> {
    (0..n_runs)
        .into_par_iter()
        .map(|i| {
            simulate_lifetime_with(params, start, derive_seed(seed_root, i), opts).map_err(|e| {
                match e {
                    Error::HorizonExceeded { cap, .. } => {
                        Error::HorizonExceeded { cap, run: Some(i) }
                    }
                    other => other,
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn params(n: u64, m: u64) -> ModelParams {
        ModelParams::new(Interval::Finite(n), m).unwrap()
    }

    struct FixedBits(Vec<bool>, usize);
    impl BitSource for FixedBits {
        fn fair_bit(&mut self) -> bool {
            let b = self.0[self.1];
            self.1 += 1;
            b
        }
    }

    #[test]
    fn rejects_degenerate_params() {
        assert!(ModelParams::new(Interval::Finite(2), 1).is_err());
        assert!(ModelParams::new(Interval::Finite(3), 0).is_err());
        assert!(ModelParams::new(Interval::Infinite, 1).is_ok());
    }

    #[test]
    fn boundary_step_is_forced_and_replenishes() {
        let p = params(5, 3);
        let mut coin = FixedBits(vec![true], 0);
        let s = transition_step(&p, &WalkerState::new(0, 0), &mut coin);
        assert_eq!(s, WalkerState::new(1, 3));
        assert_eq!(coin.1, 0, "boundary step must not consume randomness");
        let s = transition_step(&p, &WalkerState::new(5, 2), &mut coin);
        assert_eq!(s, WalkerState::new(4, 3));
    }

    #[test]
    fn interior_step_moves_one_site_and_burns_energy() {
        let p = params(5, 3);
        let mut coin = FixedBits(vec![true, false], 0);
        let s = transition_step(&p, &WalkerState::new(2, 2), &mut coin);
        assert_eq!(s, WalkerState::new(3, 1));
        let s = transition_step(&p, &s, &mut coin);
        assert_eq!(s, WalkerState::new(2, 0));
    }

    #[test]
    fn interior_zero_energy_is_absorbing() {
        let p = params(5, 3);
        let mut coin = FixedBits(vec![], 0);
        let s = transition_step(&p, &WalkerState::new(2, 0), &mut coin);
        assert!(s.absorbed);
        let s2 = transition_step(&p, &s, &mut coin);
        assert_eq!(s, s2);
    }

    #[test]
    fn interior_step_frequencies_are_fair() {
        let p = params(5, 3);
        let mut rng = RunRng::new(2024);
        let n = 100_000;
        let mut ups = 0u64;
        for _ in 0..n {
            let s = transition_step(&p, &WalkerState::new(2, 2), &mut rng);
            if s.x == 3 {
                ups += 1;
            }
        }
        let f = ups as f64 / n as f64;
        // 3 sigma band around 1/2.
        assert!(
            (f - 0.5).abs() < 3.0 * (0.25f64 / n as f64).sqrt(),
            "f = {f}"
        );
    }

    #[test]
    fn smallest_model_has_odd_geometric_lifetimes() {
        // N = 3, M = 1 from (1, 1): the walk dies at an odd time 2k+1 with
        // probability 2^-(k+1). 4 sigma bands at 1e5 runs.
        let p = params(3, 1);
        let runs = 100_000u64;
        let samples = simulate_batch(&p, WalkerState::new(1, 1), runs, 99).unwrap();
        let mut freq: HashMap<u64, u64> = HashMap::new();
        for s in &samples {
            assert_eq!(s.lambda % 2, 1, "lifetimes must be odd here");
            *freq.entry(s.lambda).or_insert(0) += 1;
        }
        for k in 0..8u32 {
            let p_theo = 0.5f64.powi(k as i32 + 1);
            let obs = *freq.get(&(2 * k as u64 + 1)).unwrap_or(&0) as f64 / runs as f64;
            let sigma = (p_theo * (1.0 - p_theo) / runs as f64).sqrt();
            assert!(
                (obs - p_theo).abs() <= 4.0 * sigma,
                "lambda = {}: obs {obs}, theo {p_theo}",
                2 * k + 1
            );
        }
    }

    #[test]
    fn batch_mean_matches_exact_value() {
        // N = 3, M = 1 from (1, 1): E lambda = 3, Var lambda = 8.
        let p = params(3, 1);
        let runs = 100_000u64;
        let samples = simulate_batch(&p, WalkerState::new(1, 1), runs, 7).unwrap();
        let mean = samples.iter().map(|s| s.lambda as f64).sum::<f64>() / runs as f64;
        let se = (8.0f64 / runs as f64).sqrt();
        assert!((mean - 3.0).abs() < 4.0 * se, "mean = {mean}");
    }

    #[test]
    fn renewal_bookkeeping_is_consistent() {
        let p = params(6, 4);
        for seed in 0..200 {
            let s = simulate_lifetime(&p, WalkerState::new(2, 3), seed).unwrap();
            assert_eq!(s.kappa as usize, s.excursions.len());
            let sigma: u64 = s.excursions.iter().sum();
            if s.kappa >= 1 {
                assert_eq!(s.lambda, p.capacity() + 1 + sigma);
                // First gap has no forced entry step from an interior start.
                assert!(s.excursions[0] >= 1);
                for nu in &s.excursions[1..] {
                    assert!((2..=p.capacity() + 1).contains(nu), "nu = {nu}");
                }
            } else {
                assert_eq!(s.lambda, 3, "no boundary visit burns the initial energy");
            }
            assert!(s.lambda >= 3);
            assert!(s.extinction_x > 0 && s.extinction_x < 6);
        }
    }

    #[test]
    fn boundary_start_is_not_counted_as_visit() {
        let p = params(4, 2);
        for seed in 0..100 {
            let s = simulate_lifetime(&p, WalkerState::new(0, 0), seed).unwrap();
            // First recorded gap includes the forced entry step.
            assert!(!s.excursions.is_empty() || s.kappa == 0);
            if s.kappa >= 1 {
                assert_eq!(
                    s.lambda,
                    p.capacity() + 1 + s.excursions.iter().sum::<u64>()
                );
            } else {
                // kappa = 0 means dying on the very first excursion, which
                // lasts 1 forced step plus at most M interior steps.
                assert!(s.lambda <= 1 + p.capacity());
            }
        }
    }

    #[test]
    fn infinite_interval_matches_wide_finite_interval() {
        let inf = ModelParams::new(Interval::Infinite, 5).unwrap();
        let wide = params(inf.effective_interval(2), 5);
        for seed in 0..300 {
            let a = simulate_lifetime(&inf, WalkerState::new(2, 4), seed).unwrap();
            let b = simulate_lifetime(&wide, WalkerState::new(2, 4), seed).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn lifetime_is_at_least_initial_energy() {
        let p = params(8, 5);
        for seed in 0..100 {
            let s = simulate_lifetime(&p, WalkerState::new(1, 5), seed).unwrap();
            assert!(s.lambda >= 5);
        }
    }

    #[test]
    fn batch_is_deterministic_and_order_independent() {
        let p = params(5, 3);
        let a = simulate_batch(&p, WalkerState::new(1, 3), 500, 11).unwrap();
        let b = simulate_batch(&p, WalkerState::new(1, 3), 500, 11).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = pool.install(|| simulate_batch(&p, WalkerState::new(1, 3), 500, 11).unwrap());
        assert_eq!(a, c);
        // Single run reproduces batch entry via its recorded seed.
        let single = simulate_lifetime(&p, WalkerState::new(1, 3), a[17].seed).unwrap();
        assert_eq!(a[17], single);
    }

    #[test]
    fn horizon_cap_reports_run_index() {
        let p = params(3, 1);
        let err = simulate_batch_with(
            &p,
            WalkerState::new(1, 1),
            64,
            5,
            &SimOptions {
                horizon_cap: 0,
                record_excursions: true,
            },
        )
        .unwrap_err();
        match err {
            Error::HorizonExceeded {
                cap: 0,
                run: Some(_),
            } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_absorbed_start() {
        let p = params(5, 2);
        assert!(simulate_lifetime(&p, WalkerState::new(2, 0), 1).is_err());
    }
}
