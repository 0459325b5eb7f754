//! Sample statistics for campaign reports.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empty sample")]
    Empty,
}

/// Exact two-sided Kolmogorov-Smirnov statistic of a sample against a
/// continuous CDF: the sup over sorted points of both one-sided gaps.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN samples"));
    let n = sorted.len() as f64;
    let mut sup = 0.0f64;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        let lo = f - i as f64 / n;
        let hi = (i as f64 + 1.0) / n - f;
        sup = sup.max(lo).max(hi);
    }
    Ok(sup)
}

/// Mean and unbiased variance in one pass over a sample.
pub fn mean_and_variance(samples: &[f64]) -> (f64, f64) {
    (
        ewalk_core::numeric::mean(samples),
        ewalk_core::numeric::sample_variance(samples),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ewalk_core::rng::RunRng;

    #[test]
    fn single_sample_at_median_scores_half() {
        let ks = ks_statistic(&[0.0], |x| if x < 0.0 { 0.0 } else { 0.5 }).unwrap();
        assert_relative_eq!(ks, 0.5, max_relative = 1e-15);
    }

    #[test]
    fn total_mismatch_scores_one() {
        // All samples far below the support of the cdf.
        let samples = vec![-1e6; 10];
        let ks = ks_statistic(&samples, |x| if x <= 0.0 { 0.0 } else { 1.0 - (-x).exp() }).unwrap();
        assert_relative_eq!(ks, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert!(matches!(ks_statistic(&[], |_| 0.5), Err(StatsError::Empty)));
    }

    #[test]
    fn exponential_self_test_stays_in_band() {
        // Inverse-CDF draws from Exp(1) itself: at n = 1000 the 95% KS band
        // is 1.358/sqrt(n) = 0.0429; a fixed seed keeps this deterministic.
        let mut rng = RunRng::for_run(0xA11CE, 0);
        let samples: Vec<f64> = (0..1000).map(|_| -rng.next_f64_open().ln()).collect();
        let ks = ks_statistic(&samples, |x| if x <= 0.0 { 0.0 } else { 1.0 - (-x).exp() }).unwrap();
        assert!(ks <= 0.0429 + 0.0184, "ks = {ks}"); // band + slack to 99.9%
        assert!(ks > 0.0, "a continuous sample cannot fit exactly");
    }

    #[test]
    fn ks_is_exact_on_a_hand_case() {
        // Two samples at 0.25 and 0.75 against Uniform(0,1):
        // gaps: F(0.25)-0 = 0.25, 0.5-0.25 = 0.25, 0.75-0.5 = 0.25, 1-0.75 = 0.25.
        let ks = ks_statistic(&[0.25, 0.75], |x| x.clamp(0.0, 1.0)).unwrap();
        assert_relative_eq!(ks, 0.25, max_relative = 1e-15);
    }

    #[test]
    fn moments_helper_matches_core() {
        let v = [1.0, 2.0, 3.0, 4.0];
        let (m, var) = mean_and_variance(&v);
        assert_relative_eq!(m, 2.5, max_relative = 1e-15);
        assert_relative_eq!(var, 5.0 / 3.0, max_relative = 1e-15);
    }
}
