//! Small numeric helpers shared by the exact routines and the harness.

/// Pairwise (cascade) summation: deterministic regardless of thread count
/// and with O(log n) error growth instead of O(n).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Sample mean via pairwise summation; 0 for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Unbiased sample variance (two-pass, pairwise); 0 below two samples.
pub fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    pairwise_sum(&sq) / (values.len() as f64 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pairwise_matches_naive_on_smooth_data() {
        let v: Vec<f64> = (0..1001).map(|i| i as f64 * 0.001).collect();
        let naive: f64 = v.iter().sum();
        assert_relative_eq!(pairwise_sum(&v), naive, max_relative = 1e-12);
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[3.5]), 3.5);
    }

    #[test]
    fn pairwise_beats_naive_on_adversarial_data() {
        // Alternating huge/tiny values: pairwise keeps the tiny mass.
        let mut v = Vec::new();
        for _ in 0..10_000 {
            v.push(1.0);
            v.push(1e-16);
        }
        let s = pairwise_sum(&v);
        assert_relative_eq!(s, 10_000.0 + 10_000.0 * 1e-16, max_relative = 1e-12);
    }

    #[test]
    fn moments() {
        let v = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert_relative_eq!(mean(&v), 5.0, max_relative = 1e-15);
        assert_relative_eq!(sample_variance(&v), 32.0 / 7.0, max_relative = 1e-14);
    }
}
