//! Small-sample statistics used by the test oracles and the benchmark
//! reports: means, standard deviations, and the one-sample
//! Kolmogorov–Smirnov test against an arbitrary CDF.

/// Arithmetic mean; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two
/// values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// One-sample Kolmogorov–Smirnov statistic D_n = sup_x |F_n(x) − F(x)|
/// against the reference CDF, plus the asymptotic p-value.
///
/// The p-value uses the standard Kolmogorov series with the small-sample
/// argument correction λ = (√n + 0.12 + 0.11/√n)·D, accurate enough for
/// the n ≥ 10³ samples this crate tests with.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    assert!(!sample.is_empty(), "KS test needs at least one observation");
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    (d, ks_pvalue(d, sorted.len()))
}

/// Asymptotic p-value of the KS statistic `d` at sample size `n`.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    kolmogorov_tail(lambda)
}

/// Q(λ) = 2 Σ_{j≥1} (−1)^{j−1} exp(−2 j² λ²), clamped to [0, 1].
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mean_and_std_basics() {
        assert_eq!(mean(&[]), 0.0);
        assert_eq!(mean(&[2.0, 4.0]), 3.0);
        assert_eq!(sample_std(&[5.0]), 0.0);
        assert!((sample_std(&[2.0, 4.0]) - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_tail_reference_values() {
        assert!((kolmogorov_tail(0.5) - 0.9639).abs() < 1e-3);
        assert!((kolmogorov_tail(1.0) - 0.2700).abs() < 1e-3);
        assert!(kolmogorov_tail(3.0) < 1e-6);
        assert_eq!(kolmogorov_tail(0.0), 1.0);
    }

    #[test]
    fn ks_statistic_on_a_tiny_hand_case() {
        // Sample {0.25, 0.75} against U[0,1]: F_n steps at 0.5 and 1.0,
        // largest gap is 0.25 on each side of each step.
        let (d, _) = ks_test(&[0.25, 0.75], |x| x.clamp(0.0, 1.0));
        assert!((d - 0.25).abs() < 1e-12);
    }

    #[test]
    fn uniform_sample_passes_uniform_ks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sample: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let (_, p) = ks_test(&sample, |x| x.clamp(0.0, 1.0));
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn shifted_sample_fails_uniform_ks() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sample: Vec<f64> = (0..10_000).map(|_| 0.9 * rng.random::<f64>()).collect();
        let (_, p) = ks_test(&sample, |x| x.clamp(0.0, 1.0));
        assert!(p < 1e-6, "p = {p}");
    }
}
