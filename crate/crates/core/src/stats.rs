//! Small statistics helpers: Wilson and normal intervals, least squares,
//! chi-square tail probabilities.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Two-sided standard normal quantile for a confidence level in (0, 1).
pub fn z_value(confidence: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    n.inverse_cdf(0.5 + confidence / 2.0)
}

/// Wilson score interval for `hits` successes out of `n`.
pub fn wilson(hits: u64, n: u64, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = z_value(confidence);
    let nf = n as f64;
    let phat = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (phat + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((centre - half).max(0.0).min(phat), (centre + half).min(1.0).max(phat))
}

/// Normal-approximation interval for a mean of `n` values in [0, 1].
pub fn normal_interval(mean: f64, variance: f64, n: u64, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let half = z_value(confidence) * (variance.max(0.0) / n as f64).sqrt();
    ((mean - half).max(0.0), (mean + half).min(1.0))
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Upper tail `P(X > stat)` for a chi-square variable with `df` degrees of freedom.
pub fn chi_square_sf(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    let c = ChiSquared::new(df as f64).expect("positive df");
    1.0 - c.cdf(stat)
}

/// Unbiased sample mean and variance with compensated summation.
pub fn mean_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = crate::capacity::neumaier_sum(values.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = crate::capacity::neumaier_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, ss / (n - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_values() {
        assert!((z_value(0.95) - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((z_value(0.999) - 3.290_526_731_491_926).abs() < 1e-9);
    }

    #[test]
    fn wilson_contains_estimate() {
        for (h, n) in [(0, 10), (10, 10), (3, 10), (500, 100_000)] {
            let (lo, hi) = wilson(h, n, 0.95);
            let p = h as f64 / n as f64;
            assert!(lo <= p && p <= hi);
            assert!(lo >= 0.0 && hi <= 1.0);
        }
        let (lo, hi) = wilson(50, 100, 0.95);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
    }

    #[test]
    fn slope_of_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.25 * x - 1.0).collect();
        assert!((slope(&xs, &ys) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn chi_square_tail() {
        // 95th percentile of chi-square(1) is 3.841
        assert!((chi_square_sf(3.841_458_820_694_124, 1) - 0.05).abs() < 1e-9);
    }
}
