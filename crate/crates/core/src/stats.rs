//! Distribution helpers (double precision).

use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF, Normal};

/// Φ^{-1}(0.975).
pub const Z_975: f64 = 1.959_963_984_540_054;

pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").cdf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

/// Two-sided p-value of a z statistic.
pub fn two_sided_p(z: f64) -> f64 {
    if z.is_nan() {
        return 1.0;
    }
    (2.0 * normal_cdf(-z.abs())).min(1.0)
}

/// Upper quantile `q` of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_quantile(q: f64, df: usize) -> f64 {
    let dist = ChiSquared::new(df as f64).expect("positive df");
    // statrs inverts by bisection to ~1e-5; polish with Newton on the exact cdf
    let mut x = dist.inverse_cdf(q);
    for _ in 0..20 {
        let f = dist.pdf(x);
        if !(f > 0.0) {
            break;
        }
        let step = (dist.cdf(x) - q) / f;
        x = (x - step).max(x / 2.0);
        if step.abs() <= 1e-14 * x {
            break;
        }
    }
    x
}

/// Sample mean and standard deviation (n − 1 denominator; `None` for n < 2).
pub fn mean_sd(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, Some((ss / (n - 1) as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        assert!((normal_quantile(0.975) - Z_975).abs() < 1e-9);
        assert!((two_sided_p(Z_975) - 0.05).abs() < 1e-9);
        assert!((chi_square_quantile(0.95, 1) - 3.841_458_820_694_124).abs() < 1e-10);
        assert!((chi_square_quantile(0.95, 96) - 119.870_939_298_567).abs() < 1e-8);
    }

    #[test]
    fn mean_sd_small_samples() {
        assert_eq!(mean_sd(&[2.0]), (2.0, None));
        let (m, s) = mean_sd(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s.unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }
}
