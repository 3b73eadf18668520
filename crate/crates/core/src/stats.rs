//! Small descriptive-statistics helpers shared across modules.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Pearson correlation; 0 when either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Two-sided standard normal quantile for a central interval at `level`,
/// e.g. 1.959964 for 0.95.
pub fn normal_interval_quantile(level: f64) -> f64 {
    let n = Normal::standard();
    n.inverse_cdf(0.5 + level / 2.0)
}

/// Upper critical value of the chi-square distribution with `df` degrees of
/// freedom at significance `alpha`.
pub fn chi_square_critical(df: u32, alpha: f64) -> f64 {
    let dist = ChiSquared::new(f64::from(df)).expect("positive degrees of freedom");
    dist.inverse_cdf(1.0 - alpha)
}
