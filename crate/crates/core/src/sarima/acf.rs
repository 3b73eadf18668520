use crate::error::{Error, Result};

/// Sample autocorrelations `r_0..=r_max_lag` with the usual biased
/// (divide-by-n) autocovariance, so `r_0 = 1`.
pub fn acf(y: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if y.len() < max_lag + 2 {
        return Err(Error::TooShort {
            needed: max_lag + 1,
            got: y.len(),
        });
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let dev: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let denom: f64 = dev.iter().map(|v| v * v).sum();
    if denom == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((0..=max_lag)
        .map(|k| dev.iter().zip(&dev[k..]).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect())
}

/// Partial autocorrelations at lags `1..=max_lag` from the Durbin-Levinson
/// recursion on the sample autocorrelations.
pub fn pacf(y: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let r = acf(y, max_lag)?;
    let mut phi: Vec<f64> = Vec::with_capacity(max_lag);
    let mut var = 1.0;
    let mut out = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let num = r[k] - phi.iter().enumerate().map(|(j, p)| p * r[k - 1 - j]).sum::<f64>();
        let kk = num / var;
        let next: Vec<f64> = (0..k - 1).map(|j| phi[j] - kk * phi[k - 2 - j]).collect();
        phi = next;
        phi.push(kk);
        var *= 1.0 - kk * kk;
        if var <= 0.0 && k < max_lag {
            return Err(Error::NumericalBreakdown(k));
        }
        out.push(kk);
    }
    Ok(out)
}
