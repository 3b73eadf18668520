//! Conditional sum-of-squares likelihood.

use std::f64::consts::PI;

use super::{difference, SarimaParams, SarimaSpec};
use crate::error::{Error, Result};

/// Differenced (and, without differencing, mean-centred) working series.
#[derive(Debug, Clone)]
pub(crate) struct Working {
    pub w: Vec<f64>,
    pub mean: f64,
}

pub(crate) fn working_series(spec: &SarimaSpec, y: &[f64]) -> Result<Working> {
    spec.validate()?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("series contains non-finite values".into()));
    }
    let mut w = difference(y, spec.d, spec.seasonal_d, spec.period)?;
    let mut mean = 0.0;
    if spec.diff_order() == 0 {
        mean = w.iter().sum::<f64>() / w.len() as f64;
        w.iter_mut().for_each(|v| *v -= mean);
    }
    Ok(Working { w, mean })
}

/// At least two residuals must remain after differencing and conditioning.
pub(crate) fn check_length(spec: &SarimaSpec, n: usize, conditioning: usize) -> Result<()> {
    let needed = spec.diff_order() + conditioning + 2;
    if n < needed {
        return Err(Error::TooShort { needed, got: n });
    }
    Ok(())
}

/// `e_t = a(L) w_t - sum_j b_j e_{t-j}` for `t >= conditioning`, with
/// pre-sample residuals set to zero. `ar` and `ma` are full lag polynomials
/// with leading 1.
pub(crate) fn residuals_with(w: &[f64], ar: &[f64], ma: &[f64], conditioning: usize) -> Vec<f64> {
    let n = w.len();
    let mut e = vec![0.0; n];
    for t in conditioning..n {
        let mut v = w[t];
        for (i, c) in ar.iter().enumerate().skip(1) {
            if *c != 0.0 {
                v += c * w[t - i];
            }
        }
        for (j, c) in ma.iter().enumerate().skip(1) {
            if *c != 0.0 && j <= t {
                v -= c * e[t - j];
            }
        }
        e[t] = v;
    }
    e.split_off(conditioning)
}

pub(crate) fn loglik_from_sse(sse: f64, n: usize) -> f64 {
    let n = n as f64;
    let sigma2 = sse / n;
    -0.5 * n * ((2.0 * PI * sigma2).ln() + 1.0)
}

/// Residuals of the model on `y` after differencing, conditioning on the
/// first `p + P*s` differenced observations.
pub fn css_residuals(spec: &SarimaSpec, params: &SarimaParams, y: &[f64]) -> Result<Vec<f64>> {
    params.check_shape(spec)?;
    if !params.is_admissible() {
        return Err(Error::NonInvertibleParams);
    }
    let cond = spec.ar_lag();
    check_length(spec, y.len(), cond)?;
    let work = working_series(spec, y)?;
    Ok(residuals_with(
        &work.w,
        &params.ar_polynomial(spec.period),
        &params.ma_polynomial(spec.period),
        cond,
    ))
}

/// Concentrated Gaussian log-likelihood `-(n/2)(ln(2 pi s2) + 1)` with
/// `s2 = SSE / n` over the residuals of [`css_residuals`]. `params.sigma2`
/// is ignored.
pub fn css_loglik(spec: &SarimaSpec, params: &SarimaParams, y: &[f64]) -> Result<f64> {
    let e = css_residuals(spec, params, y)?;
    let sse: f64 = e.iter().map(|v| v * v).sum();
    if !sse.is_finite() {
        return Err(Error::NumericalBreakdown(e.len()));
    }
    Ok(loglik_from_sse(sse, e.len()))
}
