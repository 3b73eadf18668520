//! Point forecasts and Gaussian prediction intervals.

use serde::{Deserialize, Serialize};

use super::css::{residuals_with, working_series};
use super::{poly, FittedSarima};
use crate::error::{Error, Result};
use crate::stats::normal_interval_quantile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub level: f64,
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Standard error of each point forecast.
    pub std_err: Vec<f64>,
}

impl Forecast {
    pub fn horizon(&self) -> usize {
        self.point.len()
    }
}

/// Forecasts `h` steps past the end of `y`, the series the model was fitted
/// on. Unknown future shocks are set to zero; the variance at step `h` is
/// `sigma2 * sum_{j<h} psi_j^2` with `psi` the weights of the integrated
/// model, so intervals widen with the horizon.
pub fn forecast(fitted: &FittedSarima, y: &[f64], h: usize, level: f64) -> Result<Forecast> {
    if h == 0 {
        return Err(Error::HorizonZero);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "interval level {level} is not in (0, 1)"
        )));
    }
    let spec = &fitted.spec;
    let params = &fitted.params;
    let ar = params.ar_polynomial(spec.period);
    let ma = params.ma_polynomial(spec.period);
    let integrated = poly::multiply(
        &ar,
        &poly::differencing_polynomial(spec.d, spec.seasonal_d, spec.period),
    );

    let mut work = working_series(spec, y)?;
    if spec.diff_order() == 0 {
        // centre on the fitted mean, not the mean of `y`
        work.w.iter_mut().for_each(|v| *v += work.mean - fitted.mean);
    }
    if work.w.len() < fitted.conditioning + 1 {
        return Err(Error::TooShort {
            needed: spec.diff_order() + fitted.conditioning + 1,
            got: y.len(),
        });
    }
    let e_w = residuals_with(&work.w, &ar, &ma, fitted.conditioning);
    let n = y.len();
    let offset = n - e_w.len();
    let shock = |t: usize| -> f64 {
        if t >= offset && t < n {
            e_w[t - offset]
        } else {
            0.0
        }
    };

    let mut z: Vec<f64> = y.iter().map(|v| v - fitted.mean).collect();
    for t in n..n + h {
        let mut v = 0.0;
        for (i, c) in integrated.iter().enumerate().skip(1) {
            if *c != 0.0 {
                v -= c * z[t - i];
            }
        }
        for (j, c) in ma.iter().enumerate().skip(1) {
            if *c != 0.0 && j <= t {
                v += c * shock(t - j);
            }
        }
        z.push(v);
    }

    let mut psi = vec![1.0];
    for j in 1..h {
        let mut v = ma.get(j).copied().unwrap_or(0.0);
        for (i, c) in integrated.iter().enumerate().skip(1).take(j) {
            v -= c * psi[j - i];
        }
        psi.push(v);
    }
    let quantile = normal_interval_quantile(level);
    let mut acc = 0.0;
    let mut point = Vec::with_capacity(h);
    let mut lower = Vec::with_capacity(h);
    let mut upper = Vec::with_capacity(h);
    let mut std_err = Vec::with_capacity(h);
    for (k, p) in psi.iter().enumerate() {
        acc += p * p;
        let se = (params.sigma2 * acc).sqrt();
        let mid = z[n + k] + fitted.mean;
        point.push(mid);
        lower.push(mid - quantile * se);
        upper.push(mid + quantile * se);
        std_err.push(se);
    }
    Ok(Forecast {
        level,
        point,
        lower,
        upper,
        std_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sarima::{css_residuals, fit, noise_only_fit, simulate, SarimaParams, SarimaSpec};

    fn spec(s: &str) -> SarimaSpec {
        s.parse().unwrap()
    }

    #[test]
    fn white_noise_forecast_is_the_mean() {
        let sp = spec("(0,0,0)(0,0,0)[1]");
        let y = [1.0, 3.0, 2.0, 6.0];
        let f = fit(&sp, &y, 0).unwrap();
        let fc = forecast(&f, &y, 3, 0.95).unwrap();
        let sd = 3.5f64.sqrt();
        for k in 0..3 {
            assert!((fc.point[k] - 3.0).abs() < 1e-12);
            assert!((fc.std_err[k] - sd).abs() < 1e-12);
            assert!((fc.upper[k] - (3.0 + 1.959963984540054 * sd)).abs() < 1e-9);
        }
    }

    #[test]
    fn random_walk_intervals_grow_with_sqrt_h() {
        let sp = spec("(0,1,0)(0,0,0)[1]");
        let y = [0.0, 1.0, -1.0, 2.0, 2.5, 1.5];
        let f = fit(&sp, &y, 0).unwrap();
        // increments 1, -2, 3, 0.5, -1 ; sigma2 = 15.25 / 5
        assert!((f.params.sigma2 - 3.05).abs() < 1e-12);
        let fc = forecast(&f, &y, 4, 0.8).unwrap();
        for k in 0..4 {
            assert_eq!(fc.point[k], 1.5);
            let se = (3.05 * (k + 1) as f64).sqrt();
            assert!((fc.std_err[k] - se).abs() < 1e-12);
            assert!((fc.upper[k] - fc.point[k] - 1.2815515655446004 * se).abs() < 1e-9);
        }
    }

    #[test]
    fn one_step_forecast_matches_extended_residual() {
        let sp = spec("(1,1,1)(0,1,1)[7]");
        let truth = SarimaParams {
            ar: vec![0.4],
            ma: vec![-0.3],
            seasonal_ma: vec![-0.5],
            sigma2: 1.0,
            ..SarimaParams::zeros(&sp)
        };
        let y_ext = simulate(&sp, &truth, 200, 17).unwrap();
        let y = &y_ext[..199];
        let f = fit(&sp, y, 1).unwrap();
        let fc = forecast(&f, y, 1, 0.95).unwrap();
        let e = css_residuals(&sp, &f.params, &y_ext).unwrap();
        let expected = y_ext[199] - e[e.len() - 1];
        assert!(
            (fc.point[0] - expected).abs() < 1e-8,
            "{} vs {}",
            fc.point[0],
            expected
        );
    }

    #[test]
    fn seasonal_naive_repeats_last_season() {
        let sp = spec("(0,0,0)(0,1,0)[7]");
        let y: Vec<f64> = (0..28)
            .map(|t| [5.0, 1.0, 2.0, 3.0, 4.0, 9.0, 7.0][t % 7] + ((t * t) % 5) as f64 * 0.1)
            .collect();
        let f = fit(&sp, &y, 0).unwrap();
        let fc = forecast(&f, &y, 7, 0.95).unwrap();
        for k in 0..7 {
            assert!((fc.point[k] - y[21 + k]).abs() < 1e-12);
        }
    }

    #[test]
    fn guards_and_degenerate_model() {
        let sp = spec("(0,1,0)(0,0,0)[1]");
        let y = [4.0; 12];
        let f = noise_only_fit(&sp, &y, 0).unwrap();
        let fc = forecast(&f, &y, 3, 0.95).unwrap();
        assert_eq!(fc.point, [4.0; 3]);
        assert_eq!(fc.lower, fc.upper);
        assert!(matches!(forecast(&f, &y, 0, 0.95), Err(Error::HorizonZero)));
        assert!(forecast(&f, &y, 2, 1.5).is_err());
    }
}
