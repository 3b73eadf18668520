//! Estimation by conditional sum of squares and AIC-ranked order search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::css::{check_length, loglik_from_sse, residuals_with, working_series};
use super::optim::{nelder_mead, NelderMeadOptions};
use super::{poly, FittedSarima, SarimaParams, SarimaSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub seed: u64,
    /// Optimizer starts; the first is always at zero coefficients.
    pub starts: usize,
    pub optimizer: NelderMeadOptions,
    /// Conditioning window on the differenced series. Defaults to `p + P*s`;
    /// smaller values are raised to that.
    pub conditioning: Option<usize>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            starts: 5,
            optimizer: NelderMeadOptions::default(),
            conditioning: None,
        }
    }
}

fn params_from_unconstrained(spec: &SarimaSpec, x: &[f64]) -> SarimaParams {
    let (ar, rest) = x.split_at(spec.p);
    let (ma, rest) = rest.split_at(spec.q);
    let (sar, sma) = rest.split_at(spec.seasonal_p);
    SarimaParams {
        ar: poly::ar_from_unconstrained(ar),
        ma: poly::ma_from_unconstrained(ma),
        seasonal_ar: poly::ar_from_unconstrained(sar),
        seasonal_ma: poly::ma_from_unconstrained(sma),
        sigma2: f64::NAN,
    }
}

fn sse_of(spec: &SarimaSpec, params: &SarimaParams, w: &[f64], cond: usize) -> (f64, Vec<f64>) {
    let e = residuals_with(
        w,
        &params.ar_polynomial(spec.period),
        &params.ma_polynomial(spec.period),
        cond,
    );
    (e.iter().map(|v| v * v).sum(), e)
}

fn is_constant(w: &[f64]) -> bool {
    w.iter().all(|v| *v == w[0])
}

#[allow(clippy::too_many_arguments)]
fn finish(
    spec: &SarimaSpec,
    mut params: SarimaParams,
    w: &[f64],
    cond: usize,
    mean: f64,
    converged: bool,
    degenerate: bool,
    seed: u64,
) -> Result<FittedSarima> {
    let (sse, residuals) = sse_of(spec, &params, w, cond);
    if !sse.is_finite() {
        return Err(Error::NumericalBreakdown(residuals.len()));
    }
    params.sigma2 = sse / residuals.len() as f64;
    let loglik = loglik_from_sse(sse, residuals.len());
    Ok(FittedSarima {
        spec: *spec,
        aic: FittedSarima::aic_from(spec, loglik),
        params,
        loglik,
        residuals,
        conditioning: cond,
        mean,
        converged,
        degenerate,
        seed,
    })
}

/// Fits `spec` to `y` with default options and the given seed.
pub fn fit(spec: &SarimaSpec, y: &[f64], seed: u64) -> Result<FittedSarima> {
    fit_with(
        spec,
        y,
        &FitOptions {
            seed,
            ..FitOptions::default()
        },
    )
}

/// Minimizes the conditional sum of squares over the stationary and
/// invertible region with multi-start Nelder-Mead followed by a restart
/// from the best point.
pub fn fit_with(spec: &SarimaSpec, y: &[f64], opts: &FitOptions) -> Result<FittedSarima> {
    spec.validate()?;
    let cond = opts.conditioning.unwrap_or(0).max(spec.ar_lag());
    check_length(spec, y.len(), cond)?;
    let work = working_series(spec, y)?;
    if is_constant(&work.w) {
        return Err(Error::DegenerateSeries);
    }
    let k = spec.n_coefficients();
    if k == 0 {
        return finish(
            spec,
            SarimaParams::zeros(spec),
            &work.w,
            cond,
            work.mean,
            true,
            false,
            opts.seed,
        );
    }

    let objective = |x: &[f64]| -> f64 {
        let params = params_from_unconstrained(spec, x);
        let (sse, e) = sse_of(spec, &params, &work.w, cond);
        -loglik_from_sse(sse, e.len())
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in 0..opts.starts.max(1) {
        let x0: Vec<f64> = if start == 0 {
            vec![0.0; k]
        } else {
            (0..k).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        let r = nelder_mead(objective, &x0, &opts.optimizer);
        if best.as_ref().is_none_or(|(_, v)| r.value < *v) {
            best = Some((r.x, r.value));
        }
    }
    let (x_best, v_best) = best.expect("at least one start");
    let polished = nelder_mead(objective, &x_best, &opts.optimizer);
    let (x, converged) = if polished.value <= v_best {
        (polished.x, polished.converged)
    } else {
        (x_best, false)
    };
    if !objective(&x).is_finite() {
        return Err(Error::NumericalBreakdown(work.w.len() - cond));
    }
    let params = params_from_unconstrained(spec, &x);
    finish(
        spec, params, &work.w, cond, work.mean, converged, false, opts.seed,
    )
}

/// Fallback for a constant differenced series: all coefficients zero, so the
/// model reduces to its noise term (possibly with zero variance).
pub fn noise_only_fit(spec: &SarimaSpec, y: &[f64], seed: u64) -> Result<FittedSarima> {
    spec.validate()?;
    let cond = spec.ar_lag();
    check_length(spec, y.len(), cond)?;
    let work = working_series(spec, y)?;
    finish(
        spec,
        SarimaParams::zeros(spec),
        &work.w,
        cond,
        work.mean,
        true,
        true,
        seed,
    )
}

/// Order search bounds: `0..=p_max` and so on, with fixed differencing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridBounds {
    pub p_max: usize,
    pub q_max: usize,
    pub seasonal_p_max: usize,
    pub seasonal_q_max: usize,
    pub d: usize,
    pub seasonal_d: usize,
    pub period: usize,
}

impl GridBounds {
    pub fn specs(&self) -> Result<Vec<SarimaSpec>> {
        let mut out = Vec::new();
        for p in 0..=self.p_max {
            for q in 0..=self.q_max {
                for sp in 0..=self.seasonal_p_max {
                    for sq in 0..=self.seasonal_q_max {
                        out.push(SarimaSpec::new(
                            (p, self.d, q),
                            (sp, self.seasonal_d, sq),
                            self.period,
                        )?);
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFailure {
    pub spec: SarimaSpec,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    /// Successful fits, best AIC first; ties go to fewer parameters, then to
    /// the lexicographically smaller order.
    pub ranked: Vec<FittedSarima>,
    pub failures: Vec<GridFailure>,
    /// Conditioning window shared by every candidate so likelihoods cover
    /// the same observations.
    pub conditioning: usize,
}

impl GridResult {
    pub fn best(&self) -> &FittedSarima {
        &self.ranked[0]
    }
}

/// Fits every order within `bounds` and ranks the fits by AIC. All
/// candidates condition on the same number of initial observations (the
/// largest autoregressive lag among candidates the series can support).
pub fn grid_search(y: &[f64], bounds: &GridBounds, seed: u64) -> Result<GridResult> {
    let specs = bounds.specs()?;
    let conditioning = specs
        .iter()
        .filter(|s| check_length(s, y.len(), s.ar_lag()).is_ok())
        .map(|s| s.ar_lag())
        .max()
        .unwrap_or(0);
    let opts = FitOptions {
        seed,
        conditioning: Some(conditioning),
        ..FitOptions::default()
    };
    let run = |s: &SarimaSpec| (*s, fit_with(s, y, &opts));
    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        specs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = specs.iter().map(run).collect();

    let mut ranked = Vec::new();
    let mut failures = Vec::new();
    for (spec, r) in results {
        match r {
            Ok(f) => ranked.push(f),
            Err(e) => failures.push(GridFailure {
                spec,
                error: e.to_string(),
            }),
        }
    }
    if ranked.is_empty() {
        return Err(Error::AllFitsFailed);
    }
    ranked.sort_by(|a, b| {
        a.aic
            .total_cmp(&b.aic)
            .then(a.spec.n_params().cmp(&b.spec.n_params()))
            .then(a.spec.cmp(&b.spec))
    });
    Ok(GridResult {
        ranked,
        failures,
        conditioning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sarima::{css_loglik, simulate};

    fn spec(s: &str) -> SarimaSpec {
        s.parse().unwrap()
    }

    #[test]
    fn recovers_ar1() {
        let sp = spec("(1,0,0)(0,0,0)[1]");
        let truth = SarimaParams {
            ar: vec![0.6],
            sigma2: 1.0,
            ..SarimaParams::zeros(&sp)
        };
        let y = simulate(&sp, &truth, 2000, 11).unwrap();
        let f = fit(&sp, &y, 0).unwrap();
        assert!((f.params.ar[0] - 0.6).abs() < 0.05, "{:?}", f.params);
        assert!((f.params.sigma2 - 1.0).abs() < 0.1);
        assert!(f.converged);
        // AR(1) CSS is least squares: compare with the closed form.
        let w: Vec<f64> = y.iter().map(|v| v - f.mean).collect();
        let num: f64 = w.windows(2).map(|p| p[0] * p[1]).sum();
        let den: f64 = w[..w.len() - 1].iter().map(|v| v * v).sum();
        assert!((f.params.ar[0] - num / den).abs() < 1e-6);
    }

    #[test]
    fn loglik_and_aic_are_consistent() {
        let sp = spec("(0,1,1)(0,1,1)[7]");
        let truth = SarimaParams {
            ma: vec![-0.4],
            seasonal_ma: vec![-0.5],
            sigma2: 4.0,
            ..SarimaParams::zeros(&sp)
        };
        let y = simulate(&sp, &truth, 400, 5).unwrap();
        let f = fit(&sp, &y, 3).unwrap();
        let ll = css_loglik(&sp, &f.params, &y).unwrap();
        assert!((ll - f.loglik).abs() < 1e-9);
        assert!((f.aic - (2.0 * 3.0 - 2.0 * f.loglik)).abs() < 1e-9);
        assert_eq!(f.residuals.len(), 400 - 8);
        assert!(f.params.is_admissible());
        assert!((f.params.ma[0] + 0.4).abs() < 0.15, "{:?}", f.params);
        assert!((f.params.seasonal_ma[0] + 0.5).abs() < 0.15, "{:?}", f.params);
    }

    #[test]
    fn seeded_fits_are_reproducible() {
        let sp = spec("(1,1,1)(0,1,1)[7]");
        let truth = SarimaParams {
            ar: vec![0.3],
            ma: vec![-0.3],
            seasonal_ma: vec![-0.6],
            sigma2: 1.0,
            ..SarimaParams::zeros(&sp)
        };
        let y = simulate(&sp, &truth, 300, 9).unwrap();
        assert_eq!(fit(&sp, &y, 42).unwrap(), fit(&sp, &y, 42).unwrap());
    }

    #[test]
    fn degenerate_and_short_inputs() {
        let sp = spec("(0,1,1)(0,0,0)[1]");
        let line: Vec<f64> = (0..50).map(|t| 2.0 * t as f64).collect();
        assert!(matches!(fit(&sp, &line, 0), Err(Error::DegenerateSeries)));
        let rw = spec("(0,1,0)(0,0,0)[1]");
        let f = noise_only_fit(&rw, &[5.0; 20], 0).unwrap();
        assert!(f.degenerate);
        assert_eq!(f.params.sigma2, 0.0);
        assert!(matches!(fit(&sp, &[1.0, 2.0], 0), Err(Error::TooShort { .. })));
    }

    #[test]
    fn grid_ranks_by_aic_with_common_conditioning() {
        let sp = spec("(1,0,0)(0,0,0)[1]");
        let truth = SarimaParams {
            ar: vec![0.7],
            sigma2: 1.0,
            ..SarimaParams::zeros(&sp)
        };
        let y = simulate(&sp, &truth, 500, 21).unwrap();
        let bounds = GridBounds {
            p_max: 2,
            q_max: 1,
            seasonal_p_max: 0,
            seasonal_q_max: 0,
            d: 0,
            seasonal_d: 0,
            period: 1,
        };
        let g = grid_search(&y, &bounds, 1).unwrap();
        assert_eq!(g.ranked.len() + g.failures.len(), 6);
        assert_eq!(g.conditioning, 2);
        assert!(g.ranked.iter().all(|f| f.residuals.len() == 498));
        assert!(g.ranked.windows(2).all(|p| p[0].aic <= p[1].aic));
        assert!(g.best().spec.p >= 1);
    }

    #[test]
    fn grid_on_tiny_series_fails_everywhere() {
        let bounds = GridBounds {
            p_max: 1,
            q_max: 1,
            seasonal_p_max: 0,
            seasonal_q_max: 0,
            d: 1,
            seasonal_d: 1,
            period: 7,
        };
        let y: Vec<f64> = (0..9).map(|t| t as f64).collect();
        assert!(matches!(grid_search(&y, &bounds, 0), Err(Error::AllFitsFailed)));
    }
}
