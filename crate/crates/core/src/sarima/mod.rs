//! Seasonal ARIMA models: differencing, identification, conditional
//! sum-of-squares estimation, AIC-ranked order search, forecasting and a
//! seeded simulator.
//!
//! Lag polynomials follow the usual sign convention: autoregressive factors
//! are `1 - phi_1 L - ... - phi_p L^p` and moving-average factors are
//! `1 + theta_1 L + ... + theta_q L^q`, with seasonal factors in `L^s`.

mod acf;
mod css;
mod diff;
mod fit;
mod forecast;
mod optim;
mod poly;
mod simulate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use acf::{acf, pacf};
pub use css::{css_loglik, css_residuals};
pub use diff::{difference, integrate};
pub use fit::{fit, fit_with, grid_search, noise_only_fit, FitOptions, GridBounds, GridFailure, GridResult};
pub use forecast::{forecast, Forecast};
pub use optim::{nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use poly::{is_stationary, min_root_modulus_bound};
pub use simulate::{simulate, simulate_with_burn_in, DEFAULT_BURN_IN};

/// Orders of a SARIMA(p,d,q)(P,D,Q)[s] model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SarimaSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub seasonal_p: usize,
    pub seasonal_d: usize,
    pub seasonal_q: usize,
    /// Seasonal period (7 for daily data with a weekly cycle).
    pub period: usize,
}

impl SarimaSpec {
    pub fn new(order: (usize, usize, usize), seasonal: (usize, usize, usize), period: usize) -> Result<Self> {
        let spec = Self {
            p: order.0,
            d: order.1,
            q: order.2,
            seasonal_p: seasonal.0,
            seasonal_d: seasonal.1,
            seasonal_q: seasonal.2,
            period,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::InvalidSpec("seasonal period must be at least 1".into()));
        }
        if self.is_seasonal() && self.period < 2 {
            return Err(Error::InvalidSpec(
                "seasonal terms need a period of at least 2".into(),
            ));
        }
        Ok(())
    }

    pub fn is_seasonal(&self) -> bool {
        self.seasonal_p + self.seasonal_d + self.seasonal_q > 0
    }

    /// Number of ARMA coefficients (excluding the noise variance).
    pub fn n_coefficients(&self) -> usize {
        self.p + self.q + self.seasonal_p + self.seasonal_q
    }

    /// Parameter count used by AIC: coefficients plus the noise variance.
    pub fn n_params(&self) -> usize {
        self.n_coefficients() + 1
    }

    /// Observations lost to differencing.
    pub fn diff_order(&self) -> usize {
        self.d + self.seasonal_d * self.period
    }

    /// Largest autoregressive lag, the default number of conditioning
    /// observations for the sum of squares.
    pub fn ar_lag(&self) -> usize {
        self.p + self.seasonal_p * self.period
    }

    pub fn ma_lag(&self) -> usize {
        self.q + self.seasonal_q * self.period
    }

    /// `(p,d,q)` part only.
    pub fn order_string(&self) -> String {
        format!("({},{},{})", self.p, self.d, self.q)
    }

    /// `(P,D,Q)` part only.
    pub fn seasonal_string(&self) -> String {
        format!("({},{},{})", self.seasonal_p, self.seasonal_d, self.seasonal_q)
    }
}

impl fmt::Display for SarimaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}[{}]",
            self.order_string(),
            self.seasonal_string(),
            self.period
        )
    }
}

impl FromStr for SarimaSpec {
    type Err = Error;

    /// Parses exactly `(p,d,q)(P,D,Q)[s]` with no whitespace.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::SpecSyntax(s.to_string());
        let rest = s.strip_prefix('(').ok_or_else(bad)?;
        let (order, rest) = rest.split_once(")(").ok_or_else(bad)?;
        let (seasonal, rest) = rest.split_once(")[").ok_or_else(bad)?;
        let period = rest.strip_suffix(']').ok_or_else(bad)?;
        let triple = |t: &str| -> Result<(usize, usize, usize)> {
            let parts: Vec<usize> = t
                .split(',')
                .map(|x| {
                    if !x.is_empty() && x.bytes().all(|b| b.is_ascii_digit()) {
                        x.parse().map_err(|_| bad())
                    } else {
                        Err(bad())
                    }
                })
                .collect::<Result<_>>()?;
            match parts[..] {
                [a, b, c] => Ok((a, b, c)),
                _ => Err(bad()),
            }
        };
        if period.is_empty() || !period.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        SarimaSpec::new(
            triple(order)?,
            triple(seasonal)?,
            period.parse().map_err(|_| bad())?,
        )
    }
}

/// Estimated coefficients of a SARIMA model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SarimaParams {
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub seasonal_ar: Vec<f64>,
    pub seasonal_ma: Vec<f64>,
    pub sigma2: f64,
}

impl SarimaParams {
    pub fn zeros(spec: &SarimaSpec) -> Self {
        Self {
            ar: vec![0.0; spec.p],
            ma: vec![0.0; spec.q],
            seasonal_ar: vec![0.0; spec.seasonal_p],
            seasonal_ma: vec![0.0; spec.seasonal_q],
            sigma2: 1.0,
        }
    }

    /// Coefficients in the order `ar, ma, seasonal_ar, seasonal_ma`.
    pub fn coefficients(&self) -> Vec<f64> {
        self.ar
            .iter()
            .chain(&self.ma)
            .chain(&self.seasonal_ar)
            .chain(&self.seasonal_ma)
            .copied()
            .collect()
    }

    /// Inverse of [`SarimaParams::coefficients`].
    pub fn from_coefficients(spec: &SarimaSpec, coef: &[f64], sigma2: f64) -> Self {
        let (ar, rest) = coef.split_at(spec.p);
        let (ma, rest) = rest.split_at(spec.q);
        let (sar, sma) = rest.split_at(spec.seasonal_p);
        Self {
            ar: ar.to_vec(),
            ma: ma.to_vec(),
            seasonal_ar: sar.to_vec(),
            seasonal_ma: sma[..spec.seasonal_q].to_vec(),
            sigma2,
        }
    }

    fn check_shape(&self, spec: &SarimaSpec) -> Result<()> {
        if self.ar.len() != spec.p
            || self.ma.len() != spec.q
            || self.seasonal_ar.len() != spec.seasonal_p
            || self.seasonal_ma.len() != spec.seasonal_q
        {
            return Err(Error::InvalidArgument(format!(
                "parameter lengths do not match {spec}"
            )));
        }
        Ok(())
    }

    /// Every AR factor stationary and every MA factor invertible.
    pub fn is_admissible(&self) -> bool {
        poly::ar_is_stationary(&self.ar)
            && poly::ar_is_stationary(&self.seasonal_ar)
            && poly::ma_is_invertible(&self.ma)
            && poly::ma_is_invertible(&self.seasonal_ma)
    }

    /// Full autoregressive lag polynomial `phi(L) Phi(L^s)` as coefficients of
    /// `1 + c_1 L + ...`.
    pub fn ar_polynomial(&self, period: usize) -> Vec<f64> {
        poly::multiply(
            &poly::ar_factor(&self.ar, 1),
            &poly::ar_factor(&self.seasonal_ar, period),
        )
    }

    /// Full moving-average lag polynomial `theta(L) Theta(L^s)`.
    pub fn ma_polynomial(&self, period: usize) -> Vec<f64> {
        poly::multiply(
            &poly::ma_factor(&self.ma, 1),
            &poly::ma_factor(&self.seasonal_ma, period),
        )
    }
}

/// A fitted model and its in-sample diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedSarima {
    pub spec: SarimaSpec,
    pub params: SarimaParams,
    pub loglik: f64,
    pub aic: f64,
    /// Residuals of the differenced series after the conditioning window.
    pub residuals: Vec<f64>,
    /// Observations of the differenced series held fixed as initial values.
    pub conditioning: usize,
    /// Mean removed before fitting (non-zero only when d = D = 0).
    pub mean: f64,
    pub converged: bool,
    /// Noise-only fallback for a constant differenced series.
    pub degenerate: bool,
    pub seed: u64,
}

impl FittedSarima {
    pub fn aic_from(spec: &SarimaSpec, loglik: f64) -> f64 {
        2.0 * spec.n_params() as f64 - 2.0 * loglik
    }
}
