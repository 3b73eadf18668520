use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{integrate, SarimaParams, SarimaSpec};
use crate::error::{Error, Result};

/// Draws `n` observations from the model with Gaussian shocks. The ARMA part
/// starts from zeros and runs through a burn-in before it is kept; the
/// differencing is then undone with zero initial values.
pub fn simulate(spec: &SarimaSpec, params: &SarimaParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    simulate_with_burn_in(spec, params, n, seed, DEFAULT_BURN_IN)
}

pub const DEFAULT_BURN_IN: usize = 200;

pub fn simulate_with_burn_in(
    spec: &SarimaSpec,
    params: &SarimaParams,
    n: usize,
    seed: u64,
    burn_in: usize,
) -> Result<Vec<f64>> {
    spec.validate()?;
    params.check_shape(spec)?;
    if !params.is_admissible() {
        return Err(Error::NonInvertibleParams);
    }
    if !(params.sigma2.is_finite() && params.sigma2 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise variance {} is invalid",
            params.sigma2
        )));
    }
    let ar = params.ar_polynomial(spec.period);
    let ma = params.ma_polynomial(spec.period);
    let normal = Normal::new(0.0, params.sigma2.sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = burn_in + n;
    let e: Vec<f64> = (0..total).map(|_| normal.sample(&mut rng)).collect();
    let mut w = vec![0.0; total];
    for t in 0..total {
        let mut v = e[t];
        for (i, c) in ar.iter().enumerate().skip(1).take(t) {
            v -= c * w[t - i];
        }
        for (j, c) in ma.iter().enumerate().skip(1).take(t) {
            v += c * e[t - j];
        }
        w[t] = v;
    }
    Ok(integrate(&w[burn_in..], spec.d, spec.seasonal_d, spec.period))
}
