use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sarima::{fit, forecast, noise_only_fit, FittedSarima};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutMetrics {
    pub holdout: usize,
    pub mae: f64,
    pub rmse: f64,
    /// Mean absolute percentage error in percent over non-zero actuals;
    /// `None` when every actual is zero.
    pub mape: Option<f64>,
    pub mape_skipped: usize,
}

/// Refits `f.spec` on all but the last `holdout` points of `y` and scores
/// the forecast of those points.
pub fn holdout_evaluate(f: &FittedSarima, y: &[f64], holdout: usize) -> Result<HoldoutMetrics> {
    if holdout == 0 {
        return Err(Error::HorizonZero);
    }
    if holdout + 10 >= y.len() {
        return Err(Error::HoldoutTooLarge {
            holdout,
            len: y.len(),
        });
    }
    let (train, test) = y.split_at(y.len() - holdout);
    let refit = match fit(&f.spec, train, f.seed) {
        Err(Error::DegenerateSeries) => noise_only_fit(&f.spec, train, f.seed)?,
        other => other?,
    };
    let fc = forecast(&refit, train, holdout, 0.95)?;
    let mut abs = 0.0;
    let mut sq = 0.0;
    let mut pct = 0.0;
    let mut skipped = 0;
    for (pred, actual) in fc.point.iter().zip(test) {
        let err = pred - actual;
        abs += err.abs();
        sq += err * err;
        if *actual == 0.0 {
            skipped += 1;
        } else {
            pct += (err / actual).abs();
        }
    }
    let n = holdout as f64;
    let counted = holdout - skipped;
    Ok(HoldoutMetrics {
        holdout,
        mae: abs / n,
        rmse: (sq / n).sqrt(),
        mape: (counted > 0).then(|| 100.0 * pct / counted as f64),
        mape_skipped: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sarima::SarimaSpec;

    #[test]
    fn constant_series_random_walk_is_perfect() {
        let spec: SarimaSpec = "(0,1,0)(0,0,0)[1]".parse().unwrap();
        let y = [7.0; 40];
        let f = noise_only_fit(&spec, &y, 0).unwrap();
        let m = holdout_evaluate(&f, &y, 10).unwrap();
        assert_eq!(m.mae, 0.0);
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.mape, Some(0.0));
    }

    #[test]
    fn zero_actuals_are_skipped_in_mape() {
        let spec: SarimaSpec = "(0,1,0)(0,0,0)[1]".parse().unwrap();
        let mut y: Vec<f64> = (0..30).map(|t| (t % 3) as f64).collect();
        y.extend([0.0; 5]);
        let f = fit(&spec, &y, 0).unwrap();
        let m = holdout_evaluate(&f, &y, 5).unwrap();
        assert_eq!(m.mape_skipped, 5);
        assert_eq!(m.mape, None);
        assert!(m.mae > 0.0);
    }

    #[test]
    fn holdout_bounds() {
        let spec: SarimaSpec = "(0,1,0)(0,0,0)[1]".parse().unwrap();
        let y: Vec<f64> = (0..30).map(|t| (t * t % 7) as f64).collect();
        let f = fit(&spec, &y, 0).unwrap();
        assert!(matches!(
            holdout_evaluate(&f, &y, 20),
            Err(Error::HoldoutTooLarge { holdout: 20, len: 30 })
        ));
        assert!(holdout_evaluate(&f, &y, 19).is_ok());
        assert!(matches!(holdout_evaluate(&f, &y, 0), Err(Error::HorizonZero)));
    }
}
