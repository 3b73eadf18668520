//! Browser bindings. Each exported function takes plain text, returns a JSON
//! string, and throws a string on bad input.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use episignal::benford::{benford_pmf, benford_report, BenfordConfig, BenfordReport};
use episignal::cluster::{elbow_scan, kmeans_fit, knee_detect, silhouette};
use episignal::dataset::{minmax_scale, read_profiles, ProfileSchema};
use episignal::sarima::{fit, forecast, noise_only_fit, SarimaSpec};
use episignal::Error;

/// Numbers separated by commas, semicolons or whitespace.
fn parse_numbers(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
        .collect()
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct BenfordOut {
    expected: [f64; 9],
    observed: [f64; 9],
    cumulative: bool,
    report: BenfordReport,
}

pub fn benford_digits_json(text: &str, cumulative: bool) -> Result<String, String> {
    let mut values = parse_numbers(text)?;
    if cumulative {
        let mut acc = 0.0;
        for v in &mut values {
            acc += *v;
            *v = acc;
        }
    }
    let report = benford_report(&values, &BenfordConfig::default()).map_err(|e| e.to_string())?;
    to_json(&BenfordOut {
        expected: benford_pmf(),
        observed: report.histogram.proportions(),
        cumulative,
        report,
    })
}

#[derive(Serialize)]
struct ElbowOut {
    k_values: Vec<usize>,
    sse: Vec<f64>,
    knee: usize,
    silhouette: Option<f64>,
    counties: Vec<String>,
    features: Vec<String>,
    /// Scaled coordinates of the first two features, for a scatter plot.
    points: Vec<[f64; 2]>,
    labels: Vec<usize>,
}

pub fn kmeans_elbow_json(csv_text: &str, k_max: usize, seed: u64) -> Result<String, String> {
    let run = || -> Result<ElbowOut, Error> {
        let m = read_profiles(csv_text.as_bytes(), &ProfileSchema::new("county"))?;
        let scaled = minmax_scale(&m)?;
        let k_max = k_max.min(scaled.n_rows());
        let curve = elbow_scan(&scaled, 1, k_max, seed)?;
        let knee = knee_detect(&curve)?;
        let (_, a) = kmeans_fit(&scaled, knee, seed)?;
        let sil = silhouette(&scaled, &a).ok();
        let points = scaled
            .rows()
            .iter()
            .map(|r| [r[0], r.get(1).copied().unwrap_or(0.0)])
            .collect();
        Ok(ElbowOut {
            k_values: curve.k_values,
            sse: curve.sse,
            knee,
            silhouette: sil,
            counties: scaled.county_keys().iter().map(|k| k.raw_name.clone()).collect(),
            features: scaled.feature_names().to_vec(),
            points,
            labels: a.labels,
        })
    };
    to_json(&run().map_err(|e| e.to_string())?)
}

#[derive(Serialize)]
struct ForecastOut {
    spec: String,
    coefficients: Vec<f64>,
    sigma2: f64,
    aic: f64,
    degenerate: bool,
    history: Vec<f64>,
    point: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

pub fn sarima_forecast_json(
    text: &str,
    spec: &str,
    horizon: usize,
    level: f64,
    seed: u64,
) -> Result<String, String> {
    let y = parse_numbers(text)?;
    let run = || -> Result<ForecastOut, Error> {
        let spec: SarimaSpec = spec.parse()?;
        let model = match fit(&spec, &y, seed) {
            Err(Error::DegenerateSeries) => noise_only_fit(&spec, &y, seed)?,
            other => other?,
        };
        let fc = forecast(&model, &y, horizon, level)?;
        Ok(ForecastOut {
            spec: model.spec.to_string(),
            coefficients: model.params.coefficients(),
            sigma2: model.params.sigma2,
            aic: model.aic,
            degenerate: model.degenerate,
            history: y.clone(),
            point: fc.point,
            lower: fc.lower,
            upper: fc.upper,
        })
    };
    to_json(&run().map_err(|e| e.to_string())?)
}

/// Leading-digit test of the values (running totals when `cumulative`).
#[wasm_bindgen]
pub fn benford_digits(text: &str, cumulative: bool) -> Result<String, JsValue> {
    benford_digits_json(text, cumulative).map_err(|e| JsValue::from_str(&e))
}

/// Elbow curve, knee and knee-k labels for a profiles CSV with a `county`
/// column.
#[wasm_bindgen]
pub fn kmeans_elbow(csv_text: &str, k_max: usize, seed: u64) -> Result<String, JsValue> {
    kmeans_elbow_json(csv_text, k_max, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn sarima_forecast(
    text: &str,
    spec: &str,
    horizon: usize,
    level: f64,
    seed: u64,
) -> Result<String, JsValue> {
    sarima_forecast_json(text, spec, horizon, level, seed).map_err(|e| JsValue::from_str(&e))
}
