use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use serde::Serialize;

use super::{
    capital_spec, default_param_table, holdout_evaluate, ClusterParamTable, HoldoutMetrics, RunConfig,
};
use crate::benford::{audit_with, AuditOptions, AuditVerdict, BenfordConfig, Classification};
use crate::cluster::{
    cluster_summary, elbow_scan, kmeans_fit, knee_detect, silhouette, Assignment, ClusterSummary, KMeansModel,
};
use crate::dataset::{
    load_case_series, load_profiles, minmax_scale, normalize_name, prune_correlated, CaseSeries, CountyKey,
    FeatureMatrix, Period, ProfileSchema,
};
use crate::error::{Error, Result};
use crate::sarima::{fit, forecast, noise_only_fit, FittedSarima, Forecast, SarimaParams, SarimaSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DataQuality {
    Ok,
    /// The audit suggested flattening or underreporting.
    Suspect,
    Inconclusive,
    /// Below the audit's case threshold, or no usable period.
    Unaudited,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineSummary {
    pub k: usize,
    pub forecast: Vec<String>,
    pub skipped: Vec<Skipped>,
    pub errors: Vec<CountyError>,
    pub specs_used: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub county: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountyError {
    pub county: String,
    pub stage: String,
    pub error: String,
}

#[derive(Debug, Serialize)]
struct AuditRecord<'a> {
    county: &'a str,
    data_quality: DataQuality,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<&'a AuditVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped: Option<String>,
}

#[derive(Debug, Serialize)]
struct ModelRecord<'a> {
    county: &'a str,
    cluster: usize,
    spec: String,
    spec_source: &'static str,
    data_quality: DataQuality,
    params: &'a SarimaParams,
    loglik: f64,
    aic: f64,
    converged: bool,
    degenerate: bool,
    conditioning: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    holdout: Option<&'a HoldoutMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    holdout_error: Option<String>,
}

#[derive(Debug, Serialize)]
struct ReportRow {
    county: String,
    cluster: Option<usize>,
    spec: Option<String>,
    data_quality: DataQuality,
    classification: Option<Classification>,
    mape: Option<f64>,
    status: &'static str,
}

#[derive(Debug, Serialize)]
struct ElbowRow {
    k: usize,
    sse: f64,
    silhouette: Option<f64>,
}

struct Fitted {
    cluster: usize,
    spec_source: &'static str,
    model: FittedSarima,
    holdout: std::result::Result<HoldoutMetrics, String>,
    forecast: Forecast,
}

struct CountyRun<'a> {
    series: &'a CaseSeries,
    audit: Option<AuditVerdict>,
    audit_skip: Option<String>,
    quality: DataQuality,
    outcome: Outcome,
}

enum Outcome {
    Forecast(Box<Fitted>),
    Skipped(String),
    Failed { stage: &'static str, error: String },
}

struct Clustering {
    profiles: FeatureMatrix,
    model: KMeansModel,
    assignment: Assignment,
    labels: BTreeMap<CountyKey, usize>,
}

/// Inputs of the clustering stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSettings {
    pub profiles: PathBuf,
    pub name_col: String,
    /// `None` picks k at the knee of the elbow curve.
    pub k: Option<usize>,
    pub k_max: usize,
    pub seed: u64,
    pub corr_threshold: f64,
}

impl ClusterSettings {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            profiles: cfg.profiles.clone(),
            name_col: cfg.name_col.clone(),
            k: cfg.k,
            k_max: cfg.k_max,
            seed: cfg.seed,
            corr_threshold: cfg.corr_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRun {
    /// Profiles after correlation pruning, unscaled.
    pub profiles: FeatureMatrix,
    pub model: KMeansModel,
    pub assignment: Assignment,
    pub summaries: Vec<ClusterSummary>,
}

/// Clusters the profile table and writes `assignments.csv`, `centroids.csv`,
/// `elbow.csv` and `summary.json` into `dir`. The summary carries no case
/// means.
pub fn cluster_profiles(settings: &ClusterSettings, dir: &Path) -> Result<ClusterRun> {
    let mut out = Out::create_in(dir, &[])?;
    let c = cluster_stage(settings, &mut out, "")?;
    let summaries = cluster_summary(&c.profiles, &BTreeMap::new(), &c.assignment)?;
    out.json("summary.json", &summaries)?;
    Ok(ClusterRun {
        profiles: c.profiles,
        model: c.model,
        assignment: c.assignment,
        summaries,
    })
}

/// Tracks every file written so the manifest can list them.
struct Out {
    root: PathBuf,
    files: BTreeSet<String>,
}

impl Out {
    fn create(root: &Path) -> Result<Self> {
        Self::create_in(root, &["clusters", "audits", "models", "forecasts"])
    }

    fn create_in(root: &Path, dirs: &[&str]) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        for dir in dirs {
            let p = root.join(dir);
            fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        }
        Ok(Self {
            root: root.to_path_buf(),
            files: BTreeSet::new(),
        })
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let p = self.root.join(rel);
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        self.files.insert(rel.to_string());
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    fn csv<F>(&mut self, rel: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>,
    {
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            fill(&mut w)?;
            w.flush().map_err(csv::Error::from)?;
        }
        self.write(rel, &buf)
    }
}

fn stage(stage: &str, e: Error) -> Error {
    Error::StageFailed {
        stage: stage.into(),
        detail: e.to_string(),
    }
}

fn cluster_stage(cfg: &ClusterSettings, out: &mut Out, prefix: &str) -> Result<Clustering> {
    let profiles = load_profiles(&cfg.profiles, &ProfileSchema::new(cfg.name_col.clone()))?;
    let pruned = if profiles.n_cols() >= 2 {
        prune_correlated(&profiles, cfg.corr_threshold)?.matrix
    } else {
        profiles.clone()
    };
    let scaled = minmax_scale(&pruned)?;
    let n = scaled.n_rows();

    let mut elbow_rows = Vec::new();
    let k = match cfg.k {
        Some(k) => k,
        None => {
            let k_max = cfg.k_max.min(n);
            if k_max < 3 {
                1
            } else {
                let curve = elbow_scan(&scaled, 1, k_max, cfg.seed)?;
                for (&k, &sse) in curve.k_values.iter().zip(&curve.sse) {
                    let sil = if k >= 2 && k < n {
                        let (_, a) = kmeans_fit(&scaled, k, cfg.seed)?;
                        silhouette(&scaled, &a).ok()
                    } else {
                        None
                    };
                    elbow_rows.push(ElbowRow {
                        k,
                        sse,
                        silhouette: sil,
                    });
                }
                knee_detect(&curve)?
            }
        }
    };
    let (model, assignment) = kmeans_fit(&scaled, k, cfg.seed)?;
    if elbow_rows.is_empty() {
        let sil = if k >= 2 && k < n {
            silhouette(&scaled, &assignment).ok()
        } else {
            None
        };
        elbow_rows.push(ElbowRow {
            k,
            sse: model.inertia,
            silhouette: sil,
        });
    }

    let keys = scaled.county_keys();
    out.csv(&format!("{prefix}assignments.csv"), |w| {
        w.write_record(["county", "cluster"])?;
        for (key, label) in keys.iter().zip(&assignment.labels) {
            w.write_record([key.raw_name.as_str(), &label.to_string()])?;
        }
        Ok(())
    })?;
    out.csv(&format!("{prefix}centroids.csv"), |w| {
        let mut header = vec!["cluster".to_string()];
        header.extend(scaled.feature_names().iter().cloned());
        w.write_record(&header)?;
        for (c, centroid) in model.centroids.iter().enumerate() {
            let mut row = vec![c.to_string()];
            row.extend(centroid.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        Ok(())
    })?;
    out.csv(&format!("{prefix}elbow.csv"), |w| {
        w.write_record(["k", "sse", "silhouette"])?;
        for r in &elbow_rows {
            let sil = r.silhouette.map(|s| s.to_string()).unwrap_or_default();
            w.write_record([r.k.to_string(), r.sse.to_string(), sil])?;
        }
        Ok(())
    })?;

    let labels = keys
        .iter()
        .cloned()
        .zip(assignment.labels.iter().copied())
        .collect();
    Ok(Clustering {
        profiles: pruned,
        model,
        assignment,
        labels,
    })
}

fn quality_of(v: &AuditVerdict) -> DataQuality {
    if v.periods.iter().all(|p| p.report.is_none()) {
        return DataQuality::Unaudited;
    }
    match v.classification {
        Classification::Conforming => DataQuality::Ok,
        Classification::FlatteningSuspected | Classification::UnderreportingSuspected => DataQuality::Suspect,
        Classification::Inconclusive => DataQuality::Inconclusive,
    }
}

fn fit_county(
    cfg: &RunConfig,
    series: &CaseSeries,
    cluster: usize,
    table: &ClusterParamTable,
    capital: Option<&CountyKey>,
) -> std::result::Result<Fitted, (&'static str, Error)> {
    let (spec, spec_source): (SarimaSpec, &'static str) = if capital == Some(&series.county) {
        (
            capital_spec(cfg.period).map_err(|e| ("lookup", e))?,
            "capital_override",
        )
    } else {
        (table.get(cluster).map_err(|e| ("lookup", e))?, "table")
    };
    let y = series.daily_cases_f64();
    let model = match fit(&spec, &y, cfg.seed) {
        Err(Error::DegenerateSeries) => noise_only_fit(&spec, &y, cfg.seed),
        other => other,
    }
    .map_err(|e| ("fit", e))?;
    let holdout = holdout_evaluate(&model, &y, cfg.holdout).map_err(|e| e.to_string());
    let forecast = forecast(&model, &y, cfg.horizon, cfg.level).map_err(|e| ("forecast", e))?;
    Ok(Fitted {
        cluster,
        spec_source,
        model,
        holdout,
        forecast,
    })
}

fn run_county<'a>(
    cfg: &RunConfig,
    series: &'a CaseSeries,
    clustering: &Clustering,
    table: &ClusterParamTable,
    capital: Option<&CountyKey>,
    audit_opts: &AuditOptions,
) -> CountyRun<'a> {
    let periods: Vec<Period> = if cfg.periods.is_empty() {
        Period::new(series.start(), series.end()).into_iter().collect()
    } else {
        cfg.periods.clone()
    };
    let (audit, audit_skip, quality) = match audit_with(series, &periods, audit_opts) {
        Ok(v) => {
            let q = quality_of(&v);
            (Some(v), None, q)
        }
        Err(e) => (None, Some(e.to_string()), DataQuality::Unaudited),
    };
    let outcome = match clustering.labels.get(&series.county) {
        None => Outcome::Skipped("no profile row, so no cluster".into()),
        Some(&cluster) => match fit_county(cfg, series, cluster, table, capital) {
            Ok(f) => Outcome::Forecast(Box::new(f)),
            Err((stage, e)) => Outcome::Failed {
                stage,
                error: e.to_string(),
            },
        },
    };
    CountyRun {
        series,
        audit,
        audit_skip,
        quality,
        outcome,
    }
}

fn forecast_dates(end: NaiveDate, h: usize) -> Result<Vec<NaiveDate>> {
    (1..=h as u64)
        .map(|i| end.checked_add_days(Days::new(i)).ok_or(Error::DateRange(end)))
        .collect()
}

/// Runs every stage and writes artifacts under `cfg.out`.
///
/// Whole-stage failures (profiles, clustering, case loading) return an
/// error after keeping whatever earlier stages wrote. Per-county failures
/// are recorded in `errors.json`; the run fails only if no county could be
/// forecast.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineSummary> {
    cfg.validate()?;
    let mut out = Out::create(&cfg.out)?;

    let table = match &cfg.param_table {
        Some(p) => ClusterParamTable::load(p, cfg.period).map_err(|e| stage("param_table", e))?,
        None => default_param_table().with_period(cfg.period)?,
    };
    let capital = cfg
        .capital_override
        .as_deref()
        .map(normalize_name)
        .transpose()
        .map_err(|e| stage("config", e))?;

    let clustering = cluster_stage(&ClusterSettings::from_config(cfg), &mut out, "clusters/")
        .map_err(|e| stage("cluster", e))?;
    let cases = load_case_series(&cfg.cases).map_err(|e| stage("cases", e))?;
    let mut report = Vec::new();
    cases.write_report(&mut report)?;
    out.write("load_report.jsonl", &report)?;

    let summaries = cluster_summary(&clustering.profiles, &cases.series, &clustering.assignment)?;
    out.json("clusters/summary.json", &summaries)?;

    let audit_opts = AuditOptions {
        min_total: cfg.min_total,
        signal: cfg.signal,
        config: BenfordConfig::default(),
    };
    let all: Vec<&CaseSeries> = cases.series.values().collect();
    let capital = capital.as_ref();
    #[cfg(feature = "parallel")]
    let runs: Vec<CountyRun> = {
        use rayon::prelude::*;
        all.par_iter()
            .map(|s| run_county(cfg, s, &clustering, &table, capital, &audit_opts))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<CountyRun> = all
        .iter()
        .map(|s| run_county(cfg, s, &clustering, &table, capital, &audit_opts))
        .collect();

    let mut summary = PipelineSummary {
        k: clustering.model.k,
        forecast: Vec::new(),
        skipped: Vec::new(),
        errors: Vec::new(),
        specs_used: Vec::new(),
    };
    let mut specs_used = BTreeSet::new();
    let mut rows = Vec::new();
    for run in &runs {
        let key = &run.series.county;
        let stem = key.file_stem();
        out.json(
            &format!("audits/{stem}.json"),
            &AuditRecord {
                county: key.as_str(),
                data_quality: run.quality,
                verdict: run.audit.as_ref(),
                skipped: run.audit_skip.clone(),
            },
        )?;
        let classification = run.audit.as_ref().map(|v| v.classification);
        match &run.outcome {
            Outcome::Forecast(f) => {
                let spec = f.model.spec.to_string();
                specs_used.insert(spec.clone());
                out.json(
                    &format!("models/{stem}.json"),
                    &ModelRecord {
                        county: key.as_str(),
                        cluster: f.cluster,
                        spec: spec.clone(),
                        spec_source: f.spec_source,
                        data_quality: run.quality,
                        params: &f.model.params,
                        loglik: f.model.loglik,
                        aic: f.model.aic,
                        converged: f.model.converged,
                        degenerate: f.model.degenerate,
                        conditioning: f.model.conditioning,
                        seed: f.model.seed,
                        holdout: f.holdout.as_ref().ok(),
                        holdout_error: f.holdout.as_ref().err().cloned(),
                    },
                )?;
                let dates = forecast_dates(run.series.end(), f.forecast.horizon())?;
                out.csv(&format!("forecasts/{stem}.csv"), |w| {
                    w.write_record(["date", "point", "lower", "upper"])?;
                    for (i, d) in dates.iter().enumerate() {
                        w.write_record([
                            d.to_string(),
                            f.forecast.point[i].to_string(),
                            f.forecast.lower[i].to_string(),
                            f.forecast.upper[i].to_string(),
                        ])?;
                    }
                    Ok(())
                })?;
                summary.forecast.push(key.as_str().to_string());
                rows.push(ReportRow {
                    county: key.as_str().to_string(),
                    cluster: Some(f.cluster),
                    spec: Some(spec),
                    data_quality: run.quality,
                    classification,
                    mape: f.holdout.as_ref().ok().and_then(|m| m.mape),
                    status: "forecast",
                });
            }
            Outcome::Skipped(reason) => {
                summary.skipped.push(Skipped {
                    county: key.as_str().to_string(),
                    reason: reason.clone(),
                });
                rows.push(ReportRow {
                    county: key.as_str().to_string(),
                    cluster: None,
                    spec: None,
                    data_quality: run.quality,
                    classification,
                    mape: None,
                    status: "skipped",
                });
            }
            Outcome::Failed { stage, error } => {
                summary.errors.push(CountyError {
                    county: key.as_str().to_string(),
                    stage: stage.to_string(),
                    error: error.clone(),
                });
                rows.push(ReportRow {
                    county: key.as_str().to_string(),
                    cluster: clustering.labels.get(key).copied(),
                    spec: None,
                    data_quality: run.quality,
                    classification,
                    mape: None,
                    status: "error",
                });
            }
        }
    }
    for key in clustering.labels.keys() {
        if !cases.series.contains_key(key) {
            summary.skipped.push(Skipped {
                county: key.as_str().to_string(),
                reason: "no case series".into(),
            });
        }
    }
    summary.skipped.sort_by(|a, b| a.county.cmp(&b.county));
    summary.specs_used = specs_used.into_iter().collect();

    out.json("report.json", &rows)?;
    out.json("skipped.json", &summary.skipped)?;
    out.json("errors.json", &summary.errors)?;
    write_manifest(cfg, &mut out, &summary, &table)?;

    if summary.forecast.is_empty() && !runs.is_empty() {
        return Err(Error::StageFailed {
            stage: "forecast".into(),
            detail: format!("no county could be forecast ({} errors)", summary.errors.len()),
        });
    }
    Ok(summary)
}

fn write_manifest(
    cfg: &RunConfig,
    out: &mut Out,
    summary: &PipelineSummary,
    table: &ClusterParamTable,
) -> Result<()> {
    #[derive(Serialize)]
    struct Counts {
        forecast: usize,
        skipped: usize,
        errors: usize,
    }
    #[derive(Serialize)]
    struct Manifest<'a> {
        tool: &'static str,
        version: &'static str,
        seed: u64,
        config: &'a RunConfig,
        k: usize,
        param_table: BTreeMap<usize, String>,
        specs_used: &'a [String],
        counts: Counts,
        files: Vec<&'a String>,
    }
    let files: Vec<String> = out.files.iter().cloned().collect();
    let manifest = Manifest {
        tool: "episignal",
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config: cfg,
        k: summary.k,
        param_table: table.entries().map(|(c, s)| (c, s.to_string())).collect(),
        specs_used: &summary.specs_used,
        counts: Counts {
            forecast: summary.forecast.len(),
            skipped: summary.skipped.len(),
            errors: summary.errors.len(),
        },
        files: files.iter().collect(),
    };
    let path = out.root.join("manifest.json");
    let mut w = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}
