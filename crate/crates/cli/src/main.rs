use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use episignal::benford::{audit_with, AuditOptions, AuditVerdict, BenfordConfig};
use episignal::dataset::{load_case_series, normalize_name, parse_periods, CaseLoad, CaseSeries, Period};
use episignal::pipeline::{cluster_profiles, run_pipeline, ClusterSettings, RunConfig};
use episignal::sarima::{fit, forecast, noise_only_fit, FittedSarima, SarimaSpec};
use episignal::Error;

#[derive(Parser)]
#[command(
    name = "episignal",
    version,
    about = "Cluster counties, audit case counts with Benford's law, and forecast with SARIMA"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster county profiles with k-means.
    Cluster {
        #[arg(long)]
        profiles: PathBuf,
        /// Number of clusters, or `auto` for the elbow knee.
        #[arg(long, default_value = "auto")]
        k: String,
        #[arg(long, default_value_t = 10)]
        k_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "county")]
        name_col: String,
        #[arg(long, default_value_t = 0.9)]
        corr_threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Benford first-digit audit of every county's case counts.
    Benford {
        #[arg(long)]
        cases: PathBuf,
        /// Comma-separated `YYYY-MM-DD..YYYY-MM-DD` ranges; whole series if omitted.
        #[arg(long, default_value = "")]
        periods: String,
        #[arg(long, default_value_t = 5000)]
        min_total: u64,
        /// `cumulative` or `daily`.
        #[arg(long, default_value = "cumulative")]
        signal: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a SARIMA model to one county's daily cases.
    Fit {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Fit and forecast one county's daily cases.
    Forecast {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 20)]
        horizon: usize,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Run every stage from a key = value config file.
    ///
    /// Any config key may be overridden with trailing `--key value` pairs.
    /// EPISIGNAL_SEED sets the seed when neither the file nor the overrides do.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(
            trailing_var_arg = true,
            allow_hyphen_values = true,
            value_name = "--KEY VALUE"
        )]
        overrides: Vec<String>,
    },
}

#[derive(clap::Args)]
struct ModelArgs {
    #[arg(long)]
    cases: PathBuf,
    #[arg(long)]
    county: String,
    /// Order as `(p,d,q)(P,D,Q)[s]`.
    #[arg(long)]
    spec: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))
}

fn cluster(settings: ClusterSettings, out: &Path) -> Result<()> {
    let run = cluster_profiles(&settings, out)?;
    let sizes: Vec<usize> = run.summaries.iter().map(|s| s.counties).collect();
    println!(
        "k = {}, inertia = {:.6}, cluster sizes {sizes:?}",
        run.model.k, run.model.inertia
    );
    Ok(())
}

fn whole_series(s: &CaseSeries) -> Result<Vec<Period>> {
    Ok(vec![Period::new(s.start(), s.end())?])
}

fn benford(cases: &Path, periods: &str, min_total: u64, signal: &str, out: &Path) -> Result<()> {
    let periods = parse_periods(periods)?;
    let opts = AuditOptions {
        min_total,
        signal: signal.parse()?,
        config: BenfordConfig::default(),
    };
    let load = load_case_series(cases)?;
    create_dir(out)?;

    let mut verdicts: Vec<AuditVerdict> = Vec::new();
    let mut skipped = Vec::new();
    for series in load.series.values() {
        let ps = if periods.is_empty() {
            whole_series(series)?
        } else {
            periods.clone()
        };
        match audit_with(series, &ps, &opts) {
            Ok(v) => verdicts.push(v),
            Err(e @ Error::SkippedBelowThreshold { .. }) => {
                skipped.push(json!({ "county": series.county.as_str(), "reason": e.to_string() }))
            }
            Err(e) => return Err(e).with_context(|| format!("auditing {}", series.county.raw_name)),
        }
    }

    let mut hist = csv_writer(&out.join("digit_hist.csv"))?;
    hist.write_record(["county", "period", "digit", "count", "observed", "expected"])?;
    for v in &verdicts {
        for p in &v.periods {
            let Some(r) = &p.report else { continue };
            let observed = r.histogram.proportions();
            let expected = episignal::benford::benford_pmf();
            for d in 0..observed.len() {
                hist.write_record([
                    v.county.clone(),
                    p.period.to_string(),
                    (d + 1).to_string(),
                    r.histogram.counts[d].to_string(),
                    observed[d].to_string(),
                    expected[d].to_string(),
                ])?;
            }
        }
    }
    hist.flush()?;

    write_json(
        &out.join("benford_report.json"),
        &json!({
            "signal": opts.signal,
            "min_total": min_total,
            "counties": verdicts,
            "skipped": skipped,
        }),
    )?;
    println!("audited {} counties, skipped {}", verdicts.len(), skipped.len());
    Ok(())
}

fn county_series<'a>(load: &'a CaseLoad, county: &str) -> Result<&'a CaseSeries> {
    let key = normalize_name(county)?;
    match load.series.get(&key) {
        Some(s) => Ok(s),
        None => bail!("county `{county}` not found in the cases file"),
    }
}

fn fit_model(args: &ModelArgs) -> Result<(CaseSeries, Vec<f64>, FittedSarima)> {
    let spec: SarimaSpec = args.spec.parse()?;
    let load = load_case_series(&args.cases)?;
    let series = county_series(&load, &args.county)?.clone();
    let y = series.daily_cases_f64();
    let model = match fit(&spec, &y, args.seed) {
        Err(Error::DegenerateSeries) => {
            eprintln!("warning: differenced series is constant; fitting noise only");
            noise_only_fit(&spec, &y, args.seed)?
        }
        other => other?,
    };
    create_dir(&args.out)?;
    write_json(
        &args.out.join("model.json"),
        &json!({
            "county": series.county.as_str(),
            "spec": model.spec.to_string(),
            "params": model.params,
            "loglik": model.loglik,
            "aic": model.aic,
            "converged": model.converged,
            "degenerate": model.degenerate,
            "conditioning": model.conditioning,
            "seed": model.seed,
        }),
    )?;
    let mut w = csv_writer(&args.out.join("residuals.csv"))?;
    w.write_record(["date", "residual"])?;
    // residuals align with the end of the series
    let offset = series.dates.len() - model.residuals.len();
    for (date, r) in series.dates[offset..].iter().zip(&model.residuals) {
        w.write_record([date.to_string(), r.to_string()])?;
    }
    w.flush()?;
    println!(
        "{} {}: loglik {:.4}, aic {:.4}, converged {}",
        series.county.raw_name, model.spec, model.loglik, model.aic, model.converged
    );
    Ok((series, y, model))
}

fn forecast_model(args: &ModelArgs, horizon: usize, level: f64) -> Result<()> {
    let (series, y, model) = fit_model(args)?;
    let fc = forecast(&model, &y, horizon, level)?;
    let mut w = csv_writer(&args.out.join("forecast.csv"))?;
    w.write_record(["date", "point", "lower", "upper"])?;
    let mut date = series.end();
    for i in 0..fc.horizon() {
        date = date.succ_opt().context("forecast date out of range")?;
        w.write_record([
            date.to_string(),
            fc.point[i].to_string(),
            fc.lower[i].to_string(),
            fc.upper[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Turns `--key value` and `--key=value` tokens into pairs.
fn parse_overrides(tokens: &[String]) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    let mut it = tokens.iter();
    while let Some(tok) = it.next() {
        let Some(key) = tok.strip_prefix("--") else {
            bail!("expected `--key value`, got `{tok}`");
        };
        match key.split_once('=') {
            Some((k, v)) => pairs.push((k.to_string(), v.to_string())),
            None => {
                let value = it.next().with_context(|| format!("`--{key}` needs a value"))?;
                pairs.push((key.to_string(), value.clone()));
            }
        }
    }
    Ok(pairs)
}

fn pipeline(config: &Path, overrides: &[String]) -> Result<()> {
    let overrides = parse_overrides(overrides)?;
    let env_seed = std::env::var("EPISIGNAL_SEED").ok();
    let cfg = RunConfig::load(config, &overrides, env_seed.as_deref())?;
    let summary = run_pipeline(&cfg)?;
    println!(
        "k = {}: {} forecast, {} skipped, {} errors; outputs in {}",
        summary.k,
        summary.forecast.len(),
        summary.skipped.len(),
        summary.errors.len(),
        cfg.out.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Cluster {
            profiles,
            k,
            k_max,
            seed,
            name_col,
            corr_threshold,
            out,
        } => {
            let k = match k.as_str() {
                "auto" => None,
                n => Some(
                    n.parse()
                        .with_context(|| format!("--k must be an integer or `auto`, got `{n}`"))?,
                ),
            };
            let settings = ClusterSettings {
                profiles,
                name_col,
                k,
                k_max,
                seed,
                corr_threshold,
            };
            cluster(settings, &out)
        }
        Command::Benford {
            cases,
            periods,
            min_total,
            signal,
            out,
        } => benford(&cases, &periods, min_total, &signal, &out),
        Command::Fit { model } => fit_model(&model).map(|_| ()),
        Command::Forecast {
            model,
            horizon,
            level,
        } => forecast_model(&model, horizon, level),
        Command::Pipeline { config, overrides } => pipeline(&config, &overrides),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
