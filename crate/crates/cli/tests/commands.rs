use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use episignal::pipeline::synthetic::{write_synthetic_fixture, CAPITAL};

fn episignal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_episignal"))
        .args(args)
        .env_remove("EPISIGNAL_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = episignal(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn cluster_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = write_synthetic_fixture(tmp.path(), 3).unwrap();
    let out = tmp.path().join("clusters");
    let stdout = ok(&[
        "cluster",
        "--profiles",
        p(&fx.profiles),
        "--k",
        "auto",
        "--seed",
        "1",
        "--out",
        p(&out),
    ]);
    assert!(stdout.starts_with("k = 3"), "{stdout}");
    for f in ["assignments.csv", "centroids.csv", "elbow.csv", "summary.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let assignments = fs::read_to_string(out.join("assignments.csv")).unwrap();
    assert_eq!(assignments.lines().next(), Some("county,cluster"));
    assert_eq!(assignments.lines().count(), 31);
    assert!(assignments.contains("São Capital,"));

    ok(&[
        "cluster",
        "--profiles",
        p(&fx.profiles),
        "--k",
        "2",
        "--out",
        p(&out),
    ]);
    let elbow = fs::read_to_string(out.join("elbow.csv")).unwrap();
    assert_eq!(elbow.lines().count(), 2);
}

#[test]
fn cluster_rejects_bad_k() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = write_synthetic_fixture(tmp.path(), 3).unwrap();
    let out = episignal(&[
        "cluster",
        "--profiles",
        p(&fx.profiles),
        "--k",
        "three",
        "--out",
        p(tmp.path()),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--k"));
    let out = episignal(&[
        "cluster",
        "--profiles",
        p(&fx.profiles),
        "--k",
        "99",
        "--out",
        p(tmp.path()),
    ]);
    assert!(!out.status.success());
}

#[test]
fn benford_reports_and_histograms() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = write_synthetic_fixture(tmp.path(), 3).unwrap();
    let out = tmp.path().join("benford");
    ok(&[
        "benford",
        "--cases",
        p(&fx.cases),
        "--periods",
        "2020-03-01..2020-05-31,2020-03-01..2020-08-27",
        "--min-total",
        "5000",
        "--out",
        p(&out),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("benford_report.json")).unwrap()).unwrap();
    assert_eq!(report["signal"], "cumulative");
    let audited = report["counties"].as_array().unwrap().len();
    let skipped = report["skipped"].as_array().unwrap().len();
    assert_eq!(audited + skipped, 31);
    assert!(audited > 0 && skipped > 0);
    let hist = fs::read_to_string(out.join("digit_hist.csv")).unwrap();
    assert_eq!(hist.lines().count(), 1 + audited * 2 * 9);

    ok(&[
        "benford",
        "--cases",
        p(&fx.cases),
        "--signal",
        "daily",
        "--min-total",
        "0",
        "--out",
        p(&out),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("benford_report.json")).unwrap()).unwrap();
    assert_eq!(report["signal"], "daily");
    assert_eq!(report["counties"].as_array().unwrap().len(), 31);

    assert!(!episignal(&[
        "benford",
        "--cases",
        p(&fx.cases),
        "--signal",
        "weekly",
        "--out",
        p(&out)
    ])
    .status
    .success());
}

#[test]
fn fit_and_forecast_one_county() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = write_synthetic_fixture(tmp.path(), 3).unwrap();
    let out = tmp.path().join("model");
    let spec = "(0,1,1)(0,1,1)[7]";
    ok(&[
        "fit",
        "--cases",
        p(&fx.cases),
        "--county",
        "sao capital",
        "--spec",
        spec,
        "--out",
        p(&out),
    ]);
    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("model.json")).unwrap()).unwrap();
    assert_eq!(model["spec"], spec);
    assert_eq!(model["converged"], true);
    let aic = model["aic"].as_f64().unwrap();
    let loglik = model["loglik"].as_f64().unwrap();
    assert!((aic - (2.0 * 3.0 - 2.0 * loglik)).abs() < 1e-9);
    let residuals = fs::read_to_string(out.join("residuals.csv")).unwrap();
    assert_eq!(
        residuals.lines().last().unwrap().split(',').next(),
        Some("2020-08-27")
    );

    ok(&[
        "forecast",
        "--cases",
        p(&fx.cases),
        "--county",
        CAPITAL,
        "--spec",
        spec,
        "--horizon",
        "5",
        "--level",
        "0.8",
        "--out",
        p(&out),
    ]);
    let fc = fs::read_to_string(out.join("forecast.csv")).unwrap();
    let lines: Vec<&str> = fc.lines().collect();
    assert_eq!(lines[0], "date,point,lower,upper");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("2020-08-28,"));
    for line in &lines[1..] {
        let v: Vec<f64> = line.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
        assert!(v[1] < v[0] && v[0] < v[2]);
    }
}

#[test]
fn fit_errors_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = write_synthetic_fixture(tmp.path(), 3).unwrap();
    let run = |county: &str, spec: &str| {
        episignal(&[
            "fit",
            "--cases",
            p(&fx.cases),
            "--county",
            county,
            "--spec",
            spec,
            "--out",
            p(tmp.path()),
        ])
    };
    let bad_county = run("Atlantis", "(0,1,1)(0,1,1)[7]");
    assert!(String::from_utf8_lossy(&bad_county.stderr).contains("not found"));
    let bad_spec = run(CAPITAL, "(0,1,1)(0,1,1)7");
    assert!(!bad_spec.status.success());
}

#[test]
fn pipeline_config_overrides_and_env_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = write_synthetic_fixture(tmp.path().join("in"), 3).unwrap();
    let config = tmp.path().join("run.conf");
    fs::write(
        &config,
        format!(
            "# synthetic run\nprofiles = {}\ncases = {}\nout = {}\nperiods = 2020-03-01..2020-05-31,2020-03-01..2020-08-27\nhorizon = 20\n",
            p(&fx.profiles),
            p(&fx.cases),
            p(&tmp.path().join("unused"))
        ),
    )
    .unwrap();
    let out = tmp.path().join("run");
    let stdout = ok(&[
        "pipeline",
        "--config",
        p(&config),
        "--out",
        p(&out),
        "--horizon",
        "7",
        "--capital-override",
        CAPITAL,
    ]);
    assert!(stdout.contains("k = 3"), "{stdout}");
    assert!(!tmp.path().join("unused").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["horizon"], 7);
    assert_eq!(manifest["seed"], 0);

    let status = Command::new(env!("CARGO_BIN_EXE_episignal"))
        .args(["pipeline", "--config", p(&config), "--out", p(&out)])
        .env("EPISIGNAL_SEED", "42")
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 42);

    let bad = episignal(&["pipeline", "--config", p(&config), "--colour", "blue"]);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown key"));
}
