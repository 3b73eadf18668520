use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use episignal::cluster::adjusted_rand_index;
use episignal::dataset::normalize_name;
use episignal::pipeline::synthetic::{write_synthetic_fixture, CAPITAL, ORPHAN};
use episignal::pipeline::{default_param_table, run_pipeline, ClusterParamTable, RunConfig};
use episignal::Error;

fn config(fixture_dir: &Path, out: &Path) -> RunConfig {
    let fx = write_synthetic_fixture(fixture_dir, 7).unwrap();
    let mut cfg = RunConfig::new(&fx.profiles, &fx.cases, out);
    cfg.seed = 11;
    cfg.periods = episignal::dataset::parse_periods(
        "2020-03-01..2020-05-31,2020-03-01..2020-07-31,2020-03-01..2020-08-27",
    )
    .unwrap();
    cfg
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stem(name: &str) -> String {
    normalize_name(name).unwrap().file_stem()
}

#[test]
fn golden_param_table() {
    let golden = fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/golden/param_table.txt"
    ))
    .unwrap();
    assert_eq!(default_param_table().render(), golden);
    assert_eq!(
        ClusterParamTable::parse(&golden, 7).unwrap(),
        default_param_table()
    );
}

#[test]
fn fixture_run_accounts_for_every_county() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(&tmp.path().join("in"), &tmp.path().join("out"));
    let summary = run_pipeline(&cfg).unwrap();
    let out = &cfg.out;

    assert_eq!(summary.k, 3, "three planted groups");
    let assignments = fs::read_to_string(out.join("clusters/assignments.csv")).unwrap();
    let labels: Vec<usize> = assignments
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let planted: Vec<usize> = (0..30).map(|i| i / 10).collect();
    assert_eq!(adjusted_rand_index(&labels, &planted), 1.0);

    let fx = write_synthetic_fixture(tmp.path().join("in"), 7).unwrap();
    let forecast: BTreeSet<String> = summary.forecast.iter().cloned().collect();
    let skipped: BTreeSet<String> = summary.skipped.iter().map(|s| s.county.clone()).collect();
    let errors: BTreeSet<String> = summary.errors.iter().map(|s| s.county.clone()).collect();
    for name in fx.all_case_counties() {
        let key = normalize_name(&name).unwrap().normalized;
        let hits = [&forecast, &skipped, &errors]
            .iter()
            .filter(|s| s.contains(&key))
            .count();
        assert_eq!(hits, 1, "{name}");
        assert!(out.join(format!("audits/{}.json", stem(&name))).exists());
    }
    assert!(skipped.contains(&normalize_name(ORPHAN).unwrap().normalized));
    assert_eq!(
        fs::read_dir(out.join("forecasts")).unwrap().count(),
        forecast.len()
    );
    assert!(summary.specs_used.len() <= summary.k);

    let model = json(&out.join(format!("models/{}.json", stem(CAPITAL))));
    assert_eq!(model["cluster"], 2);
    assert_eq!(model["spec"], "(0,1,1)(0,1,1)[7]");
    let fc = fs::read_to_string(out.join(format!("forecasts/{}.csv", stem(CAPITAL)))).unwrap();
    assert_eq!(fc.lines().next(), Some("date,point,lower,upper"));
    assert_eq!(fc.lines().count(), 21);
    assert!(fc.lines().nth(1).unwrap().starts_with("2020-08-28,"));

    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["seed"], 11);
    assert!(manifest["config"].get("out").is_none());
    let report = fs::read_to_string(out.join("load_report.jsonl")).unwrap();
    assert!(report.contains("negative_cases_clamped"));
}

#[test]
fn capital_override_changes_only_the_capital() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(&tmp.path().join("in"), &tmp.path().join("out"));
    cfg.capital_override = Some(CAPITAL.into());
    let summary = run_pipeline(&cfg).unwrap();
    let model = json(&cfg.out.join(format!("models/{}.json", stem(CAPITAL))));
    assert_eq!(model["cluster"], 2);
    assert_eq!(model["spec"], "(1,1,1)(0,1,1)[7]");
    assert_eq!(model["spec_source"], "capital_override");
    let neighbour = json(&cfg.out.join(format!("models/{}.json", stem("Santa Aurora"))));
    assert_eq!(neighbour["spec"], "(0,1,1)(0,1,1)[7]");
    assert!(summary.specs_used.len() <= summary.k + 1);
}

#[test]
fn missing_cases_file_keeps_cluster_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(&tmp.path().join("in"), &tmp.path().join("out"));
    cfg.cases = tmp.path().join("nope.csv");
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(
        matches!(err, Error::StageFailed { ref stage, .. } if stage == "cases"),
        "{err}"
    );
    assert!(cfg.out.join("clusters/assignments.csv").exists());
    assert!(cfg.out.join("clusters/elbow.csv").exists());
}

#[test]
fn table_override_file_is_used() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(&tmp.path().join("in"), &tmp.path().join("out"));
    let table = tmp.path().join("table.txt");
    fs::write(&table, "0 (0,1,1) (0,1,1)\n1 (0,1,1) (0,1,1)\n").unwrap();
    cfg.param_table = Some(table);
    let summary = run_pipeline(&cfg).unwrap();
    // cluster 2 has no entry: its counties are per-county lookup errors
    assert_eq!(summary.errors.len(), 10);
    assert!(summary.errors.iter().all(|e| e.stage == "lookup"));
    assert_eq!(summary.specs_used, ["(0,1,1)(0,1,1)[7]"]);
}
