use std::path::Path;
use std::process::{Command, Output};

use sparsecast::csv_io::{parse_csv, write_csv};
use sparsecast::model_file::ModelFile;
use sparsecast_core::datagen::{gen_site_records, GenConfig};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsecast"))
        .args(args)
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, seed: u64) -> std::path::PathBuf {
    let config = dir.join("synth.json");
    std::fs::write(
        &config,
        format!(r#"{{"seed": {seed}, "series": {{"generate": {{"n_days": 80}}}}}}"#),
    )
    .unwrap();
    let csv = dir.join("site.csv");
    let out = run(&["synth", "--config", p(&config), "--out", p(&csv)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    csv
}

#[test]
fn missing_file_is_a_data_error_naming_the_path() {
    let out = run(&["acf", "definitely-missing.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("definitely-missing.csv"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
}

#[test]
fn malformed_row_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(
        &csv,
        "date,clicks,sales,conversion,language,country\n\
         2023-01-01,100,2,2.0,en,US\n\
         2023-01-02,10,20,200,en,US\n",
    )
    .unwrap();
    let out = run(&["ingest", p(&csv)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn generated_records_round_trip_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let records = gen_site_records(&GenConfig {
        seed: 11,
        ..GenConfig::default()
    })
    .unwrap();
    let path = dir.path().join("site.csv");
    write_csv(&records, &path).unwrap();
    assert_eq!(parse_csv(&path).unwrap(), records);
}

#[test]
fn ingest_acf_and_screen_read_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth(dir.path(), 3);

    let ingest = run(&["ingest", p(&csv)]);
    assert_eq!(ingest.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ingest.stdout).starts_with("rows           80\n"));

    let acf = run(&["acf", p(&csv), "--max-lag", "5"]);
    let text = String::from_utf8_lossy(&acf.stdout);
    assert_eq!(acf.status.code(), Some(0));
    assert!(text.contains("of 5 lags inside the band"));

    let screen = run(&["screen", p(&csv)]);
    let text = String::from_utf8_lossy(&screen.stdout);
    assert_eq!(screen.status.code(), Some(0));
    assert_eq!(text.lines().count(), 6);
    assert!(text.contains("MAProcess[0]") && text.contains("ARMAProcess[1,1]"));
}

#[test]
fn synth_respects_the_global_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let csv_a = synth(a.path(), 1);
    let csv_b = synth(b.path(), 2);
    assert_ne!(
        std::fs::read(&csv_a).unwrap(),
        std::fs::read(&csv_b).unwrap()
    );

    let config = b.path().join("synth.json");
    let again = b.path().join("again.csv");
    let out = run(&[
        "--seed",
        "1",
        "synth",
        "--config",
        p(&config),
        "--out",
        p(&again),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read(&csv_a).unwrap(),
        std::fs::read(&again).unwrap()
    );
}

#[test]
fn forecast_writes_a_loadable_model_file() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 5);
    let config = dir.path().join("forecast.json");
    std::fs::write(
        &config,
        r#"{"series": {"csv": "site.csv"},
            "models": [{"kind": "es"}, {"kind": "tree"}, {"kind": "naive"}]}"#,
    )
    .unwrap();
    let model = dir.path().join("model.json");
    let out = run(&[
        "forecast",
        "--config",
        p(&config),
        "--ahead",
        "3",
        "--model-out",
        p(&model),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "date,ES,DT,Naive");
    assert_eq!(lines.len(), 4);
    // 80 days from 2023-01-01 end on 2023-03-21
    assert!(lines[1].starts_with("2023-03-22,"));

    let file = ModelFile::load(&model).unwrap();
    let labels: Vec<&str> = file.models.iter().map(|m| m.label.as_str()).collect();
    assert_eq!(labels, ["ES", "DT", "Naive"]);
}

#[test]
fn zero_horizon_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(&config, r#"{"series": {"generate": {}}}"#).unwrap();
    let out = run(&["forecast", "--config", p(&config), "--ahead", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(&config, r#"{"series": {"generate": {}}, "windw": 3}"#).unwrap();
    let out = run(&["backtest", "--config", p(&config)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("windw"));
}
