use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bfcr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bfcr"))
        .args(args)
        .env_remove("BFCR_CONFIG")
        .output()
        .expect("binary runs")
}

fn write_series(dir: &Path, name: &str, values: &[f64]) -> PathBuf {
    let path = dir.join(name);
    let text: String = values.iter().map(|v| format!("{v}\n")).collect();
    fs::write(&path, text).unwrap();
    path
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn wobble(i: usize) -> f64 {
    ((i * 7919) % 13) as f64 / 6.0 - 1.0
}

fn spike_fixture() -> Vec<f64> {
    let mut x: Vec<f64> = (0..30).map(|i| 10.0 + 0.2 * wobble(i)).collect();
    x[12] += 6.0;
    x
}

fn masked_edge_fixture() -> Vec<f64> {
    let mut x: Vec<f64> = (0..40)
        .map(|i| 5.0 + 0.05 * i as f64 + 0.1 * wobble(i))
        .collect();
    x[20] += 8.0;
    x[39] += 1.0;
    x
}

fn two_regime_fixture() -> Vec<f64> {
    (0..100)
        .map(|i| {
            let scale = if i < 50 { 0.1 } else { 1.0 };
            3.0 + (i as f64 / 12.0).sin() + scale * wobble(i * 3 + 1)
        })
        .collect()
}

fn flag_indices(report: &Value) -> Vec<u64> {
    report["flags"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["index"].as_u64().unwrap())
        .collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_bracing_round_trips_and_validates() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    assert!(bfcr(&["gen-bracing", "-o", path_str(&a)]).status.success());
    assert!(bfcr(&["gen-bracing", "-o", path_str(&b)]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let loaded = bfcr::BracingSet::load(&a).unwrap();
    assert_eq!(loaded, bfcr::BracingSet::with_defaults().unwrap());

    let tiny = dir.path().join("tiny.txt");
    let out = bfcr(&[
        "gen-bracing",
        "-o",
        path_str(&tiny),
        "--d",
        "2",
        "--c-fc",
        "4",
    ]);
    assert!(out.status.success());
    assert_eq!(
        bfcr::BracingSet::load(&tiny)
            .unwrap()
            .cont_from_left()
            .len(),
        4
    );

    let out = bfcr(&["gen-bracing", "-o", path_str(&tiny), "--d", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("d must be"));
}

#[test]
fn trend_rows_and_minimum_size() {
    let dir = TempDir::new().unwrap();
    let input = write_series(dir.path(), "c.csv", &[3.5; 5]);
    let out = bfcr(&["trend", "-i", path_str(&input)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,value,trend"));
    let trend: Vec<f64> = lines
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(trend.len(), 5);
    assert!(trend.iter().all(|t| (t - 3.5).abs() < 1e-6));
    let mean = trend.iter().sum::<f64>() / 5.0;
    assert!((mean - 3.5).abs() < 1e-9 * 4.5);

    let short = write_series(dir.path(), "s.csv", &[1.0, 2.0, 3.0]);
    let out = bfcr(&["trend", "-i", path_str(&short)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 4 data points"));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x\n1\n2\nnope\n4\n5\n").unwrap();
    assert_eq!(
        bfcr(&["trend", "-i", path_str(&bad)]).status.code(),
        Some(2)
    );
}

#[test]
fn trend_writes_to_output_file() {
    let dir = TempDir::new().unwrap();
    let input = write_series(dir.path(), "x.csv", &spike_fixture());
    let output = dir.path().join("out.csv");
    let out = bfcr(&["trend", "-i", path_str(&input), "-o", path_str(&output)]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(fs::read_to_string(&output).unwrap().lines().count(), 31);
}

#[test]
fn detect_reports() {
    let dir = TempDir::new().unwrap();
    let spike = write_series(dir.path(), "spike.csv", &spike_fixture());
    let report = stdout_json(&bfcr(&["detect", "-i", path_str(&spike)]));
    assert_eq!(report["mode"], "internal");
    assert!(flag_indices(&report).contains(&12));
    assert!(report["stats"]["sigma"].as_f64().unwrap() > 0.0);
    assert_eq!(
        report["mitigations"]["volatility_truncation"]["applied"],
        false
    );

    let constant = write_series(dir.path(), "c.csv", &[2.0; 10]);
    let report = stdout_json(&bfcr(&["detect", "-i", path_str(&constant)]));
    assert!(flag_indices(&report).is_empty());

    let regimes = write_series(dir.path(), "r.csv", &two_regime_fixture());
    let report = stdout_json(&bfcr(&[
        "detect",
        "-i",
        path_str(&regimes),
        "--truncate-volatility",
    ]));
    let trunc = &report["mitigations"]["volatility_truncation"];
    assert_eq!(trunc["applied"], true);
    assert!(trunc["kept_from_index"].as_u64().unwrap() > 1);

    let five = write_series(dir.path(), "five.csv", &[1.0, 2.0, 3.0, 4.0, 5.0]);
    assert_eq!(
        bfcr(&["detect", "-i", path_str(&five)]).status.code(),
        Some(2)
    );
}

#[test]
fn detect_edge_guards_on_noiseless_line() {
    let dir = TempDir::new().unwrap();
    let line: Vec<f64> = (1..=40).map(f64::from).collect();
    let input = write_series(dir.path(), "line.csv", &line);

    let report = stdout_json(&bfcr(&["detect-edge", "-i", path_str(&input), "--guards"]));
    assert_eq!(report["mode"], "edge");
    assert_eq!(report["which"], "last");
    assert_eq!(report["verdict"], "skipped");
    assert!(report["reason"].is_string());

    let report = stdout_json(&bfcr(&["detect-edge", "-i", path_str(&input)]));
    assert_eq!(report["verdict"], "anomalous");
}

#[test]
fn detect_edge_screening_toggle() {
    let dir = TempDir::new().unwrap();
    let input = write_series(dir.path(), "m.csv", &masked_edge_fixture());

    let screened = stdout_json(&bfcr(&[
        "detect-edge",
        "-i",
        path_str(&input),
        "--screen-internal",
    ]));
    assert_eq!(screened["verdict"], "anomalous");
    assert_eq!(screened["excluded_internal"], serde_json::json!([20]));

    let plain = stdout_json(&bfcr(&[
        "detect-edge",
        "-i",
        path_str(&input),
        "--no-screen-internal",
    ]));
    assert_eq!(plain["verdict"], "normal");
    assert!(plain["stats"]["sigma"].as_f64() > screened["stats"]["sigma"].as_f64());
}

#[test]
fn detect_edge_first_sample() {
    let dir = TempDir::new().unwrap();
    let mut x: Vec<f64> = (0..40)
        .map(|i| 5.0 + 0.05 * i as f64 + 0.1 * wobble(i))
        .collect();
    x[0] -= 1.0;
    let input = write_series(dir.path(), "f.csv", &x);
    let report = stdout_json(&bfcr(&["detect-edge", "-i", path_str(&input), "--first"]));
    assert_eq!(report["which"], "first");
    assert_eq!(report["index"], 0);
    assert_eq!(report["verdict"], "anomalous");
    let both = bfcr(&["detect-edge", "-i", path_str(&input), "--first", "--last"]);
    assert_eq!(both.status.code(), Some(2));
}

#[test]
fn plotdata_layout_matches_detect() {
    let dir = TempDir::new().unwrap();
    let x = spike_fixture();
    let input = write_series(dir.path(), "x.csv", &x);
    let out = bfcr(&["plotdata", "-i", path_str(&input)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    let count = |seg: &str| rows.iter().filter(|r| r[0] == seg).count();
    assert_eq!(count("data"), x.len());
    assert_eq!(count("trend"), x.len());
    assert_eq!(count("brace_left"), 12);
    assert_eq!(count("brace_right"), 12);
    assert_eq!(count("continuation"), 27);
    let left_first = rows.iter().find(|r| r[0] == "brace_left").unwrap();
    assert_eq!(left_first[1], "-12");

    let flagged: Vec<u64> = rows
        .iter()
        .filter(|r| r[0] == "flagged")
        .map(|r| r[1].parse().unwrap())
        .collect();
    let report = stdout_json(&bfcr(&["detect", "-i", path_str(&input)]));
    assert_eq!(flagged, flag_indices(&report));
    assert!(!flagged.is_empty());
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = write_series(dir.path(), "x.csv", &masked_edge_fixture());
    for cmd in ["trend", "detect", "detect-edge", "plotdata"] {
        let a = bfcr(&[cmd, "-i", path_str(&input)]);
        let b = bfcr(&[cmd, "-i", path_str(&input)]);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{cmd}");
    }
}

#[test]
fn config_file_and_precedence() {
    let dir = TempDir::new().unwrap();
    let input = write_series(dir.path(), "x.csv", &spike_fixture());

    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "detect.k_sigma = 100\n").unwrap();
    let report = stdout_json(&bfcr(&[
        "detect",
        "-i",
        path_str(&input),
        "--config",
        path_str(&cfg),
    ]));
    assert!(flag_indices(&report).is_empty());

    // the flag wins over the file
    let args = [
        "detect",
        "-i",
        path_str(&input),
        "--config",
        path_str(&cfg),
        "--k-sigma",
        "2",
    ];
    assert!(flag_indices(&stdout_json(&bfcr(&args))).contains(&12));

    let out = Command::new(env!("CARGO_BIN_EXE_bfcr"))
        .args(["detect", "-i", path_str(&input)])
        .env("BFCR_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(flag_indices(&stdout_json(&out)).is_empty());

    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "detect.k_sigma = 2\nfc.colour = red\n").unwrap();
    let out = bfcr(&["detect", "-i", path_str(&input), "--config", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = bfcr(&[
        "detect",
        "-i",
        path_str(&input),
        "--set",
        "vol.trim_fraction=1.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn loaded_bracing_matches_built_in() {
    let dir = TempDir::new().unwrap();
    let input = write_series(dir.path(), "x.csv", &masked_edge_fixture());
    let set = dir.path().join("set.txt");
    assert!(bfcr(&["gen-bracing", "-o", path_str(&set), "--d", "10"])
        .status
        .success());
    let from_file = bfcr(&["trend", "-i", path_str(&input), "--bracing", path_str(&set)]);
    let built = bfcr(&["trend", "-i", path_str(&input), "--d", "10"]);
    assert!(from_file.status.success());
    assert_eq!(from_file.stdout, built.stdout);
}
