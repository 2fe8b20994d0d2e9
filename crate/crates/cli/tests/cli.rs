use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pottslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pottslab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    pottslab(args).status.code().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["sample", "--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["sample", "--sampler", "nope"]), 1);
    assert_eq!(code(&["--config", "x.json", "stats", "--grid", "g.csv"]), 1);
    assert_eq!(code(&["stats", "--grid", "/does/not/exist.csv"]), 1);
}

#[test]
fn stats_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("g.csv");
    fs::write(&grid, "1,2,1\n2,1,2\n1,2,1\n").unwrap();
    let out = pottslab(&["stats", "--grid", grid.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // Periodic 3x3 checkerboard: the wrap-around pairs are concordant.
    assert_eq!(v["t"], serde_json::json!([5, 4]));
    assert_eq!(v["s"], serde_json::json!(6));
}

#[test]
fn degenerate_and_non_converged_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mono = dir.path().join("mono.csv");
    fs::write(&mono, "1,1,1\n1,1,1\n1,1,1\n").unwrap();
    let out = dir.path().join("o1");
    assert_eq!(code(&["fit", "--grid", mono.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);

    // A Latin square pushes the pseudo-likelihood to an extreme start from
    // which stepping stalls; the report is still written.
    let latin = dir.path().join("latin.csv");
    fs::write(&latin, "1,2,3\n2,3,1\n3,1,2\n").unwrap();
    let out = dir.path().join("o2");
    assert_eq!(code(&["fit", "--grid", latin.to_str().unwrap(), "--out", out.to_str().unwrap()]), 3);
    let report = json(&out.join("report.json"));
    assert_eq!(report["converged"], serde_json::json!(false));
    assert_eq!(report["diagnosis"]["recommendation"], serde_json::json!("needs_tapering"));
}

#[test]
fn sample_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let args = [
        "sample", "--width", "8", "--height", "6", "-k", "3", "--beta", "0.6", "--alpha", "-0.1,0.2",
        "--draws", "40", "--keep-grids", "--seed", "4", "--out", out.to_str().unwrap(),
    ];
    assert_eq!(code(&args), 0);
    let stats = fs::read_to_string(out.join("stats.csv")).unwrap();
    assert_eq!(stats.lines().count(), 41);
    let box_lines = fs::read_to_string(out.join("boxplot.csv")).unwrap();
    assert!(box_lines.starts_with("beta,draw,color,count"));
    assert_eq!(box_lines.lines().count(), 1 + 40 * 3);
    let hist = fs::read_to_string(out.join("histogram.csv")).unwrap();
    let total: u64 = hist.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 40 * 3);
    assert!(out.join("grids").is_dir());
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], serde_json::json!("sample"));
    assert_eq!(manifest["seed"], serde_json::json!(4));
    assert!(json(&out.join("timings.json"))["wall_time_secs"].is_number());
}

#[test]
fn exact_lists_states() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e");
    assert_eq!(code(&["exact", "--width", "2", "--height", "2", "--beta", "0.4", "--out", out.to_str().unwrap()]), 0);
    let states = fs::read_to_string(out.join("states.csv")).unwrap();
    assert_eq!(states.lines().count(), 17);
    let total: f64 = states.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert_eq!(json(&out.join("exact.json"))["num_states"], serde_json::json!(16));
    assert_eq!(code(&["exact", "--width", "5", "--height", "5", "-k", "4", "--out", out.to_str().unwrap()]), 1);
}

#[test]
fn scenario_and_tapered_fit() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("sc");
    assert_eq!(code(&["scenario", "--preset", "1", "--width", "16", "--height", "16", "--seed", "2", "--out", sc.to_str().unwrap()]), 0);
    let grid = sc.join("grid.csv");
    let text = fs::read_to_string(&grid).unwrap();
    assert!(text.starts_with("# potts-grid width=16 height=16 K=4"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 16);
    let fit = dir.path().join("fit");
    let args = ["fit", "--grid", grid.to_str().unwrap(), "--model", "tapered", "--tau", "0.005", "--seed", "3", "--out", fit.to_str().unwrap()];
    assert_eq!(code(&args), 0);
    let report = json(&fit.join("report.json"));
    assert_eq!(report["method"], serde_json::json!("mcmcmle_tapered"));
    assert!(report["tapering"]["tau"].is_array());
    assert!(report.get("wall_time_secs").is_none());
    assert!(fit.join("pl.json").exists());
}
