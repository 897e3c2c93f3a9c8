use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn mesa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mesa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(dir: &Path, name: &str, n: usize, seed: u64) -> std::path::PathBuf {
    let out = dir.join(name);
    let n = n.to_string();
    let seed = seed.to_string();
    let o = mesa(&[
        "generate", "--psd-gaussian", "2.5", "0.5", "--n", &n, "--seed", &seed, "--out", p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn generate_writes_time_value_rows() {
    let dir = TempDir::new().unwrap();
    let path = generate(dir.path(), "x.csv", 3000, 1);
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,value"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 3000);
    let t1: f64 = rows[1].split(',').next().unwrap().parse().unwrap();
    assert!((t1 - 0.1).abs() < 1e-12);
}

#[test]
fn estimate_writes_psd_model_and_selection() {
    let dir = TempDir::new().unwrap();
    let input = generate(dir.path(), "x.csv", 3000, 2);
    let out = dir.path().join("fit");
    let o = mesa(&["estimate", "--in", p(&input), "--out-dir", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["psd.csv", "model.json", "selection.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let psd = fs::read_to_string(out.join("psd.csv")).unwrap();
    assert!(psd.starts_with("frequency_hz,psd\n"));
    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("model.json")).unwrap()).unwrap();
    assert!(model.is_object());
}

#[test]
fn estimate_then_forecast_and_generate_from_model() {
    let dir = TempDir::new().unwrap();
    let input = generate(dir.path(), "x.csv", 2000, 3);
    let fit = dir.path().join("fit");
    assert!(mesa(&["estimate", "--in", p(&input), "--out-dir", p(&fit)]).status.success());
    let model = fit.join("model.json");

    let fc = dir.path().join("fc.csv");
    let o = mesa(&[
        "forecast", "--in", p(&input), "--model", p(&model), "--horizon", "20", "--seed", "4",
        "--out", p(&fc),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&fc).unwrap();
    assert_eq!(text.lines().next(), Some("step,median,q05,q95"));
    assert_eq!(text.lines().count(), 21);

    let sim = dir.path().join("sim.csv");
    let o = mesa(&[
        "generate", "--ar-model", p(&model), "--n", "500", "--seed", "5", "--out", p(&sim),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&sim).unwrap().lines().count(), 501);
}

#[test]
fn outputs_are_byte_identical_for_the_same_seed() {
    let dir = TempDir::new().unwrap();
    let a = fs::read(generate(dir.path(), "a.csv", 1000, 9)).unwrap();
    let b = fs::read(generate(dir.path(), "b.csv", 1000, 9)).unwrap();
    assert_eq!(a, b);
    let c = fs::read(generate(dir.path(), "c.csv", 1000, 10)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn welch_runs_on_single_column_input() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("x.csv");
    let body: String = (0..4096).map(|i| format!("{}\n", ((i * 37) % 101) as f64 - 50.0)).collect();
    fs::write(&input, body).unwrap();
    let out = dir.path().join("w.csv");
    let o = mesa(&[
        "welch", "--in", p(&input), "--dt", "0.01", "--segment", "256", "--out", p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 1 + 129);
}

#[test]
fn binary_input_matches_csv_input() {
    let dir = TempDir::new().unwrap();
    let csv = generate(dir.path(), "x.csv", 1500, 6);
    let values: Vec<f64> = fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let bin = dir.path().join("x.bin");
    fs::write(&bin, values.iter().flat_map(|v| v.to_le_bytes()).collect::<Vec<u8>>()).unwrap();

    let (d1, d2) = (dir.path().join("a"), dir.path().join("b"));
    assert!(mesa(&["estimate", "--in", p(&csv), "--out-dir", p(&d1)]).status.success());
    let o = mesa(&["estimate", "--in", p(&bin), "--binary", "--dt", "0.1", "--out-dir", p(&d2)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(d1.join("selection.json")).unwrap(),
        fs::read(d2.join("selection.json")).unwrap()
    );
}

#[test]
fn compare_and_experiments_write_records() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cmp");
    let o = mesa(&[
        "compare", "--psd-gaussian", "100", "20", "--duration", "2", "--fs", "1024", "--trials",
        "2", "--seed", "1", "--out-dir", p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("compare.jsonl")).unwrap().lines().count(), 2);
    assert!(out.join("compare_psd.csv").is_file());

    let out = dir.path().join("gauss");
    let o = mesa(&[
        "experiment", "gaussian", "--realizations", "4", "--samples", "500", "--seed", "2",
        "--out-dir", p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("records.jsonl")).unwrap().lines().count(), 4);
    assert!(out.join("summary.json").is_file() && out.join("spectra.csv").is_file());

    let out = dir.path().join("rec");
    let o = mesa(&[
        "experiment", "order-recovery", "--models", "3", "--p-max", "10", "--samples", "2000",
        "--seed", "3", "--out-dir", p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("records.jsonl")).unwrap().lines().count(), 3);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let input = generate(dir.path(), "x.csv", 500, 7);
    let out = dir.path().join("o");
    let missing = dir.path().join("missing.csv");
    let cases: [&[&str]; 4] = [
        &["estimate", "--in", p(&input), "--criterion", "bogus", "--out-dir", p(&out)],
        &["estimate", "--in", p(&input), "--max-order", "0", "--out-dir", p(&out)],
        &["generate", "--psd-gaussian", "1", "1", "--n", "10", "--out", p(&out)],
        &["estimate", "--in", p(&missing), "--out-dir", p(&out)],
    ];
    for args in cases {
        assert_eq!(mesa(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn uneven_time_column_is_rejected() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("x.csv");
    fs::write(&input, "time,value\n0,1\n1,2\n2.5,3\n3,4\n").unwrap();
    let o = mesa(&["estimate", "--in", p(&input), "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("spacing"));
}

#[test]
fn degenerate_series_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("z.csv");
    fs::write(&input, "0\n".repeat(200)).unwrap();
    let o = mesa(&["estimate", "--in", p(&input), "--dt", "1", "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
