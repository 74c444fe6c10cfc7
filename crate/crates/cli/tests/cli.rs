use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn prgds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prgds"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = prgds(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

fn simulate(dir: &Path, name: &str, seed: &str) -> PathBuf {
    ok(&["simulate", "--dims", "4", "3", "--T", "10", "--K", "3", "--seed", seed, "--out", &p(dir, name)]);
    dir.join(name)
}

const SMALL: [&str; 8] = ["--iters", "30", "--burnin", "10", "--thin", "5", "--chains", "2"];

fn fit(dir: &Path, data: &Path, extra: &[&str], out: &str) -> PathBuf {
    let data = data.display().to_string();
    let out_path = p(dir, out);
    let mut args = vec!["fit", "--data", &data, "--K", "3", "--n-smoothing", "2", "--out-samples", &out_path];
    args.extend_from_slice(&SMALL);
    args.extend_from_slice(extra);
    ok(&args);
    dir.join(out)
}

#[test]
fn simulate_writes_header_and_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "d.txt");
    ok(&["simulate", "--T", "4", "--dims", "2", "2", "--out", &out]);
    let text = fs::read_to_string(&out).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "4 2 2");
    assert!(dir.path().join("d.txt.state.json").exists());
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a.txt", "7");
    let b = simulate(dir.path(), "b.txt", "7");
    let c = simulate(dir.path(), "c.txt", "8");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    assert_eq!(
        fs::read(dir.path().join("a.txt.state.json")).unwrap(),
        fs::read(dir.path().join("b.txt.state.json")).unwrap()
    );
}

#[test]
fn fit_is_reproducible_and_saves_expected_count() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.txt", "1");
    let a = fit(dir.path(), &data, &["--seed", "3"], "a.json");
    let b = fit(dir.path(), &data, &["--seed", "3"], "b.json");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let text = fs::read_to_string(&a).unwrap();
    // 30 iterations, 10 burn-in, thin 5: iterations 15, 20, 25, 30 per chain
    assert_eq!(text.matches("\"iteration\"").count(), 8);
    assert!(dir.path().join("a.json.mask.json").exists());
}

#[test]
fn evaluate_against_itself_gives_zero_gain() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.txt", "2");
    let model = fit(dir.path(), &data, &[], "m.json.gz");
    let base = fit(dir.path(), &data, &["--model", "static"], "u.json");
    let csv = p(dir.path(), "e.csv");
    ok(&[
        "evaluate",
        "--samples",
        &model.display().to_string(),
        &base.display().to_string(),
        "--baseline-samples",
        &model.display().to_string(),
        "--data",
        &data.display().to_string(),
        "--mask",
        &p(dir.path(), "m.json.gz.mask.json"),
        "--out-csv",
        &csv,
    ]);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("model,dataset,mask_seed,subset,rate,gain"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r.len(), 6);
        assert_eq!(r[1], "d");
        assert!(r[4].parse::<f64>().unwrap() > 0.0);
    }
    for r in rows.iter().filter(|r| r[0] == "prgds") {
        assert_eq!(r[5].parse::<f64>().unwrap(), 0.0);
    }
    let subsets: Vec<&str> = rows.iter().take(3).map(|r| r[3]).collect();
    assert_eq!(subsets, vec!["smoothing", "forecasting", "all"]);
    assert!(dir.path().join("e.csv.meta.json").exists());
}

#[test]
fn zero_shape_archive_contains_exact_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.txt", "4");
    let out = fit(dir.path(), &data, &["--epsilon-theta", "0"], "z.json");
    let text = fs::read_to_string(&out).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let zeros = v["samples"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|s| s["params"]["theta"].as_array().cloned().unwrap_or_default())
        .filter(|x| x.as_f64() == Some(0.0))
        .count();
    assert!(zeros > 0);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(prgds(&["fit", "--bogus"]).status.code(), Some(1));
    assert_eq!(prgds(&["simulate", "--T", "4"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "d.txt");
    assert_eq!(prgds(&["simulate", "--T", "4", "--dims", "2", "--K", "0", "--out", &out]).status.code(), Some(1));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = p(dir.path(), "none.txt");
    let out = p(dir.path(), "s.json");
    let r = prgds(&["fit", "--data", &missing, "--out-samples", &out]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("none.txt"));

    let data = simulate(dir.path(), "d.txt", "5");
    let model = fit(dir.path(), &data, &["--mask-seed", "1"], "a.json");
    fit(dir.path(), &data, &["--mask-seed", "2"], "b.json");
    let r = prgds(&[
        "evaluate",
        "--samples",
        &model.display().to_string(),
        "--baseline-samples",
        &model.display().to_string(),
        "--data",
        &data.display().to_string(),
        "--mask",
        &p(dir.path(), "b.json.mask.json"),
        "--out-csv",
        &p(dir.path(), "e.csv"),
    ]);
    assert_eq!(r.status.code(), Some(2), "{}", String::from_utf8_lossy(&r.stderr));
}
