use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn uwp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uwp"))
        .args(args)
        .current_dir(dir)
        .env_remove("UWP_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = uwp(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

const SMALL_ENSEMBLE: &[&str] = &["--cities", "40", "--n-min", "100", "--sigma", "3"];

#[test]
fn predict_beta_spot_values_on_stdout() {
    let dir = TempDir::new().unwrap();
    let text = ok(dir.path(), &["predict-beta", "--n-min", "1.435", "--sigma", "2", "--alpha", "0.67"]);
    let row = text.lines().nth(1).unwrap();
    let beta: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!((beta - 1.082).abs() < 0.001, "{text}");
    let text = ok(dir.path(), &["predict-beta", "--n-min", "287", "--sigma", "2", "--alpha", "0.67"]);
    assert!(text.lines().nth(1).unwrap().contains(",1.0,"), "{text}");
}

#[test]
fn simulate_writes_manifest_with_digests() {
    let dir = TempDir::new().unwrap();
    let mut args = vec!["simulate", "--out", "ens.csv"];
    args.extend_from_slice(SMALL_ENSEMBLE);
    ok(dir.path(), &args);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("ens.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["config"]["sigma"], 3.0);
    let digest = manifest["outputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    assert!(manifest["versions"]["core"].is_string());
}

#[test]
fn outputs_identical_across_runs_threads_and_svg() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, extra: &[&str]| {
        let mut args = vec!["sweep-sigma", "--from", "1", "--to", "3", "--step", "1", "--reps", "3", "--cities", "30", "--n-min", "50", "--out", name];
        args.extend_from_slice(extra);
        ok(dir.path(), &args);
        fs::read(dir.path().join(name)).unwrap()
    };
    let a = run("a.csv", &[]);
    let b = run("b.csv", &["--threads", "3"]);
    let c = run("c.csv", &["--threads", "1", "--svg", "c.svg"]);
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert!(fs::read_to_string(dir.path().join("c.svg")).unwrap().starts_with("<svg"));
    let other = {
        ok(dir.path(), &["sweep-sigma", "--from", "1", "--to", "3", "--step", "1", "--reps", "3", "--cities", "30", "--n-min", "50", "--out", "d.csv", "--seed", "8"]);
        fs::read(dir.path().join("d.csv")).unwrap()
    };
    assert_ne!(a, other);
}

#[test]
fn out_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("results");
    let out = Command::new(env!("CARGO_BIN_EXE_uwp"))
        .args(["share-of-max", "--sigma", "4", "--n", "1000", "--out", "share.csv"])
        .current_dir(dir.path())
        .env("UWP_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(target.join("share.csv").exists());
    assert!(target.join("share.manifest.json").exists());
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let guard = uwp(dir.path(), &["simulate", "--sigma", "2", "--cities", "100", "--n-min", "1e6", "--worker-cap", "1000000", "--out", "x.csv"]);
    assert_eq!(code(&guard), 4, "{}", String::from_utf8_lossy(&guard.stderr));

    let missing = uwp(dir.path(), &["regress", "--input", "nope.csv", "--x", "a", "--y", "b"]);
    assert_eq!(code(&missing), 2);

    let bad = uwp(dir.path(), &["predict-beta", "--n-min=-1", "--sigma", "2", "--alpha", "1"]);
    assert_eq!(code(&bad), 2, "{}", String::from_utf8_lossy(&bad.stderr));

    fs::write(dir.path().join("flat.csv"), "v\n".to_string() + &"5\n".repeat(30)).unwrap();
    let flat = uwp(dir.path(), &["fit", "--input", "flat.csv", "--column", "v", "--families", "norm", "--bootstrap", "0", "--out", "f.csv"]);
    assert_eq!(code(&flat), 3, "{}", String::from_utf8_lossy(&flat.stderr));
}

#[test]
fn reproduce_boundary_follows_critical_sigma() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["reproduce", "fig2"]);
    let mut rdr = csv::Reader::from_path(dir.path().join("fig2.csv")).unwrap();
    let mut checked = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let (n, beta, sigma): (f64, f64, f64) = (rec[0].parse().unwrap(), rec[1].parse().unwrap(), rec[2].parse().unwrap());
        if beta == 1.0 {
            assert!((sigma - (2.0 * n.ln()).sqrt()).abs() < 1e-9);
            checked += 1;
        }
    }
    assert!(checked > 10);
    assert!(dir.path().join("fig2.manifest.json").exists());
}

#[test]
fn reproduce_without_workers_points_to_synth() {
    let dir = TempDir::new().unwrap();
    let out = uwp(dir.path(), &["reproduce", "fig6"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("uwp synth-pila") && err.contains("uwp ingest"), "{err}");
}

#[test]
fn data_pipeline() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["synth-pila", "--municipalities", "60", "--n-min", "30", "--workers", "8000", "--dirt", "0.01", "--out", "raw.csv"]);
    ok(d, &["ingest", "--input", "raw.csv", "--out", "workers.csv", "--ledger", "ledger.json"]);
    let ledger: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("ledger.json")).unwrap()).unwrap();
    let rejected: u64 = ["parse_failure", "missing_field", "contributor_type", "days_worked", "age", "wage_floor"]
        .iter()
        .map(|k| ledger[k].as_u64().unwrap())
        .sum();
    assert_eq!(ledger["input_rows"].as_u64().unwrap(), ledger["kept"].as_u64().unwrap() + rejected);
    assert!(rejected > 0);
    let manifest = fs::read_to_string(d.join("workers.manifest.json")).unwrap();
    assert!(manifest.contains("raw.csv"));

    ok(d, &["randomize-test", "--input", "workers.csv", "--fractions", "0.1,1", "--subsamples", "2", "--permutations", "10", "--out", "rt.csv"]);
    let summary = fs::read_to_string(d.join("rt_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 + 1);
    assert_eq!(fs::read_to_string(d.join("rt.csv")).unwrap().lines().count(), 1 + 3 * 11);

    ok(d, &["fit", "--input", "workers.csv", "--column", "monthly_wage", "--families", "powerlaw,trunclnorm,norm", "--bootstrap", "5", "--out", "fit.csv"]);
    let table = fs::read_to_string(d.join("fit.csv")).unwrap();
    let order: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(order.len(), 3);
    assert_eq!(order[2], "norm");

    ok(d, &["regress", "--input", "rt_summary.csv", "--x", "workers", "--y", "municipalities", "--out", "reg.csv"]);
    assert!(d.join("reg.manifest.json").exists());
}
