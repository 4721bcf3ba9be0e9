use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn magwell(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magwell"))
        .args(args)
        .current_dir(dir)
        .env_remove("MAGWELL_WORKERS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

const HEADER: &str = "h,lambda0,lambda1,lambda2,residual,iters,seconds,solver_residual,inner_iters,converged,lambda_qm,asymptote,config_hash,status";

/// Rows following lambda_j = h + h^2/2 + j h^{5/2}.
fn ladder_csv(dir: &Path) -> std::path::PathBuf {
    let mut text = String::from(HEADER);
    text.push('\n');
    for h in [0.12f64, 0.1, 0.08, 0.06, 0.04] {
        let l = |j: f64| h + h * h / 2.0 + j * h.powf(2.5);
        text.push_str(&format!(
            "{h},{},{},{},{},12,0.5,1e-9,300,true,,,deadbeef,ok\n",
            l(0.0),
            l(1.0),
            l(2.0),
            2.0 * h * h
        ));
    }
    let path = dir.join("ladder.csv");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = magwell(&["--print-config"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for section in ["[field]", "[metric]", "[grid]", "[sweep]", "[solver]", "[envelope]"] {
        assert!(text.contains(section), "missing {section}");
    }
    let path = dir.path().join("default.toml");
    fs::write(&path, &text).unwrap();
    let asym = magwell(&["asymptote", "--config", path.to_str().unwrap()], dir.path());
    assert!(asym.status.success(), "{}", String::from_utf8_lossy(&asym.stderr));
}

#[test]
fn asymptote_groundstate() {
    let dir = tempfile::tempdir().unwrap();
    let out = magwell(
        &["asymptote", "--model", "groundstate", "--h", "0.1", "--b0", "1", "--mu0", "2"],
        dir.path(),
    );
    assert!(out.status.success());
    let v = json(&out);
    let text = v.to_string();
    assert!(text.contains("0.105"), "{text}");
}

#[test]
fn landau_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = magwell(&["landau-check", "--k-max", "3"], dir.path());
    assert!(out.status.success());
    assert_eq!(json(&out)["passed"], Value::Bool(true));
}

#[test]
fn fit_recovers_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let csv = ladder_csv(dir.path());
    let out = magwell(&["fit", csv.to_str().unwrap(), "--powers", "1,2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let c = v["coefficients"].as_array().unwrap();
    assert!((c[0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((c[1].as_f64().unwrap() - 0.5).abs() < 1e-8);

    let out = magwell(
        &["fit", csv.to_str().unwrap(), "--target", "gap", "--powers", "2.5"],
        dir.path(),
    );
    let v = json(&out);
    assert!((v["slope"].as_f64().unwrap() - 2.5).abs() < 1e-9);
}

#[test]
fn gaps_inside_interval() {
    let dir = tempfile::tempdir().unwrap();
    let csv = ladder_csv(dir.path());
    let out = magwell(
        &["gaps", csv.to_str().unwrap(), "--interval", "0,1", "--min-gap", "1e-6"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = json(&out);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r["count"] == 2));
}

#[test]
fn sweep_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
[field]
kind = "uniform"
b0 = 1.0

[grid]
s_min = -2.0
s_max = 2.0
t_halfwidth = 2.0
points_per_length = 8.0

[sweep]
h = [0.5, 0.3]
eigenpairs = 1
quasimode = false
fit_powers = []
output = "out.csv"
report = "out.json"
"#;
    fs::write(dir.path().join("flat.toml"), config).unwrap();
    let out = magwell(&["sweep", "flat.toml"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["passed"], Value::Bool(true));
    let csv = fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert!(csv.starts_with("h,lambda0,residual,iters,seconds"), "{csv}");
    assert_eq!(csv.lines().count(), 3);
    assert!(dir.path().join("out.json").exists());
}

#[test]
fn bad_input_exits_with_error_code() {
    let dir = tempfile::tempdir().unwrap();
    let missing = magwell(&["sweep", "nope.toml"], dir.path());
    assert_eq!(missing.status.code(), Some(2));

    fs::write(dir.path().join("typo.toml"), "[sweep]\nhh = [0.1]\n").unwrap();
    let typo = magwell(&["sweep", "typo.toml"], dir.path());
    assert_eq!(typo.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&typo.stderr).contains("hh"));

    let csv = ladder_csv(dir.path());
    let reversed = magwell(&["gaps", csv.to_str().unwrap(), "--interval", "1,0"], dir.path());
    assert_eq!(reversed.status.code(), Some(2));
}
