use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_catability"));
    c.env_remove("CATABILITY_TABLE_DIR");
    c
}

fn run(out: &Path, args: &[&str]) -> Output {
    let o = bin()
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of a CSV written by the tool, metadata line and header dropped.
fn csv_rows(path: PathBuf) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# catability "));
    lines.next().unwrap();
    lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn metric(out: &Path, args: &[&str]) -> Value {
    let mut full = vec!["--format", "json", "catability"];
    full.extend_from_slice(args);
    run(out, &full);
    read_json(out.join("catability.json"))["result"].clone()
}

#[test]
fn ideal_cat_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let r = metric(
        dir.path(),
        &["cat", "--alpha", "1.5", "--sign", "-", "--loss-eta", "1"],
    );
    assert!(r["xi"]["value"].as_f64().unwrap().abs() < 1e-10);
    assert!(r["zeta"]["value"].as_f64().unwrap().abs() < 1e-10);
}

#[test]
fn coherent_state_is_not_certified() {
    let dir = tempfile::tempdir().unwrap();
    let r = metric(dir.path(), &["coherent", "--alpha", "1.5", "--sign", "-"]);
    assert!(r["xi"]["value"].as_f64().unwrap() >= 1.0 - 1e-6);
    assert!(r["zeta"]["value"].as_f64().unwrap() >= 1.0 - 1e-6);
}

#[test]
fn squeezed_fock_matches_golden() {
    let golden = read_json(PathBuf::from(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/golden/squeezed_fock_xi.json"
    )));
    let args: Vec<&str> = golden["args"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a.as_str().unwrap())
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &args);
    let xi = &stdout_json(&o)["xi"];
    let close = |a: &Value, b: &Value| (a.as_f64().unwrap() - b.as_f64().unwrap()).abs() < 1e-9;
    assert!(close(&xi["value"], &golden["xi"]), "{xi}");
    assert!(close(&xi["gamma"], &golden["gamma"]));
    assert!((xi["alpha"][0].as_f64().unwrap() - golden["alpha"].as_f64().unwrap()).abs() < 1e-6);
    assert_eq!(xi["sign"], golden["sign"]);
    assert_eq!(xi["global"], Value::Bool(true));
}

#[test]
fn file_state_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("vac.txt");
    std::fs::write(&file, "# vacuum\n1\n0 0 1 0\n").unwrap();
    let spec = format!("file:{}", file.display());
    let common = ["--target-alpha", "1.2", "--sign", "+"];
    let mut a = vec!["--dim", "40", "catability", spec.as_str()];
    a.extend_from_slice(&common);
    let from_file = stdout_json(&run(dir.path(), &a));
    let mut b = vec!["--dim", "40", "catability", "vacuum"];
    b.extend_from_slice(&common);
    let builtin = stdout_json(&run(dir.path(), &b));
    assert_eq!(from_file, builtin);
}

#[test]
fn spectrum_and_wigner_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["spectrum", "--k", "2", "--wigner", "--grid", "-1:1:3"],
    );
    let ev = stdout_json(&o)["eigenvalues"].clone();
    assert!(ev[0].as_f64().unwrap().abs() < 1e-9);
    assert!((ev[1].as_f64().unwrap() - 2.0).abs() < 1e-9);
    let rows = csv_rows(dir.path().join("spectrum_state0_wigner.csv"));
    let origin = rows
        .iter()
        .find(|r| r[0] == "0.0" && r[1] == "0.0")
        .unwrap();
    let w: f64 = origin[2].parse().unwrap();
    assert!((w + std::f64::consts::FRAC_1_PI).abs() < 1e-9);

    run(
        dir.path(),
        &["wigner", "vacuum", "--x-grid", "0", "--p-grid", "0"],
    );
    let rows = csv_rows(dir.path().join("wigner.csv"));
    let w: f64 = rows[0][2].parse().unwrap();
    assert!((w - std::f64::consts::FRAC_1_PI).abs() < 1e-12);
}

#[test]
fn table_build_verify_export() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let grids = ["--alpha-grid", "0.8:1.6:17", "--gamma-grid", "0:2:21"];
    let mut build = vec!["--table-dir", d];
    build.extend_from_slice(&grids);
    build.extend_from_slice(&["table", "build", "--sign", "+"]);
    let b = stdout_json(&run(dir.path(), &build));
    assert_eq!(b["converged"], Value::Bool(true));

    let v = stdout_json(&run(
        dir.path(),
        &[
            "--table-dir",
            d,
            "--seed",
            "3",
            "table",
            "verify",
            "--sign",
            "+",
            "--nodes",
            "10",
            "--probes",
            "30",
        ],
    ));
    assert_eq!(v["max_node_deviation"].as_f64().unwrap(), 0.0);
    assert!(
        v["max_probe_relative_deviation"].as_f64().unwrap() < 5e-3,
        "{v}"
    );

    let e = stdout_json(&run(
        dir.path(),
        &["--table-dir", d, "table", "export", "--sign", "+"],
    ));
    assert_eq!(e["rows"], 17 * 21);
    assert_eq!(csv_rows(dir.path().join("table_even.csv")).len(), 17 * 21);
}

#[test]
fn corrupt_table_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    run(
        dir.path(),
        &[
            "--table-dir",
            d,
            "--alpha-grid",
            "1,1.5",
            "--gamma-grid",
            "0,1",
            "table",
            "build",
            "--sign",
            "-",
        ],
    );
    let path = dir.path().join("gaussian_table_odd.txt");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("floor 1 ", "floor 1 9", 1)).unwrap();
    let o = bin()
        .args([
            "--out-dir",
            d,
            "--table-dir",
            d,
            "table",
            "export",
            "--sign",
            "-",
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn multihead_ideal_and_cross() {
    let dir = tempfile::tempdir().unwrap();
    run(
        dir.path(),
        &[
            "--eta-grid",
            "1",
            "multihead",
            "--heads",
            "3",
            "--alpha",
            "2",
            "--cross",
        ],
    );
    for row in csv_rows(dir.path().join("multihead.csv")) {
        let xi: f64 = row[4].parse().unwrap();
        let zeta: f64 = row[5].parse().unwrap();
        assert!(xi.abs() < 1e-8 && zeta.abs() < 1e-8, "{row:?}");
    }
    let cross = csv_rows(dir.path().join("multihead_cross.csv"));
    assert_eq!(cross.len(), 9);
    for row in cross {
        let xi: f64 = row[2].parse().unwrap();
        if row[0] == row[1] {
            assert!(xi.abs() < 1e-8, "{row:?}");
        } else {
            assert!(xi >= 1.0, "{row:?}");
        }
    }
}

#[test]
fn monte_carlo_is_reproducible_and_scales() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "--seed", "11", "mc", "cat", "--alpha", "1.5", "--sign", "-", "--trials", "2000",
        "--losses", "0,20",
    ];
    let o = run(a.path(), &args);
    run(b.path(), &args);
    for f in ["mc_summary.csv", "mc_energy_0.csv", "mc_amplitude_20.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let ordering = stdout_json(&o);
    assert_eq!(ordering["energy"]["zero_loss_largest"], Value::Bool(true));
    assert_eq!(
        ordering["amplitude"]["zero_loss_largest"],
        Value::Bool(true)
    );

    let rows = csv_rows(a.path().join("mc_summary.csv"));
    for pair in rows.chunks(2) {
        let s1: f64 = pair[0][5].parse().unwrap();
        let s4: f64 = pair[1][5].parse().unwrap();
        let ratio = s1 / s4;
        assert!((ratio - 2.0).abs() < 0.15, "{pair:?}");
    }
}

#[test]
fn sweep_loss_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "--eta-grid",
            "0.65,1",
            "sweep-loss",
            "cat",
            "--alpha",
            "1.5",
            "--sign",
            "-",
        ],
    );
    let report = stdout_json(&o);
    assert_eq!(report["xi_non_increasing"], Value::Bool(true));
    let rows = csv_rows(dir.path().join("sweep_loss.csv"));
    let col = |r: &Vec<String>, i: usize| r[i].parse::<f64>().unwrap();
    let (lossy, ideal) = (&rows[0], &rows[1]);
    assert!(col(ideal, 2).abs() < 1e-8 && col(ideal, 3).abs() < 1e-8);
    assert!(col(lossy, 2) < 1.0, "{lossy:?}");
    assert!(col(lossy, 3) > 1.0, "{lossy:?}");
}

#[test]
fn errors_are_json_with_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = bin()
        .args(["--out-dir", d, "catability", "banana"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let e: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(e["exit_code"], 2);

    let missing = dir.path().join("nope");
    let o = bin()
        .args(["--out-dir", d, "--table-dir"])
        .arg(&missing)
        .args(["catability", "cat", "--alpha", "1", "--sign", "+"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));

    let o = bin()
        .args(["--out-dir", d, "--frobnicate"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "dim = 30\nseed = 5\n").unwrap();
    let c = conf.to_str().unwrap();
    let args = [
        "--format",
        "json",
        "catability",
        "cat",
        "--alpha",
        "1",
        "--sign",
        "+",
    ];
    let mut a = vec!["--config", c];
    a.extend_from_slice(&args);
    run(dir.path(), &a);
    let doc = read_json(dir.path().join("catability.json"));
    assert_eq!(doc["result"]["input"]["dim"], 30);
    assert_eq!(doc["meta"]["seed"], 5);

    let mut b = vec!["--config", c, "--dim", "45"];
    b.extend_from_slice(&args);
    run(dir.path(), &b);
    let doc = read_json(dir.path().join("catability.json"));
    assert_eq!(doc["result"]["input"]["dim"], 45);

    std::fs::write(&conf, "dimension = 30\n").unwrap();
    let o = bin()
        .args(["--out-dir", dir.path().to_str().unwrap(), "--config", c])
        .args(args)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
