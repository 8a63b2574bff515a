use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_confocal"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn confocal")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn write_config(dir: &tempfile::TempDir, name: &str, json: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

fn rows(out: &Output) -> Vec<Vec<String>> {
    String::from_utf8(out.stdout.clone()).unwrap().lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

fn col(rows: &[Vec<String>], name: &str) -> usize {
    rows[0].iter().position(|c| c == name).unwrap()
}

#[test]
fn eval_examples() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "shell.json",
        r#"{"source": {"quadric": {"geometry": "euclidean", "semi_axes": [1, 1, 1]}}, "points": [[2, 0, 0], [1, 0, 0]]}"#,
    );
    let out = run(&["eval", "--config", &cfg]);
    assert!(out.status.success());
    let t = rows(&out);
    assert_eq!(t[0].join(","), "x,y,z,region,V,Fx,Fy,Fz,V_err,reason");
    let v: f64 = t[1][col(&t, "V")].parse().unwrap();
    assert!((v - 0.5).abs() < 1e-14);
    assert_eq!(t[2][col(&t, "reason")], "TooCloseToSurface");
    assert_eq!(t[2][col(&t, "V")], "");
    assert_eq!(t[2].len(), t[0].len());

    let cfg = write_config(&dir, "e321.json", r#"{"points": [[1.0, 0.5, 0.2]]}"#);
    let t = rows(&run(&["eval", "--config", &cfg]));
    assert_eq!(t[1][col(&t, "region")], "interior");
    for c in ["Fx", "Fy", "Fz"] {
        assert!(t[1][col(&t, c)].parse::<f64>().unwrap().abs() < 1e-12);
    }
}

#[test]
fn eval_points_on_a_confocal_ellipse_share_a_potential() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (14f64.sqrt(), 9f64.sqrt());
    let pts: Vec<String> = (0..12)
        .map(|k| {
            let t = k as f64 * 0.5;
            format!("[{}, {}, 0]", a * t.cos(), b * t.sin())
        })
        .collect();
    let cfg = write_config(&dir, "c.json", &format!(r#"{{"points": [{}]}}"#, pts.join(",")));
    let t = rows(&run(&["eval", "--config", &cfg]));
    let v: Vec<f64> = t[1..].iter().map(|r| r[col(&t, "V")].parse().unwrap()).collect();
    let spread = v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 1e-6, "{spread}");
}

#[test]
fn sweep_counts_and_shell_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "g.json",
        r#"{"grid": {"kind": "plane", "s": {"min": -4, "max": 4, "n": 41}, "t": {"min": -4, "max": 4, "n": 41}}}"#,
    );
    let out = run(&["sweep", "--config", &cfg, "--out", dir.path().join("g.csv").to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("g.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 1681);
    assert!(!text.contains('\r'));

    let cfg = write_config(
        &dir,
        "s.json",
        r#"{"source": {"quadric": {"geometry": "euclidean", "semi_axes": [1, 1, 1]}, "mass": 3},
            "grid": {"kind": "plane", "s": {"min": -2.5, "max": 2.5, "n": 11}, "t": {"min": -2.5, "max": 2.5, "n": 11}}}"#,
    );
    let t = rows(&run(&["sweep", "--config", &cfg]));
    let (ix, iy, iv) = (col(&t, "x"), col(&t, "y"), col(&t, "V"));
    let mut checked = 0;
    for r in &t[1..] {
        let (x, y): (f64, f64) = (r[ix].parse().unwrap(), r[iy].parse().unwrap());
        if r[iv].is_empty() {
            continue;
        }
        let v: f64 = r[iv].parse().unwrap();
        assert!((v - 3.0 / x.hypot(y).max(1.0)).abs() < 1e-9, "{x} {y} {v}");
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(&dir, "bad.json", r#"{"sorce": {}}"#);
    assert_eq!(run(&["eval", "--config", &bad]).status.code(), Some(2));
    let axes =
        write_config(&dir, "axes.json", r#"{"source": {"quadric": {"geometry": "euclidean", "semi_axes": [1, 0]}}}"#);
    assert_eq!(run(&["eval", "--config", &axes]).status.code(), Some(2));
    let grid = write_config(
        &dir,
        "grid.json",
        r#"{"grid": {"kind": "great_sphere", "polar": {"min": 0, "max": 1, "n": 3}, "azimuth": {"min": 0, "max": 1, "n": 3}}}"#,
    );
    assert_eq!(run(&["sweep", "--config", &grid]).status.code(), Some(2));
    let empty = write_config(
        &dir,
        "empty.json",
        r#"{"grid": {"kind": "plane", "s": {"min": 1, "max": 0, "n": 3}, "t": {"min": 0, "max": 1, "n": 3}}}"#,
    );
    assert_eq!(run(&["sweep", "--config", &empty]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--check", "lemma9"]).status.code(), Some(2));
    assert_eq!(run(&["eval"]).status.code(), Some(2));
    let shift = write_config(&dir, "shift.json", r#"{"verify": {"theorem1": {"shifts": [-4]}}}"#);
    assert_eq!(run(&["verify", "--config", &shift, "--check", "theorem1"]).status.code(), Some(2));
    let key = write_config(&dir, "key.json", r#"{"verify": {"theorem1": {"shiftz": [1]}}}"#);
    assert_eq!(run(&["verify", "--config", &key, "--check", "theorem1"]).status.code(), Some(2));
}

#[test]
fn verify_reports_follow_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        write_config(&dir, "v.json", r#"{"seed": 9, "verify": {"theorem1": {"shifts": [-0.5, 2.0], "samples": 6}}}"#);
    let out_path = dir.path().join("r.json");
    let out = run(&[
        "verify",
        "--config",
        &cfg,
        "--check",
        "theorem1",
        "--check",
        "lemma3",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(r["run"]["seed"], 9);
    assert!(r["run"]["version"].is_string());
    assert!(r["run"]["config"].is_object());
    let checks = r["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 2);
    for c in checks {
        for field in ["name", "anchor", "residuals", "tolerances", "pass", "time_ms"] {
            assert!(!c[field].is_null(), "missing {field}");
        }
    }
    let res = checks[0]["residuals"].as_object().unwrap();
    assert!(res.contains_key("base0/gamma=-0.5/dV") && res.contains_key("base0/gamma=2/dV"));
    assert!(!res.keys().any(|k| k.contains("gamma=5")));
    let res = checks[1]["residuals"].as_object().unwrap();
    assert!(["A", "B", "C"].iter().all(|k| res.contains_key(*k)));
}

#[test]
fn failing_checks_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "f.json",
        r#"{"verify": {"theorem1": {"samples": 3, "tolerances": {"dV": 0.0, "dF": 0.0}}}}"#,
    );
    let out = run(&["verify", "--config", &cfg, "--check", "theorem1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn printed_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--print-config", "--seed", "3"]);
    assert!(out.status.success());
    let printed = write_config(&dir, "p.json", std::str::from_utf8(&out.stdout).unwrap());
    let again = run(&["verify", "--config", &printed, "--print-config"]);
    assert_eq!(out.stdout, again.stdout);

    let report = |path: &str| {
        let o = dir.path().join(path);
        let s = run(&[
            "verify",
            "--config",
            &printed,
            "--check",
            "lemma6",
            "--check",
            "lemma1",
            "--out",
            o.to_str().unwrap(),
        ]);
        assert!(s.status.success());
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(o).unwrap()).unwrap();
        for c in v["checks"].as_array_mut().unwrap() {
            c.as_object_mut().unwrap().remove("time_ms");
        }
        // the output path is echoed into the report
        v["run"]["config"].as_object_mut().unwrap().remove("out");
        v
    };
    let (a, b) = (report("a.json"), report("b.json"));
    assert_eq!(a, b);
    assert_eq!(a["run"]["seed"], 3);
}

#[test]
fn verify_all_defaults_pass() {
    let out = run(&[
        "verify",
        "--check",
        "all",
        "--out",
        tempfile::tempdir().unwrap().path().join("all.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

/// Numeric cells may differ in the last bits across platforms.
fn same_cell(a: &str, b: &str) -> bool {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => (x - y).abs() <= 1e-13 + 1e-12 * x.abs().max(y.abs()),
        _ => a == b,
    }
}

fn golden(name: &str) {
    let dir = golden_dir();
    let cfg = dir.join(format!("{name}.json"));
    let out = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let got = String::from_utf8(out.stdout).unwrap();
    let path = dir.join(format!("{name}.csv"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &got).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap();
    let (got, want): (Vec<_>, Vec<_>) = (got.lines().collect(), want.lines().collect());
    assert_eq!(got.len(), want.len());
    assert_eq!(got[0], want[0]);
    for (g, w) in got.iter().zip(&want) {
        let (g, w): (Vec<_>, Vec<_>) = (g.split(',').collect(), w.split(',').collect());
        assert_eq!(g.len(), w.len());
        for (a, b) in g.iter().zip(&w) {
            assert!(same_cell(a, b), "{name}: {a} vs {b}");
        }
    }
}

#[test]
fn golden_shell_plane() {
    golden("shell_plane");
}

#[test]
fn golden_spherical_cap() {
    golden("s3_cap");
}
