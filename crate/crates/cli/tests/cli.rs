use std::path::Path;
use std::process::{Command, Output};

fn mslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mslab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
[geometry]
R = 1.0
R_outer = 2.0
a = 0.2

[physics]
sigma = 1.0
m = 1.0
mu_plus = 1.0
mu_minus = 2.0

[discretization]
n_theta = 32
n_r_inner = 24
n_r_outer = 24
dt = 1e-3
t_end = 0.03
scheme = "imex2"

[initial]
modes = [[2, 0.03, 0.0], [3, 0.0, 0.02]]

[output]
cadence = 5
directory = "unused"
formats = ["csv", "json"]
k_max = 4
fit_window = [0.0, 0.03]
"#;

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn band_too_wide_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("a = 0.2", "a = 0.4"));
    let o = mslab(&["simulate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("3a"), "{}", stderr(&o));
    assert!(stderr(&o).contains("geometry.a"));
}

#[test]
fn unknown_key_and_suite_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("[physics]", "[physics]\nnu = 3.0"));
    assert_eq!(mslab(&["simulate", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(mslab(&["check", "nope"]).status.code(), Some(2));
}

#[test]
fn spectrum_defaults_report_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = mslab(&["spectrum", "--n-r", "40", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("kernel=3"), "{}", stdout(&o));
    let json = std::fs::read_to_string(&out).unwrap();
    assert!(json.trim_start().starts_with('[') && json.contains("\"classification\": \"kernel\""));

    let o = mslab(&["spectrum", "--mu-plus", "1e4", "--mu-minus", "1e4", "--modes", "2..2", "--n-r", "40", "--out", out.to_str().unwrap()]);
    let line = stdout(&o).lines().find(|l| l.trim_start().starts_with('2')).unwrap().to_owned();
    let lead: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((lead - 192.0 / 17.0).abs() <= 0.01 * 192.0 / 17.0, "{line}");

    let o = mslab(&["spectrum", "--modes", "5..5", "--n-r", "40", "--route", "eliminated", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("kernel=0"));
}

#[test]
fn check_suites_pass() {
    let o = mslab(&["check", "curvature"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS") && !stdout(&o).contains("FAIL"));
    assert!(mslab(&["check", "symbols"]).status.success());
}

#[test]
fn presets_are_listed() {
    let o = stdout(&mslab(&["presets"]));
    for p in ["mode3-decay", "equilibrium-hold", "two-mode-mix", "spectrum-default"] {
        assert!(o.contains(p));
    }
}

#[test]
fn reruns_are_byte_identical_and_resume_matches() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert!(mslab(&["simulate", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(mslab(&["--sequential", "simulate", "--config", &cfg, "--out", b.to_str().unwrap()]).status.success());
    for f in ["timeseries.csv", "report.json", "snapshot_30.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let snap = a.join("snapshot_10.json");
    let o = mslab(&["resume", "--snapshot", snap.to_str().unwrap(), "--config", &cfg, "--out", c.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    // Restarting replays the same steps, so the last snapshot matches bitwise.
    assert_eq!(std::fs::read(a.join("snapshot_30.json")).unwrap(), std::fs::read(c.join("snapshot_30.json")).unwrap());
}

#[test]
fn truncated_snapshot_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = dir.path().join("a");
    assert!(mslab(&["simulate", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    let body = std::fs::read(a.join("snapshot_10.json")).unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, &body[..body.len() / 2]).unwrap();
    let o = mslab(&["resume", "--snapshot", bad.to_str().unwrap(), "--config", &cfg]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error:"));
}
