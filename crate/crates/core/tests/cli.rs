use std::path::Path;
use std::process::{Command, Output};

use lhatom::io::{read_spectrum_csv, read_spectrum_json, sidecar_path, CSV_HEADER};

fn lhatom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lhatom"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn steady_prints_state() {
    let o = lhatom(&["steady", "--dp", "0.22", "--config", "default"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("variant = corrected"));
    let trace: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("trace = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((trace - 1.0).abs() <= 1e-12);
    assert!(out.contains("residual = "));
}

#[test]
fn sweep_to_stdout() {
    let o = lhatom(&["sweep", "--dp=-1:1", "--points", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0], CSV_HEADER.join(","));
    assert!(lines[1].starts_with("-1,"));
    assert!(lines[5].starts_with("1,"));
}

#[test]
fn sweep_accepts_separate_negative_range() {
    let o = lhatom(&["sweep", "--dp", "-2.5:2.5", "--points", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn sweep_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out/s.csv");
    let o = lhatom(&[
        "sweep",
        "--points",
        "21",
        "--output",
        path_arg(&csv),
        "--stamp",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_spectrum_csv(&csv).unwrap().len(), 21);
    let meta = std::fs::read_to_string(sidecar_path(&csv)).unwrap();
    assert!(meta.contains("\"generated_at\""));

    let json = dir.path().join("s.json");
    let o = lhatom(&[
        "sweep",
        "--points",
        "21",
        "--format",
        "json",
        "--variant",
        "as-printed",
        "--branch",
        "passive",
        "--output",
        path_arg(&json),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let f = read_spectrum_json(&json).unwrap();
    assert_eq!(f.rows.len(), 21);
    assert_eq!(f.metadata.variant.as_str(), "as-printed");
    assert_eq!(f.metadata.mode.as_str(), "passive");
    assert!(f.generated_at.is_none());
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    let many = dir.path().join("many.csv");
    for (p, t) in [(&one, "1"), (&many, "3")] {
        let o = lhatom(&["sweep", "--threads", t, "--output", path_arg(p)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&one).unwrap(), std::fs::read(&many).unwrap());
    assert_eq!(
        std::fs::read(sidecar_path(&one)).unwrap(),
        std::fs::read(sidecar_path(&many)).unwrap()
    );
}

#[test]
fn bands_report() {
    let o = lhatom(&["bands", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let lh = v["summary"]["left_handed"].as_array().unwrap();
    assert!(!lh.is_empty());
    assert_eq!(v["summary"]["variant"], "corrected");

    let o = lhatom(&["bands"]);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.starts_with("predicate,lo,hi\n"));
    assert!(out.contains("left_handed,"));
}

#[test]
fn repeated_variant_is_a_usage_error() {
    let o = lhatom(&["sweep", "--variant", "corrected", "--variant", "as-printed"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[E_USAGE]"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_are_usage_errors() {
    for args in [
        &["sweep", "--dp", "1"][..],
        &["sweep", "--variant", "fixed"],
        &["steady", "--dp", "a:b"],
        &["sweep", "--threads", "0"],
        &["frobnicate"],
    ] {
        let o = lhatom(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains("E_USAGE"));
    }
}

#[test]
fn config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[drive]\nomega_p = 0.02\nomega_q = 1.0\n").unwrap();
    let o = lhatom(&["steady", "--config", path_arg(&cfg)]);
    assert_eq!(o.status.code(), Some(3));
    let e = stderr(&o);
    assert!(e.starts_with("error[E_CONFIG]: line 3 [drive]"), "{e}");
    assert!(e.contains("omega_q"));

    let o = lhatom(&["sweep", "--points", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("points"));

    let missing = dir.path().join("missing.toml");
    let o = lhatom(&["sweep", "--config", path_arg(&missing)]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).starts_with("error[E_IO]"));
}

#[test]
fn config_file_drives_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from_config.json");
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "output_path = {:?}\nformat = \"json\"\n[sweep]\npoints = 11\ndp_min = -0.5\ndp_max = 0.5\n",
            path_arg(&out)
        ),
    )
    .unwrap();
    let o = lhatom(&["sweep", "--config", path_arg(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let f = read_spectrum_json(&out).unwrap();
    assert_eq!(f.rows.len(), 11);
    assert_eq!(f.rows[0].dp_over_gamma, -0.5);
}
