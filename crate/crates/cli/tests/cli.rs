use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nsk_cli::config::RunConfig;
use nsk_cli::output::DIAGNOSTICS_FILE;
use nsk_cli::{build_initial, parse_config, Config};
use nsk_core::diagnostics::DiagnosticsRow;
use nsk_core::model::discrete_total_energy;

fn nsk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsk"))
        .args(args)
        .output()
        .unwrap()
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn configs(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

const SMALL_RUN: &str = r#"{
  "kind": "run",
  "mesh": [8, 8],
  "params": {"a": 1.0, "gamma": 2.0, "mu": 0.01, "kappa": 0.001},
  "controls": {"t_end": 0.02, "record_every": 2},
  "initial": {"type": "sine_bump", "rho_mean": 1.0, "amplitude": 0.1, "kx": 1, "ky": 1, "u": 0.3}
}"#;

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn verify_quick_passes() {
    let o = nsk(&["verify", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 7, "{out}");
    assert!(lines.iter().all(|l| l.starts_with("PASS ")), "{out}");
}

#[test]
fn run_writes_diagnostics_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", SMALL_RUN);
    let out = dir.path().join("out");
    let o = nsk(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));

    let csv = std::fs::read_to_string(out.join(DIAGNOSTICS_FILE)).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, DiagnosticsRow::<f64>::COLUMNS);
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(first[0], 0.0);

    let Config::Run(run) = parse_config(SMALL_RUN).unwrap() else {
        panic!("run document")
    };
    let s0 = build_initial(&run, run.mesh().unwrap()).unwrap();
    let e0 = discrete_total_energy(&s0, &run.fluid_params().unwrap()).unwrap();
    assert_eq!(first[4], e0);

    let records = csv.lines().count() - 1;
    let snaps = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("snap_")
        })
        .count();
    assert_eq!(snaps, records);
    let last = nsk_cli::read_snapshot(&out.join(format!("snap_{:05}.csv", records - 1))).unwrap();
    let last_t: f64 = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(last.t, last_t);
    assert_eq!(last.t, 0.02);
}

#[test]
fn raw_format_and_output_dir_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from_config");
    let body = SMALL_RUN.replace(
        "\"initial\"",
        &format!(
            "\"output\": {{\"dir\": {:?}, \"format\": \"raw\"}},\n  \"initial\"",
            out.to_str().unwrap()
        ),
    );
    let cfg = write_config(dir.path(), "raw.json", &body);
    let o = nsk(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(out.join("snap_00000.raw").exists());
    assert!(out.join("snap_00000.json").exists());
}

#[test]
fn gamma_below_one_exits_with_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        &SMALL_RUN.replace("\"gamma\": 2.0", "\"gamma\": 0.5"),
    );
    let o = nsk(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("gamma must exceed 1"), "{}", text(&o));
}

#[test]
fn unknown_key_exits_with_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "typo.json",
        &SMALL_RUN.replace("\"kappa\"", "\"kapa\""),
    );
    let o = nsk(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("kapa"), "{}", text(&o));
}

#[test]
fn density_floor_breach_exits_with_time_stamp() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("floor_breach.json");
    let o = nsk(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    let msg = text(&o);
    assert!(
        msg.contains("at t = ") && msg.contains("positivity"),
        "{msg}"
    );
    let t: f64 = msg
        .split("at t = ")
        .nth(1)
        .unwrap()
        .split(':')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(t > 0.0 && t < 0.5, "{msg}");
}

#[test]
fn missing_config_and_blocked_output_exit_with_io_error() {
    let o = nsk(&["run", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(text(&o).contains("/nonexistent/config.json"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", SMALL_RUN);
    let blocker = write_config(dir.path(), "file", "x");
    let o = nsk(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", text(&o));
}

#[test]
fn wrong_document_kind_and_bad_arguments() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", SMALL_RUN);
    let o = nsk(&["study", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(nsk(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(nsk(&["--help"]).status.code(), Some(0));
}

#[test]
fn small_study_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let base = SMALL_RUN
        .replace("\"kind\": \"run\",", "")
        .replace("\"record_every\": 2", "\"record_every\": 1");
    let body = format!(
        r#"{{"kind": "study", "base": {base}, "levels": [[8, 8], [16, 16]], "battery_kmax": 1}}"#
    );
    let cfg = write_config(dir.path(), "study.json", &body);
    let out = dir.path().join("study");
    let o = nsk(&[
        "study",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.starts_with("level,M,N,h,R1,R2,cauchy_rho,cauchy_m,lambda_h,order_R1"));
    assert_eq!(csv.lines().count(), 3);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["levels"].as_array().unwrap().len(), 2);
    assert_eq!(json["pairs"].as_array().unwrap().len(), 1);
    assert!(json["checks"]["lambda_h_decreases"].as_bool().unwrap());
}

#[test]
fn shipped_configs_parse_and_round_trip() {
    for name in ["smooth_bump_run.json", "smooth_bump_study.json"] {
        let text = std::fs::read_to_string(configs(name)).unwrap();
        let c = parse_config(&text).unwrap();
        assert_eq!(parse_config(&c.to_json()).unwrap(), c, "{name}");
    }
    let text = std::fs::read_to_string(fixture("floor_breach.json")).unwrap();
    let Config::Run(r) = parse_config(&text).unwrap() else {
        panic!("run document")
    };
    let r: RunConfig = r;
    assert_eq!(r.params.rho_floor, Some(0.9));
}
