//! End-to-end tests of the command-line interface: exit codes, output
//! shapes, and byte determinism.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levyforge"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SIM_CONFIG: &str = r#"{
  "command": "simulate",
  "grid": {"horizon": 1.0, "dt": 0.01},
  "n_paths": 8,
  "seed": 5,
  "driver": {"b": 0.1, "sigma2": 1.0, "lambda": 5.0,
             "jump_law": {"kind": "uniform", "params": [-1.0, 1.0]}}
}"#;

#[test]
fn missing_config_exits_2() {
    let status = bin()
        .args(["simulate", "--config", "/nonexistent/config.json"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", "{ not json at all");
    let status = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn unknown_coefficient_exits_3_and_names_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{
          "command": "solve",
          "grid": {"horizon": 1.0, "dt": 0.01},
          "n_paths": 2,
          "driver": {"b": 0.0, "sigma2": 1.0, "lambda": 0.0,
                     "jump_law": {"kind": "dirac", "params": [1.0]}},
          "solve": {"scheme": "euler_maruyama", "x0": 1.0,
                    "drift": {"kind": "bogus", "params": []},
                    "diffusion": {"kind": "zero", "params": []}}
        }"#,
    );
    let out = bin().args(["solve", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("solve.drift.kind"), "{stderr}");
}

#[test]
fn non_integer_delay_step_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{
          "command": "solve",
          "grid": {"horizon": 0.9, "dt": 0.3},
          "n_paths": 2,
          "driver": {"b": 0.0, "sigma2": 1.0, "lambda": 0.0,
                     "jump_law": {"kind": "dirac", "params": [1.0]}},
          "solve": {"scheme": "euler_sdde",
                    "drift": {"kind": "zero", "params": []},
                    "diffusion": {"kind": "zero", "params": []},
                    "history": {"kind": "const", "params": [1.0]}}
        }"#,
    );
    let out = bin().args(["solve", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.dt"));
}

#[test]
fn command_mismatch_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", SIM_CONFIG);
    let status = bin().args(["validate", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn unwritable_output_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", SIM_CONFIG);
    // A file where a directory is required.
    let blocker = write(dir.path(), "blocker", "");
    let status = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(blocker.join("sub"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", SIM_CONFIG);
    let run = |out: &str, seed: Option<&str>| {
        let mut c = bin();
        c.args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(out));
        if let Some(s) = seed {
            c.args(["--seed", s]);
        }
        assert!(c.status().unwrap().success());
        std::fs::read(dir.path().join(out).join("paths.csv")).unwrap()
    };
    let base = run("a", None);
    let same = run("b", Some("5"));
    let other = run("c", Some("6"));
    assert_eq!(base, same);
    assert_ne!(base, other);
}

#[test]
fn integrate_writes_integral_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{
          "command": "integrate",
          "grid": {"horizon": 1.0, "dt": 0.01},
          "n_paths": 4,
          "seed": 2,
          "driver": {"b": 0.0, "sigma2": 1.0, "lambda": 0.0,
                     "jump_law": {"kind": "dirac", "params": [1.0]}},
          "integrate": {"op": "left_riemann", "integrand": {"kind": "driver"}}
        }"#,
    );
    let out_dir = dir.path().join("out");
    let status = bin()
        .args(["integrate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let integral = std::fs::read_to_string(out_dir.join("integral.csv")).unwrap();
    assert!(integral.starts_with("t,path_0,path_1,path_2,path_3\n"));
    assert_eq!(integral.lines().count(), 102);
    // First data row: zero integral at t = 0.
    let row = integral.lines().nth(1).unwrap();
    for field in row.split(',') {
        assert_eq!(field.parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn sdde_solution_includes_history_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{
          "command": "solve",
          "grid": {"horizon": 2.0, "dt": 0.1},
          "n_paths": 2,
          "seed": 3,
          "driver": {"b": 0.0, "sigma2": 0.0, "lambda": 0.0,
                     "jump_law": {"kind": "dirac", "params": [1.0]}},
          "solve": {"scheme": "euler_sdde",
                    "drift": {"kind": "linear_arg", "params": [-1.0]},
                    "diffusion": {"kind": "zero", "params": []},
                    "history": {"kind": "const", "params": [1.0]}}
        }"#,
    );
    let out_dir = dir.path().join("out");
    let status = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let solution = std::fs::read_to_string(out_dir.join("solution.csv")).unwrap();
    // 10 history steps + 20 solution steps + node 0 => 31 rows + header.
    assert_eq!(solution.lines().count(), 32);
    let first = solution.lines().nth(1).unwrap();
    let t0: f64 = first.split(',').next().unwrap().parse().unwrap();
    assert!((t0 + 1.0).abs() < 1e-12, "first row time {t0}");
    // History value is phi = 1 everywhere.
    for field in first.split(',').skip(1) {
        assert_eq!(field.parse::<f64>().unwrap(), 1.0);
    }
}

#[test]
fn validate_reports_are_complete_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{
          "command": "validate",
          "grid": {"horizon": 1.0, "dt": 0.01},
          "n_paths": 4000,
          "seed": 9,
          "driver": {"b": 0.0, "sigma2": 1.0, "lambda": 10.0,
                     "jump_law": {"kind": "uniform", "params": [-1.0, 1.0]}},
          "validate": {"checks": [
            {"kind": "poisson_pmf", "lambda": 1.0, "t": 1.0},
            {"kind": "qv"},
            {"kind": "doleans_density", "s": 0.25, "t": 0.75,
             "event": {"kind": "above", "level": 0.0}}
          ]}
        }"#,
    );
    let run = |out: &str| -> (Option<i32>, Vec<u8>, Vec<u8>) {
        let out_dir = dir.path().join(out);
        let status = bin()
            .args(["validate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir)
            .status()
            .unwrap();
        (
            status.code(),
            std::fs::read(out_dir.join("report.txt")).unwrap(),
            std::fs::read(out_dir.join("report.jsonl")).unwrap(),
        )
    };
    let (code_a, txt_a, jsonl_a) = run("a");
    assert_eq!(code_a, Some(0));
    let text = String::from_utf8(txt_a.clone()).unwrap();
    assert!(text.trim_end().ends_with("overall: PASS"), "{text}");
    for line in String::from_utf8(jsonl_a.clone()).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for field in ["check_id", "estimate", "se", "target", "multiple", "pass"] {
            assert!(v.get(field).is_some(), "missing {field} in {line}");
        }
    }
    let (code_b, txt_b, jsonl_b) = run("b");
    assert_eq!(code_b, Some(0));
    assert_eq!(txt_a, txt_b);
    assert_eq!(jsonl_a, jsonl_b);
}

#[test]
fn bs_explicit_solve_runs_clean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{
          "command": "solve",
          "grid": {"horizon": 5.0, "dt": 0.01},
          "n_paths": 4,
          "seed": 6,
          "driver": {"b": 0.0, "sigma2": 1.0, "lambda": 10.0,
                     "jump_law": {"kind": "uniform", "params": [-1.0, 1.0]}},
          "solve": {"scheme": "bs_explicit", "alpha": -1.0, "beta": 0.1, "y0": 1.0}
        }"#,
    );
    let out_dir = dir.path().join("out");
    let status = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let solution = std::fs::read_to_string(out_dir.join("solution.csv")).unwrap();
    for line in solution.lines().skip(1) {
        for field in line.split(',').skip(1) {
            let v: f64 = field.parse().unwrap();
            assert!(v.is_finite() && v > 0.0);
        }
    }
}
