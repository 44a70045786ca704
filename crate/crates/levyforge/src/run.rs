//! Executes a validated [`RunConfig`]: simulate the driver, apply the
//! requested pipeline, and write the outputs deterministically. Nothing in
//! here reads the clock, the environment, or the locale; output bytes are
//! a function of the config alone.

use std::path::Path;

use crate::config::{Action, CheckSpec, IntegrateOp, IntegrandSpec, RunConfig, SolveAction};
use crate::csv;
use crate::integrate::{self, Integrand, IntegralSet};
use crate::paths::{self, PathSet};
use crate::sde::{self, SddeProblem, SdeProblem, SolveResult};
use crate::validate::{self, McReport, Rectangle, DEFAULT_CONFIDENCE_MULTIPLE};
use crate::{Error, Result};

/// Runs the configured command; returns the process exit code (0 success;
/// 1 when a validate run has a failing check).
pub fn execute(cfg: &RunConfig) -> Result<i32> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    match &cfg.action {
        Action::Simulate { compensate } => {
            let mut ps = simulate_driver(cfg, cfg.seed)?;
            if let Some(rate) = compensate {
                ps = paths::compensate(ps, *rate);
            }
            write_driver(&cfg.output_dir, &ps)?;
            Ok(0)
        }
        Action::Integrate {
            op,
            integrand,
            rule,
        } => {
            let ps = simulate_driver(cfg, cfg.seed)?;
            let integral = run_integral(*op, integrand, *rule, &ps)?;
            write_driver(&cfg.output_dir, &ps)?;
            let times: Vec<f64> = (0..=ps.grid.step_count()).map(|k| ps.grid.node(k)).collect();
            csv::write_columns(&cfg.output_dir.join("integral.csv"), &times, &integral.values)?;
            Ok(0)
        }
        Action::Solve(action) => {
            let ps = simulate_driver(cfg, cfg.seed)?;
            let sol = run_solve(action, &ps)?;
            if sol.diverged.iter().all(|&d| d) {
                return Err(Error::AllPathsDiverged(sol.n_paths()));
            }
            write_driver(&cfg.output_dir, &ps)?;
            let times: Vec<f64> = (0..sol.paths[0].len()).map(|j| sol.time(j)).collect();
            csv::write_columns(&cfg.output_dir.join("solution.csv"), &times, &sol.paths)?;
            Ok(0)
        }
        Action::Validate(checks) => {
            let mut lines = Vec::new();
            let mut records = Vec::new();
            let mut all_pass = true;
            for (idx, spec) in checks.iter().enumerate() {
                let seed = check_seed(cfg.seed, idx);
                let (reports, retried) =
                    validate::with_retry(seed, |s| run_check(cfg, spec, s))?;
                for r in &reports {
                    all_pass &= r.pass;
                    let mut line = r.line();
                    if retried {
                        line.push_str(" (retried)");
                    }
                    lines.push(line);
                }
                records.extend(reports);
            }
            lines.push(format!(
                "overall: {}",
                if all_pass { "PASS" } else { "FAIL" }
            ));
            write_reports(&cfg.output_dir, &lines, &records)?;
            Ok(if all_pass { 0 } else { 1 })
        }
    }
}

fn simulate_driver(cfg: &RunConfig, seed: u64) -> Result<PathSet> {
    paths::simulate_jump_diffusion(cfg.grid, cfg.n_paths, &cfg.driver, seed)
}

fn write_driver(dir: &Path, ps: &PathSet) -> Result<()> {
    csv::write_paths(&dir.join("paths.csv"), ps)?;
    csv::write_jumps(&dir.join("jumps.csv"), ps)
}

fn run_integral(
    op: IntegrateOp,
    spec: &IntegrandSpec,
    rule: integrate::EndpointRule,
    ps: &PathSet,
) -> Result<IntegralSet> {
    let func = |s: f64| spec.eval(s);
    let integrand = match spec {
        IntegrandSpec::Driver => Integrand::Paths(ps),
        _ => Integrand::Func(&func),
    };
    match op {
        IntegrateOp::LeftRiemann => integrate::left_riemann(&integrand, ps),
        IntegrateOp::Stieltjes => integrate::stieltjes(&integrand, ps, rule),
        IntegrateOp::QvGrid => integrate::qv_grid(ps, ps),
        IntegrateOp::QvExact => Ok(integrate::qv_exact(ps)),
        IntegrateOp::TotalVariationGrid => Ok(integrate::total_variation_grid(ps)),
        IntegrateOp::TotalVariationExact => integrate::total_variation_exact(ps),
    }
}

fn run_solve(action: &SolveAction, driver: &PathSet) -> Result<SolveResult> {
    match action {
        SolveAction::EulerMaruyama {
            drift,
            diffusion,
            x0,
        } => {
            let p = SdeProblem {
                drift: |x, t| drift.eval(x, t),
                diffusion: |x, t| diffusion.eval(x, t),
                x0: *x0,
            };
            Ok(sde::euler_maruyama(&p, driver))
        }
        SolveAction::Theta {
            alpha,
            beta,
            theta,
            y0,
        } => sde::theta_linear_bs(*alpha, *beta, *theta, *y0, driver),
        SolveAction::BsExplicit { alpha, beta, y0 } => {
            Ok(sde::bs_explicit(*alpha, *beta, *y0, driver))
        }
        SolveAction::EulerSdde {
            drift,
            diffusion,
            history,
        } => {
            let p = SddeProblem {
                drift: |x, y| drift.eval(x, y),
                diffusion: |x, y| diffusion.eval(x, y),
                history: |s| history.eval(s),
            };
            sde::euler_sdde(&p, driver)
        }
    }
}

fn run_check(cfg: &RunConfig, spec: &CheckSpec, seed: u64) -> Result<Vec<McReport>> {
    let m = DEFAULT_CONFIDENCE_MULTIPLE;
    match spec {
        CheckSpec::PoissonPmf { lambda, t } => {
            let ps = paths::simulate_poisson(cfg.grid, cfg.n_paths, *lambda, seed)?;
            validate::poisson_pmf_check(&ps, *lambda, *t, m)
        }
        CheckSpec::Cf { time, u } => {
            let ps = paths::simulate_jump_diffusion(cfg.grid, cfg.n_paths, &cfg.driver, seed)?;
            validate::cf_check(&ps, &cfg.driver, *time, u, m)
        }
        CheckSpec::Martingale { times } => {
            let ps = paths::simulate_jump_diffusion(cfg.grid, cfg.n_paths, &cfg.driver, seed)?;
            validate::martingale_check(&ps, times, m)
        }
        CheckSpec::Qv => {
            let ps = paths::simulate_jump_diffusion(cfg.grid, cfg.n_paths, &cfg.driver, seed)?;
            Ok(vec![validate::qv_check(&ps, &cfg.driver, m)?])
        }
        CheckSpec::Compensator { lambda, t } => validate::compensator_check(
            cfg.grid,
            cfg.n_paths,
            *lambda,
            cfg.driver.jump_law,
            *t,
            seed,
            m,
        ),
        CheckSpec::DoleansDensity { s, t, event } => {
            let ps = paths::simulate_jump_diffusion(cfg.grid, cfg.n_paths, &cfg.driver, seed)?;
            let rect = Rectangle {
                s: *s,
                t: *t,
                event: *event,
            };
            validate::doleans_density_check(&ps, &cfg.driver, &[rect], m)
        }
    }
}

fn check_seed(root: u64, idx: usize) -> u64 {
    root.wrapping_add((idx as u64).wrapping_mul(0xA24B_AED4_963E_E407))
}

fn write_reports(dir: &Path, lines: &[String], records: &[McReport]) -> Result<()> {
    use std::io::Write;
    let mut txt = std::io::BufWriter::new(std::fs::File::create(dir.join("report.txt"))?);
    for line in lines {
        writeln!(txt, "{line}")?;
    }
    txt.flush()?;
    let mut jsonl = std::io::BufWriter::new(std::fs::File::create(dir.join("report.jsonl"))?);
    for r in records {
        writeln!(jsonl, "{}", serde_json::to_string(r)?)?;
    }
    jsonl.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn run_in_tempdir(text: &str) -> (i32, std::path::PathBuf) {
        let dir = std::env::temp_dir().join(format!(
            "levyforge-run-test-{}-{:?}",
            std::process::id(),
            std::thread::current().id()
        ));
        let _ = std::fs::remove_dir_all(&dir);
        let mut cfg = parse_config(text).unwrap();
        cfg.output_dir = dir.clone();
        let code = execute(&cfg).unwrap();
        (code, dir)
    }

    #[test]
    fn simulate_writes_paths_and_jumps() {
        let text = r#"{
          "command": "simulate",
          "grid": {"horizon": 1.0, "dt": 0.1},
          "n_paths": 3,
          "seed": 7,
          "driver": {"b": 0.0, "sigma2": 1.0, "lambda": 2.0,
                     "jump_law": {"kind": "uniform", "params": [-1.0, 1.0]}}
        }"#;
        let (code, dir) = run_in_tempdir(text);
        assert_eq!(code, 0);
        let paths = std::fs::read_to_string(dir.join("paths.csv")).unwrap();
        assert!(paths.starts_with("t,path_0,path_1,path_2\n"));
        assert_eq!(paths.lines().count(), 12);
        let jumps = std::fs::read_to_string(dir.join("jumps.csv")).unwrap();
        assert!(jumps.starts_with("path_index,time,size\n"));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn validate_exit_zero_on_clean_suite() {
        let text = r#"{
          "command": "validate",
          "grid": {"horizon": 2.0, "dt": 0.01},
          "n_paths": 20000,
          "seed": 3,
          "driver": {"b": 0.0, "sigma2": 1.0, "lambda": 10.0,
                     "jump_law": {"kind": "uniform", "params": [-1.0, 1.0]}},
          "validate": {"checks": [
            {"kind": "poisson_pmf", "lambda": 1.0, "t": 1.0},
            {"kind": "cf", "time": 1.0, "u": [-1.0, 1.0]},
            {"kind": "qv"},
            {"kind": "compensator", "lambda": 1.0, "t": 2.0}
          ]}
        }"#;
        let (code, dir) = run_in_tempdir(text);
        assert_eq!(code, 0);
        let report = std::fs::read_to_string(dir.join("report.txt")).unwrap();
        assert!(report.contains("overall: PASS"), "{report}");
        let jsonl = std::fs::read_to_string(dir.join("report.jsonl")).unwrap();
        for line in jsonl.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v.get("check_id").is_some());
            assert!(v.get("estimate").is_some());
            assert!(v.get("pass").is_some());
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
