//! Declarative run configuration: a single JSON document naming the
//! command, grid, driver triplet, and the command-specific section.
//!
//! Parsing is strict (unknown keys are rejected by the deserializer);
//! validation reports the offending key path. Coefficient functions come
//! from a fixed named catalog with numeric parameters, keeping runs fully
//! reproducible from the config bytes.

use serde::Deserialize;

use crate::levy::LevyTriplet;
use crate::paths::TimeGrid;
use crate::rng::JumpLaw;
use crate::validate::FiltrationEvent;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Integrate,
    Solve,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Integrate => "integrate",
            Command::Solve => "solve",
            Command::Validate => "validate",
        }
    }
}

/// Validated run configuration.
#[derive(Debug)]
pub struct RunConfig {
    pub command: Command,
    pub grid: TimeGrid,
    pub n_paths: usize,
    pub seed: u64,
    pub driver: LevyTriplet,
    pub output_dir: std::path::PathBuf,
    pub action: Action,
}

#[derive(Debug)]
pub enum Action {
    Simulate {
        /// Slope subtracted from every path after simulation.
        compensate: Option<f64>,
    },
    Integrate {
        op: IntegrateOp,
        integrand: IntegrandSpec,
        rule: crate::integrate::EndpointRule,
    },
    Solve(SolveAction),
    Validate(Vec<CheckSpec>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrateOp {
    LeftRiemann,
    Stieltjes,
    QvGrid,
    QvExact,
    TotalVariationGrid,
    TotalVariationExact,
}

/// Deterministic integrand catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum IntegrandSpec {
    /// The driver path itself.
    Driver,
    Const(f64),
    /// `H(s) = s`.
    Time,
    /// `H(s) = a exp(-sin s)`.
    ExpNegSin(f64),
}

impl IntegrandSpec {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            IntegrandSpec::Driver => unreachable!("driver integrand is taken from paths"),
            IntegrandSpec::Const(c) => c,
            IntegrandSpec::Time => s,
            IntegrandSpec::ExpNegSin(a) => a * (-s.sin()).exp(),
        }
    }
}

/// Two-argument coefficient catalog; the second argument is the time for
/// plain equations and the delayed state for delay equations.
#[derive(Debug, Clone, PartialEq)]
pub enum Coeff {
    Zero,
    Const(f64),
    /// `a * x`.
    LinearState(f64),
    /// `a * y`.
    LinearArg(f64),
    /// `a * x + b * y + c`.
    Affine(f64, f64, f64),
    /// `r exp(q y - x) / (1 + exp(p y)) - gamma`.
    MackeyGlass {
        r: f64,
        q: f64,
        p: f64,
        gamma: f64,
    },
}

impl Coeff {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            Coeff::Zero => 0.0,
            Coeff::Const(c) => c,
            Coeff::LinearState(a) => a * x,
            Coeff::LinearArg(a) => a * y,
            Coeff::Affine(a, b, c) => a * x + b * y + c,
            Coeff::MackeyGlass { r, q, p, gamma } => {
                r * (q * y - x).exp() / (1.0 + (p * y).exp()) - gamma
            }
        }
    }
}

/// History function catalog for delay problems, on `[-1, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub enum History {
    Const(f64),
    /// `a * s + b`.
    Affine(f64, f64),
}

impl History {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            History::Const(c) => c,
            History::Affine(a, b) => a * s + b,
        }
    }
}

#[derive(Debug)]
pub enum SolveAction {
    EulerMaruyama {
        drift: Coeff,
        diffusion: Coeff,
        x0: f64,
    },
    Theta {
        alpha: f64,
        beta: f64,
        theta: f64,
        y0: f64,
    },
    BsExplicit {
        alpha: f64,
        beta: f64,
        y0: f64,
    },
    EulerSdde {
        drift: Coeff,
        diffusion: Coeff,
        history: History,
    },
}

/// One validation check with its parameters.
#[derive(Debug, Clone)]
pub enum CheckSpec {
    PoissonPmf { lambda: f64, t: f64 },
    Cf { time: f64, u: Vec<f64> },
    Martingale { times: Vec<f64> },
    Qv,
    Compensator { lambda: f64, t: f64 },
    DoleansDensity { s: f64, t: f64, event: FiltrationEvent },
}

// ---------------------------------------------------------------------
// Raw (serde) layer.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: String,
    grid: RawGrid,
    n_paths: usize,
    #[serde(default)]
    seed: u64,
    driver: RawDriver,
    #[serde(default)]
    output_dir: Option<String>,
    #[serde(default)]
    simulate: Option<RawSimulate>,
    #[serde(default)]
    integrate: Option<RawIntegrate>,
    #[serde(default)]
    solve: Option<RawSolve>,
    #[serde(default)]
    validate: Option<RawValidate>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    horizon: f64,
    dt: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDriver {
    b: f64,
    sigma2: f64,
    lambda: f64,
    jump_law: RawJumpLaw,
    #[serde(default = "default_cutoff")]
    cutoff: f64,
}

fn default_cutoff() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJumpLaw {
    kind: String,
    #[serde(default)]
    params: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulate {
    #[serde(default)]
    compensate: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrate {
    op: String,
    #[serde(default)]
    integrand: Option<RawNamed>,
    #[serde(default)]
    rule: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNamed {
    kind: String,
    #[serde(default)]
    params: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolve {
    scheme: String,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    beta: Option<f64>,
    #[serde(default)]
    theta: Option<f64>,
    #[serde(default)]
    y0: Option<f64>,
    #[serde(default)]
    x0: Option<f64>,
    #[serde(default)]
    drift: Option<RawNamed>,
    #[serde(default)]
    diffusion: Option<RawNamed>,
    #[serde(default)]
    history: Option<RawNamed>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawValidate {
    checks: Vec<RawCheck>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCheck {
    kind: String,
    #[serde(default)]
    lambda: Option<f64>,
    #[serde(default)]
    t: Option<f64>,
    #[serde(default)]
    time: Option<f64>,
    #[serde(default)]
    u: Option<Vec<f64>>,
    #[serde(default)]
    times: Option<Vec<f64>>,
    #[serde(default)]
    s: Option<f64>,
    #[serde(default)]
    event: Option<RawEvent>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    kind: String,
    #[serde(default)]
    level: Option<f64>,
}

fn bad(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

fn finite(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, format!("must be finite, got {v}")))
    }
}

fn require<T>(key: &str, v: Option<T>) -> Result<T> {
    v.ok_or_else(|| bad(key, "missing required field"))
}

fn params_exact(key: &str, params: &[f64], n: usize) -> Result<()> {
    if params.len() != n {
        return Err(bad(
            key,
            format!("expected {n} parameter(s), got {}", params.len()),
        ));
    }
    for (i, p) in params.iter().enumerate() {
        finite(&format!("{key}[{i}]"), *p)?;
    }
    Ok(())
}

fn jump_law(key: &str, raw: &RawJumpLaw) -> Result<JumpLaw> {
    let mk = |r: crate::Result<JumpLaw>| r.map_err(|e| bad(key, e.to_string()));
    match raw.kind.as_str() {
        "dirac" => {
            params_exact(&format!("{key}.params"), &raw.params, 1)?;
            mk(JumpLaw::dirac(raw.params[0]))
        }
        "uniform" => {
            params_exact(&format!("{key}.params"), &raw.params, 2)?;
            mk(JumpLaw::uniform(raw.params[0], raw.params[1]))
        }
        "two_point" => {
            params_exact(&format!("{key}.params"), &raw.params, 1)?;
            mk(JumpLaw::two_point(raw.params[0]))
        }
        "gaussian" => {
            params_exact(&format!("{key}.params"), &raw.params, 1)?;
            mk(JumpLaw::gaussian(raw.params[0]))
        }
        other => Err(bad(
            &format!("{key}.kind"),
            format!("unknown jump law `{other}`"),
        )),
    }
}

fn coeff(key: &str, raw: &RawNamed) -> Result<Coeff> {
    let pkey = format!("{key}.params");
    match raw.kind.as_str() {
        "zero" => {
            params_exact(&pkey, &raw.params, 0)?;
            Ok(Coeff::Zero)
        }
        "const" => {
            params_exact(&pkey, &raw.params, 1)?;
            Ok(Coeff::Const(raw.params[0]))
        }
        "linear_state" => {
            params_exact(&pkey, &raw.params, 1)?;
            Ok(Coeff::LinearState(raw.params[0]))
        }
        "linear_arg" => {
            params_exact(&pkey, &raw.params, 1)?;
            Ok(Coeff::LinearArg(raw.params[0]))
        }
        "affine" => {
            params_exact(&pkey, &raw.params, 3)?;
            Ok(Coeff::Affine(raw.params[0], raw.params[1], raw.params[2]))
        }
        "mackey_glass" => {
            params_exact(&pkey, &raw.params, 4)?;
            Ok(Coeff::MackeyGlass {
                r: raw.params[0],
                q: raw.params[1],
                p: raw.params[2],
                gamma: raw.params[3],
            })
        }
        other => Err(bad(
            &format!("{key}.kind"),
            format!("unknown coefficient `{other}`"),
        )),
    }
}

fn history(key: &str, raw: &RawNamed) -> Result<History> {
    let pkey = format!("{key}.params");
    match raw.kind.as_str() {
        "const" => {
            params_exact(&pkey, &raw.params, 1)?;
            Ok(History::Const(raw.params[0]))
        }
        "affine" => {
            params_exact(&pkey, &raw.params, 2)?;
            Ok(History::Affine(raw.params[0], raw.params[1]))
        }
        other => Err(bad(
            &format!("{key}.kind"),
            format!("unknown history function `{other}`"),
        )),
    }
}

fn integrand(key: &str, raw: &RawNamed) -> Result<IntegrandSpec> {
    let pkey = format!("{key}.params");
    match raw.kind.as_str() {
        "driver" => {
            params_exact(&pkey, &raw.params, 0)?;
            Ok(IntegrandSpec::Driver)
        }
        "const" => {
            params_exact(&pkey, &raw.params, 1)?;
            Ok(IntegrandSpec::Const(raw.params[0]))
        }
        "time" => {
            params_exact(&pkey, &raw.params, 0)?;
            Ok(IntegrandSpec::Time)
        }
        "exp_neg_sin" => {
            params_exact(&pkey, &raw.params, 1)?;
            Ok(IntegrandSpec::ExpNegSin(raw.params[0]))
        }
        other => Err(bad(
            &format!("{key}.kind"),
            format!("unknown integrand `{other}`"),
        )),
    }
}

fn check(key: &str, raw: &RawCheck) -> Result<CheckSpec> {
    match raw.kind.as_str() {
        "poisson_pmf" => Ok(CheckSpec::PoissonPmf {
            lambda: finite(&format!("{key}.lambda"), require(&format!("{key}.lambda"), raw.lambda)?)?,
            t: finite(&format!("{key}.t"), require(&format!("{key}.t"), raw.t)?)?,
        }),
        "cf" => Ok(CheckSpec::Cf {
            time: finite(&format!("{key}.time"), require(&format!("{key}.time"), raw.time)?)?,
            u: require(&format!("{key}.u"), raw.u.clone())?,
        }),
        "martingale" => Ok(CheckSpec::Martingale {
            times: require(&format!("{key}.times"), raw.times.clone())?,
        }),
        "qv" => Ok(CheckSpec::Qv),
        "compensator" => Ok(CheckSpec::Compensator {
            lambda: finite(&format!("{key}.lambda"), require(&format!("{key}.lambda"), raw.lambda)?)?,
            t: finite(&format!("{key}.t"), require(&format!("{key}.t"), raw.t)?)?,
        }),
        "doleans_density" => {
            let event = match &raw.event {
                None => FiltrationEvent::All,
                Some(ev) => match ev.kind.as_str() {
                    "all" => FiltrationEvent::All,
                    "none" => FiltrationEvent::None,
                    "above" => FiltrationEvent::ValueAbove(require(
                        &format!("{key}.event.level"),
                        ev.level,
                    )?),
                    other => {
                        return Err(bad(
                            &format!("{key}.event.kind"),
                            format!("unknown event `{other}`"),
                        ))
                    }
                },
            };
            Ok(CheckSpec::DoleansDensity {
                s: finite(&format!("{key}.s"), require(&format!("{key}.s"), raw.s)?)?,
                t: finite(&format!("{key}.t"), require(&format!("{key}.t"), raw.t)?)?,
                event,
            })
        }
        other => Err(bad(
            &format!("{key}.kind"),
            format!("unknown check `{other}`"),
        )),
    }
}

/// Parses and validates a config document. JSON syntax failures surface as
/// [`Error::Json`]; every semantic failure as [`Error::Config`] naming the
/// key.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = serde_json::from_str(text)?;
    let command = match raw.command.as_str() {
        "simulate" => Command::Simulate,
        "integrate" => Command::Integrate,
        "solve" => Command::Solve,
        "validate" => Command::Validate,
        other => return Err(bad("command", format!("unknown command `{other}`"))),
    };
    finite("grid.horizon", raw.grid.horizon)?;
    finite("grid.dt", raw.grid.dt)?;
    let grid = TimeGrid::new(raw.grid.horizon, raw.grid.dt)
        .map_err(|e| bad("grid", e.to_string()))?;
    if raw.n_paths == 0 {
        return Err(bad("n_paths", "must be at least 1"));
    }
    let law = jump_law("driver.jump_law", &raw.driver.jump_law)?;
    finite("driver.b", raw.driver.b)?;
    finite("driver.sigma2", raw.driver.sigma2)?;
    finite("driver.lambda", raw.driver.lambda)?;
    finite("driver.cutoff", raw.driver.cutoff)?;
    let driver = LevyTriplet::new(
        raw.driver.b,
        raw.driver.sigma2,
        raw.driver.lambda,
        law,
        raw.driver.cutoff,
    )
    .map_err(|e| bad("driver", e.to_string()))?;

    let action = match command {
        Command::Simulate => {
            let compensate = raw.simulate.as_ref().and_then(|s| s.compensate);
            if let Some(c) = compensate {
                finite("simulate.compensate", c)?;
            }
            Action::Simulate { compensate }
        }
        Command::Integrate => {
            let section = require("integrate", raw.integrate.as_ref())?;
            let op = match section.op.as_str() {
                "left_riemann" => IntegrateOp::LeftRiemann,
                "stieltjes" => IntegrateOp::Stieltjes,
                "qv_grid" => IntegrateOp::QvGrid,
                "qv_exact" => IntegrateOp::QvExact,
                "total_variation_grid" => IntegrateOp::TotalVariationGrid,
                "total_variation_exact" => IntegrateOp::TotalVariationExact,
                other => {
                    return Err(bad("integrate.op", format!("unknown operation `{other}`")))
                }
            };
            let spec = match (&section.integrand, op) {
                (Some(raw_i), IntegrateOp::LeftRiemann | IntegrateOp::Stieltjes) => {
                    integrand("integrate.integrand", raw_i)?
                }
                (None, IntegrateOp::LeftRiemann | IntegrateOp::Stieltjes) => {
                    return Err(bad("integrate.integrand", "missing required field"))
                }
                _ => IntegrandSpec::Driver,
            };
            let rule = match section.rule.as_deref() {
                None | Some("left_limit") => crate::integrate::EndpointRule::LeftLimit,
                Some("node_value") => crate::integrate::EndpointRule::NodeValue,
                Some(other) => {
                    return Err(bad("integrate.rule", format!("unknown rule `{other}`")))
                }
            };
            Action::Integrate {
                op,
                integrand: spec,
                rule,
            }
        }
        Command::Solve => {
            let section = require("solve", raw.solve.as_ref())?;
            let act = match section.scheme.as_str() {
                "euler_maruyama" => SolveAction::EulerMaruyama {
                    drift: coeff("solve.drift", require("solve.drift", section.drift.as_ref())?)?,
                    diffusion: coeff(
                        "solve.diffusion",
                        require("solve.diffusion", section.diffusion.as_ref())?,
                    )?,
                    x0: finite("solve.x0", require("solve.x0", section.x0)?)?,
                },
                "theta" => {
                    let theta = finite("solve.theta", require("solve.theta", section.theta)?)?;
                    if !(0.0..=1.0).contains(&theta) {
                        return Err(bad("solve.theta", "must lie in [0, 1]"));
                    }
                    SolveAction::Theta {
                        alpha: finite("solve.alpha", require("solve.alpha", section.alpha)?)?,
                        beta: finite("solve.beta", require("solve.beta", section.beta)?)?,
                        theta,
                        y0: finite("solve.y0", require("solve.y0", section.y0)?)?,
                    }
                }
                "bs_explicit" => SolveAction::BsExplicit {
                    alpha: finite("solve.alpha", require("solve.alpha", section.alpha)?)?,
                    beta: finite("solve.beta", require("solve.beta", section.beta)?)?,
                    y0: finite("solve.y0", require("solve.y0", section.y0)?)?,
                },
                "euler_sdde" => {
                    // The scheme needs an integer number of steps per unit delay.
                    let m = (1.0 / grid.dt()).round();
                    if m < 1.0 || (m * grid.dt() - 1.0).abs() > 1e-9 {
                        return Err(bad(
                            "grid.dt",
                            format!("1/dt = {} is not an integer; required for the delay scheme", 1.0 / grid.dt()),
                        ));
                    }
                    SolveAction::EulerSdde {
                        drift: coeff(
                            "solve.drift",
                            require("solve.drift", section.drift.as_ref())?,
                        )?,
                        diffusion: coeff(
                            "solve.diffusion",
                            require("solve.diffusion", section.diffusion.as_ref())?,
                        )?,
                        history: history(
                            "solve.history",
                            require("solve.history", section.history.as_ref())?,
                        )?,
                    }
                }
                other => return Err(bad("solve.scheme", format!("unknown scheme `{other}`"))),
            };
            Action::Solve(act)
        }
        Command::Validate => {
            let section = require("validate", raw.validate.as_ref())?;
            if section.checks.is_empty() {
                return Err(bad("validate.checks", "must list at least one check"));
            }
            let checks = section
                .checks
                .iter()
                .enumerate()
                .map(|(i, c)| check(&format!("validate.checks[{i}]"), c))
                .collect::<Result<Vec<_>>>()?;
            Action::Validate(checks)
        }
    };

    Ok(RunConfig {
        command,
        grid,
        n_paths: raw.n_paths,
        seed: raw.seed,
        driver,
        output_dir: raw.output_dir.unwrap_or_else(|| "out".into()).into(),
        action,
    })
}
