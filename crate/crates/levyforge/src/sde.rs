//! Numerical schemes for (delay) stochastic differential equations driven
//! by Lévy paths, plus the exact stochastic-exponential references they are
//! compared against.
//!
//! All schemes consume the driver's node increments
//! `dL_n = L(tau_{n+1}) - L(tau_n)`, so jump mass is deposited per step;
//! only the explicit references ([`bs_explicit`], [`doleans_exponential`])
//! read the exact within-step jump records. Running every scheme over one
//! driver `PathSet` compares them on identical noise.

use crate::paths::{PathSet, SamplePath, TimeGrid};
use crate::{Error, Result};

/// A path whose state left the representable regime is cut here.
const DIVERGENCE_LIMIT: f64 = 1e300;

/// Drift and diffusion coefficients `a(x, t)`, `b(x, t)` with the initial
/// value; the driver is supplied at solve time.
pub struct SdeProblem<F, G>
where
    F: Fn(f64, f64) -> f64 + Sync,
    G: Fn(f64, f64) -> f64 + Sync,
{
    pub drift: F,
    pub diffusion: G,
    pub x0: f64,
}

/// Delay-1 problem: coefficients `f(x, x_delay)`, `g(x, x_delay)` and the
/// history function on `[-1, 0]`.
pub struct SddeProblem<F, G, H>
where
    F: Fn(f64, f64) -> f64 + Sync,
    G: Fn(f64, f64) -> f64 + Sync,
    H: Fn(f64) -> f64 + Sync,
{
    pub drift: F,
    pub diffusion: G,
    pub history: H,
}

/// Solution values on the driver grid; `history_len` leading entries per
/// path sit at negative times (delay problems only).
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub grid: TimeGrid,
    /// `paths[i]` has `history_len + step_count + 1` entries; nodes after a
    /// divergence hold NaN.
    pub paths: Vec<Vec<f64>>,
    /// Per path: did the state leave the representable regime.
    pub diverged: Vec<bool>,
    pub history_len: usize,
}

impl SolveResult {
    /// Time of entry `j` of a path: `(j - history_len) * dt`.
    pub fn time(&self, j: usize) -> f64 {
        (j as f64 - self.history_len as f64) * self.grid.dt()
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    /// Final value per path (NaN if diverged).
    pub fn terminal(&self, i: usize) -> f64 {
        *self.paths[i].last().expect("nonempty")
    }
}

fn blows_up(x: f64) -> bool {
    !x.is_finite() || x.abs() > DIVERGENCE_LIMIT
}

/// Explicit Euler step recurrence
/// `X_{n+1} = X_n + a(X_n, tau_n) dt + b(X_n, tau_n) dL_n`.
pub fn euler_maruyama<F, G>(p: &SdeProblem<F, G>, driver: &PathSet) -> SolveResult
where
    F: Fn(f64, f64) -> f64 + Sync,
    G: Fn(f64, f64) -> f64 + Sync,
{
    let grid = driver.grid;
    let n = grid.step_count();
    let dt = grid.dt();
    let mut paths = Vec::with_capacity(driver.n_paths());
    let mut diverged = Vec::with_capacity(driver.n_paths());
    for path in &driver.paths {
        let mut out = Vec::with_capacity(n + 1);
        let mut x = p.x0;
        out.push(x);
        let mut dead = false;
        for j in 0..n {
            if dead {
                out.push(f64::NAN);
                continue;
            }
            let tau = grid.node(j);
            let dl = path.values[j + 1] - path.values[j];
            x = x + (p.drift)(x, tau) * dt + (p.diffusion)(x, tau) * dl;
            if blows_up(x) {
                dead = true;
                out.push(f64::NAN);
            } else {
                out.push(x);
            }
        }
        paths.push(out);
        diverged.push(dead);
    }
    SolveResult {
        grid,
        paths,
        diverged,
        history_len: 0,
    }
}

/// One-parameter implicit/explicit blend for the linear equation with
/// multiplicative noise: the trajectory is the running product
/// `Y_{n+1} = (1 - theta a dt)^{-1} (1 + (1 - theta) a dt + b dL_n) Y_n`.
///
/// `theta = 0` is the explicit Euler step, `theta = 1` the backward one.
pub fn theta_linear_bs(
    alpha: f64,
    beta: f64,
    theta: f64,
    y0: f64,
    driver: &PathSet,
) -> Result<SolveResult> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    let grid = driver.grid;
    let dt = grid.dt();
    let implicit = 1.0 - theta * alpha * dt;
    if implicit == 0.0 {
        return Err(Error::SingularImplicitFactor);
    }
    let inv = 1.0 / implicit;
    let explicit = 1.0 + (1.0 - theta) * alpha * dt;
    let n = grid.step_count();
    let mut paths = Vec::with_capacity(driver.n_paths());
    let mut diverged = Vec::with_capacity(driver.n_paths());
    for path in &driver.paths {
        let mut out = Vec::with_capacity(n + 1);
        let mut y = y0;
        out.push(y);
        let mut dead = false;
        for j in 0..n {
            if dead {
                out.push(f64::NAN);
                continue;
            }
            let dl = path.values[j + 1] - path.values[j];
            y *= inv * (explicit + beta * dl);
            if blows_up(y) {
                dead = true;
                out.push(f64::NAN);
            } else {
                out.push(y);
            }
        }
        paths.push(out);
        diverged.push(dead);
    }
    Ok(SolveResult {
        grid,
        paths,
        diverged,
        history_len: 0,
    })
}

/// Stochastic exponential of a path starting at zero:
/// `Z(t) = exp(X(t) - sigma2 t / 2) * prod_{events <= t} (1 + dX) exp(-dX)`,
/// the product running over the exact jump records. A jump of size -1
/// freezes the path at zero from that point on.
///
/// The returned path carries node values only; no jump records or variance
/// metadata are propagated.
pub fn doleans_exponential(x: &SamplePath) -> SamplePath {
    let n = x.grid.step_count();
    let mut values = Vec::with_capacity(n + 1);
    let mut product = 1.0;
    let mut e = 0usize;
    values.push((x.values[0] - 0.0).exp() * product);
    for k in 1..=n {
        let tau = x.grid.node(k);
        while e < x.jumps.len() && x.jumps[e].time <= tau {
            let dx = x.jumps[e].size;
            product *= (1.0 + dx) * (-dx).exp();
            e += 1;
        }
        values.push((x.values[k] - 0.5 * x.sigma2 * tau).exp() * product);
    }
    SamplePath {
        grid: x.grid,
        values,
        jumps: Vec::new(),
        drift_rate: 0.0,
        sigma2: 0.0,
    }
}

/// Direct evaluation of the explicit solution of
/// `dY = alpha Y dt + beta Y- dL` on the driver's exact jump records:
///
/// ```text
/// Y(t) = y0 exp((alpha - beta^2 sigma2 / 2) t + beta L(t))
///        * prod_{events <= t} (1 + beta dL) exp(-beta dL).
/// ```
pub fn bs_explicit(alpha: f64, beta: f64, y0: f64, driver: &PathSet) -> SolveResult {
    let grid = driver.grid;
    let n = grid.step_count();
    let mut paths = Vec::with_capacity(driver.n_paths());
    let mut diverged = Vec::with_capacity(driver.n_paths());
    for path in &driver.paths {
        let rate = alpha - 0.5 * beta * beta * path.sigma2;
        let mut out = Vec::with_capacity(n + 1);
        let mut product = 1.0;
        let mut e = 0usize;
        out.push(y0);
        let mut dead = false;
        for k in 1..=n {
            let tau = grid.node(k);
            while e < path.jumps.len() && path.jumps[e].time <= tau {
                let dl = beta * path.jumps[e].size;
                product *= (1.0 + dl) * (-dl).exp();
                e += 1;
            }
            let y = y0 * (rate * tau + beta * path.values[k]).exp() * product;
            if dead || blows_up(y) {
                dead = true;
                out.push(f64::NAN);
            } else {
                out.push(y);
            }
        }
        paths.push(out);
        diverged.push(dead);
    }
    SolveResult {
        grid,
        paths,
        diverged,
        history_len: 0,
    }
}

/// Euler step scheme for the delay-1 equation
/// `X_{n+1} = X_n + f(X_n, X_{n-M}) dt + g(X_n, X_{n-M}) dL_n`, where
/// `M dt = 1`. The state array is seeded with the history on `[-1, 0]` and
/// the result keeps those `M` leading entries (rows at negative times).
pub fn euler_sdde<F, G, H>(p: &SddeProblem<F, G, H>, driver: &PathSet) -> Result<SolveResult>
where
    F: Fn(f64, f64) -> f64 + Sync,
    G: Fn(f64, f64) -> f64 + Sync,
    H: Fn(f64) -> f64 + Sync,
{
    let grid = driver.grid;
    let dt = grid.dt();
    let m_real = 1.0 / dt;
    let m = m_real.round();
    if m < 1.0 || (m * dt - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "delay step count 1/dt = {m_real} is not an integer"
        )));
    }
    let m = m as usize;
    let n = grid.step_count();
    let mut paths = Vec::with_capacity(driver.n_paths());
    let mut diverged = Vec::with_capacity(driver.n_paths());
    for path in &driver.paths {
        let mut out = Vec::with_capacity(m + n + 1);
        for k in 0..=m {
            out.push((p.history)((k as f64 - m as f64) * dt));
        }
        let mut dead = false;
        for j in 0..n {
            if dead {
                out.push(f64::NAN);
                continue;
            }
            let x = out[m + j];
            let x_delay = out[j];
            let dl = path.values[j + 1] - path.values[j];
            let next = x + (p.drift)(x, x_delay) * dt + (p.diffusion)(x, x_delay) * dl;
            if blows_up(next) {
                dead = true;
                out.push(f64::NAN);
            } else {
                out.push(next);
            }
        }
        paths.push(out);
        diverged.push(dead);
    }
    Ok(SolveResult {
        grid,
        paths,
        diverged,
        history_len: m,
    })
}

/// Per-path and overall max-abs distance between two solutions on the same
/// grid; paths diverged in either input are excluded and counted.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    /// `None` for excluded (diverged) paths.
    pub per_path: Vec<Option<f64>>,
    /// Max over included paths; 0 when none are included.
    pub max_abs: f64,
    pub excluded: usize,
}

pub fn max_abs_error(a: &SolveResult, b: &SolveResult) -> Result<ErrorReport> {
    if a.grid != b.grid || a.history_len != b.history_len {
        return Err(Error::GridMismatch(
            "solutions live on different grids".into(),
        ));
    }
    if a.n_paths() != b.n_paths() {
        return Err(Error::GridMismatch(format!(
            "path counts differ: {} vs {}",
            a.n_paths(),
            b.n_paths()
        )));
    }
    let mut per_path = Vec::with_capacity(a.n_paths());
    let mut max_abs = 0.0f64;
    let mut excluded = 0usize;
    for i in 0..a.n_paths() {
        if a.diverged[i] || b.diverged[i] {
            per_path.push(None);
            excluded += 1;
            continue;
        }
        let worst = a.paths[i]
            .iter()
            .zip(&b.paths[i])
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        max_abs = max_abs.max(worst);
        per_path.push(Some(worst));
    }
    Ok(ErrorReport {
        per_path,
        max_abs,
        excluded,
    })
}
