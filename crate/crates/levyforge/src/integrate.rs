//! Discrete stochastic calculus on sample paths: left Riemann sums,
//! pathwise Stieltjes integrals for finite-variation integrators, quadratic
//! (co)variation estimators, total variation, and the residuals of the
//! classical identities (integration by parts, the change-of-variable
//! formula, the integration-domain shift).
//!
//! Two estimator families coexist. Grid estimators see only node values
//! and converge as the step shrinks; exact estimators read the recorded
//! jump events and are exact for the models that generated the paths.

use crate::paths::{PathSet, SamplePath, TimeGrid};
use crate::{Error, Result};

/// Which integrand evaluation to use at jump times.
///
/// `LeftLimit` is the predictable choice; the two rules differ by exactly
/// the sum of co-jumps of integrand and integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointRule {
    LeftLimit,
    NodeValue,
}

/// Integrand: either the paths of a set (evaluated at nodes, with exact
/// event evaluation where the operation calls for it) or a deterministic
/// function of time.
pub enum Integrand<'a> {
    Paths(&'a PathSet),
    Func(&'a (dyn Fn(f64) -> f64 + Sync)),
}

impl<'a> Integrand<'a> {
    fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        if let Integrand::Paths(h) = self {
            if h.grid != *grid {
                return Err(Error::GridMismatch(
                    "integrand and integrator grids differ".into(),
                ));
            }
        }
        Ok(())
    }

    /// Node values of the integrand along path `i`.
    fn node_values(&self, grid: &TimeGrid, i: usize) -> Vec<f64> {
        match self {
            Integrand::Paths(h) => h.paths[i].values.clone(),
            Integrand::Func(f) => (0..=grid.step_count()).map(|k| f(grid.node(k))).collect(),
        }
    }
}

/// Cumulative integral values on the grid, one row per path.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSet {
    pub grid: TimeGrid,
    /// `values[i][k]` is the integral of path `i` up to node `k`.
    pub values: Vec<Vec<f64>>,
}

impl IntegralSet {
    pub fn terminal(&self, i: usize) -> f64 {
        *self.values[i].last().expect("grid has at least one node")
    }
}

fn ensure_same_grid(a: &TimeGrid, b: &TimeGrid) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(
            "path sets live on different grids".into(),
        ));
    }
    Ok(())
}

/// Left Riemann sum `I_k = H_0 X_0 + sum_{j<k} H(tau_j) (X(tau_{j+1}) - X(tau_j))`,
/// per path; the discrete stochastic integral of the sampled integrand.
pub fn left_riemann(h: &Integrand, x: &PathSet) -> Result<IntegralSet> {
    h.check_grid(&x.grid)?;
    let n = x.grid.step_count();
    let values = x
        .paths
        .iter()
        .enumerate()
        .map(|(i, path)| {
            let hv = h.node_values(&x.grid, i);
            let mut out = Vec::with_capacity(n + 1);
            let mut acc = hv[0] * path.values[0];
            out.push(acc);
            for j in 0..n {
                acc += hv[j] * (path.values[j + 1] - path.values[j]);
                out.push(acc);
            }
            out
        })
        .collect();
    Ok(IntegralSet {
        grid: x.grid,
        values,
    })
}

/// Pathwise Lebesgue–Stieltjes integral against a finite-variation
/// integrator: drift rate times the trapezoid integral of the integrand's
/// node values, plus the exact sum over jump events, the integrand
/// evaluated at each event time per `rule`.
///
/// A path integrand must itself be of finite variation so its value and
/// left limit at the exact event times are well defined.
pub fn stieltjes(h: &Integrand, x: &PathSet, rule: EndpointRule) -> Result<IntegralSet> {
    h.check_grid(&x.grid)?;
    let n = x.grid.step_count();
    let dt = x.grid.dt();
    let mut values = Vec::with_capacity(x.n_paths());
    for (i, path) in x.paths.iter().enumerate() {
        if !path.is_finite_variation() {
            return Err(Error::NotFiniteVariation(path.sigma2));
        }
        let eval_at = |t: f64| -> Result<f64> {
            match (h, rule) {
                (Integrand::Func(f), _) => Ok(f(t)),
                (Integrand::Paths(hs), EndpointRule::NodeValue) => {
                    let hp = &hs.paths[i];
                    if !hp.is_finite_variation() {
                        return Err(Error::NotFiniteVariation(hp.sigma2));
                    }
                    Ok(hp.fv_value_at(t))
                }
                (Integrand::Paths(hs), EndpointRule::LeftLimit) => {
                    let hp = &hs.paths[i];
                    if !hp.is_finite_variation() {
                        return Err(Error::NotFiniteVariation(hp.sigma2));
                    }
                    Ok(hp.fv_left_limit_at(t))
                }
            }
        };
        let hv = h.node_values(&x.grid, i);
        let mut out = Vec::with_capacity(n + 1);
        let mut acc = hv[0] * path.values[0];
        out.push(acc);
        let mut e = 0usize;
        for j in 0..n {
            acc += path.drift_rate * 0.5 * dt * (hv[j] + hv[j + 1]);
            let tau = x.grid.node(j + 1);
            while e < path.jumps.len() && path.jumps[e].time <= tau {
                acc += eval_at(path.jumps[e].time)? * path.jumps[e].size;
                e += 1;
            }
            out.push(acc);
        }
        values.push(out);
    }
    Ok(IntegralSet {
        grid: x.grid,
        values,
    })
}

/// Grid estimator of the quadratic covariation:
/// `[X, Y]_k = X_0 Y_0 + sum_{j<k} dX_j dY_j` over grid increments.
pub fn qv_grid(x: &PathSet, y: &PathSet) -> Result<IntegralSet> {
    ensure_same_grid(&x.grid, &y.grid)?;
    let n = x.grid.step_count();
    let values = x
        .paths
        .iter()
        .zip(&y.paths)
        .map(|(px, py)| {
            let mut out = Vec::with_capacity(n + 1);
            let mut acc = px.values[0] * py.values[0];
            out.push(acc);
            for j in 0..n {
                acc += (px.values[j + 1] - px.values[j]) * (py.values[j + 1] - py.values[j]);
                out.push(acc);
            }
            out
        })
        .collect();
    Ok(IntegralSet {
        grid: x.grid,
        values,
    })
}

/// Exact quadratic variation from model metadata and jump records:
/// `sigma2 * tau_k` plus the squares of recorded jump sizes.
pub fn qv_exact(x: &PathSet) -> IntegralSet {
    let n = x.grid.step_count();
    let values = x
        .paths
        .iter()
        .map(|path| {
            let mut out = Vec::with_capacity(n + 1);
            let mut jump_part = 0.0;
            let mut e = 0usize;
            out.push(0.0);
            for k in 1..=n {
                let tau = x.grid.node(k);
                while e < path.jumps.len() && path.jumps[e].time <= tau {
                    jump_part += path.jumps[e].size * path.jumps[e].size;
                    e += 1;
                }
                out.push(path.sigma2 * tau + jump_part);
            }
            out
        })
        .collect();
    IntegralSet {
        grid: x.grid,
        values,
    }
}

/// Exact covariation of two jump-aware paths driven by independent
/// continuous parts: only co-located events (bit-equal times) contribute.
pub fn qcov_exact_jumps(x: &PathSet, y: &PathSet) -> Result<IntegralSet> {
    ensure_same_grid(&x.grid, &y.grid)?;
    let n = x.grid.step_count();
    let values = x
        .paths
        .iter()
        .zip(&y.paths)
        .map(|(px, py)| {
            let mut products: Vec<(f64, f64)> = Vec::new();
            let (mut i, mut j) = (0usize, 0usize);
            while i < px.jumps.len() && j < py.jumps.len() {
                let (a, b) = (px.jumps[i].time, py.jumps[j].time);
                if a == b {
                    products.push((a, px.jumps[i].size * py.jumps[j].size));
                    i += 1;
                    j += 1;
                } else if a < b {
                    i += 1;
                } else {
                    j += 1;
                }
            }
            let mut out = Vec::with_capacity(n + 1);
            let mut acc = 0.0;
            let mut e = 0usize;
            out.push(0.0);
            for k in 1..=n {
                let tau = x.grid.node(k);
                while e < products.len() && products[e].0 <= tau {
                    acc += products[e].1;
                    e += 1;
                }
                out.push(acc);
            }
            out
        })
        .collect();
    Ok(IntegralSet {
        grid: x.grid,
        values,
    })
}

/// Grid lower bound for the total variation: cumulative `|dX_j|`.
pub fn total_variation_grid(x: &PathSet) -> IntegralSet {
    let n = x.grid.step_count();
    let values = x
        .paths
        .iter()
        .map(|path| {
            let mut out = Vec::with_capacity(n + 1);
            let mut acc = 0.0;
            out.push(acc);
            for j in 0..n {
                acc += (path.values[j + 1] - path.values[j]).abs();
                out.push(acc);
            }
            out
        })
        .collect();
    IntegralSet {
        grid: x.grid,
        values,
    }
}

/// Exact total variation of finite-variation paths:
/// `|drift| * tau_k + sum |sizes|` up to each node.
pub fn total_variation_exact(x: &PathSet) -> Result<IntegralSet> {
    let n = x.grid.step_count();
    let mut values = Vec::with_capacity(x.n_paths());
    for path in &x.paths {
        if !path.is_finite_variation() {
            return Err(Error::NotFiniteVariation(path.sigma2));
        }
        let mut out = Vec::with_capacity(n + 1);
        let mut jump_part = 0.0;
        let mut e = 0usize;
        out.push(0.0);
        for k in 1..=n {
            let tau = x.grid.node(k);
            while e < path.jumps.len() && path.jumps[e].time <= tau {
                jump_part += path.jumps[e].size.abs();
                e += 1;
            }
            out.push(path.drift_rate.abs() * tau + jump_part);
        }
        values.push(out);
    }
    Ok(IntegralSet {
        grid: x.grid,
        values,
    })
}

/// Max-over-nodes residual of the discrete integration-by-parts identity
/// per path: `X_k Y_k - sum X_j dY_j - sum Y_j dX_j - [X, Y]_k` with the
/// grid covariation estimator and the convention `X_{0-} = 0`. The three
/// sums telescope, so the residual is pure float rounding.
pub fn ibp_residual(x: &PathSet, y: &PathSet) -> Result<Vec<f64>> {
    ensure_same_grid(&x.grid, &y.grid)?;
    let n = x.grid.step_count();
    Ok(x.paths
        .iter()
        .zip(&y.paths)
        .map(|(px, py)| {
            let mut worst = 0.0f64;
            let mut acc = px.values[0] * py.values[0];
            for j in 0..n {
                let dx = px.values[j + 1] - px.values[j];
                let dy = py.values[j + 1] - py.values[j];
                acc += px.values[j] * dy + py.values[j] * dx + dx * dy;
                worst = worst.max((px.values[j + 1] * py.values[j + 1] - acc).abs());
            }
            worst
        })
        .collect())
}

/// A scalar function together with its first two derivatives.
pub struct TwiceDiff<'a> {
    pub f: &'a (dyn Fn(f64) -> f64 + Sync),
    pub df: &'a (dyn Fn(f64) -> f64 + Sync),
    pub d2f: &'a (dyn Fn(f64) -> f64 + Sync),
}

/// Max-over-nodes residual of the discrete change-of-variable formula,
/// per path:
///
/// ```text
/// f(X_k) - f(X_0) - sum_{j<k} f'(X_j) dX_j - 1/2 sum_{j<k} f''(X_j) (dX_j)^2
///        - sum_{events <= tau_k} { f(X_s) - f(X_s-) - f'(X_s-) dX_s
///                                  - 1/2 f''(X_s-) (dX_s)^2 }
/// ```
///
/// The second-order term integrates against the full grid quadratic
/// variation and the event sum removes the second-order jump corrections
/// again, so for quadratic `f` the identity is algebraically exact at any
/// step size. Left limits at event times are exact for finite-variation
/// paths; otherwise the diffusion displacement inside the step is
/// disregarded (it only enters through the event correction terms).
pub fn ito_residual(func: &TwiceDiff, x: &PathSet) -> Vec<f64> {
    let n = x.grid.step_count();
    x.paths
        .iter()
        .map(|path| {
            let jump_corrections = event_corrections(func, path);
            let mut worst = 0.0f64;
            let f0 = (func.f)(path.values[0]);
            let mut acc = f0;
            let mut e = 0usize;
            for j in 0..n {
                let dx = path.values[j + 1] - path.values[j];
                acc +=
                    (func.df)(path.values[j]) * dx + 0.5 * (func.d2f)(path.values[j]) * dx * dx;
                let tau = x.grid.node(j + 1);
                while e < path.jumps.len() && path.jumps[e].time <= tau {
                    acc += jump_corrections[e];
                    e += 1;
                }
                worst = worst.max(((func.f)(path.values[j + 1]) - acc).abs());
            }
            worst
        })
        .collect()
}

/// Per-event `f(X_s) - f(X_s-) - f'(X_s-) dX - f''(X_s-) dX^2 / 2`.
fn event_corrections(func: &TwiceDiff, path: &SamplePath) -> Vec<f64> {
    let mut out = Vec::with_capacity(path.jumps.len());
    if path.is_finite_variation() {
        for e in &path.jumps {
            let before = path.fv_left_limit_at(e.time);
            out.push(correction(func, before, e.size));
        }
    } else {
        // Left node value plus earlier same-step jumps approximates the
        // pre-jump state; the within-step diffusion displacement is ignored.
        let mut k = 0usize;
        let mut idx = 0usize;
        while idx < path.jumps.len() {
            while path.grid.node(k + 1) < path.jumps[idx].time {
                k += 1;
            }
            let mut before = path.values[k];
            let step_end = path.grid.node(k + 1);
            while idx < path.jumps.len() && path.jumps[idx].time <= step_end {
                out.push(correction(func, before, path.jumps[idx].size));
                before += path.jumps[idx].size;
                idx += 1;
            }
            k += 1;
        }
    }
    out
}

fn correction(func: &TwiceDiff, before: f64, dx: f64) -> f64 {
    (func.f)(before + dx)
        - (func.f)(before)
        - (func.df)(before) * dx
        - 0.5 * (func.d2f)(before) * dx * dx
}

/// Index of the first node at or after the path's first jump; paths
/// without jumps stop at the final node.
pub fn first_jump_nodes(x: &PathSet) -> Vec<usize> {
    x.paths
        .iter()
        .map(|path| match path.jumps.first() {
            None => path.grid.step_count(),
            Some(e) => {
                let mut k = 0usize;
                while path.grid.node(k) < e.time {
                    k += 1;
                }
                k
            }
        })
        .collect()
}

/// Residual of the integration-domain shift, per path: the restarted
/// integral `I(S + t) - I(S)` against the integral of the shifted
/// integrand over the restarted integrator, maximised over `t`.
pub fn shift_residual(h: &Integrand, x: &PathSet, stop_nodes: &[usize]) -> Result<Vec<f64>> {
    h.check_grid(&x.grid)?;
    if stop_nodes.len() != x.n_paths() {
        return Err(Error::InvalidParameter(format!(
            "got {} stopping nodes for {} paths",
            stop_nodes.len(),
            x.n_paths()
        )));
    }
    let n = x.grid.step_count();
    let base = left_riemann(h, x)?;
    let mut out = Vec::with_capacity(x.n_paths());
    for (i, path) in x.paths.iter().enumerate() {
        let s = stop_nodes[i];
        if s > n {
            return Err(Error::StopBeyondHorizon { node: s, max: n });
        }
        let hv = h.node_values(&x.grid, i);
        let mut worst = 0.0f64;
        let mut shifted = 0.0;
        for u in 0..(n - s) {
            // dXbar_u = X(S+u+1) - X(S+u); the shifted driver increment.
            shifted += hv[s + u] * (path.values[s + u + 1] - path.values[s + u]);
            let lhs = base.values[i][s + u + 1] - base.values[i][s];
            worst = worst.max((lhs - shifted).abs());
        }
        out.push(worst);
    }
    Ok(out)
}
