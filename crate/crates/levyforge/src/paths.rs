//! Càdlàg sample paths on an equidistant grid with exact jump-event
//! records.
//!
//! Node values store the right limit `X(tau_k)`; the jump list keeps the
//! exact arrival times and sizes, so downstream consumers (stochastic
//! exponentials, exact quadratic variation, pathwise identities) never have
//! to re-localize jumps from grid increments. Jumps are generated from a
//! global arrival stream of exponential interarrivals, which permits
//! multiple events per step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::levy::LevyTriplet;
use crate::rng::{self, JumpLaw, Lane, RngStream};
use crate::{Error, Result};

/// Hard cap on recorded events per path per unit time. Finite-intensity
/// jumps are almost surely finite on compacts; hitting this means the
/// configuration is out of the supported regime.
const MAX_EVENTS_PER_UNIT_TIME: f64 = 1e6;

/// Equidistant grid on `[0, horizon]` with `step_count` steps of size `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    dt: f64,
    step_count: usize,
}

impl TimeGrid {
    /// `step_count = round(horizon / dt)` must reproduce the horizon to
    /// float accuracy, otherwise the pair is rejected.
    pub fn new(horizon: f64, dt: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "horizon must be finite and > 0, got {horizon}"
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dt must be finite and > 0, got {dt}"
            )));
        }
        let steps = (horizon / dt).round();
        if steps < 1.0 || (steps * dt - horizon).abs() > 1e-9 * horizon.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "dt {dt} does not divide horizon {horizon}"
            )));
        }
        Ok(TimeGrid {
            horizon,
            dt,
            step_count: steps as usize,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    /// Node time `tau_k = k * dt`.
    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Index of the last node `<= t` (t clamped to the grid).
    pub fn node_at_or_before(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        let k = (t / self.dt).floor() as usize;
        k.min(self.step_count)
    }

    /// End of the grid as actually represented, `step_count * dt`.
    pub fn end(&self) -> f64 {
        self.node(self.step_count)
    }

    /// New grid observing the same interval with steps `factor` times
    /// larger; `factor` must divide the step count.
    pub fn coarsened(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.step_count % factor != 0 {
            return Err(Error::InvalidParameter(format!(
                "coarsening factor {factor} does not divide step count {}",
                self.step_count
            )));
        }
        Ok(TimeGrid {
            horizon: self.horizon,
            dt: self.dt * factor as f64,
            step_count: self.step_count / factor,
        })
    }
}

/// One jump: exact arrival time in `(0, horizon]` and nonzero size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub size: f64,
}

/// One realisation: node values (right-continuous convention) plus the
/// ordered jump records, with the linear drift rate and Gaussian variance
/// rate of the generating model carried as metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub grid: TimeGrid,
    /// `values[k] = X(tau_k)`, length `step_count + 1`, `values[0] = 0`.
    pub values: Vec<f64>,
    /// Jump events in strictly increasing time order.
    pub jumps: Vec<JumpEvent>,
    /// Linear drift rate of the finite-variation representation.
    pub drift_rate: f64,
    /// Gaussian variance rate; 0 means the path is of finite variation.
    pub sigma2: f64,
}

impl SamplePath {
    /// True when the path has no diffusion part, so its value at any time
    /// is `drift_rate * t` plus the jump mass up to `t`.
    pub fn is_finite_variation(&self) -> bool {
        self.sigma2 == 0.0
    }

    /// Exact value at an arbitrary time; finite-variation paths only.
    pub fn fv_value_at(&self, t: f64) -> f64 {
        self.drift_rate * t
            + self
                .jumps
                .iter()
                .take_while(|e| e.time <= t)
                .map(|e| e.size)
                .sum::<f64>()
    }

    /// Exact left limit at an arbitrary time; finite-variation paths only.
    pub fn fv_left_limit_at(&self, t: f64) -> f64 {
        self.drift_rate * t
            + self
                .jumps
                .iter()
                .take_while(|e| e.time < t)
                .map(|e| e.size)
                .sum::<f64>()
    }

    /// Left limit at node `k`: the node value minus any event that landed
    /// exactly on `tau_k` (possible on float grids).
    pub fn left_limit_at_node(&self, k: usize) -> f64 {
        let tau = self.grid.node(k);
        let at_node: f64 = self
            .jumps
            .iter()
            .filter(|e| e.time == tau)
            .map(|e| e.size)
            .sum();
        self.values[k] - at_node
    }

    /// Count of jumps with `time <= t` and `|size| >= threshold`.
    pub fn jump_count(&self, t: f64, threshold: f64) -> Result<usize> {
        if t > self.grid.end() * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "query time {t} beyond horizon {}",
                self.grid.horizon()
            )));
        }
        if !(threshold >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold must be >= 0, got {threshold}"
            )));
        }
        Ok(self
            .jumps
            .iter()
            .take_while(|e| e.time <= t)
            .filter(|e| e.size.abs() >= threshold)
            .count())
    }

    /// Path scaled by a constant: values, jump sizes and drift scale
    /// linearly, the variance rate quadratically.
    pub fn scaled(&self, c: f64) -> SamplePath {
        SamplePath {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
            jumps: self
                .jumps
                .iter()
                .map(|e| JumpEvent {
                    time: e.time,
                    size: c * e.size,
                })
                .collect(),
            drift_rate: c * self.drift_rate,
            sigma2: c * c * self.sigma2,
        }
    }
}

/// Independent sample paths sharing one grid and one seed policy: path `i`
/// draws from streams keyed by `(root_seed, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub grid: TimeGrid,
    pub paths: Vec<SamplePath>,
    pub root_seed: u64,
}

impl PathSet {
    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    /// Values of every path at node `k`.
    pub fn values_at_node(&self, k: usize) -> Vec<f64> {
        self.paths.iter().map(|p| p.values[k]).collect()
    }
}

fn generate(
    grid: TimeGrid,
    n_paths: usize,
    seed: u64,
    one_path: impl Fn(u64) -> SamplePath + Sync,
) -> PathSet {
    let paths: Vec<SamplePath> = (0..n_paths as u64)
        .into_par_iter()
        .map(&one_path)
        .collect();
    PathSet {
        grid,
        paths,
        root_seed: seed,
    }
}

fn diffusion_values(grid: &TimeGrid, b: f64, sigma: f64, stream: &mut RngStream) -> Vec<f64> {
    let dt = grid.dt();
    let scale = sigma * dt.sqrt();
    let mut values = Vec::with_capacity(grid.step_count() + 1);
    let mut x = 0.0;
    values.push(x);
    for _ in 0..grid.step_count() {
        let z: f64 = rng::sample_normal(stream, 0.0, 1.0).expect("std 1 is valid");
        x += b * dt + scale * z;
        values.push(x);
    }
    values
}

fn draw_jumps(
    grid: &TimeGrid,
    lambda: f64,
    law: &JumpLaw,
    times: &mut RngStream,
    sizes: &mut RngStream,
) -> Vec<JumpEvent> {
    let mut events = Vec::new();
    if lambda <= 0.0 {
        return events;
    }
    let t_end = grid.end();
    let cap = (MAX_EVENTS_PER_UNIT_TIME * t_end.max(1.0)) as usize;
    let mut t = 0.0;
    loop {
        t += rng::sample_exponential(times, lambda).expect("positive rate");
        if t > t_end {
            break;
        }
        events.push(JumpEvent {
            time: t,
            size: rng::sample_jump(sizes, law),
        });
        assert!(
            events.len() < cap,
            "jump count exceeded {cap} on [0, {t_end}]; intensity out of supported regime"
        );
    }
    events
}

/// Node cumulative sums of the jump sizes: entry `k` is the jump mass with
/// time `<= tau_k`.
fn jump_mass_at_nodes(grid: &TimeGrid, events: &[JumpEvent]) -> Vec<f64> {
    let mut mass = vec![0.0; grid.step_count() + 1];
    let mut acc = 0.0;
    let mut e = 0;
    for k in 1..=grid.step_count() {
        let tau = grid.node(k);
        while e < events.len() && events[e].time <= tau {
            acc += events[e].size;
            e += 1;
        }
        mass[k] = acc;
    }
    mass
}

/// Brownian motion with drift: increments are i.i.d.
/// Normal(b dt, sigma^2 dt); the jump list stays empty.
pub fn simulate_bm_drift(
    grid: TimeGrid,
    n_paths: usize,
    b: f64,
    sigma: f64,
    seed: u64,
) -> Result<PathSet> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sigma must be finite and >= 0, got {sigma}"
        )));
    }
    Ok(generate(grid, n_paths, seed, |i| {
        let mut stream = rng::make_lane_stream(seed, i, Lane::Diffusion);
        SamplePath {
            grid,
            values: diffusion_values(&grid, b, sigma, &mut stream),
            jumps: Vec::new(),
            drift_rate: b,
            sigma2: sigma * sigma,
        }
    }))
}

/// Poisson counting paths: exponential interarrivals at rate `lambda`,
/// every event of size 1, node values are the running counts.
pub fn simulate_poisson(grid: TimeGrid, n_paths: usize, lambda: f64, seed: u64) -> Result<PathSet> {
    let law = JumpLaw::Dirac(1.0);
    simulate_compound_poisson(grid, n_paths, lambda, law, seed)
}

/// Compound Poisson paths: Poisson arrivals, i.i.d. sizes from `law`,
/// node values are the cumulative jump sums.
pub fn simulate_compound_poisson(
    grid: TimeGrid,
    n_paths: usize,
    lambda: f64,
    law: JumpLaw,
    seed: u64,
) -> Result<PathSet> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    Ok(generate(grid, n_paths, seed, |i| {
        let mut times = rng::make_lane_stream(seed, i, Lane::JumpTimes);
        let mut sizes = rng::make_lane_stream(seed, i, Lane::JumpSizes);
        let jumps = draw_jumps(&grid, lambda, &law, &mut times, &mut sizes);
        SamplePath {
            grid,
            values: jump_mass_at_nodes(&grid, &jumps),
            jumps,
            drift_rate: 0.0,
            sigma2: 0.0,
        }
    }))
}

/// Lévy jump diffusion from a triplet: linear drift (the pure-drift rate of
/// the triplet) plus Brownian part plus compound Poisson part, the diffusion
/// and jump draws coming from disjoint lanes of the path's stream.
pub fn simulate_jump_diffusion(
    grid: TimeGrid,
    n_paths: usize,
    triplet: &LevyTriplet,
    seed: u64,
) -> Result<PathSet> {
    let b = triplet.fv_drift();
    let sigma = triplet.sigma2.sqrt();
    let lambda = triplet.intensity;
    let law = triplet.jump_law;
    let sigma2 = triplet.sigma2;
    Ok(generate(grid, n_paths, seed, move |i| {
        let mut diffusion = rng::make_lane_stream(seed, i, Lane::Diffusion);
        let mut cont = diffusion_values(&grid, b, sigma, &mut diffusion);
        let mut times = rng::make_lane_stream(seed, i, Lane::JumpTimes);
        let mut sizes = rng::make_lane_stream(seed, i, Lane::JumpSizes);
        let jumps = draw_jumps(&grid, lambda, &law, &mut times, &mut sizes);
        let mass = jump_mass_at_nodes(&grid, &jumps);
        for (v, m) in cont.iter_mut().zip(&mass) {
            *v += m;
        }
        SamplePath {
            grid,
            values: cont,
            jumps,
            drift_rate: b,
            sigma2,
        }
    }))
}

/// Subtracts the compensator slope: `values[k] -= rate * tau_k` on every
/// path; jump records stay untouched.
pub fn compensate(mut ps: PathSet, rate: f64) -> PathSet {
    for path in &mut ps.paths {
        for k in 0..path.values.len() {
            path.values[k] -= rate * path.grid.node(k);
        }
        path.drift_rate -= rate;
    }
    ps
}

/// Same realisations observed on a grid `factor` times coarser: node values
/// are subsampled, jump records are kept exact. Refinement studies compare
/// the same omega across step sizes this way.
pub fn coarsen(ps: &PathSet, factor: usize) -> Result<PathSet> {
    let grid = ps.grid.coarsened(factor)?;
    let paths = ps
        .paths
        .iter()
        .map(|p| SamplePath {
            grid,
            values: p.values.iter().copied().step_by(factor).collect(),
            jumps: p.jumps.clone(),
            drift_rate: p.drift_rate,
            sigma2: p.sigma2,
        })
        .collect();
    Ok(PathSet {
        grid,
        paths,
        root_seed: ps.root_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::LevyTriplet;

    fn grid(horizon: f64, dt: f64) -> TimeGrid {
        TimeGrid::new(horizon, dt).unwrap()
    }

    #[test]
    fn grid_construction() {
        let g = grid(1.0, 0.01);
        assert_eq!(g.step_count(), 100);
        assert_eq!(g.node(0), 0.0);
        assert!((g.end() - 1.0).abs() < 1e-12);
        assert!(TimeGrid::new(1.0, 0.3).is_err());
        assert!(TimeGrid::new(0.0, 0.1).is_err());
        assert!(TimeGrid::new(1.0, -0.1).is_err());
    }

    #[test]
    fn zero_coefficients_give_zero_paths() {
        let ps = simulate_bm_drift(grid(1.0, 0.1), 3, 0.0, 0.0, 7).unwrap();
        for p in &ps.paths {
            assert!(p.values.iter().all(|&v| v == 0.0));
            assert!(p.jumps.is_empty());
        }
    }

    #[test]
    fn bm_moments_at_horizon() {
        // E X_50 = 50, Var X_50 = 200 for b = 1, sigma = 2.
        let n = 10_000;
        let ps = simulate_bm_drift(grid(50.0, 0.05), n, 1.0, 2.0, 9).unwrap();
        let last: Vec<f64> = ps.values_at_node(ps.grid.step_count());
        let mean = last.iter().sum::<f64>() / n as f64;
        let var = last.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let se_mean = (200.0f64 / n as f64).sqrt();
        assert!((mean - 50.0).abs() <= 3.0 * se_mean, "mean {mean}");
        let se_var = 200.0 * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!((var - 200.0).abs() <= 3.0 * se_var, "var {var}");
    }

    #[test]
    fn single_step_increment_distribution() {
        let n = 200_000;
        let dt = 0.25;
        let ps = simulate_bm_drift(grid(0.25, 0.25), n, 1.5, 0.8, 21).unwrap();
        let inc: Vec<f64> = ps.paths.iter().map(|p| p.values[1]).collect();
        let mean = inc.iter().sum::<f64>() / n as f64;
        let var = inc.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let want_mean = 1.5 * dt;
        let want_var = 0.64 * dt;
        let se_mean = (want_var / n as f64).sqrt();
        assert!((mean - want_mean).abs() <= 4.0 * se_mean);
        let se_var = want_var * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!((var - want_var).abs() <= 4.0 * se_var);
    }

    #[test]
    fn poisson_zero_intensity_is_zero() {
        let ps = simulate_poisson(grid(1.0, 0.01), 5, 0.0, 3).unwrap();
        for p in &ps.paths {
            assert!(p.values.iter().all(|&v| v == 0.0));
            assert!(p.jumps.is_empty());
        }
    }

    #[test]
    fn poisson_empty_probability() {
        let n = 100_000;
        let ps = simulate_poisson(grid(1.0, 0.01), n, 1.0, 17).unwrap();
        let empty = ps.paths.iter().filter(|p| p.jumps.is_empty()).count();
        let p_hat = empty as f64 / n as f64;
        let target = (-1.0f64).exp();
        let se = (target * (1.0 - target) / n as f64).sqrt();
        assert!((p_hat - target).abs() <= 3.0 * se, "P(N_1 = 0) = {p_hat}");
    }

    #[test]
    fn poisson_mean_interarrival() {
        // First interarrival per path is Exp(1) free of window truncation
        // (paths with no arrival before T = 10 are vanishingly rare).
        let ps = simulate_poisson(grid(10.0, 0.01), 100_000, 1.0, 29).unwrap();
        let firsts: Vec<f64> = ps
            .paths
            .iter()
            .filter_map(|p| p.jumps.first().map(|e| e.time))
            .collect();
        let n = firsts.len() as f64;
        let mean = firsts.iter().sum::<f64>() / n;
        assert!((mean - 1.0).abs() <= 3.0 / n.sqrt(), "mean gap {mean}");
    }

    #[test]
    fn dirac_compound_poisson_is_poisson_bitwise() {
        let g = grid(5.0, 0.05);
        let a = simulate_poisson(g, 20, 2.0, 5).unwrap();
        let b = simulate_compound_poisson(g, 20, 2.0, JumpLaw::Dirac(1.0), 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn compound_poisson_moments() {
        // E X_1 = 0 and E X_1^2 = lambda E Z^2 = 4 for Gaussian(0, 2) sizes.
        let n = 50_000;
        let ps =
            simulate_compound_poisson(grid(1.0, 0.01), n, 1.0, JumpLaw::Gaussian(2.0), 31)
                .unwrap();
        let last = ps.values_at_node(100);
        let mean = last.iter().sum::<f64>() / n as f64;
        let m2 = last.iter().map(|x| x * x).sum::<f64>() / n as f64;
        // Var X_1 = lambda E Z^2 = 4; SE of the mean.
        let se_mean = 2.0 / (n as f64).sqrt();
        assert!(mean.abs() <= 3.0 * se_mean, "mean {mean}");
        // Fourth moment of X_1 bounds the SE of the second-moment estimate.
        let se_m2 = (last.iter().map(|x| x.powi(4)).sum::<f64>() / n as f64 - m2 * m2)
            .sqrt()
            / (n as f64).sqrt();
        assert!((m2 - 4.0).abs() <= 3.0 * se_m2, "m2 {m2}");

        let ps10 =
            simulate_compound_poisson(grid(1.0, 0.01), n, 10.0, JumpLaw::Uniform(-1.0, 1.0), 33)
                .unwrap();
        let last10 = ps10.values_at_node(100);
        let m2 = last10.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let se = (last10.iter().map(|x| x.powi(4)).sum::<f64>() / n as f64 - m2 * m2).sqrt()
            / (n as f64).sqrt();
        assert!((m2 - 10.0 / 3.0).abs() <= 3.0 * se, "m2 {m2}");
    }

    #[test]
    fn piecewise_constant_between_events() {
        let ps =
            simulate_compound_poisson(grid(1.0, 0.01), 50, 3.0, JumpLaw::Uniform(-1.0, 1.0), 37)
                .unwrap();
        for p in &ps.paths {
            for k in 0..p.grid.step_count() {
                let (lo, hi) = (p.grid.node(k), p.grid.node(k + 1));
                let step_has_event = p.jumps.iter().any(|e| e.time > lo && e.time <= hi);
                if !step_has_event {
                    assert_eq!(p.values[k + 1], p.values[k]);
                }
            }
        }
    }

    #[test]
    fn jump_diffusion_without_jumps_matches_bm() {
        let g = grid(2.0, 0.02);
        let t = LevyTriplet::brownian(0.4, 2.25).unwrap();
        let jd = simulate_jump_diffusion(g, 10, &t, 11).unwrap();
        let bm = simulate_bm_drift(g, 10, 0.4, 1.5, 11).unwrap();
        assert_eq!(jd, bm);
    }

    #[test]
    fn jump_diffusion_moments_dense_jump_driver() {
        let n = 20_000;
        let t = LevyTriplet::new(0.0, 1.0, 10.0, JumpLaw::Uniform(-1.0, 1.0), 1.0).unwrap();
        let ps = simulate_jump_diffusion(grid(1.0, 0.01), n, &t, 41).unwrap();
        let last = ps.values_at_node(100);
        let mean = last.iter().sum::<f64>() / n as f64;
        let var_target = 1.0 + 10.0 / 3.0;
        let se_mean = (var_target / n as f64).sqrt();
        assert!(mean.abs() <= 3.0 * se_mean, "mean {mean}");
        let var = last.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let se_var = var_target * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!((var - var_target).abs() <= 3.0 * se_var, "var {var}");
    }

    #[test]
    fn martingale_driver_mean_stays_zero() {
        let n = 10_000;
        // sigma = 1 plus symmetric jumps, drift 0: a martingale triplet.
        let t = LevyTriplet::new(0.0, 1.0, 2.0, JumpLaw::TwoPoint(0.5), 1.0).unwrap();
        assert!(t.is_martingale());
        let g = grid(50.0, 0.05);
        let ps = simulate_jump_diffusion(g, n, &t, 43).unwrap();
        let mu = t.angle_bracket_rate();
        for &time in &[1.0, 10.0, 50.0] {
            let k = g.node_at_or_before(time);
            let vals = ps.values_at_node(k);
            let mean = vals.iter().sum::<f64>() / n as f64;
            let se = (mu * time / n as f64).sqrt();
            assert!(mean.abs() <= 3.0 * se, "t={time} mean {mean}");
        }
    }

    #[test]
    fn node_event_consistency() {
        let t = LevyTriplet::new(0.3, 0.0, 5.0, JumpLaw::Uniform(-1.0, 1.0), 1.0).unwrap();
        let ps = simulate_jump_diffusion(grid(2.0, 0.01), 30, &t, 47).unwrap();
        for p in &ps.paths {
            assert!(p.is_finite_variation());
            for k in 0..=p.grid.step_count() {
                let want = p.fv_value_at(p.grid.node(k));
                let scale = want.abs().max(1.0);
                assert!(
                    (p.values[k] - want).abs() <= 1e-10 * scale,
                    "node {k}: {} vs {want}",
                    p.values[k]
                );
            }
        }
    }

    #[test]
    fn stationary_increments_match_marginal_moments() {
        let n = 20_000;
        let t = LevyTriplet::new(0.5, 1.0, 4.0, JumpLaw::Uniform(-1.0, 1.0), 1.0).unwrap();
        let g = grid(2.0, 0.01);
        let ps = simulate_jump_diffusion(g, n, &t, 53).unwrap();
        let s_node = g.node_at_or_before(0.5);
        let t_len = 1.0;
        let t_node = g.node_at_or_before(0.5 + t_len);
        let incs: Vec<f64> = ps
            .paths
            .iter()
            .map(|p| p.values[t_node] - p.values[s_node])
            .collect();
        let mean = incs.iter().sum::<f64>() / n as f64;
        let var = incs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let want_mean = t.canonical_drift() * t_len;
        let want_var = t.angle_bracket_rate() * t_len;
        let se_mean = (want_var / n as f64).sqrt();
        let se_var = want_var * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!((mean - want_mean).abs() <= 4.0 * se_mean, "mean {mean}");
        assert!((var - want_var).abs() <= 4.0 * se_var, "var {var}");
    }

    #[test]
    fn compensation() {
        let g = grid(1.0, 0.01);
        let ps = simulate_poisson(g, 1_000, 2.0, 59).unwrap();
        let same = compensate(ps.clone(), 0.0);
        assert_eq!(same, ps);

        let n = 100_000;
        let ps = simulate_poisson(g, n, 1.0, 61).unwrap();
        let comp = compensate(ps, 1.0);
        for &k in &[25usize, 50, 100] {
            let vals = comp.values_at_node(k);
            let mean = vals.iter().sum::<f64>() / n as f64;
            let t = g.node(k);
            let se = (t / n as f64).sqrt();
            assert!(mean.abs() <= 3.0 * se, "node {k} mean {mean}");
        }
        for p in &comp.paths {
            assert_eq!(p.drift_rate, -1.0);
        }
    }

    #[test]
    fn jump_count_thresholds() {
        let g = grid(1.0, 0.01);
        let ps = simulate_compound_poisson(g, 100, 5.0, JumpLaw::Uniform(-1.0, 1.0), 67).unwrap();
        for p in &ps.paths {
            assert_eq!(p.jump_count(1.0, 2.0).unwrap(), 0);
            assert_eq!(p.jump_count(1.0, 0.0).unwrap(), p.jumps.len());
        }
        assert!(ps.paths[0].jump_count(1.5, 0.0).is_err());

        let n = 100_000;
        let pois = simulate_poisson(g, n, 1.0, 71).unwrap();
        let total: usize = pois
            .paths
            .iter()
            .map(|p| p.jump_count(1.0, 0.0).unwrap())
            .sum();
        let mean = total as f64 / n as f64;
        let se = 1.0 / (n as f64).sqrt();
        assert!((mean - 1.0).abs() <= 3.0 * se, "mean count {mean}");
        for p in pois.paths.iter().take(100) {
            let k = p.grid.step_count();
            assert_eq!(p.jump_count(p.grid.end(), 0.0).unwrap() as f64, p.values[k]);
        }
    }

    #[test]
    fn determinism_across_runs() {
        let g = grid(1.0, 0.01);
        let t = LevyTriplet::new(0.1, 1.0, 3.0, JumpLaw::Gaussian(0.5), 1.0).unwrap();
        let a = simulate_jump_diffusion(g, 16, &t, 101).unwrap();
        let b = simulate_jump_diffusion(g, 16, &t, 101).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn determinism_across_worker_counts() {
        let g = grid(1.0, 0.01);
        let t = LevyTriplet::new(0.1, 1.0, 3.0, JumpLaw::Gaussian(0.5), 1.0).unwrap();
        let run = |threads: usize| -> PathSet {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate_jump_diffusion(g, 32, &t, 101).unwrap())
        };
        assert_eq!(run(1), run(8));
    }

    #[test]
    fn coarsening_subsamples_nodes_and_keeps_events() {
        let g = grid(1.0, 0.005);
        let t = LevyTriplet::new(0.0, 1.0, 10.0, JumpLaw::Uniform(-1.0, 1.0), 1.0).unwrap();
        let fine = simulate_jump_diffusion(g, 8, &t, 103).unwrap();
        let coarse = coarsen(&fine, 4).unwrap();
        assert_eq!(coarse.grid.step_count(), 50);
        for (pf, pc) in fine.paths.iter().zip(&coarse.paths) {
            assert_eq!(pc.jumps, pf.jumps);
            for k in 0..=50 {
                assert_eq!(pc.values[k], pf.values[4 * k]);
            }
        }
        assert!(coarsen(&fine, 3).is_err());
    }

    #[test]
    fn left_limit_at_node_strips_colliding_event() {
        let g = grid(1.0, 0.25);
        let mut path = SamplePath {
            grid: g,
            values: vec![0.0, 0.0, 2.0, 2.0, 2.0],
            jumps: vec![JumpEvent {
                time: g.node(2),
                size: 2.0,
            }],
            drift_rate: 0.0,
            sigma2: 0.0,
        };
        assert_eq!(path.left_limit_at_node(2), 0.0);
        path.jumps[0].time = 0.3; // strictly inside the step
        assert_eq!(path.left_limit_at_node(2), 2.0);
    }
}
