//! Simulation of càdlàg Lévy processes with exact jump records, plus the
//! discrete stochastic calculus and numerical SDE/SDDE schemes built on top
//! of them.
//!
//! The crate is organised around a small set of value types:
//!
//! - [`levy::LevyTriplet`] — drift, Gaussian variance rate and a
//!   finite-intensity jump measure, the parametrisation of every driver;
//! - [`paths::PathSet`] — a bundle of sample paths on a shared equidistant
//!   grid, each carrying its exact jump events;
//! - [`integrate`] — Riemann/Stieltjes integrals, quadratic (co)variation
//!   and the residual checks for the classical pathwise identities;
//! - [`sde`] — Euler–Maruyama, the θ-scheme for the linear equation with
//!   multiplicative Lévy noise, stochastic exponentials, and a delay scheme;
//! - [`validate`] — Monte Carlo checks of closed-form targets, reported as
//!   estimate / standard error / pass records.
//!
//! Everything is deterministic: path `i` of a run draws from a stream that
//! is a pure function of `(seed, i)`, so results do not depend on worker
//! count or scheduling.

pub mod config;
pub mod integrate;
pub mod levy;
pub mod paths;
pub mod rng;
pub mod run;
pub mod sde;
pub mod validate;

mod csv;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("quadrature did not converge (interval [{a}, {b}])")]
    QuadratureDivergence { a: f64, b: f64 },
    #[error("integrator has a diffusion part (sigma2 = {0}); finite-variation structure required")]
    NotFiniteVariation(f64),
    #[error("singular implicit factor: 1 - theta*alpha*dt = 0")]
    SingularImplicitFactor,
    #[error("stopping node {node} beyond grid horizon (max {max})")]
    StopBeyondHorizon { node: usize, max: usize },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("empty tail window: tail_start {tail_start} >= horizon {horizon}")]
    EmptyTailWindow { tail_start: f64, horizon: f64 },
    #[error("all {0} paths diverged")]
    AllPathsDiverged(usize),
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON parse error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
