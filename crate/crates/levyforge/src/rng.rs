//! Deterministic, splittable random streams and the elementary samplers
//! the simulators consume.
//!
//! Each path of a run owns its own stream, derived by a fixed mixing
//! function of `(root_seed, path_index, lane)`. Draw sequences are therefore
//! a pure function of those three values: reruns, reorderings and different
//! worker counts all reproduce the same paths bit for bit. Lanes keep the
//! diffusion and jump draws of a single path apart, so switching jumps on
//! never perturbs the Brownian increments.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sub-stream roles within one path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lane {
    /// Brownian increments.
    Diffusion,
    /// Exponential interarrival draws.
    JumpTimes,
    /// Jump size draws.
    JumpSizes,
}

impl Lane {
    fn index(self) -> u64 {
        match self {
            Lane::Diffusion => 0,
            Lane::JumpTimes => 1,
            Lane::JumpSizes => 2,
        }
    }
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer; the avalanche stage used to key streams.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A single-consumer random stream; a pure function of its key.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha12Rng,
}

impl RngStream {
    fn from_key(root_seed: u64, path_index: u64, lane: u64) -> Self {
        // Expand (seed, path, lane) into a 256-bit ChaCha key with a
        // SplitMix64 walk; distinct keys give unrelated streams.
        let mut state = mix64(root_seed)
            ^ mix64(path_index.wrapping_mul(GOLDEN_GAMMA))
            ^ mix64(lane.wrapping_mul(0xD1B5_4A32_D192_ED03));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(GOLDEN_GAMMA);
            chunk.copy_from_slice(&mix64(state).to_le_bytes());
        }
        RngStream {
            inner: ChaCha12Rng::from_seed(key),
        }
    }

    /// Uniform draw on (0, 1]; never returns 0, so `ln` stays finite.
    pub fn next_uniform(&mut self) -> f64 {
        let bits = self.inner.random::<u64>() >> 11;
        (bits as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
    }

    /// Raw 64-bit draw.
    pub fn next_u64(&mut self) -> u64 {
        self.inner.random::<u64>()
    }

    fn next_standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }
}

/// Stream for path `path_index` of a run rooted at `root_seed`.
pub fn make_stream(root_seed: u64, path_index: u64) -> RngStream {
    RngStream::from_key(root_seed, path_index, Lane::Diffusion.index())
}

/// Stream for one lane of a path; used by simulators to keep diffusion and
/// jump draws independent.
pub fn make_lane_stream(root_seed: u64, path_index: u64, lane: Lane) -> RngStream {
    RngStream::from_key(root_seed, path_index, lane.index())
}

/// One draw from Normal(mean, std^2). `std = 0` returns `mean` exactly.
pub fn sample_normal(s: &mut RngStream, mean: f64, std: f64) -> Result<f64> {
    if !(std >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "normal std must be >= 0, got {std}"
        )));
    }
    Ok(mean + std * s.next_standard_normal())
}

/// One draw from Exp(rate) via the inverse transform `-ln(U)/rate`,
/// U uniform on (0, 1]; strictly positive.
pub fn sample_exponential(s: &mut RngStream, rate: f64) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "exponential rate must be > 0, got {rate}"
        )));
    }
    Ok(-s.next_uniform().ln() / rate)
}

/// Common law of the i.i.d. jump sizes of a compound Poisson process.
///
/// Construction validates the parameters once; sampling and moment lookups
/// are then infallible. All variants put no mass at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum JumpLaw {
    /// Point mass at `a`, `a != 0`.
    Dirac(f64),
    /// Uniform on `[a, b]`, `a < b`.
    Uniform(f64, f64),
    /// `+a` or `-a` with probability 1/2 each.
    TwoPoint(f64),
    /// Centred Gaussian with standard deviation `s >= 0`.
    Gaussian(f64),
}

impl JumpLaw {
    pub fn dirac(a: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Dirac jump size must be finite and nonzero, got {a}"
            )));
        }
        Ok(JumpLaw::Dirac(a))
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Uniform jump law needs finite a < b, got [{a}, {b}]"
            )));
        }
        Ok(JumpLaw::Uniform(a, b))
    }

    pub fn two_point(a: f64) -> Result<Self> {
        if a == 0.0 || !a.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "TwoPoint jump size must be finite and nonzero, got {a}"
            )));
        }
        Ok(JumpLaw::TwoPoint(a))
    }

    pub fn gaussian(s: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Gaussian jump std must be finite and >= 0, got {s}"
            )));
        }
        Ok(JumpLaw::Gaussian(s))
    }

    /// Largest possible |jump|, or `None` for unbounded support.
    pub fn support_bound(&self) -> Option<f64> {
        match *self {
            JumpLaw::Dirac(a) => Some(a.abs()),
            JumpLaw::Uniform(a, b) => Some(a.abs().max(b.abs())),
            JumpLaw::TwoPoint(a) => Some(a.abs()),
            JumpLaw::Gaussian(_) => None,
        }
    }
}

/// One draw from the jump law. A Dirac law consumes no randomness, so a
/// compound Poisson process with jump law `Dirac(1)` reproduces the plain
/// Poisson path bit for bit.
pub fn sample_jump(s: &mut RngStream, law: &JumpLaw) -> f64 {
    match *law {
        JumpLaw::Dirac(a) => a,
        JumpLaw::Uniform(a, b) => a + (b - a) * s.next_uniform(),
        JumpLaw::TwoPoint(a) => {
            if s.next_u64() & 1 == 0 {
                a
            } else {
                -a
            }
        }
        JumpLaw::Gaussian(std) => std * s.next_standard_normal(),
    }
}
