//! Characteristic-triplet algebra for finite-intensity Lévy processes:
//! exponent evaluation, truncation changes, drift decompositions, and the
//! moment/rate formulas the validation checks plug into.
//!
//! A triplet `(b, sigma2, lambda * law)` under the radial truncation
//! `h(x) = x 1{|x| <= cutoff}` fixes the exponent
//!
//! ```text
//! psi(u) = i u b - sigma2 u^2 / 2
//!          + lambda * E[ exp(iuZ) - 1 - i u Z 1{|Z| <= cutoff} ].
//! ```
//!
//! The jump expectation is evaluated in closed form for the Dirac, Uniform
//! and TwoPoint laws; the Gaussian law goes through adaptive quadrature.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::rng::JumpLaw;
use crate::{Error, Result};

/// Absolute tolerance below which a closed-form drift counts as zero.
pub const MARTINGALE_DRIFT_TOL: f64 = 1e-12;

/// Absolute tolerance for the adaptive quadrature of the jump expectation.
const QUAD_TOL: f64 = 1e-10;

/// Characteristic triplet of a finite-intensity Lévy process.
///
/// `jump_law` is the normalized law of a single jump; the Lévy measure is
/// `intensity * jump_law`. With `intensity = 0` the law is ignored and the
/// process is continuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyTriplet {
    /// Drift under the active truncation cutoff.
    pub b: f64,
    /// Gaussian variance rate.
    pub sigma2: f64,
    /// Expected jumps per unit time, `lambda = nu(R)`.
    pub intensity: f64,
    /// Normalized law of one jump.
    pub jump_law: JumpLaw,
    /// Radius of the truncation `h(x) = x 1{|x| <= cutoff}`.
    pub cutoff: f64,
}

impl LevyTriplet {
    pub fn new(
        b: f64,
        sigma2: f64,
        intensity: f64,
        jump_law: JumpLaw,
        cutoff: f64,
    ) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::InvalidParameter(format!("drift b not finite: {b}")));
        }
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma2 must be finite and >= 0, got {sigma2}"
            )));
        }
        if !(intensity >= 0.0) || !intensity.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "intensity must be finite and >= 0, got {intensity}"
            )));
        }
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "truncation cutoff must be finite and > 0, got {cutoff}"
            )));
        }
        Ok(LevyTriplet {
            b,
            sigma2,
            intensity,
            jump_law,
            cutoff,
        })
    }

    /// Brownian-with-drift triplet `(b, sigma^2, 0)`.
    pub fn brownian(b: f64, sigma2: f64) -> Result<Self> {
        // Jump law is irrelevant at intensity 0; pick the unit atom.
        Self::new(b, sigma2, 0.0, JumpLaw::Dirac(1.0), 1.0)
    }

    /// Poisson triplet `(lambda, 0, lambda * delta_1)` under the canonical
    /// cutoff 1, so the path itself is the counting process.
    pub fn poisson(lambda: f64) -> Result<Self> {
        Self::new(lambda, 0.0, lambda, JumpLaw::Dirac(1.0), 1.0)
    }

    /// Compound Poisson triplet with no extra drift: the path is the pure
    /// jump sum, so `b` equals the truncated mean jump mass.
    pub fn compound_poisson(lambda: f64, law: JumpLaw) -> Result<Self> {
        let b = lambda * truncated_first_moment(&law, 1.0);
        Self::new(b, 0.0, lambda, law, 1.0)
    }

    /// Evaluates the characteristic exponent `psi(u)`.
    pub fn char_exponent(&self, u: f64) -> Result<Complex64> {
        let gaussian = Complex64::new(-0.5 * self.sigma2 * u * u, self.b * u);
        if self.intensity == 0.0 {
            return Ok(gaussian);
        }
        let jump = jump_expectation(&self.jump_law, u, self.cutoff)?;
        Ok(gaussian + self.intensity * jump)
    }

    /// Same triplet expressed under a new truncation cutoff: only the drift
    /// moves, per `b_new = b + lambda E[Z (1{|Z|<=new} - 1{|Z|<=old})]`.
    pub fn retruncate(&self, new_cutoff: f64) -> Result<Self> {
        if !(new_cutoff > 0.0) || !new_cutoff.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "truncation cutoff must be finite and > 0, got {new_cutoff}"
            )));
        }
        let correction = self.intensity
            * (truncated_first_moment(&self.jump_law, new_cutoff)
                - truncated_first_moment(&self.jump_law, self.cutoff));
        Ok(LevyTriplet {
            b: self.b + correction,
            cutoff: new_cutoff,
            ..*self
        })
    }

    /// Drift of the pure-drift-plus-jumps representation,
    /// `b_tilde = b - lambda E[Z 1{|Z| <= cutoff}]`. Truncation invariant.
    pub fn fv_drift(&self) -> f64 {
        self.b - self.intensity * truncated_first_moment(&self.jump_law, self.cutoff)
    }

    /// Slope of the predictable part of the canonical decomposition,
    /// `b_hat = b + lambda E[Z 1{|Z| > cutoff}]`. Truncation invariant;
    /// `b_hat * t` is the mean of the process at time `t`.
    pub fn canonical_drift(&self) -> f64 {
        self.b
            + self.intensity
                * (jump_law_moment(&self.jump_law, 1)
                    - truncated_first_moment(&self.jump_law, self.cutoff))
    }

    /// True iff the process is a martingale, i.e. the canonical drift
    /// vanishes (within `MARTINGALE_DRIFT_TOL`; drifts are closed forms).
    pub fn is_martingale(&self) -> bool {
        self.canonical_drift().abs() <= MARTINGALE_DRIFT_TOL
    }

    /// Angle-bracket rate `mu = sigma2 + lambda E[Z^2]`; the predictable
    /// quadratic variation grows as `mu * t`.
    pub fn angle_bracket_rate(&self) -> f64 {
        self.sigma2 + self.intensity * jump_law_moment(&self.jump_law, 2)
    }
}

/// Closed-form `E[Z^p]` for `p` in {1, 2}.
///
/// Panics on other `p`; only the first two moments are defined for the
/// supported laws and nothing downstream needs more.
pub fn jump_law_moment(law: &JumpLaw, p: u32) -> f64 {
    match (law, p) {
        (JumpLaw::Dirac(a), 1) => *a,
        (JumpLaw::Dirac(a), 2) => a * a,
        (JumpLaw::Uniform(a, b), 1) => 0.5 * (a + b),
        (JumpLaw::Uniform(a, b), 2) => (b * b + a * b + a * a) / 3.0,
        (JumpLaw::TwoPoint(_), 1) => 0.0,
        (JumpLaw::TwoPoint(a), 2) => a * a,
        (JumpLaw::Gaussian(_), 1) => 0.0,
        (JumpLaw::Gaussian(s), 2) => s * s,
        _ => panic!("jump law moment only defined for p in {{1, 2}}, got {p}"),
    }
}

/// Closed-form `E[Z 1{|Z| <= r}]`.
pub fn truncated_first_moment(law: &JumpLaw, r: f64) -> f64 {
    match *law {
        JumpLaw::Dirac(a) => {
            if a.abs() <= r {
                a
            } else {
                0.0
            }
        }
        JumpLaw::Uniform(a, b) => {
            let lo = a.max(-r);
            let hi = b.min(r);
            if hi <= lo {
                0.0
            } else {
                (hi * hi - lo * lo) / (2.0 * (b - a))
            }
        }
        // Symmetric laws truncate symmetrically.
        JumpLaw::TwoPoint(_) | JumpLaw::Gaussian(_) => 0.0,
    }
}

/// `E[exp(iuZ) - 1 - iuZ 1{|Z| <= r}]`, closed form where available and
/// quadrature for the Gaussian law.
pub fn jump_expectation(law: &JumpLaw, u: f64, r: f64) -> Result<Complex64> {
    match *law {
        JumpLaw::Gaussian(_) => jump_expectation_quadrature(law, u, r),
        _ => Ok(jump_expectation_closed(law, u, r)),
    }
}

fn jump_expectation_closed(law: &JumpLaw, u: f64, r: f64) -> Complex64 {
    let cf = match *law {
        JumpLaw::Dirac(a) => Complex64::new(0.0, u * a).exp(),
        JumpLaw::Uniform(a, b) => {
            if u == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                let expb = Complex64::new(0.0, u * b).exp();
                let expa = Complex64::new(0.0, u * a).exp();
                (expb - expa) / Complex64::new(0.0, u * (b - a))
            }
        }
        JumpLaw::TwoPoint(a) => Complex64::new((u * a).cos(), 0.0),
        JumpLaw::Gaussian(s) => Complex64::new((-0.5 * s * s * u * u).exp(), 0.0),
    };
    cf - 1.0 - Complex64::new(0.0, u * truncated_first_moment(law, r))
}

/// Quadrature route for laws with a density (Uniform, Gaussian). Kept
/// public so it can be cross-checked against the closed forms.
pub fn jump_expectation_quadrature(law: &JumpLaw, u: f64, r: f64) -> Result<Complex64> {
    let (lo, hi, density): (f64, f64, Box<dyn Fn(f64) -> f64>) = match *law {
        JumpLaw::Uniform(a, b) => {
            let w = 1.0 / (b - a);
            (a, b, Box::new(move |_| w))
        }
        JumpLaw::Gaussian(s) => {
            if s == 0.0 {
                // Degenerate law: all mass at 0 where the integrand vanishes.
                return Ok(Complex64::new(0.0, 0.0));
            }
            let norm = 1.0 / (s * (2.0 * std::f64::consts::PI).sqrt());
            (
                -8.0 * s,
                8.0 * s,
                Box::new(move |x: f64| norm * (-0.5 * (x / s) * (x / s)).exp()),
            )
        }
        _ => {
            return Err(Error::InvalidParameter(
                "quadrature route needs a jump law with a density".into(),
            ))
        }
    };
    // Split at the truncation kinks; the indicator is then constant on
    // each piece (decided at its midpoint), so every piece is smooth.
    let mut cuts = vec![lo];
    for c in [-r, r] {
        if c > lo && c < hi {
            cuts.push(c);
        }
    }
    cuts.push(hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = Complex64::new(0.0, 0.0);
    for pair in cuts.windows(2) {
        let truncated = (0.5 * (pair[0] + pair[1])).abs() <= r;
        let integrand = |x: f64| -> Complex64 {
            let trunc = if truncated { x } else { 0.0 };
            let e = Complex64::new(0.0, u * x).exp();
            (e - 1.0 - Complex64::new(0.0, u * trunc)) * density(x)
        };
        total += adaptive_simpson(&integrand, pair[0], pair[1], QUAD_TOL)?;
    }
    Ok(total)
}

fn simpson(a: f64, b: f64, fa: Complex64, fm: Complex64, fb: Complex64) -> Complex64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Result<Complex64> {
    fn recurse(
        f: &dyn Fn(f64) -> Complex64,
        a: f64,
        b: f64,
        fa: Complex64,
        fm: Complex64,
        fb: Complex64,
        whole: Complex64,
        tol: f64,
        depth: u32,
    ) -> Result<Complex64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let delta = left + right - whole;
        if delta.norm() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::QuadratureDivergence { a, b });
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }

    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}
