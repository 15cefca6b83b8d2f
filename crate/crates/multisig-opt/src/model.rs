//! The probability model every solver and oracle consumes.
//!
//! A scheme with threshold fraction `tau = m/n` is scored through two
//! curves: the probability that the user can still clear the threshold,
//! `p(tau) = 1 - (a/k) tau^k`, and the probability that an attacker can,
//! `q(tau) = 1 - (b/k) tau^k`. Raising the threshold locks out both sides;
//! larger `a` means the user degrades faster, larger `b` means the attacker
//! does. Both are quasi-probabilities: for large
//! curvature they can leave [0, 1], and they are evaluated *unclamped*
//! everywhere so that closed forms and numeric cross-checks see the same
//! smooth function. [`valid_domain`] reports where `q` stays a genuine
//! probability; optimizers attach a warning when an optimum lands outside
//! it rather than silently bending the model.
//!
//! Time enters through a discount rate `lambda` on value at risk and a
//! drift rate `gamma` on the attacker's capability: integrating
//! `e^{-lambda t}` and `e^{-(lambda +/- gamma) t}` over a stage's interval
//! gives the stage weights `y` and `z` that the multi-stage objective is
//! built from.

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Core parameter types
// ---------------------------------------------------------------------------

/// Curvature of the user (`a`) and attacker (`b`) access curves, with shape
/// exponent `k`.
///
/// All three must be positive and finite. The closed-form optimizers are
/// derived for `k = 2` and return
/// [`UnsupportedExponent`](Error::UnsupportedExponent) otherwise; the model
/// evaluations in this module accept any valid `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureParams {
    pub a: f64,
    pub b: f64,
    pub k: f64,
}

impl CurvatureParams {
    /// Quadratic-curve parameters (`k = 2`), the case the optimizers solve.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        Self::with_exponent(a, b, 2.0)
    }

    /// Parameters with an explicit shape exponent.
    pub fn with_exponent(a: f64, b: f64, k: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("k", k)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "curvature {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(CurvatureParams { a, b, k })
    }

    /// Guard used by every closed form that is only valid for `k = 2`.
    pub(crate) fn require_quadratic(&self) -> Result<()> {
        if (self.k - 2.0).abs() > 1e-12 {
            Err(Error::UnsupportedExponent(self.k))
        } else {
            Ok(())
        }
    }

    /// `tau^k`, with the ubiquitous quadratic case kept on the fast exact
    /// path.
    fn pow_k(&self, tau: f64) -> f64 {
        if self.k == 2.0 {
            tau * tau
        } else {
            tau.powf(self.k)
        }
    }
}

/// A threshold fraction `m/n`, validated to lie in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Threshold(f64);

impl Threshold {
    pub const ZERO: Threshold = Threshold(0.0);
    pub const ONE: Threshold = Threshold(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidParameter(format!(
                "threshold must lie in [0, 1], got {value}"
            )));
        }
        Ok(Threshold(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Direction of the attacker's capability drift over time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackerRegime {
    /// Attacker weakens at rate `gamma` (effective discount `lambda + gamma`).
    Decay,
    /// Attacker strengthens at rate `gamma` (effective discount `lambda - gamma`).
    Growth,
}

/// Time structure of the problem: value discount rate `lambda`, capability
/// drift rate `gamma`, and the drift's direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayParams {
    pub lambda: f64,
    pub gamma: f64,
    pub regime: AttackerRegime,
}

impl DecayParams {
    pub fn new(lambda: f64, gamma: f64, regime: AttackerRegime) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("gamma", gamma)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "rate {name} must be nonnegative and finite, got {v}"
                )));
            }
        }
        Ok(DecayParams { lambda, gamma, regime })
    }

    /// Weakening attacker.
    pub fn decay(lambda: f64, gamma: f64) -> Result<Self> {
        Self::new(lambda, gamma, AttackerRegime::Decay)
    }

    /// Strengthening attacker.
    pub fn growth(lambda: f64, gamma: f64) -> Result<Self> {
        Self::new(lambda, gamma, AttackerRegime::Growth)
    }

    /// Discount rate applied to the joint-access weight `z`.
    ///
    /// With `gamma = 0` this is exactly `lambda` (same bits), which is what
    /// makes the zero-drift model collapse onto the static one without any
    /// special-casing.
    pub(crate) fn z_rate(&self) -> f64 {
        match self.regime {
            AttackerRegime::Decay => self.lambda + self.gamma,
            AttackerRegime::Growth => self.lambda - self.gamma,
        }
    }
}

/// Loss per state, parameterized by the value at risk `v`.
///
/// The four joint outcomes of (user clears, attacker clears) cost:
/// nothing when only the user can spend; the full value when only the
/// attacker can, or when nobody can (the funds are gone either way); and
/// half the value in the contested state where both can, modeling a race
/// with even odds. Note the attacker *clears* with probability `q(tau)`,
/// so a low threshold puts all the mass on the contested state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateLossTable {
    pub v: f64,
}

impl StateLossTable {
    pub fn new(v: f64) -> Result<Self> {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "value at risk must be positive and finite, got {v}"
            )));
        }
        Ok(StateLossTable { v })
    }

    /// Loss for one joint outcome.
    pub fn loss(&self, user_clears: bool, attacker_clears: bool) -> f64 {
        match (user_clears, attacker_clears) {
            (true, false) => 0.0,
            (false, true) => self.v,
            (false, false) => self.v,
            (true, true) => self.v / 2.0,
        }
    }

    /// Expected loss at `tau`: the four-state sum with the user clearing
    /// with probability `p(tau)` and the attacker with `q(tau)`,
    /// independently.
    ///
    /// Algebraically identical to [`expected_static_loss`]; kept as the
    /// independent state-sum form so tests can check the two agree.
    pub fn expected_loss(&self, tau: Threshold, params: &CurvatureParams) -> f64 {
        let p = p_of(tau, params);
        let q = q_of(tau, params);
        let states = [
            (p * (1.0 - q), self.loss(true, false)),
            ((1.0 - p) * q, self.loss(false, true)),
            ((1.0 - p) * (1.0 - q), self.loss(false, false)),
            (p * q, self.loss(true, true)),
        ];
        states.iter().map(|(prob, loss)| prob * loss).sum()
    }
}

/// One stage's time interval `[start, end)`. `end` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageInterval {
    pub start: f64,
    pub end: f64,
}

impl StageInterval {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !start.is_finite() || start < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "stage start must be finite and nonnegative, got {start}"
            )));
        }
        if end.is_nan() || end <= start {
            return Err(Error::InvalidParameter(format!(
                "stage end must exceed start {start}, got {end}"
            )));
        }
        Ok(StageInterval { start, end })
    }

    pub fn is_unbounded(&self) -> bool {
        self.end.is_infinite()
    }
}

/// Discounted time weights of one stage: `y` integrates the value discount
/// alone, `z` additionally carries the attacker drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageWeights {
    pub y: f64,
    pub z: f64,
}

// ---------------------------------------------------------------------------
// Model evaluation
// ---------------------------------------------------------------------------

/// User's access probability `p(tau) = 1 - (a/k) tau^k`, unclamped.
pub fn p_of(tau: Threshold, params: &CurvatureParams) -> f64 {
    1.0 - (params.a / params.k) * params.pow_k(tau.value())
}

/// Attacker's access probability `q(tau) = 1 - (b/k) tau^k`, unclamped.
pub fn q_of(tau: Threshold, params: &CurvatureParams) -> f64 {
    1.0 - (params.b / params.k) * params.pow_k(tau.value())
}

/// Largest threshold at which `q` is still a genuine probability:
/// `min(1, (k/b)^(1/k))`.
///
/// Past this point the attacker curve goes negative and expected losses are
/// an extrapolation. Optimizers report (not clamp) offenders.
pub fn valid_domain(params: &CurvatureParams) -> Threshold {
    let bound = (params.k / params.b).powf(1.0 / params.k);
    Threshold(bound.min(1.0))
}

/// Expected loss at `tau` for value at risk `v`:
/// `(v/2) p(tau) q(tau) + v (1 - p(tau))`.
pub fn expected_static_loss(tau: Threshold, params: &CurvatureParams, v: f64) -> f64 {
    let p = p_of(tau, params);
    let q = q_of(tau, params);
    (v / 2.0) * p * q + v * (1.0 - p)
}

/// Discount threshold below which an exponential integral is evaluated as
/// its zero-rate limit (the interval length) instead of the generic formula,
/// which loses all precision to cancellation at rates this small.
const RATE_EPS: f64 = 1e-12;

/// `integral of exp(-rate t) dt` over `[start, end]`.
fn exp_integral(rate: f64, start: f64, end: f64) -> Result<f64> {
    if end.is_infinite() {
        if rate <= 0.0 {
            return Err(Error::DivergentIntegral(format!(
                "rate {rate} is not positive on unbounded interval [{start}, inf)"
            )));
        }
        return Ok((-rate * start).exp() / rate);
    }
    if rate.abs() < RATE_EPS {
        return Ok(end - start);
    }
    Ok(((-rate * start).exp() - (-rate * end).exp()) / rate)
}

/// Stage weights `y` (value discount) and `z` (discount plus attacker
/// drift) for one interval.
///
/// Fails with [`DivergentIntegral`](Error::DivergentIntegral) when the
/// interval is unbounded and the corresponding rate is not positive — in
/// particular for a growth-regime attacker with `gamma >= lambda` on an
/// infinite horizon.
pub fn stage_weights(interval: &StageInterval, decay: &DecayParams) -> Result<StageWeights> {
    let y = exp_integral(decay.lambda, interval.start, interval.end)?;
    let z = exp_integral(decay.z_rate(), interval.start, interval.end)?;
    Ok(StageWeights { y, z })
}
