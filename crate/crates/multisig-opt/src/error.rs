//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong when building model inputs or solving.
///
/// Variants are split roughly into three groups: bad inputs
/// ([`InvalidParameter`](Error::InvalidParameter),
/// [`UnsupportedExponent`](Error::UnsupportedExponent)), structurally
/// infeasible problems ([`DivergentIntegral`](Error::DivergentIntegral),
/// [`GammaNotBelowLambda`](Error::GammaNotBelowLambda),
/// [`NoFeasibleSchedule`](Error::NoFeasibleSchedule),
/// [`CollisionUnresolvable`](Error::CollisionUnresolvable)), and equations
/// that degenerate for the given inputs
/// ([`CornerSolution`](Error::CornerSolution),
/// [`ZeroGamma`](Error::ZeroGamma),
/// [`DegenerateThresholds`](Error::DegenerateThresholds),
/// [`InvalidLogArgument`](Error::InvalidLogArgument)).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A constructor or solver was handed a value outside its documented
    /// domain (non-positive scale, threshold outside [0, 1], zero stages, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The closed-form optimizers are derived for curvature exponent k = 2
    /// and refuse to run silently-wrong formulas for anything else.
    #[error("closed forms require curvature exponent k = 2, got k = {0}")]
    UnsupportedExponent(f64),

    /// The interior first-order condition has no root because the attacker
    /// curve is no steeper than the user curve (b <= a); the optimum sits at
    /// the corner tau = 0.
    #[error("no interior optimum: attacker curvature b = {b} does not exceed user curvature a = {a}")]
    CornerSolution { a: f64, b: f64 },

    /// An exponential time integral over an unbounded interval has a
    /// non-positive decay rate and therefore no finite value.
    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    /// The time-lock equation needs a nonzero capability drift; with
    /// gamma = 0 every stage shares one threshold and boundaries are moot.
    #[error("time-lock placement is undefined for gamma = 0: all stages share one threshold")]
    ZeroGamma,

    /// Adjacent stage thresholds coincide, so the time-lock equation reduces
    /// to 0/0 and any boundary placement gives the same objective.
    #[error("adjacent stage thresholds coincide; the time-lock equation degenerates")]
    DegenerateThresholds,

    /// The time-lock equation requires the log of this quantity, which is not
    /// positive (or not finite) for the given thresholds.
    #[error("time-lock equation has no solution: log argument {0} is not a positive real")]
    InvalidLogArgument(f64),

    /// The growth-regime degradation bound only exists when the attacker's
    /// growth rate stays below the discount rate.
    #[error("growth-regime bound requires 0 < gamma < lambda, got gamma = {gamma}, lambda = {lambda}")]
    GammaNotBelowLambda { gamma: f64, lambda: f64 },

    /// The schedule solver (or its fallback search) could not produce an
    /// ordered, finite-objective schedule.
    #[error("no feasible schedule: {0}")]
    NoFeasibleSchedule(String),

    /// Activation ticks could not be made strictly increasing by the
    /// bump-by-one rule without running past a later stage's tick.
    #[error("cannot assign strictly increasing activation ticks: {0}")]
    CollisionUnresolvable(String),

    /// A file or stream handed to a parser did not match the expected format.
    #[error("malformed input: {0}")]
    MalformedInput(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
