//! Closed-form solution of the single-threshold (static) problem.
//!
//! With quadratic access curves the expected loss
//! `L(tau) = (v/2) p(tau) q(tau) + v (1 - p(tau))` is a quartic in `tau`
//! whose interior stationary point has the closed form
//! `tau* = sqrt((b - a) / (a b))`. This module evaluates that form, checks
//! the second-order condition, and exposes the analytic sensitivities of
//! `tau*` to the curvature parameters. Every formula here is cross-checked
//! against grid search and finite differences in [`crate::verify`].

use crate::error::{Error, Result};
use crate::model::{expected_static_loss, p_of, q_of, valid_domain, CurvatureParams, Threshold};

/// Solved static problem.
///
/// `loss_at_opt` is the expected loss at `tau_star` *per unit of value at
/// risk* (the loss is linear in `v`, so callers scale it). `corner` marks
/// the no-interior-root case `b <= a` where the optimum sits at `tau = 0`;
/// `clamped` marks an interior form that exceeded 1 and was capped.
/// `domain_warning` carries the bound of [`valid_domain`] whenever
/// `tau_star` exceeds it, i.e. whenever the reported optimum relies on the
/// attacker curve extrapolated below zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticSolution {
    pub tau_star: Threshold,
    pub loss_at_opt: f64,
    pub sosc_holds: bool,
    pub domain_warning: Option<f64>,
    pub corner: bool,
    pub clamped: bool,
}

/// Optimal static threshold for quadratic curves.
///
/// Returns the corner solution `tau = 0` (flagged, not an error) when
/// `b <= a`: if the attacker's curve is no steeper than the user's, raising
/// the threshold costs the user more access than it denies the attacker, so
/// the loss is nondecreasing on all of [0, 1].
pub fn optimal_static_threshold(params: &CurvatureParams) -> Result<StaticSolution> {
    params.require_quadratic()?;
    let (a, b) = (params.a, params.b);
    if b <= a {
        let tau = Threshold::ZERO;
        return Ok(StaticSolution {
            tau_star: tau,
            loss_at_opt: expected_static_loss(tau, params, 1.0),
            sosc_holds: check_sosc(tau, params, 1.0),
            domain_warning: None,
            corner: true,
            clamped: false,
        });
    }
    let raw = ((b - a) / (a * b)).sqrt();
    let clamped = raw > 1.0;
    let tau = Threshold::new(raw.min(1.0)).expect("clamped value is in range");
    let bound = valid_domain(params).value();
    let domain_warning = if tau.value() > bound { Some(bound) } else { None };
    Ok(StaticSolution {
        tau_star: tau,
        loss_at_opt: expected_static_loss(tau, params, 1.0),
        sosc_holds: check_sosc(tau, params, 1.0),
        domain_warning,
        corner: false,
        clamped,
    })
}

/// Second-order sufficient condition for a local minimum at `tau`:
/// `(v/2)(3 a b tau^2 - a - b) + v a > 0`.
///
/// At the interior stationary point this is strict whenever `b > a`; at a
/// corner it reports the sign of the curvature-adjusted slope and is only
/// informative, not binding.
pub fn check_sosc(tau: Threshold, params: &CurvatureParams, v: f64) -> bool {
    let (a, b) = (params.a, params.b);
    let t2 = tau.value() * tau.value();
    (v / 2.0) * (3.0 * a * b * t2 - a - b) + v * a > 0.0
}

/// First-order condition residual `dL/dtau = v tau (a - (a q + b p)/2)`.
///
/// Zero (to rounding) at an interior optimum; used by the verification
/// suite and handy for callers double-checking a reported solution.
pub fn foc_residual(tau: Threshold, params: &CurvatureParams, v: f64) -> f64 {
    let p = p_of(tau, params);
    let q = q_of(tau, params);
    v * tau.value() * (params.a - (params.a * q + params.b * p) / 2.0)
}

/// Analytic sensitivities `(d tau*/d a, d tau*/d b)` of the *interior* form
/// `sqrt((b - a)/(a b))`: `-1/(2 a^2 tau*)` and `+1/(2 b^2 tau*)`.
///
/// The optimum always moves down as the user's curve steepens and up as the
/// attacker's does. Errors with [`CornerSolution`](Error::CornerSolution)
/// when `b <= a` (no interior optimum to differentiate); when the interior
/// form exceeds 1 the derivatives still describe the unclamped formula.
pub fn static_sensitivities(params: &CurvatureParams) -> Result<(f64, f64)> {
    params.require_quadratic()?;
    let (a, b) = (params.a, params.b);
    if b <= a {
        return Err(Error::CornerSolution { a, b });
    }
    let tau = ((b - a) / (a * b)).sqrt();
    Ok((-1.0 / (2.0 * a * a * tau), 1.0 / (2.0 * b * b * tau)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn is_close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol
    }

    fn params(a: f64, b: f64) -> CurvatureParams {
        CurvatureParams::new(a, b).unwrap()
    }

    #[test]
    fn interior_optimum_pins() {
        let sol = optimal_static_threshold(&params(1.0, 2.5)).unwrap();
        assert!(is_close(sol.tau_star.value(), 0.7745966692414834, 1e-15));
        assert!(is_close(sol.loss_at_opt, 0.3875, 1e-12));
        assert!(sol.sosc_holds);
        assert!(!sol.corner);
        assert!(!sol.clamped);
        assert_eq!(sol.domain_warning, None);

        // At a = 1, b = 2 the optimum is sqrt((2 - 1) / 2) = 1/sqrt(2).
        let sol = optimal_static_threshold(&params(1.0, 2.0)).unwrap();
        assert!(is_close(sol.tau_star.value(), std::f64::consts::FRAC_1_SQRT_2, 1e-15));
    }

    #[test]
    fn optimum_satisfies_first_order_condition() {
        for (a, b) in [(1.0, 2.5), (0.5, 0.9), (2.0, 3.9), (1.5, 2.0)] {
            let sol = optimal_static_threshold(&params(a, b)).unwrap();
            let r = foc_residual(sol.tau_star, &params(a, b), 1.0);
            assert!(r.abs() < 1e-12, "residual {r} at a={a} b={b}");
        }
    }

    #[test]
    fn flat_or_inverted_attacker_curve_gives_corner() {
        let sol = optimal_static_threshold(&params(2.5, 1.0)).unwrap();
        assert!(sol.corner);
        assert_eq!(sol.tau_star, Threshold::ZERO);
        assert!(is_close(sol.loss_at_opt, 0.5, 1e-15));
        // Loss is strictly increasing away from the corner here.
        assert!(sol.sosc_holds);

        // Exactly equal curvatures: the loss is flat to first order at 0.
        let sol = optimal_static_threshold(&params(1.0, 1.0)).unwrap();
        assert!(sol.corner);
        assert!(!sol.sosc_holds);
    }

    #[test]
    fn steep_gap_with_shallow_curves_clamps_to_one() {
        // (b - a)/(a b) = 2 > 1 here, so the interior form exceeds 1.
        let sol = optimal_static_threshold(&params(0.25, 0.5)).unwrap();
        assert!(sol.clamped);
        assert_eq!(sol.tau_star, Threshold::ONE);
        assert!(!sol.corner);
    }

    #[test]
    fn optimum_past_valid_domain_carries_a_warning() {
        // b > 3a puts the interior optimum past the point where the
        // attacker curve goes negative.
        let sol = optimal_static_threshold(&params(1.0, 3.5)).unwrap();
        let bound = sol.domain_warning.expect("expected a domain warning");
        assert!(is_close(bound, (2.0f64 / 3.5).sqrt(), 1e-15));
        assert!(sol.tau_star.value() > bound);

        // b = 3a sits exactly on the edge: no warning.
        let sol = optimal_static_threshold(&params(1.0, 3.0)).unwrap();
        assert_eq!(sol.domain_warning, None);
    }

    #[test]
    fn sensitivity_pins() {
        let (da, db) = static_sensitivities(&params(1.0, 2.5)).unwrap();
        assert!(is_close(da, -0.6454972243679028, 1e-12));
        assert!(is_close(db, 0.10327955589886445, 1e-12));
        assert!(matches!(
            static_sensitivities(&params(2.0, 1.0)),
            Err(Error::CornerSolution { .. })
        ));
    }

    #[test]
    fn non_quadratic_exponent_is_rejected() {
        let p = CurvatureParams::with_exponent(1.0, 2.5, 3.0).unwrap();
        assert!(matches!(
            optimal_static_threshold(&p),
            Err(Error::UnsupportedExponent(_))
        ));
        assert!(matches!(
            static_sensitivities(&p),
            Err(Error::UnsupportedExponent(_))
        ));
    }

    proptest! {
        /// An unclamped interior optimum is a strict local minimum.
        #[test]
        fn interior_optimum_beats_its_neighbors(
            a in 0.3f64..3.0,
            gap in 0.05f64..2.0,
        ) {
            let b = (a + gap).min(4.0);
            prop_assume!(b > a);
            let p = params(a, b);
            let sol = optimal_static_threshold(&p).unwrap();
            prop_assume!(!sol.clamped && !sol.corner);
            let t = sol.tau_star.value();
            prop_assume!(t > 1e-3 && t < 1.0 - 1e-3);
            let h = 1e-3;
            let left = expected_static_loss(Threshold::new(t - h).unwrap(), &p, 1.0);
            let right = expected_static_loss(Threshold::new(t + h).unwrap(), &p, 1.0);
            prop_assert!(sol.loss_at_opt < left);
            prop_assert!(sol.loss_at_opt < right);
            prop_assert!(sol.sosc_holds);
        }

        /// Sensitivities match the direction the optimum actually moves.
        #[test]
        fn sensitivities_predict_parameter_bumps(
            a in 0.5f64..2.0,
            gap in 0.3f64..1.5,
        ) {
            let b = a + gap;
            let p = params(a, b);
            let sol = optimal_static_threshold(&p).unwrap();
            prop_assume!(!sol.clamped);
            let (da, db) = static_sensitivities(&p).unwrap();
            let h = 1e-6;
            let bump_a = optimal_static_threshold(&params(a + h, b)).unwrap();
            let bump_b = optimal_static_threshold(&params(a, b + h)).unwrap();
            prop_assume!(!bump_a.clamped && !bump_b.clamped);
            let fd_a = (bump_a.tau_star.value() - sol.tau_star.value()) / h;
            let fd_b = (bump_b.tau_star.value() - sol.tau_star.value()) / h;
            prop_assert!((fd_a - da).abs() <= 1e-3 * da.abs().max(1.0));
            prop_assert!((fd_b - db).abs() <= 1e-3 * db.abs().max(1.0));
        }
    }
}
