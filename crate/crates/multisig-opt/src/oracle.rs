//! Brute-force and numeric cross-checks for the closed-form solvers.
//!
//! Everything in this module is deliberately naive: dense grid search,
//! adaptive Simpson quadrature, central finite differences, and plain
//! coordinate descent. The one structural rule is that this module depends
//! only on [`crate::model`] (and the execution switch) — never on
//! [`crate::static_opt`] or [`crate::dynamic_opt`] — so a bug in a solver
//! formula cannot leak into the oracle that is supposed to catch it.

use crate::error::{Error, Result};
use crate::exec::{argmin_by, ExecMode};
use crate::model::{
    expected_static_loss, p_of, q_of, stage_weights, CurvatureParams, DecayParams, StageInterval,
    Threshold,
};

// ---------------------------------------------------------------------------
// Grid specification
// ---------------------------------------------------------------------------

/// An inclusive 1-D evaluation grid `[lo, hi]` with at least 3 points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    lo: f64,
    hi: f64,
    points: usize,
}

impl GridSpec {
    /// Grid with an explicit point count.
    pub fn with_points(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || hi <= lo {
            return Err(Error::InvalidParameter(format!(
                "grid needs finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        if points < 3 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 3 points, got {points}"
            )));
        }
        Ok(GridSpec { lo, hi, points })
    }

    /// Grid with a target step; the step must tile `[lo, hi]` into at least
    /// two pieces. The realized step is `(hi - lo) / (points - 1)`.
    pub fn with_step(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !step.is_finite() || step <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "grid step must be positive and finite, got {step}"
            )));
        }
        if !lo.is_finite() || !hi.is_finite() || hi <= lo {
            return Err(Error::InvalidParameter(format!(
                "grid needs finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        // Small forgiveness so e.g. (3.0 - 0.25) / 0.25 lands on 11, not 10.
        let intervals = ((hi - lo) / step + 1e-9).floor() as usize;
        Self::with_points(lo, hi, intervals + 1)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    /// The `i`-th grid value; the last index lands exactly on `hi`.
    pub fn value(&self, i: usize) -> f64 {
        debug_assert!(i < self.points);
        if i + 1 == self.points {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }
}

// ---------------------------------------------------------------------------
// Static grid search
// ---------------------------------------------------------------------------

/// Exhaustive minimizer of the static expected loss over a threshold grid.
///
/// The grid must lie within [0, 1]. Ties break toward the smaller
/// threshold, so results are independent of execution mode and thread
/// count.
pub fn grid_minimize_static(
    params: &CurvatureParams,
    v: f64,
    grid: &GridSpec,
    mode: ExecMode,
) -> Result<Threshold> {
    if grid.lo < 0.0 || grid.hi > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "threshold grid must lie within [0, 1], got [{}, {}]",
            grid.lo, grid.hi
        )));
    }
    let (idx, _) = argmin_by(mode, grid.points(), |i| {
        let tau = Threshold::new(grid.value(i)).expect("grid value validated in range");
        expected_static_loss(tau, params, v)
    });
    Threshold::new(grid.value(idx))
}

// ---------------------------------------------------------------------------
// Adaptive quadrature
// ---------------------------------------------------------------------------

/// The two exponential integrands behind the stage weights, evaluated
/// pointwise so quadrature shares no code with the closed-form integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrand {
    /// `e^(-lambda t)` — the value-discount weight `y`.
    ValueDiscount { lambda: f64 },
    /// `e^(-(lambda ± gamma) t)` — the joint weight `z` under the given
    /// drift regime.
    JointDiscount { decay: DecayParams },
}

impl Integrand {
    fn rate(&self) -> f64 {
        match self {
            Integrand::ValueDiscount { lambda } => *lambda,
            Integrand::JointDiscount { decay } => decay.z_rate(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (-self.rate() * t).exp()
    }
}

/// Result of [`quadrature`]: the integral estimate, and where an unbounded
/// interval was truncated (if it was).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub truncated_at: Option<f64>,
}

/// Integrand magnitude below which the tail of an unbounded integral is
/// dropped.
const TAIL_CUTOFF: f64 = 1e-14;

/// Adaptive Simpson integration of `integrand` over `interval` to relative
/// tolerance `rel_tol`.
///
/// Unbounded intervals are truncated where the integrand falls below
/// `1e-14`; the truncation point is reported. A non-positive rate on an
/// unbounded interval is an error, mirroring the closed form.
pub fn quadrature(
    integrand: &Integrand,
    interval: &StageInterval,
    rel_tol: f64,
) -> Result<QuadratureResult> {
    if !rel_tol.is_finite() || rel_tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "relative tolerance must be positive, got {rel_tol}"
        )));
    }
    let start = interval.start;
    let mut end = interval.end;
    let mut truncated_at = None;
    if end.is_infinite() {
        let rate = integrand.rate();
        if rate <= 0.0 {
            return Err(Error::DivergentIntegral(format!(
                "rate {rate} is not positive on unbounded interval [{start}, inf)"
            )));
        }
        // Solve e^(-rate t) = TAIL_CUTOFF for the truncation point.
        let cutoff = -TAIL_CUTOFF.ln() / rate;
        end = cutoff.max(start + 1.0);
        truncated_at = Some(end);
    }
    let value = adaptive_simpson(|t| integrand.eval(t), start, end, rel_tol);
    Ok(QuadratureResult { value, truncated_at })
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let tol = (rel_tol * whole.abs()).max(f64::MIN_POSITIVE);
    simpson_rec(&f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        // Richardson extrapolation of the two half-interval estimates.
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

// ---------------------------------------------------------------------------
// Direct schedule search
// ---------------------------------------------------------------------------

/// Schedule found by brute-force coordinate descent.
///
/// `boundaries` is the full partition `[0, T_1, ..., horizon]` (length one
/// more than `taus`).
#[derive(Debug, Clone, PartialEq)]
pub struct DirectSearchResult {
    pub taus: Vec<f64>,
    pub boundaries: Vec<f64>,
    pub objective: f64,
}

/// Number of bracket-shrinking refinement rounds in the coordinate descent.
const REFINE_ROUNDS: usize = 3;

/// Sweeps per round before declaring the round converged.
const MAX_SWEEPS: usize = 25;

/// Reduced multi-stage objective evaluated from the model alone:
/// sum over stages of `(v/2) z_i p(tau_i) q(tau_i) - v y_i p(tau_i)`.
///
/// This drops the threshold-independent constant from the expected loss, so
/// it can be negative; differences between schedules are what matter.
fn reduced_objective_raw(
    taus: &[f64],
    bounds: &[f64],
    params: &CurvatureParams,
    decay: &DecayParams,
    v: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for (i, &t) in taus.iter().enumerate() {
        let interval = StageInterval::new(bounds[i], bounds[i + 1])?;
        let w = stage_weights(&interval, decay)?;
        let tau = Threshold::new(t)?;
        let p = p_of(tau, params);
        let q = q_of(tau, params);
        total += (v / 2.0) * w.z * p * q - v * w.y * p;
    }
    Ok(total)
}

/// Brute-force minimizer of the multi-stage objective for up to 3 stages.
///
/// Runs coordinate descent over the `n` thresholds and `n - 1` interior
/// boundaries: each coordinate is scanned on a `grid.points()`-point grid
/// over its current bracket, sweeps repeat until the objective stops
/// improving, and the brackets then shrink around the incumbent for
/// 3 refinement rounds. `grid` also fixes the threshold range (normally
/// `[0, 1]`). Slow and simple on purpose — this is the referee for
/// the fixed-point solver, so it shares no logic with it.
pub fn direct_minimize_schedule(
    n: usize,
    params: &CurvatureParams,
    decay: &DecayParams,
    v: f64,
    horizon: f64,
    grid: &GridSpec,
    mode: ExecMode,
) -> Result<DirectSearchResult> {
    if n == 0 || n > 3 {
        return Err(Error::InvalidParameter(format!(
            "direct search supports 1 to 3 stages, got {n}"
        )));
    }
    if horizon <= 0.0 || horizon.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    // Finite cap for boundary coordinates on an unbounded horizon: past the
    // point where the value discount is ~1e-14 a boundary cannot matter.
    let t_hi = if horizon.is_infinite() {
        if decay.lambda <= 0.0 {
            return Err(Error::DivergentIntegral(
                "unbounded horizon with zero value discount".to_string(),
            ));
        }
        -TAIL_CUTOFF.ln() / decay.lambda
    } else {
        horizon
    };
    // Surface an infeasible tail (e.g. growth with gamma >= lambda on an
    // unbounded horizon) before the scan loop rather than inside it.
    stage_weights(&StageInterval::new(0.0, horizon)?, decay)?;

    // Keep neighbors strictly ordered inside the scans.
    let margin = 1e-9 * t_hi.max(1.0);

    let eval = |taus: &[f64], bounds: &[f64]| -> f64 {
        reduced_objective_raw(taus, bounds, params, decay, v).unwrap_or(f64::INFINITY)
    };

    // Given fixed boundaries the objective is a sum of independent
    // single-stage terms, so the best threshold vector is n separate
    // brute-force scans. Used below to initialize globally: coordinate
    // descent alone can start every stage in the same corner and then see a
    // flat boundary coordinate it has no reason to move.
    let best_taus_for = |bs: &[f64]| -> Option<(Vec<f64>, f64)> {
        let mut ts = Vec::with_capacity(n);
        let mut total = 0.0;
        for i in 0..n {
            let interval = StageInterval::new(bs[i], bs[i + 1]).ok()?;
            let w = stage_weights(&interval, decay).ok()?;
            let mut best_t = f64::NAN;
            let mut best_s = f64::INFINITY;
            for j in 0..grid.points() {
                let t = grid.value(j);
                let tau = Threshold::new(t).ok()?;
                let p = p_of(tau, params);
                let q = q_of(tau, params);
                let s = (v / 2.0) * w.z * p * q - v * w.y * p;
                if s < best_s {
                    best_s = s;
                    best_t = t;
                }
            }
            ts.push(best_t);
            total += best_s;
        }
        Some((ts, total))
    };

    let mut bounds = vec![0.0; n + 1];
    for (i, b) in bounds.iter_mut().enumerate() {
        *b = t_hi * i as f64 / n as f64;
    }
    bounds[n] = horizon;
    let (mut taus, mut best) = best_taus_for(&bounds)
        .unwrap_or_else(|| (vec![0.5 * (grid.lo() + grid.hi()); n], f64::INFINITY));

    // Global pass over the interior boundaries on a coarse grid.
    if n == 2 {
        const CANDIDATES: usize = 201;
        for j in 0..CANDIDATES {
            let t = margin + (t_hi - 2.0 * margin) * j as f64 / (CANDIDATES - 1) as f64;
            let bs = vec![0.0, t, horizon];
            if let Some((ts, score)) = best_taus_for(&bs) {
                if score < best {
                    best = score;
                    taus = ts;
                    bounds = bs;
                }
            }
        }
    } else if n == 3 {
        const CANDIDATES: usize = 41;
        for j1 in 0..CANDIDATES {
            let t1 = margin + (t_hi - 2.0 * margin) * j1 as f64 / (CANDIDATES - 1) as f64;
            for j2 in (j1 + 1)..CANDIDATES {
                let t2 = margin + (t_hi - 2.0 * margin) * j2 as f64 / (CANDIDATES - 1) as f64;
                let bs = vec![0.0, t1, t2, horizon];
                if let Some((ts, score)) = best_taus_for(&bs) {
                    if score < best {
                        best = score;
                        taus = ts;
                        bounds = bs;
                    }
                }
            }
        }
    }

    // Current bracket per coordinate: thresholds first, then boundaries.
    let mut tau_brackets = vec![(grid.lo(), grid.hi()); n];
    let mut bound_brackets = vec![(0.0, t_hi); n - 1];
    for round in 0..REFINE_ROUNDS {
        for _sweep in 0..MAX_SWEEPS {
            let before = best;
            // Threshold coordinates.
            for i in 0..n {
                let (lo, hi) = tau_brackets[i];
                let scan = GridSpec::with_points(lo, hi, grid.points())?;
                let (idx, score) = argmin_by(mode, scan.points(), |j| {
                    let mut t = taus.clone();
                    t[i] = scan.value(j);
                    eval(&t, &bounds)
                });
                if score < best {
                    taus[i] = scan.value(idx);
                    best = score;
                }
            }
            // Interior boundary coordinates.
            for i in 0..n.saturating_sub(1) {
                let (lo, hi): (f64, f64) = bound_brackets[i];
                let lo = lo.max(bounds[i] + margin);
                let hi = hi.min(bounds[i + 2].min(t_hi) - margin);
                if hi <= lo {
                    continue;
                }
                let scan = GridSpec::with_points(lo, hi, grid.points())?;
                let (idx, score) = argmin_by(mode, scan.points(), |j| {
                    let mut b = bounds.clone();
                    b[i + 1] = scan.value(j);
                    eval(&taus, &b)
                });
                if score < best {
                    bounds[i + 1] = scan.value(idx);
                    best = score;
                }
            }
            if before - best <= 1e-15 * best.abs().max(1.0) {
                break;
            }
        }
        // Shrink every bracket around the incumbent for the next round.
        if round + 1 < REFINE_ROUNDS {
            for i in 0..n {
                let width = 2.0 * (tau_brackets[i].1 - tau_brackets[i].0)
                    / (grid.points() - 1) as f64;
                tau_brackets[i] = (
                    (taus[i] - width).max(grid.lo()),
                    (taus[i] + width).min(grid.hi()),
                );
            }
            for i in 0..n.saturating_sub(1) {
                let width = 2.0 * (bound_brackets[i].1 - bound_brackets[i].0)
                    / (grid.points() - 1) as f64;
                bound_brackets[i] = (
                    (bounds[i + 1] - width).max(0.0),
                    (bounds[i + 1] + width).min(t_hi),
                );
            }
        }
    }

    if !best.is_finite() {
        return Err(Error::NoFeasibleSchedule(
            "direct search found no finite-objective schedule".to_string(),
        ));
    }
    Ok(DirectSearchResult {
        taus,
        boundaries: bounds,
        objective: best,
    })
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

/// Central finite difference `(f(x + h) - f(x - h)) / (2 h)`.
pub fn finite_diff<F: Fn(f64) -> f64>(f: F, at: f64, h: f64) -> f64 {
    (f(at + h) - f(at - h)) / (2.0 * h)
}

/// Central finite difference for a fallible function; either evaluation
/// failing fails the derivative.
pub fn try_finite_diff<F: Fn(f64) -> Result<f64>>(f: F, at: f64, h: f64) -> Result<f64> {
    Ok((f(at + h)? - f(at - h)?) / (2.0 * h))
}
