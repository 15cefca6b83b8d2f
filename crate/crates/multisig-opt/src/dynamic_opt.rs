//! Multi-stage (time-locked) threshold schedules.
//!
//! A schedule partitions time into `n` stages `[T_0 = 0, T_1), [T_1, T_2),
//! ..., [T_{n-1}, horizon)`, each with its own threshold. Discounting the
//! static loss through the stage weights and dropping the
//! threshold-independent constant leaves the reduced objective
//!
//! ```text
//! sum_i  (v/2) z_i p(tau_i) q(tau_i) - v y_i p(tau_i)
//! ```
//!
//! which separates: given boundaries, each stage threshold has the closed
//! form of [`stage_threshold`]; given thresholds, each interior boundary has
//! the closed form of [`optimal_timelock`]. [`solve_schedule`] alternates
//! the two until they agree — a damped fixed point with a grid-refinement
//! fallback for geometries where the alternation misbehaves.

use crate::error::{Error, Result};
use crate::exec::{argmin_by, ExecMode};
use crate::model::{
    p_of, q_of, stage_weights, valid_domain, CurvatureParams, DecayParams, StageInterval,
    StageWeights, Threshold,
};
use crate::static_opt::StaticSolution;

// ---------------------------------------------------------------------------
// Schedule types
// ---------------------------------------------------------------------------

/// A stage's threshold plus how it was obtained: `corner` when the interior
/// form had no positive root (optimum at 0), `clamped` when it exceeded 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageThreshold {
    pub tau: Threshold,
    pub corner: bool,
    pub clamped: bool,
}

/// One stage: a threshold in force over a time interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub threshold: StageThreshold,
    pub interval: StageInterval,
}

/// A complete schedule: contiguous stages starting at time 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    stages: Vec<Stage>,
}

impl Schedule {
    /// Build a schedule, validating that stages start at 0 and tile time
    /// contiguously.
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidParameter("schedule needs at least one stage".into()));
        }
        if stages[0].interval.start != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "first stage must start at 0, got {}",
                stages[0].interval.start
            )));
        }
        for pair in stages.windows(2) {
            if pair[0].interval.end != pair[1].interval.start {
                return Err(Error::InvalidParameter(format!(
                    "stages must be contiguous: {} != {}",
                    pair[0].interval.end, pair[1].interval.start
                )));
            }
        }
        Ok(Schedule { stages })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.threshold.tau.value()).collect()
    }

    /// Interior boundaries `T_1, ..., T_{n-1}` (empty for one stage).
    pub fn interior_boundaries(&self) -> Vec<f64> {
        self.stages.iter().skip(1).map(|s| s.interval.start).collect()
    }

    pub fn horizon(&self) -> f64 {
        self.stages.last().expect("non-empty").interval.end
    }
}

/// The two differences that drive the time-lock equation between adjacent
/// stages: `f = 2 (p_prev - p_next)` and
/// `g = p_prev q_prev - p_next q_next`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffQuantities {
    pub f: f64,
    pub g: f64,
}

/// Evaluate [`DiffQuantities`] for a pair of adjacent thresholds.
pub fn diff_quantities(
    tau_prev: Threshold,
    tau_next: Threshold,
    params: &CurvatureParams,
) -> DiffQuantities {
    let p_prev = p_of(tau_prev, params);
    let p_next = p_of(tau_next, params);
    let g = p_prev * q_of(tau_prev, params) - p_next * q_of(tau_next, params);
    DiffQuantities { f: 2.0 * (p_prev - p_next), g }
}

/// Tuning for [`solve_schedule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Convergence tolerance on thresholds and boundaries per iteration.
    pub tol: f64,
    /// Iteration cap for the damped fixed point.
    pub max_iter: usize,
    /// End of the last stage; may be infinite.
    pub horizon: f64,
    /// Points per coordinate in the grid-refinement fallback.
    pub fallback_grid: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-9,
            max_iter: 200,
            horizon: f64::INFINITY,
            fallback_grid: 400,
        }
    }
}

impl SolverConfig {
    /// Default configuration with a finite horizon.
    pub fn with_horizon(horizon: f64) -> Self {
        SolverConfig { horizon, ..Self::default() }
    }
}

// ---------------------------------------------------------------------------
// Per-stage and per-boundary closed forms
// ---------------------------------------------------------------------------

/// Optimal threshold of a single stage given its weights:
/// `tau_i = sqrt((b + a (1 - 2 y_i / z_i)) / (a b))`.
///
/// A nonpositive radicand means the stage prefers the corner `tau = 0`
/// (flagged, not an error); a root above 1 is clamped and flagged. With
/// `y = z` (no drift) this reduces bit-for-bit to the static optimum.
pub fn stage_threshold(weights: &StageWeights, params: &CurvatureParams) -> Result<StageThreshold> {
    params.require_quadratic()?;
    let (a, b) = (params.a, params.b);
    let u = weights.y / weights.z;
    if !u.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "stage weight ratio y/z = {u} is not finite"
        )));
    }
    let radicand = (b + a * (1.0 - 2.0 * u)) / (a * b);
    if radicand <= 0.0 {
        return Ok(StageThreshold { tau: Threshold::ZERO, corner: true, clamped: false });
    }
    let raw = radicand.sqrt();
    if raw > 1.0 {
        return Ok(StageThreshold { tau: Threshold::ONE, corner: false, clamped: true });
    }
    Ok(StageThreshold {
        tau: Threshold::new(raw).expect("radicand in (0, 1]"),
        corner: false,
        clamped: false,
    })
}

/// Stationary boundary between two adjacent stages with thresholds
/// `tau_prev` and `tau_next`.
///
/// The boundary condition is `e^(-gamma T) g = f` for a decaying attacker
/// and `e^(+gamma T) g = f` for a growing one, giving
/// `T* = ln(g/f)/gamma` and `T* = ln(f/g)/gamma` respectively. The returned
/// value is the unconstrained stationary point: it may be negative or past
/// the horizon, and the schedule solver decides what to do with that.
pub fn optimal_timelock(
    tau_prev: Threshold,
    tau_next: Threshold,
    params: &CurvatureParams,
    decay: &DecayParams,
) -> Result<f64> {
    if decay.gamma == 0.0 {
        return Err(Error::ZeroGamma);
    }
    let d = diff_quantities(tau_prev, tau_next, params);
    if d.f == 0.0 {
        return Err(Error::DegenerateThresholds);
    }
    let ratio = match decay.regime {
        crate::model::AttackerRegime::Decay => d.g / d.f,
        crate::model::AttackerRegime::Growth => d.f / d.g,
    };
    if !ratio.is_finite() || ratio <= 0.0 {
        return Err(Error::InvalidLogArgument(ratio));
    }
    Ok(ratio.ln() / decay.gamma)
}

/// Best *single* threshold for the whole horizon — the yardstick a
/// multi-stage schedule has to beat.
///
/// Returned as a [`StaticSolution`] whose `loss_at_opt` is the *reduced*
/// discounted objective per unit of value (it can be negative: the
/// threshold-independent constant is dropped), evaluated at `v = 1`.
pub fn benchmark_threshold(
    params: &CurvatureParams,
    decay: &DecayParams,
    horizon: f64,
) -> Result<StaticSolution> {
    let interval = StageInterval::new(0.0, horizon)?;
    let w = stage_weights(&interval, decay)?;
    let st = stage_threshold(&w, params)?;
    let p = p_of(st.tau, params);
    let q = q_of(st.tau, params);
    let (a, b) = (params.a, params.b);
    let t2 = st.tau.value() * st.tau.value();
    let bound = valid_domain(params).value();
    Ok(StaticSolution {
        tau_star: st.tau,
        loss_at_opt: 0.5 * w.z * p * q - w.y * p,
        // Weighted curvature of the reduced objective at tau.
        sosc_holds: 0.5 * w.z * (3.0 * a * b * t2 - a - b) + w.y * a > 0.0,
        domain_warning: if st.tau.value() > bound { Some(bound) } else { None },
        corner: st.corner,
        clamped: st.clamped,
    })
}

/// Reduced discounted objective of a schedule:
/// `sum_i (v/2) z_i p(tau_i) q(tau_i) - v y_i p(tau_i)`.
pub fn reduced_objective(
    schedule: &Schedule,
    params: &CurvatureParams,
    decay: &DecayParams,
    v: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for stage in schedule.stages() {
        let w = stage_weights(&stage.interval, decay)?;
        let p = p_of(stage.threshold.tau, params);
        let q = q_of(stage.threshold.tau, params);
        total += (v / 2.0) * w.z * p * q - v * w.y * p;
    }
    Ok(total)
}

/// Per-boundary stationarity residuals `|e^(∓gamma T) g - f|` of a solved
/// schedule (one entry per interior boundary).
///
/// Zero (to rounding) at boundaries that sit at their unconstrained
/// stationary point; boundaries pinned to an edge by the solver can carry a
/// genuine nonzero residual.
pub fn stationarity_residuals(
    schedule: &Schedule,
    params: &CurvatureParams,
    decay: &DecayParams,
) -> Vec<f64> {
    let stages = schedule.stages();
    let mut out = Vec::with_capacity(stages.len().saturating_sub(1));
    for pair in stages.windows(2) {
        let d = diff_quantities(pair[0].threshold.tau, pair[1].threshold.tau, params);
        let t = pair[1].interval.start;
        let factor = match decay.regime {
            crate::model::AttackerRegime::Decay => (-decay.gamma * t).exp(),
            crate::model::AttackerRegime::Growth => (decay.gamma * t).exp(),
        };
        out.push((factor * d.g - d.f).abs());
    }
    out
}

/// Minimum boundary spacing that forces adjacent-but-one thresholds to be
/// strictly ordered.
///
/// For a decaying attacker, any two stages whose enclosing boundaries are
/// more than `ln((lambda + gamma)/lambda)/gamma` apart have strictly
/// *decreasing* thresholds; for a growing attacker the same role is played
/// by `ln(lambda/(lambda - gamma))/gamma` (which requires
/// `0 < gamma < lambda`) and the ordering is increasing. With `lambda = 0`
/// the decay bound is infinite: undiscounted value never forces the
/// threshold down.
pub fn degradation_min_step(decay: &DecayParams) -> Result<f64> {
    if decay.gamma == 0.0 {
        return Err(Error::ZeroGamma);
    }
    match decay.regime {
        crate::model::AttackerRegime::Decay => {
            Ok(((decay.lambda + decay.gamma) / decay.lambda).ln() / decay.gamma)
        }
        crate::model::AttackerRegime::Growth => {
            if decay.gamma >= decay.lambda {
                return Err(Error::GammaNotBelowLambda {
                    gamma: decay.gamma,
                    lambda: decay.lambda,
                });
            }
            Ok((decay.lambda / (decay.lambda - decay.gamma)).ln() / decay.gamma)
        }
    }
}

// ---------------------------------------------------------------------------
// Schedule solver
// ---------------------------------------------------------------------------

/// Solve for the optimal `n`-stage schedule.
///
/// The solver alternates the two closed forms: thresholds from boundaries
/// ([`stage_threshold`]), boundaries from thresholds
/// ([`optimal_timelock`]), moving each boundary halfway to its stationary
/// point per iteration. Once both stop moving by more than `config.tol`,
/// the same damped loop continues to the numerical fixed point, so the
/// returned boundaries satisfy the stationarity condition to rounding
/// rather than merely to `tol`. If the alternation breaks the boundary
/// ordering (which happens when stationary points want to leave `[0,
/// horizon]`), the solver falls back to coordinate grid refinement over the
/// boundaries alone — thresholds are always exact given boundaries — and
/// then retries the fixed point from the refined start.
///
/// `gamma = 0` short-circuits: every stage gets the static optimum and the
/// (immaterial) boundaries split the horizon evenly, or step by the
/// problem's characteristic time when it is unbounded. One stage
/// short-circuits to [`benchmark_threshold`].
pub fn solve_schedule(
    n: usize,
    params: &CurvatureParams,
    decay: &DecayParams,
    v: f64,
    config: &SolverConfig,
) -> Result<Schedule> {
    params.require_quadratic()?;
    if n == 0 {
        return Err(Error::InvalidParameter("schedule needs at least one stage".into()));
    }
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "value at risk must be positive and finite, got {v}"
        )));
    }
    let h = config.horizon;
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {h}")));
    }
    // Surface divergent tails (lambda = 0, or growth with gamma >= lambda,
    // on an unbounded horizon) before iterating.
    stage_weights(&StageInterval::new(0.0, h)?, decay)?;

    if n == 1 {
        let bench = benchmark_threshold(params, decay, h)?;
        let stage = Stage {
            threshold: StageThreshold {
                tau: bench.tau_star,
                corner: bench.corner,
                clamped: bench.clamped,
            },
            interval: StageInterval::new(0.0, h)?,
        };
        return Schedule::new(vec![stage]);
    }

    // Characteristic time used to seed boundaries on an unbounded horizon.
    let scale = 1.0 / decay.z_rate().max(decay.lambda);
    let mut bounds = default_boundaries(n, h, scale);

    if decay.gamma == 0.0 {
        // No drift: one threshold fits all stages, boundaries are cosmetic.
        return schedule_from_bounds(&bounds, params, decay);
    }

    // Phase 1: damped alternation to `tol`. Phase 2: keep going to the
    // numerical fixed point. Ordering violations drop to the fallback.
    const POLISH_ITERS: usize = 500;
    let mut taus = taus_from_bounds(&bounds, params, decay)?;
    let mut converged = false;
    let mut broke_ordering = false;
    let mut iters_left = config.max_iter + POLISH_ITERS;
    while iters_left > 0 {
        iters_left -= 1;
        match damped_boundary_step(&bounds, &taus, params, decay, h) {
            Some(new_bounds) => {
                let new_taus = taus_from_bounds(&new_bounds, params, decay)?;
                let db = max_abs_diff(&bounds, &new_bounds);
                let dt = max_abs_diff_taus(&taus, &new_taus);
                bounds = new_bounds;
                taus = new_taus;
                if db < config.tol && dt < config.tol {
                    converged = true;
                    // Phase 2: polish to the rounding floor.
                    if db < 1e-14 * (1.0 + last_finite(&bounds)) && dt < 1e-14 {
                        break;
                    }
                    if iters_left > POLISH_ITERS {
                        iters_left = POLISH_ITERS;
                    }
                }
            }
            None => {
                broke_ordering = true;
                break;
            }
        }
    }

    // A boundary between two equal thresholds receives no stationarity
    // signal (the step leaves it wherever it started), so a "converged"
    // schedule with a degenerate adjacent pair can be an artifact of the
    // starting point — e.g. heavy drift collapsing every stage to the same
    // corner at the midpoint initialization. Treat it like a failure and
    // let the grid referee it.
    let degenerate_pair = taus.windows(2).any(|w| w[0].tau == w[1].tau);

    if !converged || broke_ordering || degenerate_pair {
        // Fallback: grid-refine the boundaries (thresholds stay exact given
        // boundaries), retry the fixed point from the refined start, and
        // keep whichever of incumbent / grid / retry scores best.
        let grid_bounds =
            refine_boundaries_by_grid(n, params, decay, v, h, scale, config.fallback_grid)?;
        let mut retry = grid_bounds.clone();
        let mut retry_taus = taus_from_bounds(&retry, params, decay)?;
        for _ in 0..config.max_iter + POLISH_ITERS {
            match damped_boundary_step(&retry, &retry_taus, params, decay, h) {
                Some(nb) => {
                    let nt = taus_from_bounds(&nb, params, decay)?;
                    let db = max_abs_diff(&retry, &nb);
                    let dt = max_abs_diff_taus(&retry_taus, &nt);
                    retry = nb;
                    retry_taus = nt;
                    if db < 1e-14 * (1.0 + last_finite(&retry)) && dt < 1e-14 {
                        break;
                    }
                }
                None => break,
            }
        }
        let mut best_obj = objective_of_bounds(&bounds, params, decay, v).unwrap_or(f64::INFINITY);
        for cand in [grid_bounds, retry] {
            if let Ok(obj) = objective_of_bounds(&cand, params, decay, v) {
                if obj < best_obj {
                    best_obj = obj;
                    bounds = cand;
                }
            }
        }
        if !best_obj.is_finite() {
            return Err(Error::NoFeasibleSchedule(
                "no candidate boundary placement had a finite objective".to_string(),
            ));
        }
    }

    schedule_from_bounds(&bounds, params, decay)
}

/// Evenly spaced boundaries over a finite horizon, or `scale`-spaced steps
/// before an unbounded one. Always `[0, ..., horizon]`, length `n + 1`.
fn default_boundaries(n: usize, horizon: f64, scale: f64) -> Vec<f64> {
    let mut bounds = Vec::with_capacity(n + 1);
    if horizon.is_finite() {
        for i in 0..=n {
            bounds.push(horizon * i as f64 / n as f64);
        }
    } else {
        for i in 0..n {
            bounds.push(scale * i as f64);
        }
        bounds.push(f64::INFINITY);
    }
    bounds
}

fn taus_from_bounds(
    bounds: &[f64],
    params: &CurvatureParams,
    decay: &DecayParams,
) -> Result<Vec<StageThreshold>> {
    let n = bounds.len() - 1;
    let mut taus = Vec::with_capacity(n);
    for i in 0..n {
        let w = stage_weights(&StageInterval::new(bounds[i], bounds[i + 1])?, decay)?;
        taus.push(stage_threshold(&w, params)?);
    }
    Ok(taus)
}

/// One damped update of every interior boundary. Returns `None` when a
/// boundary equation has no solution or the updated boundaries are no
/// longer strictly ordered inside `(0, horizon)`.
fn damped_boundary_step(
    bounds: &[f64],
    taus: &[StageThreshold],
    params: &CurvatureParams,
    decay: &DecayParams,
    horizon: f64,
) -> Option<Vec<f64>> {
    let n = taus.len();
    let mut next = bounds.to_vec();
    for i in 1..n {
        match optimal_timelock(taus[i - 1].tau, taus[i].tau, params, decay) {
            Ok(t) => next[i] = bounds[i] + 0.5 * (t - bounds[i]),
            // Equal thresholds: the objective is flat in this boundary.
            Err(Error::DegenerateThresholds) => {}
            Err(_) => return None,
        }
    }
    let ordered = next[0] == 0.0
        && next.windows(2).all(|w| w[0] < w[1])
        && next[1..n].iter().all(|&t| t > 0.0 && t < horizon);
    if ordered {
        Some(next)
    } else {
        None
    }
}

/// Reduced objective of the schedule implied by a boundary vector, without
/// constructing the schedule.
fn objective_of_bounds(
    bounds: &[f64],
    params: &CurvatureParams,
    decay: &DecayParams,
    v: f64,
) -> Result<f64> {
    let taus = taus_from_bounds(bounds, params, decay)?;
    let mut total = 0.0;
    for (i, st) in taus.iter().enumerate() {
        let w = stage_weights(&StageInterval::new(bounds[i], bounds[i + 1])?, decay)?;
        let p = p_of(st.tau, params);
        let q = q_of(st.tau, params);
        total += (v / 2.0) * w.z * p * q - v * w.y * p;
    }
    Ok(total)
}

fn max_abs_diff(xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(x, y)| {
            if x.is_infinite() && y.is_infinite() {
                0.0
            } else {
                (x - y).abs()
            }
        })
        .fold(0.0, f64::max)
}

fn max_abs_diff_taus(xs: &[StageThreshold], ys: &[StageThreshold]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x.tau.value() - y.tau.value()).abs())
        .fold(0.0, f64::max)
}

fn last_finite(bounds: &[f64]) -> f64 {
    bounds.iter().rev().find(|b| b.is_finite()).copied().unwrap_or(0.0)
}

/// Coordinate grid refinement over the interior boundaries only; stage
/// thresholds are recomputed exactly for every candidate. Used when the
/// fixed point fails to converge.
fn refine_boundaries_by_grid(
    n: usize,
    params: &CurvatureParams,
    decay: &DecayParams,
    v: f64,
    horizon: f64,
    scale: f64,
    grid_points: usize,
) -> Result<Vec<f64>> {
    let points = grid_points.max(3);
    // Finite search window: past ~scale * ln(1e14) nothing is left to
    // discount.
    let t_hi = if horizon.is_finite() {
        horizon
    } else {
        -(1e-14f64).ln() / decay.lambda
    };
    let mut bounds = default_boundaries(n, horizon, scale.min(t_hi / n as f64));
    let margin = 1e-9 * t_hi.max(1.0);

    let objective = |bounds: &[f64]| -> f64 {
        match taus_from_bounds(bounds, params, decay) {
            Ok(taus) => {
                let mut total = 0.0;
                for (i, st) in taus.iter().enumerate() {
                    let w = match StageInterval::new(bounds[i], bounds[i + 1])
                        .and_then(|iv| stage_weights(&iv, decay))
                    {
                        Ok(w) => w,
                        Err(_) => return f64::INFINITY,
                    };
                    let p = p_of(st.tau, params);
                    let q = q_of(st.tau, params);
                    total += (v / 2.0) * w.z * p * q - v * w.y * p;
                }
                total
            }
            Err(_) => f64::INFINITY,
        }
    };

    let mut best = objective(&bounds);
    let mut brackets = vec![(0.0_f64, t_hi); n - 1];
    for round in 0..3 {
        for _sweep in 0..25 {
            let before = best;
            for i in 1..n {
                let (lo, hi) = brackets[i - 1];
                let lo = lo.max(bounds[i - 1] + margin);
                let hi = hi.min(if bounds[i + 1].is_finite() { bounds[i + 1] } else { t_hi } - margin);
                if hi <= lo {
                    continue;
                }
                let step = (hi - lo) / (points - 1) as f64;
                let (idx, score) = argmin_by(ExecMode::Sequential, points, |j| {
                    let mut b = bounds.clone();
                    b[i] = lo + j as f64 * step;
                    objective(&b)
                });
                if score < best {
                    bounds[i] = lo + idx as f64 * step;
                    best = score;
                }
            }
            if before - best <= 1e-15 * best.abs().max(1.0) {
                break;
            }
        }
        if round < 2 {
            for i in 1..n {
                let width = 2.0 * (brackets[i - 1].1 - brackets[i - 1].0) / (points - 1) as f64;
                brackets[i - 1] = ((bounds[i] - width).max(0.0), (bounds[i] + width).min(t_hi));
            }
        }
    }
    if !best.is_finite() {
        return Err(Error::NoFeasibleSchedule(
            "grid refinement found no finite-objective boundary placement".to_string(),
        ));
    }
    Ok(bounds)
}

fn schedule_from_bounds(
    bounds: &[f64],
    params: &CurvatureParams,
    decay: &DecayParams,
) -> Result<Schedule> {
    let taus = taus_from_bounds(bounds, params, decay)?;
    let stages = taus
        .into_iter()
        .enumerate()
        .map(|(i, threshold)| {
            Ok(Stage { threshold, interval: StageInterval::new(bounds[i], bounds[i + 1])? })
        })
        .collect::<Result<Vec<_>>>()?;
    Schedule::new(stages)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AttackerRegime;
    use crate::static_opt::optimal_static_threshold;

    fn is_close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol
    }

    fn params(a: f64, b: f64) -> CurvatureParams {
        CurvatureParams::new(a, b).unwrap()
    }

    #[test]
    fn stage_threshold_pins() {
        let p = params(1.0, 2.5);
        let decay = DecayParams::decay(0.1, 0.05).unwrap();
        let w = stage_weights(&StageInterval::new(0.0, 5.0).unwrap(), &decay).unwrap();
        let st = stage_threshold(&w, &p).unwrap();
        assert!(is_close(st.tau.value(), 0.7107251614432676, 1e-12));
        assert!(!st.corner && !st.clamped);

        // Deep tail of a decaying attacker: the radicand goes negative and
        // the stage prefers no threshold at all.
        let w = stage_weights(&StageInterval::new(5.0, f64::INFINITY).unwrap(), &decay).unwrap();
        let st = stage_threshold(&w, &p).unwrap();
        assert!(st.corner);
        assert_eq!(st.tau, Threshold::ZERO);
    }

    #[test]
    fn stage_threshold_clamps_when_the_root_passes_one() {
        // y/z small enough pushes the radicand above 1.
        let st = stage_threshold(&StageWeights { y: 1.0, z: 10.0 }, &params(1.0, 2.5)).unwrap();
        assert!(st.clamped);
        assert_eq!(st.tau, Threshold::ONE);
    }

    #[test]
    fn zero_drift_stage_equals_static_optimum_bitwise() {
        let p = params(1.0, 2.5);
        let decay = DecayParams::decay(0.3, 0.0).unwrap();
        let w = stage_weights(&StageInterval::new(1.0, 4.0).unwrap(), &decay).unwrap();
        let st = stage_threshold(&w, &p).unwrap();
        let sol = optimal_static_threshold(&p).unwrap();
        assert_eq!(st.tau.value().to_bits(), sol.tau_star.value().to_bits());
    }

    #[test]
    fn timelock_pins() {
        let p = params(1.0, 2.5);
        let decay = DecayParams::decay(0.1, 0.05).unwrap();
        let t = optimal_timelock(
            Threshold::new(0.7133788049947949).unwrap(),
            Threshold::new(0.5082386656401279).unwrap(),
            &p,
            &decay,
        )
        .unwrap();
        assert!(is_close(t, 4.78805442825559, 1e-9));

        let p = params(2.2, 3.4);
        let growth = DecayParams::growth(0.05, 0.2).unwrap();
        let t = optimal_timelock(
            Threshold::new(0.6626448307514744).unwrap(),
            Threshold::new(0.8435921560554391).unwrap(),
            &p,
            &growth,
        )
        .unwrap();
        assert!(is_close(t, 6.11079827163349, 1e-9));
    }

    #[test]
    fn timelock_degenerate_cases() {
        let p = params(1.0, 2.5);
        let decay = DecayParams::decay(0.1, 0.05).unwrap();
        let tau = Threshold::new(0.5).unwrap();
        assert!(matches!(
            optimal_timelock(tau, tau, &p, &decay),
            Err(Error::DegenerateThresholds)
        ));
        let no_drift = DecayParams::decay(0.1, 0.0).unwrap();
        assert!(matches!(
            optimal_timelock(tau, Threshold::new(0.4).unwrap(), &p, &no_drift),
            Err(Error::ZeroGamma)
        ));
        // Mixed-sign f and g: p q is locally increasing between these two
        // thresholds (a + b - a b tau^2 < 0), so the log argument is negative.
        let steep = params(2.4, 3.0);
        assert!(matches!(
            optimal_timelock(
                Threshold::new(0.87).unwrap(),
                Threshold::new(0.99).unwrap(),
                &steep,
                &decay
            ),
            Err(Error::InvalidLogArgument(_))
        ));
    }

    #[test]
    fn benchmark_pins() {
        let p = params(1.0, 2.5);
        let decay = DecayParams::decay(0.1, 0.05).unwrap();
        let bench = benchmark_threshold(&p, &decay, f64::INFINITY).unwrap();
        assert!(is_close(bench.tau_star.value(), 0.2f64.sqrt(), 1e-12));
        assert!(is_close(bench.loss_at_opt, -6.75, 1e-9));
        assert!(bench.sosc_holds);
        assert!(!bench.corner);
    }

    #[test]
    fn two_stage_decay_unbounded_pins() {
        let p = params(1.0, 2.5);
        let decay = DecayParams::decay(0.1, 0.05).unwrap();
        let schedule = solve_schedule(2, &p, &decay, 1.0, &SolverConfig::default()).unwrap();
        let taus = schedule.thresholds();
        let bounds = schedule.interior_boundaries();
        assert!(is_close(taus[0], 0.678909006, 1e-6));
        assert_eq!(taus[1], 0.0);
        assert!(schedule.stages()[1].threshold.corner);
        assert!(is_close(bounds[0], 7.595103109, 1e-5));
        let obj = reduced_objective(&schedule, &p, &decay, 1.0).unwrap();
        assert!(is_close(obj, -6.967606342540728, 1e-8));
        // Two stages strictly beat the single-threshold benchmark here.
        assert!(obj < -6.75);
    }

    #[test]
    fn two_stage_decay_finite_horizon_pins() {
        let p = params(1.0, 2.5);
        let decay = DecayParams::decay(0.1, 0.05).unwrap();
        let config = SolverConfig::with_horizon(10.0);
        let schedule = solve_schedule(2, &p, &decay, 1.0, &config).unwrap();
        let taus = schedule.thresholds();
        assert!(is_close(taus[0], 0.7133788049947949, 1e-7));
        assert!(is_close(taus[1], 0.5082386656401279, 1e-7));
        assert!(is_close(schedule.interior_boundaries()[0], 4.78805442825559, 1e-6));
    }

    #[test]
    fn three_stage_pins_finite_and_unbounded() {
        let p = params(1.0, 2.5);
        let decay = DecayParams::decay(0.1, 0.05).unwrap();

        let schedule = solve_schedule(3, &p, &decay, 1.0, &SolverConfig::default()).unwrap();
        let taus = schedule.thresholds();
        let bounds = schedule.interior_boundaries();
        assert!(is_close(taus[0], 0.7195141186757946, 1e-6));
        assert!(is_close(taus[1], 0.5463609064730148, 1e-6));
        assert_eq!(taus[2], 0.0);
        assert!(is_close(bounds[0], 4.300102408784054, 1e-5));
        assert!(is_close(bounds[1], 8.937656582486856, 1e-5));

        let config = SolverConfig::with_horizon(10.0);
        let schedule = solve_schedule(3, &p, &decay, 1.0, &config).unwrap();
        let taus = schedule.thresholds();
        let bounds = schedule.interior_boundaries();
        assert!(is_close(taus[0], 0.734096402561198, 1e-6));
        assert!(is_close(taus[1], 0.623015048049182, 1e-6));
        assert!(is_close(taus[2], 0.44720619514301496, 1e-6));
        assert!(is_close(bounds[0], 3.150272394560938, 1e-5));
        assert!(is_close(bounds[1], 6.476592999024339, 1e-5));
    }

    #[test]
    fn two_stage_growth_pins() {
        let p = params(2.2, 3.4);
        let growth = DecayParams::growth(0.05, 0.2).unwrap();
        let config = SolverConfig::with_horizon(20.0);
        let schedule = solve_schedule(2, &p, &growth, 1.0, &config).unwrap();
        let taus = schedule.thresholds();
        assert!(is_close(taus[0], 0.6626448307514744, 1e-6));
        assert!(is_close(taus[1], 0.8435921560554391, 1e-6));
        assert!(is_close(schedule.interior_boundaries()[0], 6.11079827163349, 1e-5));
        // Growing attacker: thresholds ratchet up, not down.
        assert!(taus[1] > taus[0]);
    }

    #[test]
    fn growth_with_shallow_curves_clamps_the_late_stage() {
        // Strong growth on shallow curves wants more than every signer can
        // give: the interior form exceeds 1 and the stage pins there,
        // flagged. With these parameters even the opening stage ends up
        // pinned, so the whole schedule is "all signers, always".
        let p = params(1.0, 2.5);
        let growth = DecayParams::growth(0.05, 0.2).unwrap();
        let config = SolverConfig::with_horizon(20.0);
        let schedule = solve_schedule(2, &p, &growth, 1.0, &config).unwrap();
        let last = schedule.stages()[1].threshold;
        assert!(last.clamped);
        assert_eq!(last.tau, Threshold::ONE);
        let taus = schedule.thresholds();
        assert!(taus[1] >= taus[0]);
    }

    #[test]
    fn interior_boundaries_satisfy_stationarity_to_rounding() {
        let p = params(1.0, 2.5);
        let decay = DecayParams::decay(0.1, 0.05).unwrap();
        let config = SolverConfig::with_horizon(10.0);
        let schedule = solve_schedule(2, &p, &decay, 1.0, &config).unwrap();
        for r in stationarity_residuals(&schedule, &p, &decay) {
            assert!(r < 1e-10, "residual {r}");
        }
    }

    #[test]
    fn one_stage_matches_the_benchmark() {
        let p = params(1.0, 2.5);
        let decay = DecayParams::decay(0.1, 0.05).unwrap();
        let schedule = solve_schedule(1, &p, &decay, 1.0, &SolverConfig::default()).unwrap();
        let bench = benchmark_threshold(&p, &decay, f64::INFINITY).unwrap();
        assert_eq!(schedule.thresholds()[0], bench.tau_star.value());
        assert_eq!(schedule.n_stages(), 1);
    }

    #[test]
    fn zero_drift_collapses_to_the_static_solution() {
        let p = params(1.0, 2.5);
        let decay = DecayParams::new(0.1, 0.0, AttackerRegime::Decay).unwrap();
        let config = SolverConfig::with_horizon(12.0);
        let schedule = solve_schedule(3, &p, &decay, 1.0, &config).unwrap();
        let static_tau = optimal_static_threshold(&p).unwrap().tau_star.value();
        for t in schedule.thresholds() {
            assert_eq!(t.to_bits(), static_tau.to_bits());
        }
    }

    #[test]
    fn infeasible_problems_are_rejected() {
        let p = params(1.0, 2.5);
        // Growing attacker faster than the discount on an unbounded horizon.
        let growth = DecayParams::growth(0.05, 0.2).unwrap();
        assert!(matches!(
            solve_schedule(2, &p, &growth, 1.0, &SolverConfig::default()),
            Err(Error::DivergentIntegral(_))
        ));
        let decay = DecayParams::decay(0.1, 0.05).unwrap();
        assert!(solve_schedule(0, &p, &decay, 1.0, &SolverConfig::default()).is_err());
        assert!(solve_schedule(2, &p, &decay, -1.0, &SolverConfig::default()).is_err());
    }

    #[test]
    fn degradation_step_pins_and_errors() {
        let decay = DecayParams::decay(0.1, 0.05).unwrap();
        assert!(is_close(degradation_min_step(&decay).unwrap(), 8.109302162163285, 1e-12));
        let growth = DecayParams::growth(0.1, 0.05).unwrap();
        assert!(is_close(degradation_min_step(&growth).unwrap(), 13.862943611198906, 1e-12));

        // Undiscounted value: no finite spacing forces degradation.
        let undiscounted = DecayParams::decay(0.0, 0.05).unwrap();
        assert_eq!(degradation_min_step(&undiscounted).unwrap(), f64::INFINITY);

        assert!(matches!(
            degradation_min_step(&DecayParams::decay(0.1, 0.0).unwrap()),
            Err(Error::ZeroGamma)
        ));
        assert!(matches!(
            degradation_min_step(&DecayParams::growth(0.1, 0.2).unwrap()),
            Err(Error::GammaNotBelowLambda { .. })
        ));
    }

    #[test]
    fn schedule_construction_validates_contiguity() {
        let tau = StageThreshold { tau: Threshold::new(0.5).unwrap(), corner: false, clamped: false };
        let s1 = Stage { threshold: tau, interval: StageInterval::new(0.0, 2.0).unwrap() };
        let s2 = Stage { threshold: tau, interval: StageInterval::new(3.0, 5.0).unwrap() };
        assert!(Schedule::new(vec![s1, s2]).is_err());
        let s2 = Stage { threshold: tau, interval: StageInterval::new(2.0, 5.0).unwrap() };
        assert!(Schedule::new(vec![s1, s2]).is_ok());
        let late = Stage { threshold: tau, interval: StageInterval::new(1.0, 2.0).unwrap() };
        assert!(Schedule::new(vec![late]).is_err());
    }
}
