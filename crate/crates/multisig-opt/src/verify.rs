//! The acceptance checklist: twelve independent checks that re-derive every
//! closed form in the crate against an oracle that shares no code with it,
//! sample every claimed qualitative property, and pin the one golden
//! artifact byte-for-byte.
//!
//! Each check is a function from a seeded RNG to a verdict plus a
//! human-readable evidence line; [`run_all`] executes all twelve without
//! short-circuiting so a failure report always shows the full picture.
//! Randomized checks derive their RNG from the configured seed and the
//! check id, so runs are reproducible and checks are independent of each
//! other's draw counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use crate::dynamic_opt::{
    benchmark_threshold, degradation_min_step, reduced_objective, solve_schedule,
    stage_threshold, stationarity_residuals, Schedule, SolverConfig, Stage, StageThreshold,
};
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::model::{
    expected_static_loss, stage_weights, CurvatureParams, DecayParams, StageInterval, Threshold,
};
use crate::oracle::{
    direct_minimize_schedule, grid_minimize_static, quadrature, GridSpec, Integrand,
};
use crate::policy::{compile_policy, parse_policy, serialize_policy, PolicyDocument, PolicyUnit};
use crate::static_opt::{check_sosc, foc_residual, optimal_static_threshold};
use crate::sweep::{emit_csv_string, monotonicity_report, run_sweep, SweepSpec};

/// Verdict for one acceptance criterion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Knobs for [`run_all`]: RNG seed, an optional override for the number of
/// randomized trials per check (scaled per check; `None` = full counts),
/// and the execution mode used wherever a check runs a scan or sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub trials: Option<usize>,
    pub mode: ExecMode,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { seed: 20260817, trials: None, mode: ExecMode::Parallel }
    }
}

type CheckFn = fn(&VerifyConfig, &mut ChaCha8Rng) -> Result<(bool, String)>;

const CHECKS: [(usize, &str, CheckFn); 12] = [
    (1, "static-closed-form-vs-grid", check_static_vs_grid),
    (2, "static-first-order-condition", check_static_foc),
    (3, "static-curvature-check", check_static_curvature),
    (4, "static-sweep-monotonicity", check_sweep_monotonicity),
    (5, "stage-weights-vs-quadrature", check_weights_vs_quadrature),
    (6, "two-stage-vs-direct-search", check_two_stage_vs_direct),
    (7, "threshold-ordering-by-regime", check_threshold_ordering),
    (8, "boundary-stationarity", check_boundary_stationarity),
    (9, "zero-drift-collapse", check_zero_drift_collapse),
    (10, "sensitivity-signs", check_sensitivity_signs),
    (11, "sweep-determinism-and-runtime", check_sweep_determinism),
    (12, "policy-golden-fixture", check_policy_golden),
];

fn rng_for(seed: u64, id: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Run the full checklist. A check that returns an error is reported as
/// failed with the error text; the remaining checks still run.
pub fn run_all(cfg: &VerifyConfig) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|&(id, name, f)| {
            let mut rng = rng_for(cfg.seed, id);
            match f(cfg, &mut rng) {
                Ok((passed, detail)) => CheckResult { id, name, passed, detail },
                Err(e) => CheckResult { id, name, passed: false, detail: format!("errored: {e}") },
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// 1. Closed-form static optimum vs exhaustive grid search
// ---------------------------------------------------------------------------

fn check_static_vs_grid(cfg: &VerifyConfig, _rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let cases = [(1.0, 2.5), (1.0, 2.0), (0.8, 2.0), (2.5, 1.0)];
    let grid = GridSpec::with_points(0.0, 1.0, 100_001)?;
    let mut max_dtau = 0.0_f64;
    let mut max_dloss = 0.0_f64;
    for (a, b) in cases {
        let params = CurvatureParams::new(a, b)?;
        let sol = optimal_static_threshold(&params)?;
        let tau_grid = grid_minimize_static(&params, 1.0, &grid, cfg.mode)?;
        max_dtau = max_dtau.max((tau_grid.value() - sol.tau_star.value()).abs());
        // The grid must also discriminate against the nearest plausible
        // wrong root, sqrt((b - a) / (2ab)) — the slip of carrying the
        // curves' 1/2 into the first-order condition. For interior cases
        // the two roots differ by ~0.2, far beyond grid resolution.
        if b > a {
            let halved_root = ((b - a) / (2.0 * a * b)).sqrt();
            let separation = (tau_grid.value() - halved_root).abs();
            if separation < 0.2 {
                return Ok((false, format!(
                    "grid argmin is only {separation:.3} from the halved-curvature root at a={a}, b={b}"
                )));
            }
        }
        let gap = expected_static_loss(tau_grid, &params, 1.0)
            - expected_static_loss(sol.tau_star, &params, 1.0);
        // The grid point can only do worse than the true optimum (up to
        // rounding); a negative gap beyond noise would mean the closed form
        // is not the minimizer.
        if gap < -1e-12 {
            return Ok((false, format!("grid beats closed form by {:.2e} at a={a}, b={b}", -gap)));
        }
        max_dloss = max_dloss.max(gap.abs());
    }
    let ok = max_dtau <= 2e-5 && max_dloss <= 1e-9;
    Ok((ok, format!(
        "{} parameter pairs on a 100001-point grid: max |tau gap| = {max_dtau:.2e}, max loss gap = {max_dloss:.2e}",
        cases.len()
    )))
}

// ---------------------------------------------------------------------------
// 2. First-order condition at sampled interior optima
// ---------------------------------------------------------------------------

fn check_static_foc(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let trials = cfg.trials.unwrap_or(500);
    let mut max_foc = 0.0_f64;
    let mut neighbor_violations = 0usize;
    let mut used = 0usize;
    let mut attempts = 0usize;
    while used < trials && attempts < trials * 50 {
        attempts += 1;
        let a = rng.gen_range(0.2..3.0);
        let b = rng.gen_range((a + 0.01)..4.0);
        let params = CurvatureParams::new(a, b)?;
        let sol = optimal_static_threshold(&params)?;
        if sol.corner || sol.clamped || sol.domain_warning.is_some() {
            continue;
        }
        used += 1;
        max_foc = max_foc.max(foc_residual(sol.tau_star, &params, 1.0).abs());
        let t = sol.tau_star.value();
        let eps = 1e-4;
        let here = expected_static_loss(sol.tau_star, &params, 1.0);
        for neighbor in [t - eps, t + eps] {
            if !(0.0..=1.0).contains(&neighbor) {
                continue;
            }
            if expected_static_loss(Threshold::new(neighbor)?, &params, 1.0) < here - 1e-12 {
                neighbor_violations += 1;
            }
        }
    }
    let ok = used == trials && max_foc < 1e-9 && neighbor_violations == 0;
    Ok((ok, format!(
        "{used} interior optima: max |stationarity residual| = {max_foc:.2e}, {neighbor_violations} neighbor violations"
    )))
}

// ---------------------------------------------------------------------------
// 3. Second-order condition vs finite-difference curvature
// ---------------------------------------------------------------------------

fn check_static_curvature(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let trials = cfg.trials.unwrap_or(500);
    let h = 1e-4;
    let mut min_fd2 = f64::INFINITY;
    let mut sosc_failures = 0usize;
    let mut used = 0usize;
    let mut attempts = 0usize;
    while used < trials && attempts < trials * 50 {
        attempts += 1;
        let a = rng.gen_range(0.2..3.0);
        let b = rng.gen_range((a + 0.01)..4.0);
        let params = CurvatureParams::new(a, b)?;
        let sol = optimal_static_threshold(&params)?;
        let t = sol.tau_star.value();
        if sol.corner || sol.clamped || sol.domain_warning.is_some() || t < 2.0 * h || t > 1.0 - 2.0 * h
        {
            continue;
        }
        used += 1;
        if !check_sosc(sol.tau_star, &params, 1.0) {
            sosc_failures += 1;
        }
        let fd2 = (expected_static_loss(Threshold::new(t + h)?, &params, 1.0)
            - 2.0 * expected_static_loss(sol.tau_star, &params, 1.0)
            + expected_static_loss(Threshold::new(t - h)?, &params, 1.0))
            / (h * h);
        min_fd2 = min_fd2.min(fd2);
    }
    let ok = used == trials && sosc_failures == 0 && min_fd2 > 1e-4;
    Ok((ok, format!(
        "{used} interior optima: curvature condition held in all, min finite-difference curvature = {min_fd2:.3}"
    )))
}

// ---------------------------------------------------------------------------
// 4. Sweep-level monotonicity of the static optimum
// ---------------------------------------------------------------------------

fn check_sweep_monotonicity(cfg: &VerifyConfig, _rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let rows = run_sweep(&SweepSpec::static_default(), cfg.mode)?;
    let report = monotonicity_report(&rows);
    let ok = report.violations_in_a == 0
        && report.violations_in_b == 0
        && report.pairs_checked > 100;
    Ok((ok, format!(
        "{} neighbor pairs ({} cells excluded): {} violations in a, {} in b",
        report.pairs_checked, report.excluded_cells, report.violations_in_a, report.violations_in_b
    )))
}

// ---------------------------------------------------------------------------
// 5. Closed-form stage weights vs adaptive quadrature
// ---------------------------------------------------------------------------

fn check_weights_vs_quadrature(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let trials = cfg.trials.map(|t| t.max(20)).unwrap_or(200);
    let mut max_rel = 0.0_f64;
    let mut unbounded = 0usize;
    for _ in 0..trials {
        let lambda = rng.gen_range(0.01..1.0);
        let growth = rng.gen_bool(0.5);
        // Growth drift is kept below the discount rate so the unbounded
        // draws stay integrable.
        let gamma = if growth {
            rng.gen_range(0.0..0.8 * lambda)
        } else {
            rng.gen_range(0.0..1.0)
        };
        let decay = if growth {
            DecayParams::growth(lambda, gamma)?
        } else {
            DecayParams::decay(lambda, gamma)?
        };
        let start = rng.gen_range(0.0..10.0);
        let interval = if rng.gen_bool(0.25) {
            unbounded += 1;
            StageInterval::new(start, f64::INFINITY)?
        } else {
            StageInterval::new(start, start + rng.gen_range(0.1..20.0))?
        };
        let w = stage_weights(&interval, &decay)?;
        let qy = quadrature(&Integrand::ValueDiscount { lambda }, &interval, 1e-10)?;
        let qz = quadrature(&Integrand::JointDiscount { decay }, &interval, 1e-10)?;
        max_rel = max_rel.max((w.y - qy.value).abs() / w.y.abs().max(1.0));
        max_rel = max_rel.max((w.z - qz.value).abs() / w.z.abs().max(1.0));
    }
    let ok = max_rel <= 1e-7;
    Ok((ok, format!(
        "{trials} intervals ({unbounded} unbounded), both weights: max relative gap = {max_rel:.2e}"
    )))
}

// ---------------------------------------------------------------------------
// 6. Fixed-point schedule solver vs brute-force coordinate descent
// ---------------------------------------------------------------------------

fn check_two_stage_vs_direct(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let trials = cfg.trials.map(|t| (t / 10).max(5)).unwrap_or(50);
    let grid = GridSpec::with_points(0.0, 1.0, 101)?;
    let mut max_obj_gap = 0.0_f64; // solver minus oracle, signed
    let mut min_obj_gap = 0.0_f64;
    let mut max_tau_gap = 0.0_f64;
    let mut improvements = 0usize;
    let mut improvement_failures = 0usize;
    for _ in 0..trials {
        let a = rng.gen_range(0.6..1.4);
        let b = rng.gen_range((a + 0.5)..f64::min(3.0 * a, 4.0));
        let lambda = rng.gen_range(0.05..0.3);
        let gamma = rng.gen_range(0.2 * lambda..lambda);
        let horizon = if rng.gen_bool(0.5) { f64::INFINITY } else { rng.gen_range(5.0..30.0) };
        let params = CurvatureParams::new(a, b)?;
        let decay = DecayParams::decay(lambda, gamma)?;

        let schedule = solve_schedule(2, &params, &decay, 1.0, &SolverConfig::with_horizon(horizon))?;
        let obj = reduced_objective(&schedule, &params, &decay, 1.0)?;
        let bench = benchmark_threshold(&params, &decay, horizon)?;
        if obj > bench.loss_at_opt + 1e-12 {
            return Ok((false, format!(
                "schedule worse than single threshold by {:.2e} at a={a:.3}, b={b:.3}",
                obj - bench.loss_at_opt
            )));
        }

        let direct = direct_minimize_schedule(2, &params, &decay, 1.0, horizon, &grid, cfg.mode)?;
        let gap = obj - direct.objective;
        max_obj_gap = max_obj_gap.max(gap);
        min_obj_gap = min_obj_gap.min(gap);

        // Compare thresholds stage by stage, but only where the stage
        // carries enough discounted weight to be identified.
        let weights: Vec<f64> = schedule
            .stages()
            .iter()
            .map(|s| stage_weights(&s.interval, &decay).map(|w| w.y))
            .collect::<Result<_>>()?;
        let total: f64 = weights.iter().sum();
        for (i, stage) in schedule.stages().iter().enumerate() {
            if weights[i] >= 0.01 * total {
                max_tau_gap = max_tau_gap.max((stage.threshold.tau.value() - direct.taus[i]).abs());
            }
        }

        // Where the schedule genuinely uses two distinct thresholds, it must
        // strictly beat the best single one.
        let taus = schedule.thresholds();
        if (taus[0] - taus[1]).abs() > 1e-2 && weights[1] >= 0.01 * total {
            improvements += 1;
            if obj > bench.loss_at_opt - 1e-10 {
                improvement_failures += 1;
            }
        }
    }
    // The oracle's coordinate descent resolves the optimum to roughly 1e-2
    // in the thresholds and 1e-4 in the objective; anything past that (a
    // missed basin shows up as gaps of 1e-1 and above) means one side is
    // wrong. The solver must never be worse than the oracle at all.
    let ok = max_obj_gap <= 1e-9
        && min_obj_gap >= -1e-4
        && max_tau_gap <= 2e-2
        && improvements > 0
        && improvement_failures == 0;
    Ok((ok, format!(
        "{trials} problems: objective gap to oracle in [{min_obj_gap:.2e}, {max_obj_gap:.2e}], max threshold gap = {max_tau_gap:.2e}, {improvements} strict improvements over the single-threshold benchmark"
    )))
}

// ---------------------------------------------------------------------------
// 7. Threshold ordering by drift regime, plus the spacing bound
// ---------------------------------------------------------------------------

fn check_threshold_ordering(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let solve_trials = cfg.trials.map(|t| (t / 16).max(4)).unwrap_or(25);
    let span_trials = cfg.trials.map(|t| (t / 8).max(8)).unwrap_or(50);
    let mut ordering_violations = 0usize;

    // Solved decay schedules step the threshold down over time.
    for _ in 0..solve_trials {
        let a = rng.gen_range(0.8..1.2);
        let b = rng.gen_range(2.2..3.0);
        let lambda = rng.gen_range(0.05..0.3);
        let gamma = rng.gen_range(0.2 * lambda..lambda);
        let n = if rng.gen_bool(0.5) { 2 } else { 3 };
        let horizon = if rng.gen_bool(0.5) { f64::INFINITY } else { rng.gen_range(8.0..20.0) };
        let params = CurvatureParams::new(a, b)?;
        let decay = DecayParams::decay(lambda, gamma)?;
        let schedule = solve_schedule(n, &params, &decay, 1.0, &SolverConfig::with_horizon(horizon))?;
        // Weakly ordered everywhere; strictly ordered wherever the solver
        // left both adjacent thresholds unpinned. Two equal interior
        // thresholds would mean the fixed point froze on a degenerate pair.
        for w in schedule.stages().windows(2) {
            let (prev, next) = (w[0].threshold, w[1].threshold);
            let unpinned =
                !prev.corner && !prev.clamped && !next.corner && !next.clamped;
            let weak = next.tau.value() <= prev.tau.value() + 1e-9;
            let strict = next.tau.value() < prev.tau.value() - 1e-9;
            if !weak || (unpinned && !strict) {
                ordering_violations += 1;
            }
        }
    }

    // Solved growth schedules step it up.
    for _ in 0..solve_trials {
        let a = rng.gen_range(1.8..2.8);
        let b = rng.gen_range(f64::max(a + 0.5, 3.0)..4.0);
        let lambda = rng.gen_range(0.03..0.08);
        let gamma = rng.gen_range(3.0 * lambda..6.0 * lambda);
        let n = if rng.gen_bool(0.5) { 2 } else { 3 };
        let horizon = rng.gen_range(10.0..30.0);
        let params = CurvatureParams::new(a, b)?;
        let decay = DecayParams::growth(lambda, gamma)?;
        let schedule = solve_schedule(n, &params, &decay, 1.0, &SolverConfig::with_horizon(horizon))?;
        for w in schedule.stages().windows(2) {
            let (prev, next) = (w[0].threshold, w[1].threshold);
            let unpinned =
                !prev.corner && !prev.clamped && !next.corner && !next.clamped;
            let weak = next.tau.value() >= prev.tau.value() - 1e-9;
            let strict = next.tau.value() > prev.tau.value() + 1e-9;
            if !weak || (unpinned && !strict) {
                ordering_violations += 1;
            }
        }
    }

    // The spacing bound: once the earlier of two adjacent windows is longer
    // than the regime's minimum step, the ordering is strict no matter how
    // the windows are shaped.
    let params = CurvatureParams::new(1.0, 2.5)?;
    let mut span_checked = 0usize;
    let mut span_violations = 0usize;
    for _ in 0..span_trials {
        let growth = rng.gen_bool(0.5);
        let lambda = rng.gen_range(0.05..0.25);
        let gamma = rng.gen_range(0.2 * lambda..0.7 * lambda);
        let decay =
            if growth { DecayParams::growth(lambda, gamma)? } else { DecayParams::decay(lambda, gamma)? };
        let step = degradation_min_step(&decay)?;
        let t0 = rng.gen_range(0.0..1.0);
        let l1 = step * rng.gen_range(1.01..2.0);
        let l2 = rng.gen_range(0.01..10.0);
        let th1 = stage_threshold(&stage_weights(&StageInterval::new(t0, t0 + l1)?, &decay)?, &params)?;
        let th2 = stage_threshold(
            &stage_weights(&StageInterval::new(t0 + l1, t0 + l1 + l2)?, &decay)?,
            &params,
        )?;
        // The strict comparison needs the first stage off its own bound:
        // in decay the second stage can sit at the corner (0 < tau1 is
        // still strict), in growth it can sit at the clamp (tau1 < 1
        // likewise).
        if (!growth && th1.corner) || (growth && th1.clamped) {
            continue;
        }
        span_checked += 1;
        let strict = if growth {
            th2.tau.value() > th1.tau.value() + 1e-9
        } else {
            th2.tau.value() < th1.tau.value() - 1e-9
        };
        if !strict {
            span_violations += 1;
        }
    }

    // The growth-side bound must refuse drift at or above the discount rate.
    let bound_guard = matches!(
        degradation_min_step(&DecayParams::growth(0.1, 0.1)?),
        Err(Error::GammaNotBelowLambda { .. })
    ) && degradation_min_step(&DecayParams::decay(0.0, 0.5)?)?.is_infinite();

    let ok = ordering_violations == 0
        && span_violations == 0
        && span_checked >= (span_trials / 2).max(4)
        && bound_guard;
    Ok((ok, format!(
        "{} solved schedules ordered by regime (strict between unpinned stages), spacing bound strict in {span_checked}/{span_trials} eligible window pairs, {span_violations} violations",
        2 * solve_trials
    )))
}

// ---------------------------------------------------------------------------
// 8. Stationarity of interior switch times
// ---------------------------------------------------------------------------

fn check_boundary_stationarity(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let trials = cfg.trials.map(|t| (t / 5).max(4)).unwrap_or(100);
    let mut max_residual = 0.0_f64;
    let mut counted = 0usize;
    let mut skipped = 0usize;
    for _ in 0..trials {
        let a = rng.gen_range(0.8..1.2);
        let b = rng.gen_range(2.2..3.0);
        let lambda = rng.gen_range(0.05..0.2);
        let gamma = rng.gen_range(0.2 * lambda..lambda);
        let horizon = if rng.gen_bool(0.3) { f64::INFINITY } else { rng.gen_range(8.0..14.0) };
        let params = CurvatureParams::new(a, b)?;
        let decay = DecayParams::decay(lambda, gamma)?;
        let schedule = solve_schedule(2, &params, &decay, 1.0, &SolverConfig::with_horizon(horizon))?;
        let residuals = stationarity_residuals(&schedule, &params, &decay);
        for (t, r) in schedule.interior_boundaries().into_iter().zip(residuals) {
            // A boundary pinned to an edge of the feasible window carries a
            // genuine one-sided residual; only interior ones must vanish.
            if t < 1e-6 || (horizon.is_finite() && t > horizon - 1e-6) {
                skipped += 1;
                continue;
            }
            counted += 1;
            max_residual = max_residual.max(r);
        }
    }
    let ok = counted >= trials / 2 && max_residual < 1e-10;
    Ok((ok, format!(
        "{counted} interior boundaries ({skipped} edge-pinned skipped): max |switch-time residual| = {max_residual:.2e}"
    )))
}

// ---------------------------------------------------------------------------
// 9. Zero drift collapses every stage to the static optimum
// ---------------------------------------------------------------------------

fn check_zero_drift_collapse(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let trials = cfg.trials.map(|t| (t / 25).max(4)).unwrap_or(20);
    let mut mismatches = 0usize;
    for _ in 0..trials {
        let a = rng.gen_range(0.3..1.5);
        let b = rng.gen_range((a + 0.2)..f64::min(3.0 * a, 4.0));
        let lambda = rng.gen_range(0.05..0.5);
        let n = if rng.gen_bool(0.5) { 2 } else { 3 };
        let horizon = if rng.gen_bool(0.5) { f64::INFINITY } else { rng.gen_range(5.0..20.0) };
        let decay = if rng.gen_bool(0.5) {
            DecayParams::decay(lambda, 0.0)?
        } else {
            DecayParams::growth(lambda, 0.0)?
        };
        let params = CurvatureParams::new(a, b)?;
        let static_tau = optimal_static_threshold(&params)?.tau_star.value();
        let schedule = solve_schedule(n, &params, &decay, 1.0, &SolverConfig::with_horizon(horizon))?;
        for tau in schedule.thresholds() {
            if tau.to_bits() != static_tau.to_bits() {
                mismatches += 1;
            }
        }
    }
    let ok = mismatches == 0;
    Ok((ok, format!(
        "{trials} zero-drift schedules across both regimes: every stage bit-identical to the static optimum ({mismatches} mismatches)"
    )))
}

// ---------------------------------------------------------------------------
// 10. Comparative-statics signs on frozen parameter grids
// ---------------------------------------------------------------------------

/// One solvable parameter point, mutable one coordinate at a time for
/// finite differencing.
#[derive(Debug, Clone, Copy)]
struct Point {
    a: f64,
    b: f64,
    lambda: f64,
    gamma: f64,
    growth: bool,
    horizon: f64,
}

impl Point {
    fn solve(&self, n: usize) -> Result<Schedule> {
        let params = CurvatureParams::new(self.a, self.b)?;
        let decay = if self.growth {
            DecayParams::growth(self.lambda, self.gamma)?
        } else {
            DecayParams::decay(self.lambda, self.gamma)?
        };
        solve_schedule(n, &params, &decay, 1.0, &SolverConfig::with_horizon(self.horizon))
    }
}

fn central_diff<M, X>(p: Point, n: usize, h: f64, mutate: M, extract: X) -> Result<f64>
where
    M: Fn(&mut Point, f64),
    X: Fn(&Schedule) -> f64,
{
    let mut hi = p;
    mutate(&mut hi, h);
    let mut lo = p;
    mutate(&mut lo, -h);
    Ok((extract(&hi.solve(n)?) - extract(&lo.solve(n)?)) / (2.0 * h))
}

fn check_sensitivity_signs(_cfg: &VerifyConfig, _rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    const HA: f64 = 1e-4; // step for the curvature parameters
    const HR: f64 = 1e-5; // step for the rate parameters
    let a_grid = [0.8, 0.9, 1.0, 1.1, 1.2];
    let b_grid = [2.4, 2.7, 3.0, 3.3, 3.6];
    let mut bad = Vec::new();
    let tau = |i: usize| move |s: &Schedule| s.thresholds()[i];
    let boundary = |s: &Schedule| s.interior_boundaries()[0];

    // Unbounded horizon: the tail stage sits at its corner, and the switch
    // time genuinely depends on the curvature parameters.
    let mut corner_cells = 0usize;
    for a in a_grid {
        for b in b_grid {
            let p = Point { a, b, lambda: 0.1, gamma: 0.05, growth: false, horizon: f64::INFINITY };
            let base = p.solve(2)?;
            if base.stages()[1].threshold.corner {
                corner_cells += 1;
                for (label, want_neg) in [("dT/da", true), ("dT/db", false)] {
                    let d = match label {
                        "dT/da" => central_diff(p, 2, HA, |q, e| q.a += e, boundary)?,
                        _ => central_diff(p, 2, HA, |q, e| q.b += e, boundary)?,
                    };
                    if (d < 0.0) != want_neg || d == 0.0 {
                        bad.push(format!("{label}={d:.2e} at a={a}, b={b}, unbounded"));
                    }
                }
            }
            let da = central_diff(p, 2, HA, |q, e| q.a += e, tau(0))?;
            let db = central_diff(p, 2, HA, |q, e| q.b += e, tau(0))?;
            if da >= 0.0 {
                bad.push(format!("d tau1/da = {da:.2e} >= 0 at a={a}, b={b}, unbounded"));
            }
            if db <= 0.0 {
                bad.push(format!("d tau1/db = {db:.2e} <= 0 at a={a}, b={b}, unbounded"));
            }
        }
    }
    if corner_cells < 15 {
        bad.push(format!("only {corner_cells}/25 unbounded cells reached the tail corner"));
    }

    // Finite horizon, both stages interior: curvature signs hold for every
    // stage, the rate signs are as sampled (drift down, discount up), and
    // the interior switch time is numerically independent of the curvature
    // pair.
    let mut max_dt_curv = 0.0_f64;
    for a in a_grid {
        for b in b_grid {
            let p = Point { a, b, lambda: 0.1, gamma: 0.05, growth: false, horizon: 10.0 };
            for i in 0..2 {
                let da = central_diff(p, 2, HA, |q, e| q.a += e, tau(i))?;
                let db = central_diff(p, 2, HA, |q, e| q.b += e, tau(i))?;
                let dl = central_diff(p, 2, HR, |q, e| q.lambda += e, tau(i))?;
                let dg = central_diff(p, 2, HR, |q, e| q.gamma += e, tau(i))?;
                if da >= 0.0 {
                    bad.push(format!("decay d tau{}/da = {da:.2e} >= 0 at a={a}, b={b}", i + 1));
                }
                if db <= 0.0 {
                    bad.push(format!("decay d tau{}/db = {db:.2e} <= 0 at a={a}, b={b}", i + 1));
                }
                if dl <= 0.0 {
                    bad.push(format!("decay d tau{}/d lambda = {dl:.2e} <= 0 at a={a}, b={b}", i + 1));
                }
                if dg >= 0.0 {
                    bad.push(format!("decay d tau{}/d gamma = {dg:.2e} >= 0 at a={a}, b={b}", i + 1));
                }
            }
            max_dt_curv = max_dt_curv.max(central_diff(p, 2, HA, |q, e| q.a += e, boundary)?.abs());
            max_dt_curv = max_dt_curv.max(central_diff(p, 2, HA, |q, e| q.b += e, boundary)?.abs());
        }
    }
    if max_dt_curv >= 1e-4 {
        bad.push(format!("interior switch time moved with curvature: {max_dt_curv:.2e}"));
    }

    // Growth regime: both rate signs flip.
    for a in [2.0, 2.2, 2.4, 2.6, 2.8] {
        for b in [3.0, 3.25, 3.5, 3.75, 4.0] {
            let p = Point { a, b, lambda: 0.05, gamma: 0.2, growth: true, horizon: 20.0 };
            for i in 0..2 {
                let dl = central_diff(p, 2, HR, |q, e| q.lambda += e, tau(i))?;
                let dg = central_diff(p, 2, HR, |q, e| q.gamma += e, tau(i))?;
                if dl >= 0.0 {
                    bad.push(format!("growth d tau{}/d lambda = {dl:.2e} >= 0 at a={a}, b={b}", i + 1));
                }
                if dg <= 0.0 {
                    bad.push(format!("growth d tau{}/d gamma = {dg:.2e} <= 0 at a={a}, b={b}", i + 1));
                }
            }
        }
    }

    // A sample of the switch-time rate sensitivities for the record.
    let sample = Point { a: 1.0, b: 2.5, lambda: 0.1, gamma: 0.05, growth: false, horizon: 10.0 };
    let dt_dl = central_diff(sample, 2, HR, |q, e| q.lambda += e, boundary)?;
    let dt_dg = central_diff(sample, 2, HR, |q, e| q.gamma += e, boundary)?;

    let ok = bad.is_empty();
    let summary = if ok {
        format!(
            "75 grid cells: curvature signs hold, rate signs flip between regimes, switch time independent of curvature (max {max_dt_curv:.1e}); sample dT/d lambda = {dt_dl:.4}, dT/d gamma = {dt_dg:.4}"
        )
    } else {
        format!("{} sign violations; first: {}", bad.len(), bad[0])
    };
    Ok((ok, summary))
}

// ---------------------------------------------------------------------------
// 11. Sweeps are deterministic across execution modes, and fast enough
// ---------------------------------------------------------------------------

fn check_sweep_determinism(_cfg: &VerifyConfig, _rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let started = Instant::now();
    let specs = [
        SweepSpec::static_default(),
        SweepSpec::dynamic_default(DecayParams::decay(0.1, 0.05)?, f64::INFINITY),
        SweepSpec::dynamic_default(DecayParams::growth(0.05, 0.2)?, 20.0),
    ];
    for spec in &specs {
        let seq = emit_csv_string(&run_sweep(spec, ExecMode::Sequential)?)?;
        let par = emit_csv_string(&run_sweep(spec, ExecMode::Parallel)?)?;
        if seq != par {
            return Ok((false, "sequential and parallel sweeps emitted different bytes".into()));
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let ok = elapsed < 60.0;
    Ok((ok, format!(
        "3 sweeps x 2 execution modes byte-identical in {elapsed:.2} s (budget 60 s)"
    )))
}

// ---------------------------------------------------------------------------
// 12. Golden policy fixture
// ---------------------------------------------------------------------------

const GOLDEN_POLICY: &str = include_str!("../tests/fixtures/golden_policy.json");

/// The reference schedule behind the golden fixture: a 3-of-3 vault that
/// steps 2-of-3 -> 1-of-3 -> a separate 1-signer recovery set, with
/// year-scale block ticks.
fn golden_schedule() -> Result<Schedule> {
    let taus = [2.0 / 3.0, 1.0 / 3.0, 1.0];
    let bounds = [0.0, 1.0, 5.0, f64::INFINITY];
    let stages = taus
        .iter()
        .zip(bounds.windows(2))
        .map(|(&t, w)| {
            Ok(Stage {
                threshold: StageThreshold {
                    tau: Threshold::new(t)?,
                    corner: false,
                    clamped: false,
                },
                interval: StageInterval::new(w[0], w[1])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Schedule::new(stages)
}

fn golden_document() -> Result<PolicyDocument> {
    compile_policy(&golden_schedule()?, 3, PolicyUnit::Blocks, 52560.0, Some(&[3, 3, 1]))
}

fn check_policy_golden(_cfg: &VerifyConfig, _rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let doc = golden_document()?;
    let text = serialize_policy(&doc);
    if text != GOLDEN_POLICY {
        let at = text
            .bytes()
            .zip(GOLDEN_POLICY.bytes())
            .position(|(x, y)| x != y)
            .unwrap_or_else(|| text.len().min(GOLDEN_POLICY.len()));
        return Ok((false, format!("serialized policy diverges from fixture at byte {at}")));
    }
    let parsed = parse_policy(GOLDEN_POLICY)?;
    let ok = parsed == doc && serialize_policy(&parsed) == GOLDEN_POLICY;
    Ok((ok, format!(
        "compile -> serialize matches the {}-byte fixture; parse -> re-serialize is byte-stable",
        GOLDEN_POLICY.len()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_checklist_passes_with_reduced_trials() {
        let cfg = VerifyConfig { seed: 20260817, trials: Some(60), mode: ExecMode::Parallel };
        let results = run_all(&cfg);
        assert_eq!(results.len(), 12);
        for r in &results {
            assert!(r.passed, "criterion {:02} {} failed: {}", r.id, r.name, r.detail);
        }
    }

    #[test]
    fn checklist_is_reproducible_for_a_fixed_seed() {
        let cfg = VerifyConfig { seed: 7, trials: Some(24), mode: ExecMode::Sequential };
        let first = run_all(&cfg);
        let second = run_all(&cfg);
        for (x, y) in first.iter().zip(&second) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.passed, y.passed);
            // The runtime check's detail carries a timing, so compare the
            // deterministic details only.
            if x.id != 11 {
                assert_eq!(x.detail, y.detail, "criterion {:02} detail drifted", x.id);
            }
        }
    }

    #[test]
    fn check_ids_are_dense_and_named() {
        for (i, (id, name, _)) in CHECKS.iter().enumerate() {
            assert_eq!(*id, i + 1);
            assert!(!name.is_empty());
        }
    }

    #[test]
    #[ignore = "regenerates the golden policy fixture in tests/fixtures"]
    fn regenerate_golden_fixture() {
        let text = serialize_policy(&golden_document().unwrap());
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/golden_policy.json");
        std::fs::write(path, text).unwrap();
    }
}
