//! Command-line front end for the `multisig-opt` library.
//!
//! One subcommand per workflow:
//!
//! - `static`    — optimal single threshold for one `(a, b)` pair
//! - `dynamic`   — n-stage time-locked schedule with solver diagnostics
//! - `benchmark` — best time-invariant threshold over the same horizon
//! - `verify`    — the full self-check suite (closed forms vs. oracles)
//! - `sweep`     — parameter grid rendered as CSV
//! - `policy`    — compile a solved schedule into a spend-policy document
//!
//! Every number printed goes through the library's nine-significant-digit
//! rendering, so identical invocations produce byte-identical standard
//! output. Progress notes (file written, row counts) go to standard error.
//!
//! Exit codes: 0 success; 2 invalid arguments or malformed input files;
//! 3 structurally infeasible or divergent model; 4 verification failures.
//! The env var `MULTISIG_OPT_THREADS` caps the worker pool (0 or unset =
//! one worker per core).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use multisig_opt::dynamic_opt::{
    benchmark_threshold, reduced_objective, solve_schedule, Schedule, SolverConfig,
};
use multisig_opt::exec::{configure_threads, ExecMode};
use multisig_opt::model::{AttackerRegime, CurvatureParams, DecayParams};
use multisig_opt::oracle::GridSpec;
use multisig_opt::policy::{
    compile_policy, resolve_overrides, schedule_from_json, schedule_to_json, serialize_policy,
    PolicyUnit,
};
use multisig_opt::render::sig9;
use multisig_opt::static_opt::{optimal_static_threshold, static_sensitivities, StaticSolution};
use multisig_opt::sweep::{emit_csv_string, run_sweep, spec_from_json, SweepMode, SweepSpec};
use multisig_opt::verify::{run_all, VerifyConfig};
use multisig_opt::Error;

// ---------------------------------------------------------------------------
// Argument surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "multisig-opt",
    version,
    about = "Optimal m-of-n threshold policies under an expected-loss model",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal static threshold for one (a, b) pair
    Static(StaticArgs),
    /// Solve an n-stage time-locked threshold schedule
    Dynamic(DynamicArgs),
    /// Best single threshold over the whole horizon (the schedule's yardstick)
    Benchmark(BenchmarkArgs),
    /// Run the self-check suite: every closed form against an independent oracle
    Verify(VerifyArgs),
    /// Sweep a parameter grid and emit one CSV row per cell
    Sweep(SweepArgs),
    /// Compile a solved schedule into a machine-readable spend-policy document
    Policy(PolicyArgs),
}

#[derive(Args)]
struct StaticArgs {
    /// User-curve curvature: access the user loses as the threshold rises
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    /// Attacker-curve curvature: access the attacker loses as it rises
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
    /// Value at risk; reported losses scale linearly in it
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    v: f64,
}

#[derive(Args)]
struct DynamicArgs {
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
    /// Discount rate of the time weights
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    /// Attacker capability drift rate (see --regime for its direction)
    #[arg(long, allow_negative_numbers = true)]
    gamma: f64,
    /// Whether the attacker's capability decays or grows over time
    #[arg(long, value_enum)]
    regime: RegimeArg,
    /// Number of stages in the schedule
    #[arg(long)]
    stages: usize,
    /// End of the last stage; omit for an unbounded horizon
    #[arg(long, allow_negative_numbers = true)]
    horizon: Option<f64>,
    /// Value at risk; the objective scales linearly in it
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    v: f64,
    /// Also write the schedule as JSON (the input format of `policy --schedule`)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
    /// Discount rate of the time weights
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    /// Attacker capability drift rate (see --regime for its direction)
    #[arg(long, allow_negative_numbers = true)]
    gamma: f64,
    /// Whether the attacker's capability decays or grows over time
    #[arg(long, value_enum)]
    regime: RegimeArg,
    /// End of the weighting window; omit for an unbounded horizon
    #[arg(long, allow_negative_numbers = true)]
    horizon: Option<f64>,
    /// Value at risk; the objective scales linearly in it
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    v: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Seed for the randomized trial draws
    #[arg(long, default_value_t = VerifyConfig::default().seed)]
    seed: u64,
    /// Override the number of randomized trials per check (scaled per check)
    #[arg(long)]
    trials: Option<usize>,
    /// Run every check on the sequential execution path
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep description; replaces all inline grid flags
    #[arg(long, conflicts_with_all = [
        "mode", "a_lo", "a_hi", "a_step", "b_lo", "b_hi", "b_step",
        "lambda", "gamma", "regime", "horizon", "v",
    ])]
    spec: Option<PathBuf>,
    /// What to solve per grid cell
    #[arg(long, value_enum, default_value_t = SweepModeArg::Static)]
    mode: SweepModeArg,
    #[arg(long, allow_negative_numbers = true)]
    a_lo: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a_hi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a_step: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b_lo: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b_hi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b_step: Option<f64>,
    /// Discount rate (dynamic2 mode only)
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Attacker capability drift rate (dynamic2 mode only)
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Attacker regime (dynamic2 mode only)
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    /// End of the schedule horizon (dynamic2 mode only; omit for unbounded)
    #[arg(long, allow_negative_numbers = true)]
    horizon: Option<f64>,
    /// Value at risk
    #[arg(long, allow_negative_numbers = true)]
    v: Option<f64>,
    /// Write the CSV here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solve the grid on the sequential execution path
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct PolicyArgs {
    /// Schedule JSON, as written by `dynamic --out`
    #[arg(long)]
    schedule: PathBuf,
    /// Signer-set size the thresholds convert against
    #[arg(long)]
    n: u32,
    /// Time unit of the activation ticks
    #[arg(long, value_enum)]
    unit: UnitArg,
    /// Length of one model time unit in ticks of --unit
    #[arg(long, allow_negative_numbers = true)]
    scale: f64,
    /// Write the policy document here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    Decay,
    Growth,
}

impl From<RegimeArg> for AttackerRegime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Decay => AttackerRegime::Decay,
            RegimeArg::Growth => AttackerRegime::Growth,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepModeArg {
    /// One static threshold per cell
    Static,
    /// A two-stage schedule per cell
    Dynamic2,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum UnitArg {
    Seconds,
    Blocks,
    Abstract,
}

impl From<UnitArg> for PolicyUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Seconds => PolicyUnit::Seconds,
            UnitArg::Blocks => PolicyUnit::Blocks,
            UnitArg::Abstract => PolicyUnit::Abstract,
        }
    }
}

// ---------------------------------------------------------------------------
// Entry point and exit-code mapping
// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    // Die quietly when the read end of a pipe closes (`multisig-opt sweep |
    // head`), like any other filter. The Rust runtime masks SIGPIPE, which
    // would otherwise turn the closed pipe into a panic inside println!.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(err.downcast_ref::<Error>().map_or(2, exit_code_for))
        }
    }
}

/// Exit code for a library error: 2 for rejected inputs, 3 for models that
/// are structurally infeasible (divergent integrals, no interior optimum to
/// differentiate, unresolvable tick collisions, ...).
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidParameter(_) | Error::UnsupportedExponent(_) | Error::MalformedInput(_) => 2,
        Error::CornerSolution { .. }
        | Error::DivergentIntegral(_)
        | Error::ZeroGamma
        | Error::DegenerateThresholds
        | Error::InvalidLogArgument(_)
        | Error::GammaNotBelowLambda { .. }
        | Error::NoFeasibleSchedule(_)
        | Error::CollisionUnresolvable(_) => 3,
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    configure_threads(threads_from_env()?);
    match cli.command {
        Command::Static(args) => run_static(args),
        Command::Dynamic(args) => run_dynamic(args),
        Command::Benchmark(args) => run_benchmark(args),
        Command::Verify(args) => run_verify(args),
        Command::Sweep(args) => run_sweep_cmd(args),
        Command::Policy(args) => run_policy(args),
    }
}

fn threads_from_env() -> anyhow::Result<Option<usize>> {
    match std::env::var("MULTISIG_OPT_THREADS") {
        Ok(s) => {
            let n: usize = s
                .trim()
                .parse()
                .with_context(|| format!("MULTISIG_OPT_THREADS must be an unsigned integer, got {s:?}"))?;
            Ok(Some(n))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(e).context("MULTISIG_OPT_THREADS is not valid unicode"),
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn run_static(args: StaticArgs) -> anyhow::Result<ExitCode> {
    let params = CurvatureParams::new(args.a, args.b)?;
    let sol = optimal_static_threshold(&params)?;
    print_solution("loss", &sol, args.v);
    if !sol.corner && !sol.clamped {
        let (da, db) = static_sensitivities(&params)?;
        println!("{:<12} {}", "dtau_da", sig9(da));
        println!("{:<12} {}", "dtau_db", sig9(db));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_dynamic(args: DynamicArgs) -> anyhow::Result<ExitCode> {
    let params = CurvatureParams::new(args.a, args.b)?;
    let decay = DecayParams::new(args.lambda, args.gamma, args.regime.into())?;
    let config = match args.horizon {
        Some(h) => SolverConfig::with_horizon(h),
        None => SolverConfig::default(),
    };
    let schedule = solve_schedule(args.stages, &params, &decay, args.v, &config)?;

    for (i, stage) in schedule.stages().iter().enumerate() {
        let mut flags = String::new();
        if stage.threshold.corner {
            flags.push_str("  [corner]");
        }
        if stage.threshold.clamped {
            flags.push_str("  [clamped]");
        }
        println!(
            "stage {}  tau {}  on [{}, {}){}",
            i + 1,
            sig9(stage.threshold.tau.value()),
            time_str(stage.interval.start),
            time_str(stage.interval.end),
            flags
        );
    }
    let boundaries = schedule.interior_boundaries();
    if !boundaries.is_empty() {
        let rendered: Vec<String> = boundaries.iter().map(|&t| sig9(t)).collect();
        println!("{:<12} {}", "timelocks", rendered.join(" "));
    }

    let objective = reduced_objective(&schedule, &params, &decay, args.v)?;
    let bench = benchmark_threshold(&params, &decay, config.horizon)?;
    let bench_objective = args.v * bench.loss_at_opt;
    println!("{:<12} {}", "objective", sig9(objective));
    println!("{:<12} {}", "benchmark", sig9(bench_objective));
    println!("{:<12} {}", "improvement", sig9(bench_objective - objective));
    println!("{:<12} {}", "degradation", degradation_verdict(&schedule, args.regime));

    if let Some(path) = &args.out {
        fs::write(path, schedule_to_json(&schedule, None))
            .with_context(|| format!("cannot write schedule to {}", path.display()))?;
        eprintln!("schedule written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn run_benchmark(args: BenchmarkArgs) -> anyhow::Result<ExitCode> {
    let params = CurvatureParams::new(args.a, args.b)?;
    let decay = DecayParams::new(args.lambda, args.gamma, args.regime.into())?;
    let horizon = args.horizon.unwrap_or(f64::INFINITY);
    let sol = benchmark_threshold(&params, &decay, horizon)?;
    print_solution("objective", &sol, args.v);
    Ok(ExitCode::SUCCESS)
}

fn run_verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let mode = if args.sequential { ExecMode::Sequential } else { ExecMode::Parallel };
    let cfg = VerifyConfig { seed: args.seed, trials: args.trials, mode };
    let results = run_all(&cfg);
    for r in &results {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        println!("criterion {:02} {:<32} [{}] {}", r.id, r.name, verdict, r.detail);
    }
    let failures = results.iter().filter(|r| !r.passed).count();
    if failures == 0 {
        println!("verify: {}/{} criteria passed (seed {})", results.len(), results.len(), args.seed);
        Ok(ExitCode::SUCCESS)
    } else {
        println!("verify: {}/{} criteria FAILED (seed {})", failures, results.len(), args.seed);
        Ok(ExitCode::from(4))
    }
}

fn run_sweep_cmd(args: SweepArgs) -> anyhow::Result<ExitCode> {
    let spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read sweep spec {}", path.display()))?;
            spec_from_json(&text)?
        }
        None => spec_from_flags(&args)?,
    };
    let mode = if args.sequential { ExecMode::Sequential } else { ExecMode::Parallel };
    let rows = run_sweep(&spec, mode)?;
    let csv = emit_csv_string(&rows)?;
    match &args.out {
        Some(path) => {
            fs::write(path, &csv)
                .with_context(|| format!("cannot write CSV to {}", path.display()))?;
            eprintln!("sweep: {} rows written to {}", rows.len(), path.display());
        }
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn run_policy(args: PolicyArgs) -> anyhow::Result<ExitCode> {
    let text = fs::read_to_string(&args.schedule)
        .with_context(|| format!("cannot read schedule {}", args.schedule.display()))?;
    let (schedule, overrides) = schedule_from_json(&text)?;
    let overrides = resolve_overrides(overrides, args.n);
    let doc = compile_policy(&schedule, args.n, args.unit.into(), args.scale, overrides.as_deref())?;
    let rendered = serialize_policy(&doc);
    match &args.out {
        Some(path) => {
            fs::write(path, &rendered)
                .with_context(|| format!("cannot write policy to {}", path.display()))?;
            eprintln!("policy written to {}", path.display());
        }
        None => print!("{rendered}"),
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

/// Shared printer for the two single-threshold subcommands. `static` labels
/// the scalar "loss" (expected loss at v); `benchmark` labels it
/// "objective" (the reduced discounted objective, which can be negative).
fn print_solution(scalar_label: &str, sol: &StaticSolution, v: f64) {
    println!("{:<12} {}", "tau_star", sig9(sol.tau_star.value()));
    println!("{:<12} {}", scalar_label, sig9(v * sol.loss_at_opt));
    println!("{:<12} {}", "sosc", if sol.sosc_holds { "holds" } else { "fails" });
    if sol.corner {
        println!("{:<12} corner optimum: the attacker curve is no steeper than the user curve", "note");
    }
    if sol.clamped {
        println!("{:<12} interior optimum above 1; threshold clamped to 1", "note");
    }
    if let Some(bound) = sol.domain_warning {
        println!(
            "{:<12} optimum extrapolates the attacker curve past its domain (valid up to {})",
            "warning",
            sig9(bound)
        );
    }
}

/// Render a stage boundary, where the last stage may end at infinity.
fn time_str(t: f64) -> String {
    if t.is_finite() {
        sig9(t)
    } else {
        "inf".to_string()
    }
}

/// One-line verdict on whether the solved thresholds move the way the
/// regime predicts: weakly downward under attacker decay, weakly upward
/// under attacker growth.
fn degradation_verdict(schedule: &Schedule, regime: RegimeArg) -> String {
    let taus = schedule.thresholds();
    let (ordered, direction) = match regime {
        RegimeArg::Decay => {
            (taus.windows(2).all(|w| w[1] <= w[0] + 1e-9), "nonincreasing")
        }
        RegimeArg::Growth => {
            (taus.windows(2).all(|w| w[1] >= w[0] - 1e-9), "nondecreasing")
        }
    };
    if ordered {
        format!("thresholds {direction} over time, as the regime predicts")
    } else {
        format!("VIOLATED: thresholds are not {direction}")
    }
}

// ---------------------------------------------------------------------------
// Sweep assembly from inline flags
// ---------------------------------------------------------------------------

/// Build a sweep spec from the inline flags, starting from the library's
/// default grids and overriding any axis endpoint or step given explicitly.
fn spec_from_flags(args: &SweepArgs) -> anyhow::Result<SweepSpec> {
    let mut spec = SweepSpec::static_default();
    spec.a_grid = GridSpec::with_step(
        args.a_lo.unwrap_or(spec.a_grid.lo()),
        args.a_hi.unwrap_or(spec.a_grid.hi()),
        args.a_step.unwrap_or(spec.a_grid.step()),
    )?;
    spec.b_grid = GridSpec::with_step(
        args.b_lo.unwrap_or(spec.b_grid.lo()),
        args.b_hi.unwrap_or(spec.b_grid.hi()),
        args.b_step.unwrap_or(spec.b_grid.step()),
    )?;
    if let Some(v) = args.v {
        spec.v = v;
    }
    match args.mode {
        SweepModeArg::Static => {
            for (flag, given) in [
                ("--lambda", args.lambda.is_some()),
                ("--gamma", args.gamma.is_some()),
                ("--regime", args.regime.is_some()),
                ("--horizon", args.horizon.is_some()),
            ] {
                if given {
                    bail!("{flag} only applies to --mode dynamic2");
                }
            }
        }
        SweepModeArg::Dynamic2 => {
            let (Some(lambda), Some(gamma), Some(regime)) = (args.lambda, args.gamma, args.regime)
            else {
                bail!("--mode dynamic2 needs --lambda, --gamma, and --regime");
            };
            spec.mode = SweepMode::Dynamic2Stage;
            spec.decay = Some(DecayParams::new(lambda, gamma, regime.into())?);
            spec.horizon = args.horizon.unwrap_or(f64::INFINITY);
        }
    }
    Ok(spec)
}
