//! End-to-end tests of the compiled binary: argument surface, output
//! formats, exit codes, and the determinism contract (identical invocations
//! are byte-identical, across thread counts and execution modes).

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_multisig-opt"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "expected exit {code}\nstdout:\n{}\nstderr:\n{}",
        stdout_of(out),
        stderr_of(out)
    );
}

// ---------------------------------------------------------------------------
// static / benchmark
// ---------------------------------------------------------------------------

#[test]
fn static_prints_the_known_optimum() {
    let out = run(&["static", "--a", "1", "--b", "2.5"]);
    assert_exit(&out, 0);
    let text = stdout_of(&out);
    assert!(text.contains("tau_star     0.774596669"), "stdout:\n{text}");
    assert!(text.contains("loss         0.387500000"), "stdout:\n{text}");
    assert!(text.contains("sosc         holds"), "stdout:\n{text}");
    // Interior optimum: both sensitivities print, with the fixed signs.
    assert!(text.contains("dtau_da      -"), "stdout:\n{text}");
    assert!(text.contains("dtau_db      0."), "stdout:\n{text}");
}

#[test]
fn static_reports_the_corner_at_zero() {
    let out = run(&["static", "--a", "2", "--b", "1"]);
    assert_exit(&out, 0);
    let text = stdout_of(&out);
    assert!(text.contains("tau_star     0\n"), "stdout:\n{text}");
    assert!(text.contains("corner optimum"), "stdout:\n{text}");
    // No interior form to differentiate at the corner.
    assert!(!text.contains("dtau_da"), "stdout:\n{text}");
}

#[test]
fn static_scales_the_loss_by_value_at_risk() {
    let unit = stdout_of(&run(&["static", "--a", "1", "--b", "2.5"]));
    let scaled = stdout_of(&run(&["static", "--a", "1", "--b", "2.5", "--v", "10"]));
    assert!(unit.contains("loss         0.387500000"), "stdout:\n{unit}");
    assert!(scaled.contains("loss         3.87500000"), "stdout:\n{scaled}");
    // The optimizer itself is v-independent.
    assert!(scaled.contains("tau_star     0.774596669"), "stdout:\n{scaled}");
}

#[test]
fn benchmark_prints_the_time_invariant_solution() {
    let out = run(&[
        "benchmark", "--a", "1", "--b", "2.5", "--lambda", "0.1", "--gamma", "0.05",
        "--regime", "decay", "--horizon", "10",
    ]);
    assert_exit(&out, 0);
    let text = stdout_of(&out);
    assert!(text.contains("tau_star     0.650836744"), "stdout:\n{text}");
    assert!(text.contains("objective    -4.02203856"), "stdout:\n{text}");
}

// ---------------------------------------------------------------------------
// dynamic and the schedule -> policy pipeline
// ---------------------------------------------------------------------------

fn parse_stage_tau(line: &str) -> f64 {
    // Stage lines look like: "stage 1  tau 0.713378805  on [0, 4.78805443)".
    let after = line.split("tau ").nth(1).expect("stage line has a tau field");
    after.split_whitespace().next().expect("tau value").parse().expect("tau parses")
}

#[test]
fn dynamic_orders_thresholds_under_decay() {
    let out = run(&[
        "dynamic", "--a", "1", "--b", "2.5", "--lambda", "0.1", "--gamma", "0.05",
        "--regime", "decay", "--stages", "2", "--horizon", "10",
    ]);
    assert_exit(&out, 0);
    let text = stdout_of(&out);
    let taus: Vec<f64> =
        text.lines().filter(|l| l.starts_with("stage ")).map(parse_stage_tau).collect();
    assert_eq!(taus.len(), 2, "stdout:\n{text}");
    assert!(taus[0] > taus[1], "expected a stricter opening stage, got {taus:?}");
    assert!(text.contains("timelocks    "), "stdout:\n{text}");
    assert!(
        text.contains("degradation  thresholds nonincreasing over time"),
        "stdout:\n{text}"
    );
    // A two-stage schedule must beat the single-threshold benchmark.
    let improvement = text
        .lines()
        .find(|l| l.starts_with("improvement"))
        .and_then(|l| l.split_whitespace().nth(1))
        .expect("improvement line")
        .parse::<f64>()
        .expect("improvement parses");
    assert!(improvement > 0.0, "stdout:\n{text}");
}

#[test]
fn dynamic_schedule_feeds_policy() {
    let dir = tempfile::tempdir().expect("tempdir");
    let sched = dir.path().join("sched.json");
    let out = run(&[
        "dynamic", "--a", "1", "--b", "2.5", "--lambda", "0.1", "--gamma", "0.05",
        "--regime", "decay", "--stages", "2", "--horizon", "10",
        "--out", sched.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    assert!(sched.exists(), "dynamic --out writes the schedule file");

    let policy = run(&[
        "policy", "--schedule", sched.to_str().unwrap(),
        "--n", "3", "--unit", "blocks", "--scale", "52560",
    ]);
    assert_exit(&policy, 0);
    let text = stdout_of(&policy);
    assert!(text.starts_with("{\n  \"n\": 3,\n  \"unit\": \"blocks\","), "stdout:\n{text}");
    assert!(text.contains("\"activates_at\": 0"), "stdout:\n{text}");
    assert!(text.contains("\"rounding_note\""), "stdout:\n{text}");

    // --out writes exactly the bytes that would have gone to stdout.
    let doc = dir.path().join("policy.json");
    let to_file = run(&[
        "policy", "--schedule", sched.to_str().unwrap(),
        "--n", "3", "--unit", "blocks", "--scale", "52560",
        "--out", doc.to_str().unwrap(),
    ]);
    assert_exit(&to_file, 0);
    assert_eq!(std::fs::read_to_string(&doc).expect("policy file"), text);
    assert!(stdout_of(&to_file).is_empty(), "--out keeps stdout silent");
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = [
        "dynamic", "--a", "1.1", "--b", "2.2", "--lambda", "0.2", "--gamma", "0.1",
        "--regime", "decay", "--stages", "3", "--horizon", "12",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_exit(&first, 0);
    assert_eq!(first.stdout, second.stdout);

    // Thread-count and execution-mode knobs must not change a single byte.
    let capped = bin()
        .args(args)
        .env("MULTISIG_OPT_THREADS", "2")
        .output()
        .expect("binary runs");
    assert_exit(&capped, 0);
    assert_eq!(first.stdout, capped.stdout);
}

// ---------------------------------------------------------------------------
// exit codes
// ---------------------------------------------------------------------------

#[test]
fn rejected_parameters_exit_2() {
    let out = run(&["static", "--a", "-1", "--b", "2"]);
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("invalid parameter"), "stderr:\n{}", stderr_of(&out));

    let missing = run(&["static", "--a", "1"]);
    assert_exit(&missing, 2);
}

#[test]
fn malformed_schedule_file_exits_2() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("sched.json");
    std::fs::write(&path, "this is not json").expect("write file");
    let out = run(&[
        "policy", "--schedule", path.to_str().unwrap(),
        "--n", "3", "--unit", "blocks", "--scale", "52560",
    ]);
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("malformed input"), "stderr:\n{}", stderr_of(&out));
}

#[test]
fn infeasible_model_exits_3() {
    // Growth at gamma >= lambda with no horizon: the discounted tail diverges.
    let out = run(&[
        "dynamic", "--a", "1", "--b", "2.5", "--lambda", "0.05", "--gamma", "0.2",
        "--regime", "growth", "--stages", "2",
    ]);
    assert_exit(&out, 3);
    assert!(stderr_of(&out).contains("diverges"), "stderr:\n{}", stderr_of(&out));
}

#[test]
fn unparseable_thread_cap_exits_2() {
    let out = bin()
        .args(["static", "--a", "1", "--b", "2.5"])
        .env("MULTISIG_OPT_THREADS", "many")
        .output()
        .expect("binary runs");
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("MULTISIG_OPT_THREADS"), "stderr:\n{}", stderr_of(&out));
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[test]
fn verify_passes_and_prints_every_criterion() {
    let out = run(&["verify", "--trials", "60"]);
    assert_exit(&out, 0);
    let text = stdout_of(&out);
    let criteria: Vec<&str> = text.lines().filter(|l| l.starts_with("criterion ")).collect();
    assert_eq!(criteria.len(), 12, "stdout:\n{text}");
    for line in &criteria {
        assert!(line.contains("[PASS]"), "stdout:\n{text}");
    }
    assert!(text.trim_end().ends_with("verify: 12/12 criteria passed (seed 20260817)"));
}

#[test]
fn verify_is_reproducible_across_execution_modes() {
    let parallel = stdout_of(&run(&["verify", "--seed", "7", "--trials", "24"]));
    let sequential = stdout_of(&run(&["verify", "--seed", "7", "--trials", "24", "--sequential"]));
    // The determinism criterion's detail embeds its own wall-clock timing,
    // so compare everything except that one line.
    let strip = |s: &str| -> Vec<String> {
        s.lines().filter(|l| !l.starts_with("criterion 11")).map(str::to_string).collect()
    };
    assert_eq!(strip(&parallel), strip(&sequential));
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

/// Inline flags, a spec file describing the same grid, and --out all have
/// to produce identical CSV bytes.
#[test]
fn sweep_inline_spec_and_out_agree() {
    let inline_args = [
        "sweep", "--a-lo", "0.5", "--a-hi", "1.0", "--a-step", "0.25",
        "--b-lo", "1.5", "--b-hi", "2.0", "--b-step", "0.25",
    ];
    let inline = run(&inline_args);
    assert_exit(&inline, 0);
    let text = stdout_of(&inline);
    assert!(text.starts_with("a,b,lambda,gamma,regime,tau_star,"), "stdout:\n{text}");
    // 3 x 3 grid, every cell has b > a, plus the header line.
    assert_eq!(text.lines().count(), 10, "stdout:\n{text}");

    let dir = tempfile::tempdir().expect("tempdir");
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{
            "mode": "static",
            "a": {"lo": 0.5, "hi": 1.0, "step": 0.25},
            "b": {"lo": 1.5, "hi": 2.0, "step": 0.25}
        }"#,
    )
    .expect("write spec");
    let from_spec = run(&["sweep", "--spec", spec.to_str().unwrap()]);
    assert_exit(&from_spec, 0);
    assert_eq!(from_spec.stdout, inline.stdout);

    let csv = dir.path().join("rows.csv");
    let mut to_file_args = inline_args.to_vec();
    to_file_args.extend_from_slice(&["--out", csv.to_str().unwrap()]);
    let to_file = run(&to_file_args);
    assert_exit(&to_file, 0);
    assert_eq!(std::fs::read(&csv).expect("csv file"), inline.stdout);
}

#[test]
fn closed_pipe_kills_the_process_quietly() {
    // A sweep large enough to overflow the pipe buffer after `head` exits,
    // so the binary actually receives EPIPE mid-write. It must die like any
    // other filter — no panic, no backtrace on stderr.
    let pipeline = format!(
        "{} sweep --a-lo 0.25 --a-hi 3 --a-step 0.005 | head -n 2",
        env!("CARGO_BIN_EXE_multisig-opt")
    );
    let out = Command::new("sh").args(["-c", &pipeline]).output().expect("shell runs");
    assert_eq!(out.status.code(), Some(0), "head terminates the pipeline cleanly");
    let err = stderr_of(&out);
    assert!(!err.contains("panic"), "stderr:\n{err}");
    assert_eq!(stdout_of(&out).lines().count(), 2);
}

#[test]
fn sweep_spec_file_conflicts_with_inline_flags() {
    let dir = tempfile::tempdir().expect("tempdir");
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"mode": "static"}"#).expect("write spec");
    let out = run(&["sweep", "--spec", spec.to_str().unwrap(), "--a-lo", "0.5"]);
    assert_exit(&out, 2);
}

#[test]
fn dynamic_sweep_needs_its_time_parameters() {
    let out = run(&["sweep", "--mode", "dynamic2"]);
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("--lambda"), "stderr:\n{}", stderr_of(&out));

    let ok = run(&[
        "sweep", "--mode", "dynamic2", "--a-lo", "0.8", "--a-hi", "1.2", "--a-step", "0.2",
        "--b-lo", "2.0", "--b-hi", "2.5", "--b-step", "0.25",
        "--lambda", "0.1", "--gamma", "0.05", "--regime", "decay", "--horizon", "10",
    ]);
    assert_exit(&ok, 0);
    let text = stdout_of(&ok);
    // Dynamic rows carry the two stage thresholds and the switch time.
    let row = text.lines().nth(1).expect("at least one data row");
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[2], "0.100000000", "lambda column, row: {row}");
    assert!(!fields[6].is_empty() && !fields[8].is_empty(), "tau1/T columns, row: {row}");
}
