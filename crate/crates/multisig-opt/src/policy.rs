//! Compilation of a solved schedule into a machine-readable spend policy.
//!
//! A schedule speaks in threshold *fractions* and real-valued switch times;
//! wallets speak in integer signer counts and integer activation ticks
//! (block heights, seconds, or abstract units). This module does the
//! rounding, never silently: every stage records how its numbers were
//! produced in a human-readable `rounding_note`, activation collisions are
//! resolved by bumping later stages one tick forward, and the whole
//! document serializes to canonical JSON (fixed key order, two-space
//! indent, nine-significant-digit reals) so that re-serializing a parsed
//! document is byte-identical.

use crate::dynamic_opt::{Schedule, Stage, StageThreshold};
use crate::error::{Error, Result};
use crate::model::{StageInterval, Threshold};
use crate::render::{norm, sig9};

/// What one activation tick means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyUnit {
    Seconds,
    Blocks,
    Abstract,
}

impl PolicyUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyUnit::Seconds => "seconds",
            PolicyUnit::Blocks => "blocks",
            PolicyUnit::Abstract => "abstract",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "seconds" => Ok(PolicyUnit::Seconds),
            "blocks" => Ok(PolicyUnit::Blocks),
            "abstract" => Ok(PolicyUnit::Abstract),
            other => Err(Error::MalformedInput(format!(
                "unit must be seconds, blocks, or abstract, got {other:?}"
            ))),
        }
    }
}

/// One compiled stage: `m` signers required from `activates_at` onward.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyStage {
    pub m: u32,
    pub activates_at: u64,
    /// The threshold fraction this stage was compiled from, quantized to
    /// nine significant digits.
    pub raw_tau: f64,
    /// How `m` and `activates_at` were derived (ceiling arithmetic, clamps,
    /// per-stage signer-set overrides, collision bumps).
    pub rounding_note: String,
}

/// A complete spend policy: `n` signers, a time unit, the scale from model
/// time to ticks, and the stage ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDocument {
    pub n: u32,
    pub unit: PolicyUnit,
    pub unit_scale: f64,
    pub stages: Vec<PolicyStage>,
}

/// Smallest signer count whose fraction of `n` covers `tau`:
/// `ceil(tau * n)`, clamped to `[1, n]`.
///
/// The ceiling guarantees the realized fraction `m/n` never undershoots the
/// requested threshold; the lower clamp keeps every stage spendable by at
/// least one signer. `n` must be at least 1.
pub fn threshold_to_m(tau: Threshold, n: u32) -> u32 {
    assert!(n >= 1, "signer count must be at least 1");
    let raw = (tau.value() * n as f64).ceil() as i64;
    raw.clamp(1, n as i64) as u32
}

/// Compile a schedule against an `n`-signer set.
///
/// `stage_n_overrides`, when given, supplies a per-stage signer-set size
/// (one entry per stage; entries equal to `n` are no-ops). This models
/// policies where a late stage hands control to a different, usually
/// smaller, signer set; the document-level `n` stays the same and the
/// override is recorded in the stage's `rounding_note`.
///
/// Activation ticks are `round(T * unit_scale)`; equal neighbors are
/// resolved by bumping the later stage forward one tick at a time, which
/// fails with [`CollisionUnresolvable`](Error::CollisionUnresolvable) only
/// if the bump would overflow the tick range.
pub fn compile_policy(
    schedule: &Schedule,
    n: u32,
    unit: PolicyUnit,
    unit_scale: f64,
    stage_n_overrides: Option<&[u32]>,
) -> Result<PolicyDocument> {
    if n < 1 {
        return Err(Error::InvalidParameter("signer count n must be at least 1".into()));
    }
    if !unit_scale.is_finite() || unit_scale <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "unit scale must be positive and finite, got {unit_scale}"
        )));
    }
    if let Some(overrides) = stage_n_overrides {
        if overrides.len() != schedule.n_stages() {
            return Err(Error::InvalidParameter(format!(
                "{} stage overrides for {} stages",
                overrides.len(),
                schedule.n_stages()
            )));
        }
        if let Some(bad) = overrides.iter().find(|&&o| o < 1) {
            return Err(Error::InvalidParameter(format!(
                "stage signer count must be at least 1, got {bad}"
            )));
        }
    }

    let mut stages = Vec::with_capacity(schedule.n_stages());
    let mut prev_tick: Option<u64> = None;
    for (i, stage) in schedule.stages().iter().enumerate() {
        let n_eff = stage_n_overrides.map_or(n, |o| o[i]);
        let tau = stage.threshold.tau;
        let m = threshold_to_m(tau, n_eff);
        let raw_m = (tau.value() * n_eff as f64).ceil() as i64;

        let start = stage.interval.start;
        let ticks_real = start * unit_scale;
        if !(0.0..=9.0e18).contains(&ticks_real) {
            return Err(Error::InvalidParameter(format!(
                "activation time {start} x scale {unit_scale} leaves the tick range"
            )));
        }
        let natural = ticks_real.round() as u64;
        let (tick, bumped_by) = match prev_tick {
            Some(prev) if natural <= prev => {
                let bumped = prev
                    .checked_add(1)
                    .ok_or_else(|| Error::CollisionUnresolvable(format!(
                        "stage {i} cannot activate after tick {prev}"
                    )))?;
                (bumped, bumped - natural)
            }
            _ => (natural, 0),
        };
        prev_tick = Some(tick);

        let mut note = format!("ceil({} * {}) = {}", sig9(tau.value()), n_eff, raw_m);
        if raw_m < 1 {
            note.push_str(" -> raised to 1 (at least one signer required)");
        } else if raw_m > n_eff as i64 {
            note.push_str(&format!(" -> capped at {n_eff}"));
        }
        if n_eff != n {
            note.push_str(&format!(
                "; stage uses its own {n_eff}-signer set (document n = {n})"
            ));
        }
        if bumped_by > 0 {
            note.push_str(&format!(
                "; activation bumped +{bumped_by} to keep ticks strictly increasing"
            ));
        }

        stages.push(PolicyStage {
            m,
            activates_at: tick,
            raw_tau: norm(tau.value()),
            rounding_note: note,
        });
    }
    Ok(PolicyDocument { n, unit, unit_scale: norm(unit_scale), stages })
}

// ---------------------------------------------------------------------------
// Canonical JSON
// ---------------------------------------------------------------------------

fn escape_json(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

/// Serialize to canonical JSON: keys in fixed order (`n`, `unit`,
/// `unit_scale`, `stages`; stage keys `m`, `activates_at`, `raw_tau`,
/// `rounding_note`), two-space indent, nine-significant-digit reals,
/// trailing newline.
pub fn serialize_policy(doc: &PolicyDocument) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"n\": {},\n", doc.n));
    out.push_str(&format!("  \"unit\": \"{}\",\n", doc.unit.as_str()));
    out.push_str(&format!("  \"unit_scale\": {},\n", sig9(doc.unit_scale)));
    out.push_str("  \"stages\": [\n");
    for (i, s) in doc.stages.iter().enumerate() {
        out.push_str("    {\n");
        out.push_str(&format!("      \"m\": {},\n", s.m));
        out.push_str(&format!("      \"activates_at\": {},\n", s.activates_at));
        out.push_str(&format!("      \"raw_tau\": {},\n", sig9(s.raw_tau)));
        out.push_str(&format!(
            "      \"rounding_note\": \"{}\"\n",
            escape_json(&s.rounding_note)
        ));
        out.push_str(if i + 1 == doc.stages.len() { "    }\n" } else { "    },\n" });
    }
    out.push_str("  ]\n");
    out.push_str("}\n");
    out
}

fn require_u64(v: &serde_json::Value, key: &str) -> Result<u64> {
    v.get(key)
        .and_then(|x| x.as_u64())
        .ok_or_else(|| Error::MalformedInput(format!("policy field {key} must be a nonnegative integer")))
}

fn require_f64(v: &serde_json::Value, key: &str) -> Result<f64> {
    v.get(key)
        .and_then(|x| x.as_f64())
        .ok_or_else(|| Error::MalformedInput(format!("policy field {key} must be a number")))
}

fn require_str<'a>(v: &'a serde_json::Value, key: &str) -> Result<&'a str> {
    v.get(key)
        .and_then(|x| x.as_str())
        .ok_or_else(|| Error::MalformedInput(format!("policy field {key} must be a string")))
}

fn check_keys(v: &serde_json::Value, allowed: &[&str], what: &str) -> Result<()> {
    if let Some(obj) = v.as_object() {
        for k in obj.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::MalformedInput(format!("unknown {what} field {k:?}")));
            }
        }
        Ok(())
    } else {
        Err(Error::MalformedInput(format!("{what} must be a JSON object")))
    }
}

/// Parse a policy document produced by [`serialize_policy`].
pub fn parse_policy(text: &str) -> Result<PolicyDocument> {
    let v: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::MalformedInput(format!("policy is not valid JSON: {e}")))?;
    check_keys(&v, &["n", "unit", "unit_scale", "stages"], "policy")?;
    let n = require_u64(&v, "n")? as u32;
    let unit = PolicyUnit::parse(require_str(&v, "unit")?)?;
    let unit_scale = require_f64(&v, "unit_scale")?;
    let raw_stages = v
        .get("stages")
        .and_then(|s| s.as_array())
        .ok_or_else(|| Error::MalformedInput("policy field stages must be an array".to_string()))?;
    let mut stages = Vec::with_capacity(raw_stages.len());
    for s in raw_stages {
        check_keys(s, &["m", "activates_at", "raw_tau", "rounding_note"], "stage")?;
        stages.push(PolicyStage {
            m: require_u64(s, "m")? as u32,
            activates_at: require_u64(s, "activates_at")?,
            raw_tau: norm(require_f64(s, "raw_tau")?),
            rounding_note: require_str(s, "rounding_note")?.to_string(),
        });
    }
    Ok(PolicyDocument { n, unit, unit_scale: norm(unit_scale), stages })
}

// ---------------------------------------------------------------------------
// Schedule files
// ---------------------------------------------------------------------------

/// Serialize a schedule (plus optional per-stage signer-set sizes) to the
/// JSON form the `policy` command consumes.
///
/// ```json
/// {
///   "stages": [
///     {"tau": 0.666666667, "start": 0, "end": 1, "n": 3},
///     {"tau": 1, "start": 5, "end": null}
///   ]
/// }
/// ```
///
/// `end: null` marks an unbounded final stage; `n` is the optional
/// override.
pub fn schedule_to_json(schedule: &Schedule, stage_n: Option<&[u32]>) -> String {
    let mut out = String::new();
    out.push_str("{\n  \"stages\": [\n");
    let stages = schedule.stages();
    for (i, s) in stages.iter().enumerate() {
        out.push_str("    {");
        out.push_str(&format!("\"tau\": {}", sig9(s.threshold.tau.value())));
        out.push_str(&format!(", \"start\": {}", sig9(s.interval.start)));
        if s.interval.end.is_finite() {
            out.push_str(&format!(", \"end\": {}", sig9(s.interval.end)));
        } else {
            out.push_str(", \"end\": null");
        }
        if let Some(ns) = stage_n {
            out.push_str(&format!(", \"n\": {}", ns[i]));
        }
        out.push_str(if i + 1 == stages.len() { "}\n" } else { "},\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

/// Parse the schedule JSON form. Returns the schedule and, when any stage
/// carries an `n`, the full per-stage override vector (stages without one
/// get 0, which [`compile_policy`] callers must replace with the document
/// `n` before use — see [`resolve_overrides`]).
pub fn schedule_from_json(text: &str) -> Result<(Schedule, Option<Vec<u32>>)> {
    let v: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::MalformedInput(format!("schedule is not valid JSON: {e}")))?;
    check_keys(&v, &["stages"], "schedule")?;
    let raw = v
        .get("stages")
        .and_then(|s| s.as_array())
        .ok_or_else(|| Error::MalformedInput("schedule field stages must be an array".to_string()))?;
    if raw.is_empty() {
        return Err(Error::MalformedInput("schedule needs at least one stage".to_string()));
    }
    let mut stages = Vec::with_capacity(raw.len());
    let mut overrides = Vec::with_capacity(raw.len());
    let mut any_override = false;
    for s in raw {
        check_keys(s, &["tau", "start", "end", "n"], "schedule stage")?;
        let tau = Threshold::new(require_f64(s, "tau")?)?;
        let start = require_f64(s, "start")?;
        let end = match s.get("end") {
            None | Some(serde_json::Value::Null) => f64::INFINITY,
            Some(x) => x.as_f64().ok_or_else(|| {
                Error::MalformedInput("schedule field end must be a number or null".to_string())
            })?,
        };
        let n = match s.get("n") {
            None | Some(serde_json::Value::Null) => 0,
            Some(x) => {
                any_override = true;
                x.as_u64().filter(|&n| n >= 1).ok_or_else(|| {
                    Error::MalformedInput("schedule field n must be a positive integer".to_string())
                })? as u32
            }
        };
        overrides.push(n);
        stages.push(Stage {
            threshold: StageThreshold { tau, corner: false, clamped: false },
            interval: StageInterval::new(start, end)?,
        });
    }
    let schedule = Schedule::new(stages)?;
    Ok((schedule, if any_override { Some(overrides) } else { None }))
}

/// Replace unset (0) entries of a parsed override vector with the document
/// `n`.
pub fn resolve_overrides(overrides: Option<Vec<u32>>, n: u32) -> Option<Vec<u32>> {
    overrides.map(|v| v.into_iter().map(|o| if o == 0 { n } else { o }).collect())
}
