//! Optimal m-of-n threshold selection for multisignature custody, static and
//! time-locked.
//!
//! A custodian holding value behind an m-of-n signature policy faces a
//! trade-off: raising the signing threshold makes theft harder but also makes
//! honest recovery harder. This crate models both effects with a pair of
//! threshold-indexed access probabilities, scores a threshold by its expected
//! loss, and solves for the optimum — either a single static threshold or a
//! schedule of thresholds that switch at time locks as the attacker's
//! capability decays (or grows) over time.
//!
//! The crate is organized in layers:
//!
//! - [`model`] — the probability model, loss table, and per-stage time
//!   weights. Everything else consumes this and only this.
//! - [`static_opt`] / [`dynamic_opt`] — closed-form and fixed-point solvers
//!   for the static threshold and the multi-stage schedule.
//! - [`oracle`] — deliberately naive cross-checks (grid search, adaptive
//!   quadrature, finite differences, direct coordinate descent) that depend
//!   only on [`model`], so a bug in a solver cannot hide in its own oracle.
//! - [`sweep`] — parameter grids over the model, rendered to deterministic
//!   CSV.
//! - [`policy`] — compilation of a solved schedule into a machine-readable
//!   spend-policy document with integer signer counts and activation ticks.
//! - [`verify`] — the self-check suite: every closed form is replayed against
//!   an oracle and every qualitative property is spot-checked on seeded random
//!   draws. `multisig-opt verify` and the acceptance test both run this.
//!
//! Cargo feature `parallel` (on by default) routes grid searches, sweeps, and
//! verification batches through rayon; disabling it leaves the same API
//! running sequentially. Results are bit-identical across modes and thread
//! counts — parallel reductions are ordered by index, never by arrival.

pub mod dynamic_opt;
pub mod error;
pub mod exec;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod render;
pub mod static_opt;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
