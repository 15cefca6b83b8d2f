//! Deterministic number rendering shared by the CSV emitter, the CLI, and
//! the policy serializer.
//!
//! Every real number that leaves this crate is rendered with nine significant
//! digits: positional notation for decimal exponents in [-4, 8], scientific
//! (`d.ddddddddec`) otherwise. Nine digits is coarse enough to be stable
//! across platforms and fine enough that re-parsing the rendered string and
//! rendering again reproduces the same bytes, which is what makes emit/parse
//! round trips and byte-identical re-runs testable.

/// Render `x` with nine significant digits.
///
/// Zero renders as `"0"`; non-finite values fall back to the standard
/// `Display` form (they never appear in well-formed output files).
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    // Decimal exponent of the leading digit, read off the full-precision
    // scientific rendering rather than computed via log10 (which is off by
    // one on exact powers of ten due to rounding).
    let sci = format!("{x:e}");
    let e10: i32 = sci[sci.find('e').expect("scientific format") + 1..]
        .parse()
        .expect("scientific exponent");
    if (-4..9).contains(&e10) {
        let decimals = (8 - e10).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.8e}")
    }
}

/// Quantize `x` to the value its nine-digit rendering parses back to.
///
/// Values stored in sweep rows and policy documents are passed through this
/// at construction so that emit → parse → emit is the identity.
pub fn norm(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    sig9(x).parse().expect("sig9 output parses as f64")
}
