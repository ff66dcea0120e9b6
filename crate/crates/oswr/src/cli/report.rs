//! Pass/fail rendering of sweep and comparison results.

use super::sweep::{ComparisonRow, SlopeFit};
use crate::problem::TransmissionKind;

/// Slope band around the expected exponent.
pub const SLOPE_TOL: f64 = 0.15;
/// Largest relative spread of the equioscillating maxima.
pub const SPREAD_TOL: f64 = 1e-2;

/// One named acceptance check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `|value - expected| <= tol`.
    pub fn band(name: impl Into<String>, value: f64, expected: f64, tol: f64) -> Self {
        Check { name: name.into(), value, expected, tol, pass: (value - expected).abs() <= tol }
    }

    /// Passes when `value <= bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, expected: bound, tol: 0.0, pass: value <= bound }
    }
}

/// Checks the fitted iteration slopes against the expected exponents.
pub fn slope_checks(fits: &[SlopeFit]) -> Vec<Check> {
    fits.iter()
        .filter_map(|f| {
            let (slope, expected) = (f.slope?, f.expected?);
            let k = &f.key;
            Some(Check::band(
                format!("slope {} {}x{} overlap {}", k.kind, k.px, k.py, k.overlap_cells),
                slope,
                expected,
                SLOPE_TOL,
            ))
        })
        .collect()
}

/// Equioscillation spread of each oracle optimum.
pub fn spread_checks(rows: &[ComparisonRow]) -> Vec<Check> {
    rows.iter()
        .filter_map(|r| {
            let s = r.spread?;
            let m = if r.kind == TransmissionKind::Robin { 2 } else { 3 };
            Some(Check::at_most(format!("equioscillation top-{m} {} overlap {} h={}", r.kind, r.overlap_cells, r.h), s, SPREAD_TOL))
        })
        .collect()
}

/// Renders one line per check and returns the exit code:
/// 0 when everything passes, 1 on any failure, 2 when there is nothing to judge.
pub fn emit_summary(results: &[Check]) -> (String, i32) {
    if results.is_empty() {
        return ("no results to report\n".into(), 2);
    }
    let mut out = String::new();
    let mut failed = 0;
    for c in results {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        if !c.pass {
            failed += 1;
        }
        if c.tol > 0.0 {
            out += &format!("{tag} {}: {:.6} (expected {:.6} +/- {})\n", c.name, c.value, c.expected, c.tol);
        } else {
            out += &format!("{tag} {}: {:.6e} (bound {:.6e})\n", c.name, c.value, c.expected);
        }
    }
    out += &format!("{} of {} checks passed\n", results.len() - failed, results.len());
    (out, i32::from(failed > 0))
}
