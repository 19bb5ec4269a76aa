// SPDX-License-Identifier: Apache-2.0

//! Deterministic number formatting for command line and export output.

/// Magnitudes below this print as `0`.
pub const ZERO_THRESHOLD: f64 = 1e-12;

const SIGNIFICANT_DIGITS: i32 = 10;

/// Formats `x` with 10 significant digits in fixed notation; values with
/// magnitude below `1e-12` print as `0`.
///
/// ```
/// use qlearn_core::format::format_number;
/// assert_eq!(format_number(0.5), "0.5000000000");
/// assert_eq!(format_number(1.0), "1.000000000");
/// assert_eq!(format_number(-0.25), "-0.2500000000");
/// assert_eq!(format_number(3e-13), "0");
/// ```
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x.abs() < ZERO_THRESHOLD {
        return "0".to_owned();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (SIGNIFICANT_DIGITS - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}
