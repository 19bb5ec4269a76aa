// SPDX-License-Identifier: Apache-2.0

//! Independent reference implementations used only by tests.
//!
//! [`dense`] builds the full `2^n x 2^n` unitary of a circuit from Kronecker
//! products, [`qasm`] interprets the OpenQASM 2 subset the exporter emits,
//! and [`gen`] produces random valid circuits for property tests.

pub mod dense;
pub mod gen;
pub mod qasm;

use num_complex::Complex64;

/// L-infinity distance between two probability vectors.
pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `|a_i|^2` for each amplitude.
pub fn probabilities(amplitudes: &[Complex64]) -> Vec<f64> {
    amplitudes.iter().map(Complex64::norm_sqr).collect()
}
