// SPDX-License-Identifier: Apache-2.0

//! Statevector simulation.
//!
//! Amplitudes are indexed by basis state with qubit row 0 as the most
//! significant bit. Gates are applied in place by iterating over the
//! amplitude groups they mix; no operator on the full space is ever built.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::bits::{BitString, BitStringError};
use crate::circuit::{Circuit, GatePlacement, Violation};
use crate::gates::{GateMatrix, GateRegistry};
use crate::sampling::Distribution;

/// Allowed deviation of the squared norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Input(#[from] BitStringError),
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("placement touches qubit {qubit} but the state has only {n_qubits} qubits")]
    DimensionMismatch { qubit: usize, n_qubits: usize },
    #[error("circuit is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidCircuit(Vec<Violation>),
}

/// Complex amplitudes over the `2^n` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// One exported amplitude.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeRow {
    pub bitstring: String,
    pub re: f64,
    pub im: f64,
}

impl StateVector {
    /// The basis state selected by `input`.
    pub fn basis(input: &BitString) -> StateVector {
        let n_qubits = input.len();
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1usize << n_qubits];
        amplitudes[input.index()] = Complex64::new(1.0, 0.0);
        StateVector { n_qubits, amplitudes }
    }

    /// Wraps raw amplitudes. Returns `None` unless the length is a power of
    /// two and the vector is normalized.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Option<StateVector> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return None;
        }
        let state = StateVector {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        };
        ((state.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE).then_some(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    /// Born-rule probabilities `|a_i|^2`.
    pub fn probabilities(&self) -> Distribution {
        Distribution::from_state_unchecked(self.n_qubits, self.amplitudes.iter().map(Complex64::norm_sqr).collect())
    }

    /// `(bitstring, re, im)` for every basis state, in index order.
    pub fn export_rows(&self) -> Vec<AmplitudeRow> {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| AmplitudeRow {
                bitstring: BitString::from_index(i, self.n_qubits).to_string(),
                re: a.re,
                im: a.im,
            })
            .collect()
    }

    #[inline]
    fn mask(&self, qubit: usize) -> usize {
        1usize << (self.n_qubits - 1 - qubit)
    }

    /// Applies one placement in place.
    pub fn apply_placement(&mut self, placement: &GatePlacement, registry: &GateRegistry) -> Result<(), SimError> {
        let n = self.n_qubits;
        let check = |q: usize| {
            if q < n {
                Ok(())
            } else {
                Err(SimError::DimensionMismatch { qubit: q, n_qubits: n })
            }
        };
        for &q in placement.controls.iter().chain(&placement.anti_controls) {
            check(q)?;
        }
        let control_mask = placement.controls.iter().fold(0, |m, &q| m | self.mask(q));
        let anti_mask = placement.anti_controls.iter().fold(0, |m, &q| m | self.mask(q));
        let controls = Controls {
            care: control_mask | anti_mask,
            want: control_mask,
        };

        if placement.is_swap() {
            let partner = placement
                .swap_partner
                .ok_or_else(|| SimError::UnknownGate("SWAP without partner".into()))?;
            check(placement.target)?;
            check(partner)?;
            self.apply_swap(self.mask(placement.target), self.mask(partner), controls);
            return Ok(());
        }

        let def = registry
            .get(&placement.name)
            .ok_or_else(|| SimError::UnknownGate(placement.name.clone()))?;
        let arity = def.arity();
        check(placement.target + arity - 1)?;
        // lowest bit position of the span; the target row is its top bit
        let low = n - placement.target - arity;
        if arity == 1 {
            self.apply_single(def.matrix(), low, controls);
        } else {
            self.apply_multi(def.matrix(), arity, low, controls);
        }
        Ok(())
    }

    fn apply_single(&mut self, m: &GateMatrix, bit: usize, controls: Controls) {
        let (m00, m01, m10, m11) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
        let stride = 1usize << bit;
        let amps = &mut self.amplitudes;
        for block in (0..amps.len()).step_by(stride << 1) {
            for i0 in block..block + stride {
                if !controls.active(i0) {
                    continue;
                }
                let i1 = i0 | stride;
                let (a0, a1) = (amps[i0], amps[i1]);
                amps[i0] = m00 * a0 + m01 * a1;
                amps[i1] = m10 * a0 + m11 * a1;
            }
        }
    }

    fn apply_multi(&mut self, m: &GateMatrix, arity: usize, low: usize, controls: Controls) {
        let dim = 1usize << arity;
        let low_mask = (1usize << low) - 1;
        let rest = self.amplitudes.len() >> arity;
        let mut local = vec![Complex64::new(0.0, 0.0); dim];
        for r in 0..rest {
            // insert `arity` zero bits at position `low`
            let base = ((r & !low_mask) << arity) | (r & low_mask);
            if !controls.active(base) {
                continue;
            }
            for (k, slot) in local.iter_mut().enumerate() {
                *slot = self.amplitudes[base | (k << low)];
            }
            for row in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for (col, a) in local.iter().enumerate() {
                    acc += m.get(row, col) * a;
                }
                self.amplitudes[base | (row << low)] = acc;
            }
        }
    }

    fn apply_swap(&mut self, a: usize, b: usize, controls: Controls) {
        for i in 0..self.amplitudes.len() {
            if i & a != 0 && i & b == 0 && controls.active(i) {
                self.amplitudes.swap(i, (i & !a) | b);
            }
        }
    }
}

/// Control condition on a basis index: bits in `care` must equal `want`.
#[derive(Clone, Copy)]
struct Controls {
    care: usize,
    want: usize,
}

impl Controls {
    #[inline]
    fn active(self, index: usize) -> bool {
        index & self.care == self.want
    }
}

/// The basis state for `input` on an `n_qubits` register.
pub fn initial_state(input: &str, n_qubits: usize) -> Result<StateVector, SimError> {
    Ok(StateVector::basis(&BitString::parse_for(input, n_qubits)?))
}

/// Runs `circuit` on the classical `input`.
///
/// The circuit is validated first; placements are applied column by column.
/// Placements sharing a column act on disjoint lines and commute.
pub fn simulate(circuit: &Circuit, input: &BitString, registry: &GateRegistry) -> Result<StateVector, SimError> {
    let violations = circuit.validate(registry);
    if !violations.is_empty() {
        return Err(SimError::InvalidCircuit(violations));
    }
    simulate_validated(circuit, input, registry)
}

/// Like [`simulate`] but skips validation. The caller guarantees the
/// circuit validates against `registry`.
pub fn simulate_validated(
    circuit: &Circuit,
    input: &BitString,
    registry: &GateRegistry,
) -> Result<StateVector, SimError> {
    if input.len() != circuit.n_qubits() {
        return Err(BitStringError::LengthMismatch {
            expected: circuit.n_qubits(),
            actual: input.len(),
        }
        .into());
    }
    let mut state = StateVector::basis(input);
    for placement in circuit.placements_in_time_order() {
        state.apply_placement(placement, registry)?;
    }
    Ok(state)
}
