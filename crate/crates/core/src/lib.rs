// SPDX-License-Identifier: Apache-2.0

//! Core of the qlearn circuit exercise platform: circuit model, statevector
//! simulator, shot sampling, the YAML exercise format, the autograder and
//! exporters.
//!
//! Qubit row 0 (the top wire of the editor grid) is the most significant
//! bit of a basis index, so the bitstring `"10"` is index 2.

pub mod bits;
pub mod circuit;
pub mod condition;
pub mod exercise;
pub mod export;
pub mod format;
pub mod gates;
pub mod grader;
pub mod sampling;
pub mod sim;

pub use bits::{BitString, BitStringError};
pub use circuit::{Bit, Circuit, CircuitError, GatePlacement, PlacementError, QubitSpec, Violation, MAX_QUBITS};
pub use condition::{parse_condition, Comparator, Condition, ConditionSyntaxError};
pub use exercise::{
    parse_circuit_file, parse_exercise, serialize_exercise, CircuitFile, Exercise, ExerciseError, Parsed,
};
pub use export::{export_circuit, export_circuit_with_input, export_results, CircuitFormat, ExportError, ResultFormat};
pub use gates::{GateDefinition, GateError, GateMatrix, GateRegistry};
pub use grader::{equivalent, grade, EquivalenceReport, GradeError, GradeResult, InputFilter};
pub use sampling::{sample, Distribution, Histogram, SampleError, SamplingMode, ShotRecord, ShotSession};
pub use sim::{simulate, SimError, StateVector};
