// SPDX-License-Identifier: Apache-2.0

//! Autograding by probability-vector equivalence.
//!
//! Two circuits are equivalent when every admitted classical input produces
//! the same output distribution (L∞ distance within the tolerance). Global
//! and relative phases are invisible to this check. The admitted inputs are
//! all `2^n` bitstrings, or those matching at least one of the exercise's
//! input filters when it has any.
//!
//! Grading runs the cheap gate-count conditions first and only then the
//! exhaustive equivalence check.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use regex::Regex;
use serde::Serialize;
use thiserror::Error;

use crate::bits::BitString;
use crate::circuit::{Circuit, Violation};
use crate::condition::Condition;
use crate::exercise::{anchored_regex, Exercise};
use crate::gates::{GateRegistry, ANTI_CONTROL, CONTROL};
use crate::sampling::Distribution;
use crate::sim::{simulate_validated, SimError};

/// L∞ tolerance on probability vectors; absorbs floating-point rounding only.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GradeError {
    #[error("circuit is {actual_qubits}x{actual_moments} but the task grid is {expected_qubits}x{expected_moments}")]
    DimensionMismatch {
        expected_qubits: usize,
        expected_moments: usize,
        actual_qubits: usize,
        actual_moments: usize,
    },
    #[error("gate `{0}` is not allowed in this task")]
    DisallowedGate(String),
    #[error("circuits have {0} and {1} qubits")]
    QubitCountMismatch(usize, usize),
    #[error("invalid input filter {pattern:?}: {message}")]
    InvalidRegex { pattern: String, message: String },
    #[error("circuit is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidCircuit(Vec<Violation>),
    #[error(transparent)]
    Simulation(#[from] SimError),
}

/// Anchored whole-bitstring patterns; an input is admitted when any pattern
/// matches, or always when there are no patterns.
#[derive(Debug, Clone, Default)]
pub struct InputFilter {
    patterns: Vec<Regex>,
}

impl InputFilter {
    pub fn all() -> InputFilter {
        InputFilter::default()
    }

    pub fn new<S: AsRef<str>>(patterns: &[S]) -> Result<InputFilter, GradeError> {
        let patterns = patterns
            .iter()
            .map(|p| {
                anchored_regex(p.as_ref()).map_err(|e| GradeError::InvalidRegex {
                    pattern: p.as_ref().to_owned(),
                    message: e.to_string(),
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(InputFilter { patterns })
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn admits(&self, input: &BitString) -> bool {
        self.patterns.is_empty() || self.patterns.iter().any(|re| re.is_match(input.as_str()))
    }

    /// Admitted inputs over `n_qubits` lines in index order.
    pub fn admitted_inputs(&self, n_qubits: usize) -> Vec<BitString> {
        (0..1usize << n_qubits)
            .map(|i| BitString::from_index(i, n_qubits))
            .filter(|b| self.admits(b))
            .collect()
    }
}

/// The first admitted input on which two circuits disagree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub input: BitString,
    pub expected: Distribution,
    pub actual: Distribution,
}

/// Outcome of [`equivalent`].
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub counterexample: Option<Counterexample>,
    /// Inputs admitted by the filter.
    pub inputs_admitted: usize,
    /// Inputs that were actually simulated on both circuits.
    pub inputs_checked: usize,
}

/// Checks whether `reference` and `candidate` give the same output
/// distribution on every admitted input.
///
/// Stops at the first counterexample in input order. Inputs are simulated in
/// parallel.
pub fn equivalent(
    reference: &Circuit,
    candidate: &Circuit,
    registry: &GateRegistry,
    filter: &InputFilter,
    tol: f64,
) -> Result<EquivalenceReport, GradeError> {
    if reference.n_qubits() != candidate.n_qubits() {
        return Err(GradeError::QubitCountMismatch(
            reference.n_qubits(),
            candidate.n_qubits(),
        ));
    }
    for c in [reference, candidate] {
        let violations = c.validate(registry);
        if !violations.is_empty() {
            return Err(GradeError::InvalidCircuit(violations));
        }
    }
    let inputs = filter.admitted_inputs(reference.n_qubits());
    let checked = AtomicUsize::new(0);
    let found = inputs
        .par_iter()
        .map(|input| -> Result<Option<Counterexample>, SimError> {
            let expected = simulate_validated(reference, input, registry)?.probabilities();
            let actual = simulate_validated(candidate, input, registry)?.probabilities();
            checked.fetch_add(1, Ordering::Relaxed);
            Ok((expected.max_abs_diff(&actual) > tol).then(|| Counterexample {
                input: input.clone(),
                expected,
                actual,
            }))
        })
        .find_first(|r| !matches!(r, Ok(None)));
    let counterexample = found.transpose()?.flatten();
    Ok(EquivalenceReport {
        equivalent: counterexample.is_none(),
        counterexample,
        inputs_admitted: inputs.len(),
        inputs_checked: checked.into_inner(),
    })
}

/// The first condition that does not hold on `circuit`, if any.
pub fn check_conditions<'a>(circuit: &Circuit, conditions: &'a [Condition]) -> Option<&'a Condition> {
    conditions.iter().find(|c| !c.holds(circuit))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Stage {
    Condition,
    Equivalence,
}

/// Points and feedback for one attempt.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GradeResult {
    pub correct: bool,
    pub failed_stage: Option<Stage>,
    pub points: f64,
    pub feedback: String,
    /// Text of the violated condition; instructor view only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_condition: Option<String>,
    /// Instructor view only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

impl GradeResult {
    /// The result as shown to the student: no counterexample and no
    /// condition text.
    pub fn student_view(&self) -> GradeResult {
        GradeResult {
            failed_condition: None,
            counterexample: None,
            ..self.clone()
        }
    }
}

/// Grades `student` against the exercise's model circuit.
///
/// Placements that reproduce the exercise's locked pre-placed gates are
/// exempt from the allowed-gates check.
pub fn grade(student: &Circuit, exercise: &Exercise, registry: &GateRegistry) -> Result<GradeResult, GradeError> {
    if (student.n_qubits(), student.n_moments()) != (exercise.n_qubits(), exercise.n_moments()) {
        return Err(GradeError::DimensionMismatch {
            expected_qubits: exercise.n_qubits(),
            expected_moments: exercise.n_moments(),
            actual_qubits: student.n_qubits(),
            actual_moments: student.n_moments(),
        });
    }
    let violations = student.validate(registry);
    if !violations.is_empty() {
        return Err(GradeError::InvalidCircuit(violations));
    }
    let locked: Vec<_> = exercise.initial_placements().iter().filter(|p| !p.editable).collect();
    for p in student.placements() {
        if locked.iter().any(|l| {
            l.name == p.name
                && l.target == p.target
                && l.time == p.time
                && l.controls == p.controls
                && l.anti_controls == p.anti_controls
                && l.swap_partner == p.swap_partner
        }) {
            continue;
        }
        if !exercise.is_allowed(&p.name) {
            return Err(GradeError::DisallowedGate(p.name.clone()));
        }
        if !p.controls.is_empty() && !exercise.is_allowed(CONTROL) {
            return Err(GradeError::DisallowedGate(CONTROL.into()));
        }
        if !p.anti_controls.is_empty() && !exercise.is_allowed(ANTI_CONTROL) {
            return Err(GradeError::DisallowedGate(ANTI_CONTROL.into()));
        }
    }

    let feedback = exercise.feedback();
    let conditions: Vec<Condition> = exercise
        .model_conditions()
        .iter()
        .map(|c| c.condition.clone())
        .collect();
    if let Some(failed) = check_conditions(student, &conditions) {
        return Ok(GradeResult {
            correct: false,
            failed_stage: Some(Stage::Condition),
            points: 0.0,
            feedback: feedback.condition_wrong().to_owned(),
            failed_condition: Some(failed.to_string()),
            counterexample: None,
        });
    }

    let filter = InputFilter::new(exercise.input_filters())?;
    let report = equivalent(
        &exercise.model_circuit(),
        student,
        registry,
        &filter,
        EQUIVALENCE_TOLERANCE,
    )?;
    Ok(if report.equivalent {
        GradeResult {
            correct: true,
            failed_stage: None,
            points: exercise.points_rule().multiplier,
            feedback: feedback.correct().to_owned(),
            failed_condition: None,
            counterexample: None,
        }
    } else {
        GradeResult {
            correct: false,
            failed_stage: Some(Stage::Equivalence),
            points: 0.0,
            feedback: feedback.wrong().to_owned(),
            failed_condition: None,
            counterexample: report.counterexample,
        }
    })
}
