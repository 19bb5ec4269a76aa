// SPDX-License-Identifier: Apache-2.0

//! YAML exercise configuration.
//!
//! An exercise document describes the task text, which simulator widgets are
//! shown, the grid size and inputs, the hidden model circuit with its gate
//! count conditions, the points multiplier and the feedback texts. The
//! authoring guide in `docs/authoring.md` lists every key; the JSON schema in
//! `schema/exercise.schema.json` is its machine-readable form.
//!
//! Unknown keys are reported as warnings so that documents written for newer
//! versions still load.

use std::num::NonZeroU32;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Bit, Circuit, CircuitError, GatePlacement, QubitNotation, QubitSpec, Violation, MAX_QUBITS};
use crate::condition::{parse_condition, Condition};
use crate::gates::{CustomGateDoc, GateDefinition, GateRegistry};
use crate::sampling::SamplingMode;

pub const DEFAULT_CORRECT: &str = "Correct!";
pub const DEFAULT_CONDITION_WRONG: &str = "Incorrect: the circuit does not meet the required gate conditions.";
pub const DEFAULT_WRONG: &str = "Incorrect: the circuit does not produce the expected outputs.";
pub const DEFAULT_SAMPLE_SIZE: u32 = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExerciseError {
    #[error("malformed YAML: {0}")]
    MalformedYaml(String),
    #[error("schema violation at `{path}`: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("invalid model circuit: {}", join(.0))]
    InvalidModelCircuit(Vec<Violation>),
    #[error("invalid initial circuit: {}", join(.0))]
    InvalidInitialCircuit(Vec<Violation>),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

fn violation(path: impl Into<String>, message: impl ToString) -> ExerciseError {
    ExerciseError::SchemaViolation {
        path: path.into(),
        message: message.to_string(),
    }
}

/// How the displayed probabilities are produced, as written in YAML.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingModeName {
    Matrix,
    Sample,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointsRule {
    pub multiplier: f64,
}

impl Default for PointsRule {
    fn default() -> Self {
        PointsRule { multiplier: 1.0 }
    }
}

/// Feedback texts keyed by grading outcome. Missing texts fall back to
/// built-in defaults.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeedbackText {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_wrong: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wrong: Option<String>,
}

impl FeedbackText {
    pub fn correct(&self) -> &str {
        self.correct.as_deref().unwrap_or(DEFAULT_CORRECT)
    }

    pub fn condition_wrong(&self) -> &str {
        self.condition_wrong.as_deref().unwrap_or(DEFAULT_CONDITION_WRONG)
    }

    pub fn wrong(&self) -> &str {
        self.wrong.as_deref().unwrap_or(DEFAULT_WRONG)
    }

    fn is_empty(&self) -> bool {
        *self == FeedbackText::default()
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_true(b: &bool) -> bool {
    *b
}

fn yes() -> bool {
    true
}

fn is_default_notation(n: &QubitNotation) -> bool {
    *n == QubitNotation::Bit
}

/// Which simulator widgets are shown and how they are labelled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct UiFlags {
    pub qubit_notation: QubitNotation,
    pub show_chart: bool,
    pub show_output_bits: bool,
    pub show_shot_table: bool,
    pub hide_zero_rows: bool,
    pub feedback_show_table: bool,
    pub left_axis_label: Option<String>,
    pub middle_axis_label: Option<String>,
    pub right_axis_label: Option<String>,
}

impl Default for UiFlags {
    fn default() -> Self {
        UiFlags {
            qubit_notation: QubitNotation::Bit,
            show_chart: true,
            show_output_bits: true,
            show_shot_table: false,
            hide_zero_rows: false,
            feedback_show_table: false,
            left_axis_label: None,
            middle_axis_label: None,
            right_axis_label: None,
        }
    }
}

/// The document form of an exercise, field for field as written in YAML and
/// sent as JSON. Optional keys that are absent take their defaults when the
/// document is turned into an [`Exercise`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExerciseDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
    #[serde(default, skip_serializing_if = "is_default_notation")]
    pub qubit_notation: QubitNotation,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub show_chart: bool,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub show_output_bits: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub show_shot_table: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub hide_zero_rows: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub feedback_show_table: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_axis_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub middle_axis_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_axis_label: Option<String>,
    pub n_qubits: usize,
    pub n_moments: usize,
    #[serde(default, alias = "allowedGates", skip_serializing_if = "Option::is_none")]
    pub gates: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling_mode: Option<SamplingModeName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubits: Option<Vec<QubitSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_circuit: Option<Vec<GatePlacement>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_circuit: Option<Vec<GatePlacement>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_conditions: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_filters: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_rule: Option<PointsRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback_text: Option<FeedbackText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom_gates: Option<Vec<CustomGateDoc>>,
}

/// A condition together with the text it was written as.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelCondition {
    pub source: String,
    pub condition: Condition,
}

/// A validated exercise.
#[derive(Debug, Clone, PartialEq)]
pub struct Exercise {
    header: Option<String>,
    stem: Option<String>,
    ui: UiFlags,
    n_qubits: usize,
    n_moments: usize,
    allowed_gates: Vec<String>,
    sampling_mode: SamplingMode,
    qubits: Vec<QubitSpec>,
    initial_circuit: Vec<GatePlacement>,
    model_circuit: Vec<GatePlacement>,
    model_conditions: Vec<ModelCondition>,
    input_filters: Vec<String>,
    points_rule: PointsRule,
    feedback: FeedbackText,
    custom_gates: Vec<GateDefinition>,
    registry: GateRegistry,
}

/// A parsed exercise and the unknown keys that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

/// Parses and validates an exercise document.
pub fn parse_exercise(text: &str) -> Result<Parsed<Exercise>, ExerciseError> {
    let (doc, warnings) = deserialize_with_warnings::<ExerciseDoc>(text)?;
    let exercise = Exercise::from_doc(doc)?;
    Ok(Parsed {
        value: exercise,
        warnings,
    })
}

/// Like [`parse_exercise`] for raw bytes, which must be UTF-8.
pub fn parse_exercise_bytes(bytes: &[u8]) -> Result<Parsed<Exercise>, ExerciseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ExerciseError::MalformedYaml(e.to_string()))?;
    parse_exercise(text)
}

/// Serializes an exercise to YAML. Parsing the output yields an equal
/// exercise.
pub fn serialize_exercise(exercise: &Exercise) -> String {
    serde_yaml::to_string(&exercise.to_doc()).expect("exercise documents always serialize")
}

fn deserialize_with_warnings<T: serde::de::DeserializeOwned>(text: &str) -> Result<(T, Vec<String>), ExerciseError> {
    let mut value: serde_yaml::Value =
        serde_yaml::from_str(text).map_err(|e| ExerciseError::MalformedYaml(e.to_string()))?;
    value
        .apply_merge()
        .map_err(|e| ExerciseError::MalformedYaml(e.to_string()))?;
    if !value.is_mapping() {
        return Err(violation(".", "document must be a mapping"));
    }
    let mut warnings = Vec::new();
    let mut on_ignored = |path: serde_ignored::Path| warnings.push(format!("unknown key `{path}`"));
    let ignored = serde_ignored::Deserializer::new(value, &mut on_ignored);
    let doc = serde_path_to_error::deserialize(ignored).map_err(|e| {
        let path = e.path().to_string();
        violation(path, e.into_inner())
    })?;
    Ok((doc, warnings))
}

impl Exercise {
    /// Validates a document and fills in defaults.
    pub fn from_doc(doc: ExerciseDoc) -> Result<Exercise, ExerciseError> {
        if doc.n_qubits == 0 || doc.n_qubits > MAX_QUBITS {
            return Err(violation("nQubits", format!("must be between 1 and {MAX_QUBITS}")));
        }
        if doc.n_moments == 0 {
            return Err(violation("nMoments", "must be at least 1"));
        }

        let mut custom_gates = Vec::new();
        for (i, g) in doc.custom_gates.iter().flatten().enumerate() {
            custom_gates.push(GateDefinition::try_from(g).map_err(|e| violation(format!("customGates[{i}]"), e))?);
        }
        let registry =
            GateRegistry::with_custom(custom_gates.iter().cloned()).map_err(|e| violation("customGates", e))?;

        let allowed_gates = match doc.gates {
            Some(gates) => {
                if let Some((i, g)) = gates.iter().enumerate().find(|(_, g)| !registry.has_toolbar_item(g)) {
                    return Err(violation(format!("gates[{i}]"), format!("unknown gate `{g}`")));
                }
                gates
            }
            None => registry.toolbar().into_iter().map(str::to_owned).collect(),
        };

        let sampling_mode = match (doc.sampling_mode, doc.n_samples) {
            (None | Some(SamplingModeName::Matrix), _) => SamplingMode::Matrix,
            (Some(SamplingModeName::Manual), _) => SamplingMode::Manual,
            (Some(SamplingModeName::Sample), n) => SamplingMode::Sample(
                NonZeroU32::new(n.unwrap_or(DEFAULT_SAMPLE_SIZE))
                    .ok_or_else(|| violation("nSamples", "must be at least 1"))?,
            ),
        };

        let mut qubits = doc.qubits.unwrap_or_default();
        if qubits.len() > doc.n_qubits {
            return Err(violation(
                "qubits",
                format!("{} qubit entries for nQubits = {}", qubits.len(), doc.n_qubits),
            ));
        }
        // rows without an entry start at 0 and are editable
        qubits.resize(doc.n_qubits, QubitSpec::new(Bit::Zero));

        let grid = |placements: &[GatePlacement]| -> Result<Vec<Violation>, CircuitError> {
            Ok(Circuit::new(doc.n_qubits, doc.n_moments, qubits.clone())?
                .with_placements_unchecked(placements.to_vec())
                .validate(&registry))
        };
        let model_circuit = doc.model_circuit.unwrap_or_default();
        let problems = grid(&model_circuit).map_err(|e| violation(".", e))?;
        if !problems.is_empty() {
            return Err(ExerciseError::InvalidModelCircuit(problems));
        }
        let initial_circuit = doc.initial_circuit.unwrap_or_default();
        let problems = grid(&initial_circuit).map_err(|e| violation(".", e))?;
        if !problems.is_empty() {
            return Err(ExerciseError::InvalidInitialCircuit(problems));
        }

        let mut model_conditions = Vec::new();
        for (i, source) in doc.model_conditions.into_iter().flatten().enumerate() {
            let condition = parse_condition(&source).map_err(|e| violation(format!("modelConditions[{i}]"), e))?;
            model_conditions.push(ModelCondition { source, condition });
        }

        let input_filters = doc.input_filters.unwrap_or_default();
        for (i, pattern) in input_filters.iter().enumerate() {
            anchored_regex(pattern).map_err(|e| violation(format!("inputFilters[{i}]"), e))?;
        }

        let points_rule = doc.points_rule.unwrap_or_default();
        if !(points_rule.multiplier >= 0.0 && points_rule.multiplier.is_finite()) {
            return Err(violation("pointsRule.multiplier", "must be a finite number >= 0"));
        }

        Ok(Exercise {
            header: doc.header,
            stem: doc.stem,
            ui: UiFlags {
                qubit_notation: doc.qubit_notation,
                show_chart: doc.show_chart,
                show_output_bits: doc.show_output_bits,
                show_shot_table: doc.show_shot_table,
                hide_zero_rows: doc.hide_zero_rows,
                feedback_show_table: doc.feedback_show_table,
                left_axis_label: doc.left_axis_label,
                middle_axis_label: doc.middle_axis_label,
                right_axis_label: doc.right_axis_label,
            },
            n_qubits: doc.n_qubits,
            n_moments: doc.n_moments,
            allowed_gates,
            sampling_mode,
            qubits,
            initial_circuit,
            model_circuit,
            model_conditions,
            input_filters,
            points_rule,
            feedback: doc.feedback_text.unwrap_or_default(),
            custom_gates,
            registry,
        })
    }

    /// The full document, including the model answer.
    pub fn to_doc(&self) -> ExerciseDoc {
        let (sampling_mode, n_samples) = match self.sampling_mode {
            SamplingMode::Matrix => (SamplingModeName::Matrix, None),
            SamplingMode::Sample(n) => (SamplingModeName::Sample, Some(n.get())),
            SamplingMode::Manual => (SamplingModeName::Manual, None),
        };
        let non_empty = |v: &Vec<GatePlacement>| (!v.is_empty()).then(|| v.clone());
        ExerciseDoc {
            header: self.header.clone(),
            stem: self.stem.clone(),
            qubit_notation: self.ui.qubit_notation,
            show_chart: self.ui.show_chart,
            show_output_bits: self.ui.show_output_bits,
            show_shot_table: self.ui.show_shot_table,
            hide_zero_rows: self.ui.hide_zero_rows,
            feedback_show_table: self.ui.feedback_show_table,
            left_axis_label: self.ui.left_axis_label.clone(),
            middle_axis_label: self.ui.middle_axis_label.clone(),
            right_axis_label: self.ui.right_axis_label.clone(),
            n_qubits: self.n_qubits,
            n_moments: self.n_moments,
            gates: Some(self.allowed_gates.clone()),
            sampling_mode: Some(sampling_mode),
            n_samples,
            qubits: Some(self.qubits.clone()),
            initial_circuit: non_empty(&self.initial_circuit),
            model_circuit: non_empty(&self.model_circuit),
            model_conditions: (!self.model_conditions.is_empty())
                .then(|| self.model_conditions.iter().map(|c| c.source.clone()).collect()),
            input_filters: (!self.input_filters.is_empty()).then(|| self.input_filters.clone()),
            points_rule: Some(self.points_rule),
            feedback_text: (!self.feedback.is_empty()).then(|| self.feedback.clone()),
            custom_gates: (!self.custom_gates.is_empty())
                .then(|| self.custom_gates.iter().map(CustomGateDoc::from).collect()),
        }
    }

    /// The document a student's client receives: the model circuit and its
    /// conditions are removed.
    pub fn student_view(&self) -> ExerciseDoc {
        ExerciseDoc {
            model_circuit: None,
            model_conditions: None,
            ..self.to_doc()
        }
    }

    pub fn header(&self) -> Option<&str> {
        self.header.as_deref()
    }

    pub fn stem(&self) -> Option<&str> {
        self.stem.as_deref()
    }

    pub fn ui(&self) -> &UiFlags {
        &self.ui
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_moments(&self) -> usize {
        self.n_moments
    }

    pub fn allowed_gates(&self) -> &[String] {
        &self.allowed_gates
    }

    pub fn is_allowed(&self, item: &str) -> bool {
        self.allowed_gates.iter().any(|g| g == item)
    }

    pub fn sampling_mode(&self) -> SamplingMode {
        self.sampling_mode
    }

    pub fn qubits(&self) -> &[QubitSpec] {
        &self.qubits
    }

    /// Pre-placed placements of the student's starting grid.
    pub fn initial_placements(&self) -> &[GatePlacement] {
        &self.initial_circuit
    }

    pub fn model_placements(&self) -> &[GatePlacement] {
        &self.model_circuit
    }

    pub fn model_conditions(&self) -> &[ModelCondition] {
        &self.model_conditions
    }

    pub fn input_filters(&self) -> &[String] {
        &self.input_filters
    }

    pub fn points_rule(&self) -> PointsRule {
        self.points_rule
    }

    pub fn feedback(&self) -> &FeedbackText {
        &self.feedback
    }

    pub fn custom_gates(&self) -> &[GateDefinition] {
        &self.custom_gates
    }

    /// Standard gates plus this exercise's custom gates.
    pub fn registry(&self) -> &GateRegistry {
        &self.registry
    }

    fn grid(&self, placements: &[GatePlacement]) -> Circuit {
        Circuit::new(self.n_qubits, self.n_moments, self.qubits.clone())
            .expect("dimensions checked on construction")
            .with_placements_unchecked(placements.to_vec())
    }

    /// The model circuit on the exercise grid.
    pub fn model_circuit(&self) -> Circuit {
        self.grid(&self.model_circuit)
    }

    /// The student's starting circuit.
    pub fn initial_circuit(&self) -> Circuit {
        self.grid(&self.initial_circuit)
    }
}

/// Compiles `pattern` anchored to the whole bitstring.
pub fn anchored_regex(pattern: &str) -> Result<Regex, regex::Error> {
    Regex::new(&format!("^(?:{pattern})$"))
}

/// A standalone circuit file, as read by the command line tools and sent to
/// the simulation endpoint. Grid dimensions may be omitted when the file is
/// an attempt for a known exercise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CircuitFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_qubits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_moments: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub qubits: Vec<QubitSpec>,
    #[serde(default)]
    pub placements: Vec<GatePlacement>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub custom_gates: Vec<CustomGateDoc>,
}

impl CircuitFile {
    pub fn from_circuit(circuit: &Circuit, custom_gates: &[GateDefinition]) -> CircuitFile {
        CircuitFile {
            n_qubits: Some(circuit.n_qubits()),
            n_moments: Some(circuit.n_moments()),
            qubits: circuit.qubits().to_vec(),
            placements: circuit.placements().to_vec(),
            custom_gates: custom_gates.iter().map(CustomGateDoc::from).collect(),
        }
    }

    /// The registry this file's placements refer to.
    pub fn registry(&self) -> Result<GateRegistry, ExerciseError> {
        let mut defs = Vec::new();
        for (i, g) in self.custom_gates.iter().enumerate() {
            defs.push(GateDefinition::try_from(g).map_err(|e| violation(format!("customGates[{i}]"), e))?);
        }
        GateRegistry::with_custom(defs).map_err(|e| violation("customGates", e))
    }

    /// Builds the circuit. Structural validity is not checked here.
    pub fn to_circuit(&self) -> Result<Circuit, ExerciseError> {
        let n_qubits = self.n_qubits.ok_or_else(|| violation("nQubits", "missing"))?;
        let n_moments = self.n_moments.ok_or_else(|| violation("nMoments", "missing"))?;
        self.build(n_qubits, n_moments, None)
    }

    /// Builds the circuit as an attempt at `exercise`, taking missing grid
    /// dimensions and qubits from the exercise. Explicit dimensions are kept
    /// even if they differ, so the grader can report the mismatch.
    pub fn to_attempt(&self, exercise: &Exercise) -> Result<Circuit, ExerciseError> {
        let n_qubits = self.n_qubits.unwrap_or(exercise.n_qubits());
        let n_moments = self.n_moments.unwrap_or(exercise.n_moments());
        let fallback = (n_qubits == exercise.n_qubits()).then(|| exercise.qubits().to_vec());
        self.build(n_qubits, n_moments, fallback)
    }

    fn build(
        &self,
        n_qubits: usize,
        n_moments: usize,
        fallback: Option<Vec<QubitSpec>>,
    ) -> Result<Circuit, ExerciseError> {
        let qubits = if self.qubits.is_empty() {
            fallback.unwrap_or_else(|| vec![QubitSpec::new(Bit::Zero); n_qubits])
        } else if self.qubits.len() < n_qubits {
            let mut padded = self.qubits.clone();
            padded.resize(n_qubits, QubitSpec::new(Bit::Zero));
            padded
        } else {
            self.qubits.clone()
        };
        Circuit::new(n_qubits, n_moments, qubits)
            .map(|c| c.with_placements_unchecked(self.placements.clone()))
            .map_err(|e| match e {
                CircuitError::QubitCountMismatch { .. } => violation("qubits", e),
                CircuitError::NoMoments => violation("nMoments", e),
                _ => violation("nQubits", e),
            })
    }
}

/// Parses a circuit file.
pub fn parse_circuit_file(text: &str) -> Result<Parsed<CircuitFile>, ExerciseError> {
    let (file, warnings) = deserialize_with_warnings::<CircuitFile>(text)?;
    Ok(Parsed { value: file, warnings })
}
