// SPDX-License-Identifier: Apache-2.0

//! Circuits as fixed-size grids of gate placements.
//!
//! A circuit has `n_qubits` rows (row 0 is the top wire) and `n_moments`
//! columns (column 0 is the leftmost step). Every placement sits in a single
//! column and occupies the cells of its target span, its control and
//! anti-control dots and, for SWAP, its partner line. No two placements may
//! share a cell.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gates::{GateRegistry, SWAP};

/// Upper bound on circuit width; a statevector of this size is 16 GiB.
pub const MAX_QUBITS: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("a circuit needs at least one qubit")]
    NoQubits,
    #[error("a circuit needs at least one moment")]
    NoMoments,
    #[error("{0} qubits exceeds the supported maximum of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("expected {expected} qubit specs, got {actual}")]
    QubitCountMismatch { expected: usize, actual: usize },
    #[error("circuit is invalid: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// Reasons a single placement can be rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum PlacementError {
    #[error("unknown gate `{name}`")]
    UnknownGate { name: String },
    #[error("{what} {index} is outside the {limit}-{unit} grid")]
    OutOfBounds {
        what: &'static str,
        index: usize,
        limit: usize,
        unit: &'static str,
    },
    #[error("cell (qubit {qubit}, time {time}) is already occupied")]
    CellOccupied { qubit: usize, time: usize },
    #[error("gate `{name}` cannot act on a non-adjacent partner line; only SWAP takes a swapPartner")]
    NonAdjacentMultiQubit { name: String },
    #[error("SWAP needs a swapPartner")]
    MissingSwapPartner,
    #[error("qubit {qubit} is used both as a control and as a gate line")]
    ControlOverlapsTarget { qubit: usize },
    #[error("qubit {qubit} is both a control and an anti-control")]
    ControlConflict { qubit: usize },
    #[error("no placement occupies cell (qubit {qubit}, time {time})")]
    EmptyCell { qubit: usize, time: usize },
    #[error("the placement at (qubit {qubit}, time {time}) is locked")]
    Locked { qubit: usize, time: usize },
}

/// A structural problem found by [`Circuit::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Index of the offending placement in [`Circuit::placements`].
    pub placement: usize,
    pub error: PlacementError,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "placement {}: {}", self.placement, self.error)
    }
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

/// One gate in one column, with its control dots.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GatePlacement {
    pub name: String,
    pub time: usize,
    pub target: usize,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub controls: BTreeSet<usize>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub anti_controls: BTreeSet<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swap_partner: Option<usize>,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub editable: bool,
}

impl GatePlacement {
    pub fn new(name: impl Into<String>, target: usize, time: usize) -> GatePlacement {
        GatePlacement {
            name: name.into(),
            time,
            target,
            controls: BTreeSet::new(),
            anti_controls: BTreeSet::new(),
            swap_partner: None,
            editable: true,
        }
    }

    pub fn swap(a: usize, b: usize, time: usize) -> GatePlacement {
        GatePlacement {
            swap_partner: Some(b),
            ..GatePlacement::new(SWAP, a, time)
        }
    }

    pub fn with_controls(mut self, controls: impl IntoIterator<Item = usize>) -> Self {
        self.controls.extend(controls);
        self
    }

    pub fn with_anti_controls(mut self, anti: impl IntoIterator<Item = usize>) -> Self {
        self.anti_controls.extend(anti);
        self
    }

    pub fn locked(mut self) -> Self {
        self.editable = false;
        self
    }

    pub fn is_swap(&self) -> bool {
        self.name == SWAP
    }

    /// Controls plus anti-controls.
    pub fn control_count(&self) -> usize {
        self.controls.len() + self.anti_controls.len()
    }

    /// Rows covered by the gate body: `target..target + span` plus the swap
    /// partner.
    pub fn body_rows(&self, span: usize) -> impl Iterator<Item = usize> + '_ {
        (self.target..self.target + span).chain(self.swap_partner)
    }

    /// Every row this placement occupies in its column.
    pub fn rows(&self, span: usize) -> impl Iterator<Item = usize> + '_ {
        self.body_rows(span)
            .chain(self.controls.iter().copied())
            .chain(self.anti_controls.iter().copied())
    }

    /// Checks this placement in isolation against grid bounds and the
    /// registry.
    fn check(&self, n_qubits: usize, n_moments: usize, registry: &GateRegistry) -> Vec<PlacementError> {
        let mut errors = Vec::new();
        let span = match registry.span(&self.name) {
            Some(span) => span,
            None => {
                errors.push(PlacementError::UnknownGate {
                    name: self.name.clone(),
                });
                1
            }
        };
        if self.time >= n_moments {
            errors.push(out_of_bounds("time", self.time, n_moments, "moment"));
        }
        if self.target + span > n_qubits {
            errors.push(out_of_bounds(
                "target span end",
                self.target + span - 1,
                n_qubits,
                "qubit",
            ));
        }
        for &q in self
            .controls
            .iter()
            .chain(&self.anti_controls)
            .chain(&self.swap_partner)
        {
            if q >= n_qubits {
                errors.push(out_of_bounds("qubit", q, n_qubits, "qubit"));
            }
        }
        match (self.is_swap(), self.swap_partner) {
            (true, None) => errors.push(PlacementError::MissingSwapPartner),
            (false, Some(_)) => errors.push(PlacementError::NonAdjacentMultiQubit {
                name: self.name.clone(),
            }),
            _ => {}
        }
        let body: BTreeSet<usize> = (self.target..self.target + span).collect();
        if let Some(p) = self.swap_partner {
            if body.contains(&p) {
                errors.push(PlacementError::ControlOverlapsTarget { qubit: p });
            }
        }
        let body: BTreeSet<usize> = self.body_rows(span).collect();
        for &q in self.controls.iter().chain(&self.anti_controls) {
            if body.contains(&q) {
                errors.push(PlacementError::ControlOverlapsTarget { qubit: q });
            }
        }
        for &q in self.controls.intersection(&self.anti_controls) {
            errors.push(PlacementError::ControlConflict { qubit: q });
        }
        errors
    }
}

fn out_of_bounds(what: &'static str, index: usize, limit: usize, unit: &'static str) -> PlacementError {
    PlacementError::OutOfBounds {
        what,
        index,
        limit,
        unit,
    }
}

/// Display notation for an input qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitNotation {
    #[default]
    Bit,
    Braket,
}

/// Initial classical value of an input qubit. Serialized as the integer 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum Bit {
    #[default]
    Zero,
    One,
}

impl Bit {
    pub fn as_u8(self) -> u8 {
        match self {
            Bit::Zero => 0,
            Bit::One => 1,
        }
    }
}

impl Serialize for Bit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Bit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match u64::deserialize(d)? {
            0 => Ok(Bit::Zero),
            1 => Ok(Bit::One),
            other => Err(serde::de::Error::custom(format!(
                "qubit value must be 0 or 1, got {other}"
            ))),
        }
    }
}

/// An input qubit row: its label, initial value and whether the student may
/// toggle it.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QubitSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub value: Bit,
    #[serde(default = "yes")]
    pub editable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notation: Option<QubitNotation>,
}

impl QubitSpec {
    pub fn new(value: Bit) -> QubitSpec {
        QubitSpec {
            value,
            editable: true,
            ..QubitSpec::default()
        }
    }

    pub fn locked(value: Bit) -> QubitSpec {
        QubitSpec {
            editable: false,
            ..QubitSpec::new(value)
        }
    }

    /// Display label; defaults to `q[i]`.
    pub fn label(&self, row: usize) -> String {
        self.name.clone().unwrap_or_else(|| format!("q[{row}]"))
    }
}

/// A fixed-size circuit grid with its placements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CircuitDoc", into = "CircuitDoc")]
pub struct Circuit {
    n_qubits: usize,
    n_moments: usize,
    qubits: Vec<QubitSpec>,
    placements: Vec<GatePlacement>,
}

impl Circuit {
    /// An empty circuit. `qubits` must have one entry per row.
    pub fn new(n_qubits: usize, n_moments: usize, qubits: Vec<QubitSpec>) -> Result<Circuit, CircuitError> {
        if n_qubits == 0 {
            return Err(CircuitError::NoQubits);
        }
        if n_moments == 0 {
            return Err(CircuitError::NoMoments);
        }
        if n_qubits > MAX_QUBITS {
            return Err(CircuitError::TooManyQubits(n_qubits));
        }
        if qubits.len() != n_qubits {
            return Err(CircuitError::QubitCountMismatch {
                expected: n_qubits,
                actual: qubits.len(),
            });
        }
        Ok(Circuit {
            n_qubits,
            n_moments,
            qubits,
            placements: Vec::new(),
        })
    }

    /// An empty circuit whose qubits all start at 0 and are editable.
    pub fn blank(n_qubits: usize, n_moments: usize) -> Result<Circuit, CircuitError> {
        Circuit::new(n_qubits, n_moments, vec![QubitSpec::new(Bit::Zero); n_qubits])
    }

    /// Builds a circuit from placements and checks it against `registry`.
    pub fn from_placements(
        n_qubits: usize,
        n_moments: usize,
        qubits: Vec<QubitSpec>,
        placements: Vec<GatePlacement>,
        registry: &GateRegistry,
    ) -> Result<Circuit, CircuitError> {
        let circuit = Circuit::new(n_qubits, n_moments, qubits)?.with_placements_unchecked(placements);
        let violations = circuit.validate(registry);
        if violations.is_empty() {
            Ok(circuit)
        } else {
            Err(CircuitError::Invalid(violations))
        }
    }

    /// Replaces the placement list without checking it. Use
    /// [`Circuit::validate`] before simulating.
    pub fn with_placements_unchecked(mut self, placements: Vec<GatePlacement>) -> Circuit {
        self.placements = placements;
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_moments(&self) -> usize {
        self.n_moments
    }

    pub fn qubits(&self) -> &[QubitSpec] {
        &self.qubits
    }

    pub fn placements(&self) -> &[GatePlacement] {
        &self.placements
    }

    /// The configured input bits as a bitstring.
    pub fn default_input(&self) -> crate::BitString {
        let s: String = self
            .qubits
            .iter()
            .map(|q| if q.value == Bit::One { '1' } else { '0' })
            .collect();
        s.parse().expect("non-empty 0/1 string")
    }

    /// Placements in simulation order: by time, then by target row.
    pub fn placements_in_time_order(&self) -> Vec<&GatePlacement> {
        let mut ordered: Vec<&GatePlacement> = self.placements.iter().collect();
        ordered.sort_by_key(|p| (p.time, p.target));
        ordered
    }

    /// Returns a new circuit with `placement` added.
    pub fn place_gate(&self, placement: GatePlacement, registry: &GateRegistry) -> Result<Circuit, PlacementError> {
        if let Some(err) = placement
            .check(self.n_qubits, self.n_moments, registry)
            .into_iter()
            .next()
        {
            return Err(err);
        }
        let occupancy = self.occupancy(registry);
        let span = registry.span(&placement.name).unwrap_or(1);
        if let Some(qubit) = placement
            .rows(span)
            .find(|&q| occupancy.contains_key(&(q, placement.time)))
        {
            return Err(PlacementError::CellOccupied {
                qubit,
                time: placement.time,
            });
        }
        let mut next = self.clone();
        next.placements.push(placement);
        Ok(next)
    }

    /// Returns a new circuit without the placement occupying
    /// `(qubit, time)`, including all of its control dots.
    pub fn remove_gate(&self, qubit: usize, time: usize, registry: &GateRegistry) -> Result<Circuit, PlacementError> {
        let index = self
            .placement_at(qubit, time, registry)
            .ok_or(PlacementError::EmptyCell { qubit, time })?;
        if !self.placements[index].editable {
            return Err(PlacementError::Locked { qubit, time });
        }
        let mut next = self.clone();
        next.placements.remove(index);
        Ok(next)
    }

    /// Index of the placement occupying `(qubit, time)`, if any.
    pub fn placement_at(&self, qubit: usize, time: usize, registry: &GateRegistry) -> Option<usize> {
        self.placements
            .iter()
            .position(|p| p.time == time && p.rows(registry.span(&p.name).unwrap_or(1)).any(|q| q == qubit))
    }

    fn occupancy(&self, registry: &GateRegistry) -> HashMap<(usize, usize), usize> {
        let mut cells = HashMap::new();
        for (i, p) in self.placements.iter().enumerate() {
            let span = registry.span(&p.name).unwrap_or(1);
            for q in p.rows(span) {
                cells.entry((q, p.time)).or_insert(i);
            }
        }
        cells
    }

    /// All structural violations; empty iff the circuit is well formed.
    pub fn validate(&self, registry: &GateRegistry) -> Vec<Violation> {
        let mut violations = Vec::new();
        let mut cells: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, p) in self.placements.iter().enumerate() {
            violations.extend(
                p.check(self.n_qubits, self.n_moments, registry)
                    .into_iter()
                    .map(|error| Violation { placement: i, error }),
            );
            let span = registry.span(&p.name).unwrap_or(1);
            // a placement repeating its own row is reported by `check`
            let rows: BTreeSet<usize> = p.rows(span).collect();
            for q in rows {
                if let Some(_other) = cells.insert((q, p.time), i) {
                    violations.push(Violation {
                        placement: i,
                        error: PlacementError::CellOccupied { qubit: q, time: p.time },
                    });
                }
            }
        }
        violations
    }
}

/// Serialized circuit: grid size, optional input qubits, placements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CircuitDoc {
    pub n_qubits: usize,
    pub n_moments: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub qubits: Vec<QubitSpec>,
    #[serde(default)]
    pub placements: Vec<GatePlacement>,
}

impl TryFrom<CircuitDoc> for Circuit {
    type Error = CircuitError;

    fn try_from(doc: CircuitDoc) -> Result<Self, Self::Error> {
        let qubits = if doc.qubits.is_empty() {
            vec![QubitSpec::new(Bit::Zero); doc.n_qubits]
        } else {
            doc.qubits
        };
        Ok(Circuit::new(doc.n_qubits, doc.n_moments, qubits)?.with_placements_unchecked(doc.placements))
    }
}

impl From<Circuit> for CircuitDoc {
    fn from(c: Circuit) -> Self {
        CircuitDoc {
            n_qubits: c.n_qubits,
            n_moments: c.n_moments,
            qubits: c.qubits,
            placements: c.placements,
        }
    }
}
