// SPDX-License-Identifier: Apache-2.0

//! Gate definitions and the gate registry.
//!
//! A [`GateDefinition`] is a named unitary acting on `arity` adjacent qubit
//! lines. Matrices are stored row-major with the topmost covered line as the
//! most significant bit of the local index, which matches the global bit
//! order used by the simulator (row 0 is the most significant bit).
//!
//! The registry holds gate definitions in toolbar order. `SWAP` and the two
//! control dots are toolbar items too, but they are not matrices: SWAP is a
//! placement with a partner line and the dots are attributes of a placement.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Placement name of the swap gate.
pub const SWAP: &str = "SWAP";
/// Toolbar name of the control dot.
pub const CONTROL: &str = "control";
/// Toolbar name of the anti-control dot.
pub const ANTI_CONTROL: &str = "antiControl";

/// Maximum deviation of `U†U` from the identity (L∞ over entries).
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

const MAX_ARITY: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GateError {
    #[error("gate name must not be empty")]
    EmptyName,
    #[error("gate name `{0}` is reserved")]
    ReservedName(String),
    #[error("gate `{0}` must act on at least one qubit")]
    ZeroArity(String),
    #[error("gate `{name}` acts on {arity} qubits; at most {MAX_ARITY} are supported")]
    ArityTooLarge { name: String, arity: usize },
    #[error("gate `{name}`: matrix must be {expected}x{expected}, got {rows} rows")]
    DimensionMismatch { name: String, expected: usize, rows: usize },
    #[error("gate `{name}`: matrix dimension {dim} is not a power of two")]
    NotPowerOfTwo { name: String, dim: usize },
    #[error("gate `{name}` is not unitary (max |U†U - I| = {deviation:e})")]
    NotUnitary { name: String, deviation: f64 },
    #[error("duplicate gate name `{0}`")]
    Duplicate(String),
}

/// A square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl GateMatrix {
    /// Builds a matrix from rows. All rows must have the same length as the
    /// number of rows.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Option<GateMatrix> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return None;
        }
        Some(GateMatrix {
            dim,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    fn from_real(dim: usize, entries: &[f64]) -> GateMatrix {
        GateMatrix {
            dim,
            entries: entries.iter().map(|&re| Complex64::new(re, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.entries.chunks(self.dim)
    }

    /// `max |(U†U - I)_ij|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.get(k, i).conj() * self.get(k, j);
                }
                if i == j {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    /// Whether the matrix is diagonal (ignoring entries below `1e-15`).
    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.get(i, j).norm() < 1e-15))
    }
}

/// A named unitary acting on `arity` adjacent qubit lines.
#[derive(Debug, Clone, PartialEq)]
pub struct GateDefinition {
    name: String,
    arity: usize,
    matrix: GateMatrix,
}

impl GateDefinition {
    /// Creates a definition, checking name, dimension and unitarity.
    pub fn new(name: impl Into<String>, matrix: GateMatrix) -> Result<GateDefinition, GateError> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(GateError::EmptyName);
        }
        if is_reserved(&name) {
            return Err(GateError::ReservedName(name));
        }
        let dim = matrix.dim();
        if !dim.is_power_of_two() {
            return Err(GateError::NotPowerOfTwo { name, dim });
        }
        let arity = dim.trailing_zeros() as usize;
        if arity == 0 {
            return Err(GateError::ZeroArity(name));
        }
        if arity > MAX_ARITY {
            return Err(GateError::ArityTooLarge { name, arity });
        }
        let deviation = matrix.unitarity_deviation();
        if deviation.is_nan() || deviation > UNITARITY_TOLERANCE {
            return Err(GateError::NotUnitary { name, deviation });
        }
        Ok(GateDefinition { name, arity, matrix })
    }

    /// Creates a definition from rows of `(re, im)` pairs, the form used in
    /// exercise files.
    pub fn from_pairs(name: impl Into<String>, rows: &[Vec<[f64; 2]>]) -> Result<Self, GateError> {
        let name = name.into();
        let expected = rows.len();
        let converted: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
            .collect();
        let matrix = GateMatrix::from_rows(converted).ok_or_else(|| GateError::DimensionMismatch {
            name: name.clone(),
            expected,
            rows: rows.iter().map(Vec::len).find(|&l| l != expected).unwrap_or(0),
        })?;
        GateDefinition::new(name, matrix)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn matrix(&self) -> &GateMatrix {
        &self.matrix
    }

    /// Rows of `(re, im)` pairs.
    pub fn to_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        self.matrix
            .rows()
            .map(|r| r.iter().map(|c| [c.re, c.im]).collect())
            .collect()
    }
}

fn is_reserved(name: &str) -> bool {
    name == SWAP || name == CONTROL || name == ANTI_CONTROL
}

/// The serialized form of a custom gate: a name and rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomGateDoc {
    pub name: String,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl TryFrom<&CustomGateDoc> for GateDefinition {
    type Error = GateError;

    fn try_from(doc: &CustomGateDoc) -> Result<Self, GateError> {
        GateDefinition::from_pairs(doc.name.clone(), &doc.matrix)
    }
}

impl From<&GateDefinition> for CustomGateDoc {
    fn from(def: &GateDefinition) -> Self {
        CustomGateDoc {
            name: def.name.clone(),
            matrix: def.to_pairs(),
        }
    }
}

/// Ordered collection of gate definitions, in toolbar order.
#[derive(Debug, Clone, PartialEq)]
pub struct GateRegistry {
    definitions: Vec<GateDefinition>,
}

impl Default for GateRegistry {
    fn default() -> Self {
        GateRegistry::standard()
    }
}

impl GateRegistry {
    /// A registry with no gates at all. SWAP is still placeable.
    pub fn empty() -> GateRegistry {
        GateRegistry {
            definitions: Vec::new(),
        }
    }

    /// The default toolbar: X, Y, Z, H, S, T and SX.
    pub fn standard() -> GateRegistry {
        let h = FRAC_1_SQRT_2;
        let c = Complex64::new;
        let defs = vec![
            ("X", GateMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0])),
            (
                "Y",
                GateMatrix {
                    dim: 2,
                    entries: vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
                },
            ),
            ("Z", GateMatrix::from_real(2, &[1.0, 0.0, 0.0, -1.0])),
            ("H", GateMatrix::from_real(2, &[h, h, h, -h])),
            (
                "S",
                GateMatrix {
                    dim: 2,
                    entries: vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)],
                },
            ),
            (
                "T",
                GateMatrix {
                    dim: 2,
                    entries: vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, h)],
                },
            ),
            (
                "SX",
                GateMatrix {
                    dim: 2,
                    entries: vec![c(0.5, 0.5), c(0.5, -0.5), c(0.5, -0.5), c(0.5, 0.5)],
                },
            ),
        ];
        GateRegistry {
            definitions: defs
                .into_iter()
                .map(|(name, matrix)| GateDefinition::new(name, matrix).expect("standard gate"))
                .collect(),
        }
    }

    /// Appends a definition. Names must be unique.
    pub fn register(&mut self, def: GateDefinition) -> Result<(), GateError> {
        if self.get(def.name()).is_some() {
            return Err(GateError::Duplicate(def.name().to_owned()));
        }
        self.definitions.push(def);
        Ok(())
    }

    /// The standard registry extended with `custom` gates.
    pub fn with_custom<I>(custom: I) -> Result<GateRegistry, GateError>
    where
        I: IntoIterator<Item = GateDefinition>,
    {
        let mut registry = GateRegistry::standard();
        for def in custom {
            registry.register(def)?;
        }
        Ok(registry)
    }

    pub fn get(&self, name: &str) -> Option<&GateDefinition> {
        self.definitions.iter().find(|d| d.name == name)
    }

    /// Whether `name` can be used as a placement name (a definition or SWAP).
    pub fn is_placeable(&self, name: &str) -> bool {
        name == SWAP || self.get(name).is_some()
    }

    /// Number of lines a placement with this name covers starting at its
    /// target. SWAP covers one line plus its partner.
    pub fn span(&self, name: &str) -> Option<usize> {
        if name == SWAP {
            Some(1)
        } else {
            self.get(name).map(GateDefinition::arity)
        }
    }

    pub fn definitions(&self) -> &[GateDefinition] {
        &self.definitions
    }

    /// All toolbar items: definitions, then SWAP and the two control dots.
    pub fn toolbar(&self) -> Vec<&str> {
        self.definitions
            .iter()
            .map(GateDefinition::name)
            .chain([SWAP, CONTROL, ANTI_CONTROL])
            .collect()
    }

    /// Whether `name` is a toolbar item of this registry.
    pub fn has_toolbar_item(&self, name: &str) -> bool {
        is_reserved(name) || self.get(name).is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_gates_are_unitary() {
        let reg = GateRegistry::standard();
        assert_eq!(
            reg.definitions().iter().map(|d| d.name()).collect::<Vec<_>>(),
            ["X", "Y", "Z", "H", "S", "T", "SX"]
        );
        for def in reg.definitions() {
            assert!(
                def.matrix().unitarity_deviation() <= UNITARITY_TOLERANCE,
                "{}",
                def.name()
            );
            assert_eq!(def.arity(), 1);
        }
    }

    #[test]
    fn toolbar_lists_swap_and_dots_last() {
        let reg = GateRegistry::standard();
        let bar = reg.toolbar();
        assert_eq!(&bar[bar.len() - 3..], [SWAP, CONTROL, ANTI_CONTROL]);
        assert!(reg.has_toolbar_item("control"));
        assert!(!reg.has_toolbar_item("Q"));
    }

    #[test]
    fn rejects_non_unitary() {
        let err =
            GateDefinition::from_pairs("B", &[vec![[1.0, 0.0], [1.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]]).unwrap_err();
        assert!(matches!(err, GateError::NotUnitary { .. }));
    }

    #[test]
    fn rejects_bad_shapes_and_names() {
        let id3 = vec![vec![[1.0, 0.0]; 3]; 3];
        assert!(matches!(
            GateDefinition::from_pairs("U", &id3),
            Err(GateError::NotPowerOfTwo { dim: 3, .. })
        ));
        let ragged = vec![vec![[1.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]];
        assert!(matches!(
            GateDefinition::from_pairs("U", &ragged),
            Err(GateError::DimensionMismatch { .. })
        ));
        let one = vec![vec![[1.0, 0.0]]];
        assert!(matches!(
            GateDefinition::from_pairs("U", &one),
            Err(GateError::ZeroArity(_))
        ));
        let id2 = vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]];
        assert_eq!(GateDefinition::from_pairs("", &id2), Err(GateError::EmptyName));
        assert!(matches!(
            GateDefinition::from_pairs("SWAP", &id2),
            Err(GateError::ReservedName(_))
        ));
    }

    #[test]
    fn duplicate_names_rejected() {
        let id2 = vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]];
        let x_again = GateDefinition::from_pairs("X", &id2).unwrap();
        assert_eq!(
            GateRegistry::with_custom([x_again]),
            Err(GateError::Duplicate("X".into()))
        );
    }

    #[test]
    fn two_qubit_custom_gate_has_arity_two() {
        let mut rows = vec![vec![[0.0, 0.0]; 4]; 4];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = [1.0, 0.0];
        }
        let def = GateDefinition::from_pairs("I2", &rows).unwrap();
        assert_eq!(def.arity(), 2);
        assert_eq!(def.to_pairs(), rows);
    }
}
