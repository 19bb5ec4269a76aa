// SPDX-License-Identifier: Apache-2.0

//! Classical bitstrings over the qubit lines.
//!
//! Character `i` of a bitstring is the value of qubit row `i`, read top to
//! bottom. Row 0 is the most significant bit of the basis-state index, so
//! `"10"` is index 2.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitStringError {
    #[error("bitstring must not be empty")]
    Empty,
    #[error("invalid character {ch:?} at position {position}; only 0 and 1 are allowed")]
    InvalidChar { position: usize, ch: char },
    #[error("bitstring has {actual} bits, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("bitstrings longer than 63 bits are not supported")]
    TooLong,
}

/// A non-empty string of `0`/`1` characters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString(String);

impl BitString {
    /// Parses `text`, requiring exactly `n_qubits` bits.
    pub fn parse_for(text: &str, n_qubits: usize) -> Result<BitString, BitStringError> {
        let bits: BitString = text.parse()?;
        if bits.len() != n_qubits {
            return Err(BitStringError::LengthMismatch {
                expected: n_qubits,
                actual: bits.len(),
            });
        }
        Ok(bits)
    }

    /// The bitstring of basis index `index` over `n_qubits` lines.
    pub fn from_index(index: usize, n_qubits: usize) -> BitString {
        debug_assert!((1..64).contains(&n_qubits) && index >> n_qubits == 0);
        let s = (0..n_qubits)
            .map(|q| if index >> (n_qubits - 1 - q) & 1 == 1 { '1' } else { '0' })
            .collect();
        BitString(s)
    }

    /// All-zero bitstring of length `n_qubits`.
    pub fn zeros(n_qubits: usize) -> BitString {
        BitString("0".repeat(n_qubits))
    }

    /// Basis-state index, row 0 most significant.
    pub fn index(&self) -> usize {
        self.0
            .bytes()
            .fold(0usize, |acc, b| (acc << 1) | usize::from(b == b'1'))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, qubit: usize) -> bool {
        self.0.as_bytes()[qubit] == b'1'
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Flips the bit of `qubit`.
    pub fn flipped(&self, qubit: usize) -> BitString {
        let mut bytes = self.0.clone().into_bytes();
        bytes[qubit] = if bytes[qubit] == b'1' { b'0' } else { b'1' };
        BitString(String::from_utf8(bytes).expect("ascii"))
    }
}

impl FromStr for BitString {
    type Err = BitStringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(BitStringError::Empty);
        }
        if let Some((position, ch)) = s.chars().enumerate().find(|(_, c)| *c != '0' && *c != '1') {
            return Err(BitStringError::InvalidChar { position, ch });
        }
        if s.len() > 63 {
            return Err(BitStringError::TooLong);
        }
        Ok(BitString(s.to_owned()))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
