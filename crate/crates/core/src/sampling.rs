// SPDX-License-Identifier: Apache-2.0

//! Output distributions, shot sampling and measurement records.
//!
//! Shots are drawn with [`ShotRng`], a ChaCha8 stream seeded through
//! `SeedableRng::seed_from_u64`. Each draw takes one `u64` from the stream and
//! keeps its top 53 bits as a uniform value in `[0, 1)`, which is then located
//! in the cumulative distribution. The procedure uses no platform-dependent
//! arithmetic, so golden values stay stable across machines.

use std::collections::BTreeMap;
use std::num::NonZeroU32;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::bits::BitString;

/// Allowed deviation of the probability sum from 1.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
}

/// Probabilities over the `2^n` basis states, indexed like the statevector.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    n_qubits: usize,
    probabilities: Vec<f64>,
}

/// One exported probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityRow {
    pub bitstring: String,
    pub p: f64,
}

impl Distribution {
    /// Checks length, non-negativity and normalization.
    pub fn new(probabilities: Vec<f64>) -> Result<Distribution, SampleError> {
        let len = probabilities.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(SampleError::InvalidDistribution(format!(
                "length {len} is not 2^n for n >= 1"
            )));
        }
        if let Some(p) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(SampleError::InvalidDistribution(format!(
                "entry {p} is not a probability"
            )));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(SampleError::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(Distribution {
            n_qubits: len.trailing_zeros() as usize,
            probabilities,
        })
    }

    /// Builds a distribution from a keyed map such as `{"00": 0.5, "11": 0.5}`.
    /// Missing keys are zero.
    pub fn from_map<'a, I>(n_qubits: usize, entries: I) -> Result<Distribution, SampleError>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut probabilities = vec![0.0; 1usize << n_qubits];
        for (key, p) in entries {
            let bits =
                BitString::parse_for(key, n_qubits).map_err(|e| SampleError::InvalidDistribution(e.to_string()))?;
            probabilities[bits.index()] = p;
        }
        Distribution::new(probabilities)
    }

    pub(crate) fn from_state_unchecked(n_qubits: usize, probabilities: Vec<f64>) -> Distribution {
        Distribution {
            n_qubits,
            probabilities,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, bits: &BitString) -> f64 {
        self.probabilities[bits.index()]
    }

    /// `max_i |p_i - q_i|`; infinite when the lengths differ.
    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        if self.probabilities.len() != other.probabilities.len() {
            return f64::INFINITY;
        }
        self.probabilities
            .iter()
            .zip(&other.probabilities)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `(bitstring, p)` for every basis state, in index order.
    pub fn export_rows(&self) -> Vec<ProbabilityRow> {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, &p)| ProbabilityRow {
                bitstring: BitString::from_index(i, self.n_qubits).to_string(),
                p,
            })
            .collect()
    }
}

impl Serialize for Distribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.probabilities.len()))?;
        for row in self.export_rows() {
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

/// Seeded generator used for all shot sampling.
#[derive(Debug, Clone)]
pub struct ShotRng(ChaCha8Rng);

impl ShotRng {
    pub fn from_seed(seed: u64) -> ShotRng {
        ShotRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform value in `[0, 1)` with 53 bits of precision.
    pub fn next_unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Draws a basis index from `dist`.
    pub fn draw(&mut self, dist: &Distribution) -> usize {
        draw_index(dist.probabilities(), self.next_unit())
    }
}

fn draw_index(probabilities: &[f64], unit: f64) -> usize {
    let total: f64 = probabilities.iter().sum();
    let target = unit * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in probabilities.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_nonzero = i;
            if target < acc {
                return i;
            }
        }
    }
    // rounding left `target` just past the final partial sum
    last_nonzero
}

/// Histogram of sampled outcomes. Outcomes never drawn are absent.
pub type Histogram = BTreeMap<BitString, u64>;

/// Draws `shots` samples from `dist` with a fresh generator seeded by `seed`.
pub fn sample(dist: &Distribution, shots: u32, seed: u64) -> Result<Histogram, SampleError> {
    if shots == 0 {
        return Err(SampleError::ZeroShots);
    }
    Distribution::new(dist.probabilities.clone())?;
    let mut counts = vec![0u64; dist.probabilities.len()];
    let mut rng = ShotRng::from_seed(seed);
    for _ in 0..shots {
        counts[rng.draw(dist)] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(i, c)| (BitString::from_index(i, dist.n_qubits), c))
        .collect())
}

/// One row of the shot table: which input produced which measured output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    /// 1-based measurement number.
    pub index: u32,
    pub input: BitString,
    pub output: BitString,
}

/// A running sequence of user-triggered measurements.
#[derive(Debug, Clone)]
pub struct ShotSession {
    rng: ShotRng,
    next_index: u32,
}

impl ShotSession {
    pub fn new(seed: u64) -> ShotSession {
        ShotSession {
            rng: ShotRng::from_seed(seed),
            next_index: 1,
        }
    }

    /// Measures all qubits once.
    pub fn measure_shot(&mut self, dist: &Distribution, input: &BitString) -> ShotRecord {
        let output = BitString::from_index(self.rng.draw(dist), dist.n_qubits);
        let record = ShotRecord {
            index: self.next_index,
            input: input.clone(),
            output,
        };
        self.next_index += 1;
        record
    }
}

/// How displayed probabilities are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    /// Exact probabilities from the final state.
    #[default]
    Matrix,
    /// Frequencies from an automatic sample of the given size.
    Sample(NonZeroU32),
    /// Frequencies of the measurements the user has made.
    Manual,
}

/// Probabilities to display under `mode`. `Sample` draws with `seed`;
/// `Manual` uses the outputs in `shots` (all zeros when there are none).
pub fn displayed_probabilities(dist: &Distribution, mode: SamplingMode, seed: u64, shots: &[ShotRecord]) -> Vec<f64> {
    match mode {
        SamplingMode::Matrix => dist.probabilities.clone(),
        SamplingMode::Sample(n) => {
            let hist = sample(dist, n.get(), seed).expect("shot count is non-zero");
            frequencies(
                dist.n_qubits,
                hist.iter().map(|(b, &c)| (b.index(), c)),
                u64::from(n.get()),
            )
        }
        SamplingMode::Manual => frequencies(
            dist.n_qubits,
            shots.iter().map(|s| (s.output.index(), 1)),
            shots.len() as u64,
        ),
    }
}

fn frequencies(n_qubits: usize, counts: impl Iterator<Item = (usize, u64)>, total: u64) -> Vec<f64> {
    let mut out = vec![0.0; 1usize << n_qubits];
    if total == 0 {
        return out;
    }
    for (i, c) in counts {
        out[i] += c as f64;
    }
    out.iter_mut().for_each(|f| *f /= total as f64);
    out
}
