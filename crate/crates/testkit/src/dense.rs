// SPDX-License-Identifier: Apache-2.0

//! Dense-matrix circuit evaluation.
//!
//! A placement with body `U` on rows `t..t+k` and control projector `P`
//! (a tensor product of `|1><1|`, `|0><0|` and `I`) is the operator
//! `(I - P) + P (I_{2^t} (x) U (x) I_{2^(n-t-k)})`. SWAP is built from three
//! CNOTs. Standard gate matrices are written out here rather than taken from
//! the library registry.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use qlearn_core::{BitString, Circuit, GatePlacement, GateRegistry};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl Dense {
    pub fn identity(dim: usize) -> Dense {
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = ONE;
        }
        Dense { dim, data }
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Dense {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim));
        Dense {
            dim,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    /// `self (x) other`, with `self` on the more significant bits.
    pub fn kron(&self, other: &Dense) -> Dense {
        let dim = self.dim * other.dim;
        let mut data = vec![ZERO; dim * dim];
        for r1 in 0..self.dim {
            for c1 in 0..self.dim {
                let a = self.at(r1, c1);
                if a == ZERO {
                    continue;
                }
                for r2 in 0..other.dim {
                    for c2 in 0..other.dim {
                        data[(r1 * other.dim + r2) * dim + c1 * other.dim + c2] = a * other.at(r2, c2);
                    }
                }
            }
        }
        Dense { dim, data }
    }

    pub fn mul(&self, other: &Dense) -> Dense {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.at(r, k);
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    data[r * n + c] += a * other.at(k, c);
                }
            }
        }
        Dense { dim: n, data }
    }

    pub fn add(&self, other: &Dense) -> Dense {
        assert_eq!(self.dim, other.dim);
        Dense {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Dense) -> Dense {
        assert_eq!(self.dim, other.dim);
        Dense {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| (0..self.dim).map(|c| self.at(r, c) * v[c]).sum())
            .collect()
    }

    /// Largest entry of `|U^dagger U - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                let s: Complex64 = (0..n).map(|k| self.at(k, r).conj() * self.at(k, c)).sum();
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Hand-written matrices of the standard toolbar gates.
pub fn standard_matrix(name: &str) -> Option<Dense> {
    let h = FRAC_1_SQRT_2;
    let m = match name {
        "X" => Dense::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]),
        "Y" => Dense::from_rows(&[&[ZERO, c(0.0, -1.0)], &[c(0.0, 1.0), ZERO]]),
        "Z" => Dense::from_rows(&[&[ONE, ZERO], &[ZERO, c(-1.0, 0.0)]]),
        "H" => Dense::from_rows(&[&[c(h, 0.0), c(h, 0.0)], &[c(h, 0.0), c(-h, 0.0)]]),
        "S" => Dense::from_rows(&[&[ONE, ZERO], &[ZERO, c(0.0, 1.0)]]),
        "T" => Dense::from_rows(&[&[ONE, ZERO], &[ZERO, c(h, h)]]),
        "SX" => Dense::from_rows(&[&[c(0.5, 0.5), c(0.5, -0.5)], &[c(0.5, -0.5), c(0.5, 0.5)]]),
        _ => return None,
    };
    Some(m)
}

fn projector(bit: bool) -> Dense {
    if bit {
        Dense::from_rows(&[&[ZERO, ZERO], &[ZERO, ONE]])
    } else {
        Dense::from_rows(&[&[ONE, ZERO], &[ZERO, ZERO]])
    }
}

/// Tensor product of one 2x2 factor per qubit, qubit 0 first.
fn tensor(factors: Vec<Dense>) -> Dense {
    factors
        .into_iter()
        .reduce(|acc, f| acc.kron(&f))
        .expect("at least one qubit")
}

/// `I_{2^lo} (x) u (x) I_{2^hi}` placing `u` on rows `target..`.
fn embed(u: &Dense, target: usize, n: usize) -> Dense {
    let arity = u.dim.trailing_zeros() as usize;
    assert!(target + arity <= n, "gate does not fit");
    Dense::identity(1 << target)
        .kron(u)
        .kron(&Dense::identity(1 << (n - target - arity)))
}

fn cnot(control: usize, target: usize, n: usize) -> Dense {
    let x = standard_matrix("X").unwrap();
    let off: Vec<Dense> = (0..n)
        .map(|q| {
            if q == control {
                projector(false)
            } else {
                Dense::identity(2)
            }
        })
        .collect();
    let on: Vec<Dense> = (0..n)
        .map(|q| match q {
            _ if q == control => projector(true),
            _ if q == target => x.clone(),
            _ => Dense::identity(2),
        })
        .collect();
    tensor(off).add(&tensor(on))
}

/// Full operator of one placement on `n` qubits.
pub fn placement_unitary(p: &GatePlacement, n: usize, registry: &GateRegistry) -> Dense {
    let body = if p.is_swap() {
        let (a, b) = (p.target, p.swap_partner.expect("swap partner"));
        cnot(a, b, n).mul(&cnot(b, a, n)).mul(&cnot(a, b, n))
    } else {
        let u = standard_matrix(&p.name).unwrap_or_else(|| {
            let def = registry
                .get(&p.name)
                .unwrap_or_else(|| panic!("unknown gate {}", p.name));
            let m = def.matrix();
            Dense {
                dim: m.dim(),
                data: m.entries().to_vec(),
            }
        });
        embed(&u, p.target, n)
    };
    if p.control_count() == 0 {
        return body;
    }
    let proj = tensor(
        (0..n)
            .map(|q| {
                if p.controls.contains(&q) {
                    projector(true)
                } else if p.anti_controls.contains(&q) {
                    projector(false)
                } else {
                    Dense::identity(2)
                }
            })
            .collect(),
    );
    let dim = 1 << n;
    Dense::identity(dim).sub(&proj).add(&proj.mul(&body))
}

/// Product of all placements, later moments on the left.
pub fn circuit_unitary(circuit: &Circuit, registry: &GateRegistry) -> Dense {
    let n = circuit.n_qubits();
    circuit
        .placements_in_time_order()
        .into_iter()
        .fold(Dense::identity(1 << n), |acc, p| {
            placement_unitary(p, n, registry).mul(&acc)
        })
}

/// Output state for a basis input.
pub fn dense_state(circuit: &Circuit, input: &BitString, registry: &GateRegistry) -> Vec<Complex64> {
    let u = circuit_unitary(circuit, registry);
    (0..u.dim).map(|r| u.at(r, input.index())).collect()
}

pub fn dense_probabilities(circuit: &Circuit, input: &BitString, registry: &GateRegistry) -> Vec<f64> {
    crate::probabilities(&dense_state(circuit, input, registry))
}
