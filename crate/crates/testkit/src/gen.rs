// SPDX-License-Identifier: Apache-2.0

//! Random valid circuits.
//!
//! Candidate placements are drawn freely and inserted with
//! [`Circuit::place_gate`]; candidates the model rejects are dropped, so every
//! generated circuit passes validation.

use std::collections::BTreeSet;

use proptest::prelude::*;
use qlearn_core::{Circuit, GateDefinition, GatePlacement, GateRegistry};

/// One raw placement attempt, resolved against the grid size later.
#[derive(Debug, Clone)]
pub struct Candidate {
    gate: usize,
    target: usize,
    time: usize,
    partner: usize,
    controls: u8,
    anti: u8,
}

fn candidate() -> impl Strategy<Value = Candidate> {
    (0usize..64, 0usize..32, 0usize..32, 0usize..32, any::<u8>(), any::<u8>()).prop_map(
        |(gate, target, time, partner, controls, anti)| Candidate {
            gate,
            target,
            time,
            partner,
            controls,
            anti,
        },
    )
}

/// Turns candidates into a valid circuit on an `n x m` grid.
pub fn build(n: usize, m: usize, gates: &[String], registry: &GateRegistry, cands: &[Candidate]) -> Circuit {
    let mut circuit = Circuit::blank(n, m).expect("grid");
    for cand in cands {
        let name = &gates[cand.gate % gates.len()];
        let target = cand.target % n;
        let time = cand.time % m;
        let mut p = if name == "SWAP" {
            GatePlacement::swap(target, cand.partner % n, time)
        } else {
            GatePlacement::new(name.clone(), target, time)
        };
        let span = registry.span(name).unwrap_or(1);
        let body: BTreeSet<usize> = p.body_rows(span).collect();
        // sparse controls: each row joins with probability 1/4
        let controls: Vec<usize> = (0..n)
            .filter(|q| cand.controls >> (2 * (q % 4)) & 3 == 0 && !body.contains(q))
            .collect();
        let anti: Vec<usize> = (0..n)
            .filter(|q| cand.anti >> (2 * (q % 4)) & 3 == 0 && !body.contains(q) && !controls.contains(q))
            .collect();
        p = p.with_controls(controls).with_anti_controls(anti);
        if let Ok(next) = circuit.place_gate(p, registry) {
            circuit = next;
        }
    }
    circuit
}

/// Valid circuits with `1..=max_qubits` rows and `1..=max_moments` columns
/// built from `gates`.
pub fn arb_circuit(
    max_qubits: usize,
    max_moments: usize,
    gates: Vec<String>,
    registry: GateRegistry,
) -> impl Strategy<Value = Circuit> {
    (
        1..=max_qubits,
        1..=max_moments,
        prop::collection::vec(candidate(), 0..24),
    )
        .prop_map(move |(n, m, cands)| build(n, m, &gates, &registry, &cands))
}

/// Valid circuits on a fixed grid.
pub fn arb_circuit_on(
    n: usize,
    m: usize,
    gates: Vec<String>,
    registry: GateRegistry,
) -> impl Strategy<Value = Circuit> {
    prop::collection::vec(candidate(), 0..(3 * m).max(1)).prop_map(move |cands| build(n, m, &gates, &registry, &cands))
}

/// Valid circuits on a fixed grid with about one attempted placement per
/// cell, so most moments are busy.
pub fn arb_busy_circuit_on(
    n: usize,
    m: usize,
    gates: Vec<String>,
    registry: GateRegistry,
) -> impl Strategy<Value = Circuit> {
    prop::collection::vec(candidate(), n * m..=n * m).prop_map(move |cands| build(n, m, &gates, &registry, &cands))
}

/// Standard toolbar gates plus SWAP.
pub fn standard_gates() -> Vec<String> {
    ["X", "Y", "Z", "H", "S", "T", "SX", "SWAP"].map(String::from).to_vec()
}

/// A registry with the standard gates, a two-qubit iSWAP-like gate `ISW` and
/// a single-qubit custom rotation `R`.
pub fn registry_with_customs() -> GateRegistry {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let isw = GateDefinition::from_pairs(
        "ISW",
        &[
            vec![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
            vec![[0.0, 0.0], [0.0, 0.0], [0.0, 1.0], [0.0, 0.0]],
            vec![[0.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]],
            vec![[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
        ],
    )
    .expect("ISW");
    let r = GateDefinition::from_pairs("R", &[vec![[h, 0.0], [0.0, -h]], vec![[0.0, -h], [h, 0.0]]]).expect("R");
    GateRegistry::with_custom([isw, r]).expect("registry")
}
