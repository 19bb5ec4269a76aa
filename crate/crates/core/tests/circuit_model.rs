// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use qlearn_core::{Circuit, GatePlacement, GateRegistry, PlacementError};
use qlearn_testkit::gen::{arb_circuit, standard_gates};

fn placement() -> impl Strategy<Value = GatePlacement> {
    let names = prop::sample::select(vec!["X", "Y", "Z", "H", "S", "T", "SX", "SWAP", "Q"]);
    (
        names,
        0usize..6,
        0usize..6,
        0usize..6,
        prop::collection::btree_set(0usize..6, 0..3),
        prop::collection::btree_set(0usize..6, 0..2),
    )
        .prop_map(|(name, target, time, partner, controls, anti)| {
            let p = if name == "SWAP" {
                GatePlacement::swap(target, partner, time)
            } else {
                GatePlacement::new(name, target, time)
            };
            p.with_controls(controls).with_anti_controls(anti)
        })
}

proptest! {
    #[test]
    fn place_then_remove_is_identity(
        circuit in arb_circuit(5, 5, standard_gates(), GateRegistry::standard()),
        p in placement(),
    ) {
        let reg = GateRegistry::standard();
        if let Ok(placed) = circuit.place_gate(p.clone(), &reg) {
            prop_assert!(placed.validate(&reg).is_empty());
            let removed = placed.remove_gate(p.target, p.time, &reg).unwrap();
            prop_assert_eq!(removed.placements(), circuit.placements());
        }
    }

    #[test]
    fn validate_is_pure(circuit in arb_circuit(5, 5, standard_gates(), GateRegistry::standard()), p in placement()) {
        let reg = GateRegistry::standard();
        let raw = {
            let mut ps = circuit.placements().to_vec();
            ps.push(p);
            circuit.clone().with_placements_unchecked(ps)
        };
        prop_assert_eq!(raw.validate(&reg), raw.clone().validate(&reg));
    }

    #[test]
    fn generated_circuits_are_valid(circuit in arb_circuit(5, 8, standard_gates(), GateRegistry::standard())) {
        prop_assert!(circuit.validate(&GateRegistry::standard()).is_empty());
    }
}

#[test]
fn default_registry_is_unitary() {
    for def in GateRegistry::standard().definitions() {
        assert!(def.matrix().unitarity_deviation() <= 1e-10, "{}", def.name());
    }
}

#[test]
fn spec_examples() {
    let reg = GateRegistry::standard();
    let blank = Circuit::blank(2, 2).unwrap();
    let cx = blank
        .place_gate(GatePlacement::new("X", 1, 0).with_controls([0]), &reg)
        .unwrap();
    assert_eq!(cx.placements().len(), 1);
    assert!(matches!(
        cx.place_gate(GatePlacement::new("H", 1, 0), &reg),
        Err(PlacementError::CellOccupied { qubit: 1, time: 0 })
    ));
    assert!(matches!(
        blank.place_gate(GatePlacement::new("X", 0, 0).with_controls([0]), &reg),
        Err(PlacementError::ControlOverlapsTarget { qubit: 0 })
    ));
    assert!(matches!(
        blank.place_gate(GatePlacement::new("Q", 0, 0), &reg),
        Err(PlacementError::UnknownGate { .. })
    ));
    assert!(matches!(
        blank.place_gate(GatePlacement::new("X", 5, 0), &reg),
        Err(PlacementError::OutOfBounds { .. })
    ));
}
