// SPDX-License-Identifier: Apache-2.0

//! Export of circuits as OpenQASM 2.0 or Qiskit source, and of simulation
//! results as CSV or JSON.
//!
//! Row `i` of the editor grid becomes qubit `i` in both dialects. The editor
//! writes bitstrings with row 0 first; Qiskit prints measured bitstrings with
//! qubit 0 last. The exported header comment states this so the wires are
//! never silently reordered.
//!
//! OpenQASM output uses the gates of Qiskit's `qelib1.inc`. Anti-controls are
//! written as an X conjugation of the control line. Controlled gates without
//! a library equivalent are decomposed exactly: each standard gate is either
//! an X or a phase gate up to a fixed basis change, multi-controlled phases
//! use the usual square-root recursion, and multi-controlled X uses
//! `ccx`/`c3x`/`c4x`.

use std::fmt::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, GatePlacement};
use crate::format::format_number;
use crate::gates::{GateDefinition, GateRegistry};
use crate::sampling::Distribution;
use crate::sim::StateVector;

/// Largest control count of the library multi-controlled X (`c4x`).
const MAX_MCX_CONTROLS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExportError {
    #[error("gate `{gate}` cannot be expressed in {dialect}: {reason}")]
    UnsupportedGateInDialect {
        gate: String,
        dialect: &'static str,
        reason: String,
    },
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("state has {state} amplitudes but the distribution has {dist} entries")]
    LengthMismatch { state: usize, dist: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircuitFormat {
    /// OpenQASM 2.0 with `qelib1.inc`.
    OpenQasm2,
    /// Python source building a Qiskit `QuantumCircuit`.
    FrameworkSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultFormat {
    /// Comma-separated `bitstring,re,im,p`.
    Tabular,
    /// JSON array of `{bitstring, re, im, p}` records.
    Structured,
}

/// A multiple of pi written as `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PiFraction {
    num: i64,
    den: i64,
}

impl PiFraction {
    const fn new(num: i64, den: i64) -> PiFraction {
        PiFraction { num, den }
    }

    fn half(self) -> PiFraction {
        PiFraction::new(self.num, self.den * 2)
    }

    fn neg(self) -> PiFraction {
        PiFraction::new(-self.num, self.den)
    }
}

impl fmt::Display for PiFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num < 0 {
            f.write_str("-")?;
        }
        match (self.num.abs(), self.den) {
            (1, 1) => f.write_str("pi"),
            (1, d) => write!(f, "pi/{d}"),
            (n, 1) => write!(f, "{n}*pi"),
            (n, d) => write!(f, "{n}*pi/{d}"),
        }
    }
}

/// How a standard gate is built from an X or a phase gate.
enum Family {
    /// `pre · X · post` where `pre`/`post` are single-qubit basis changes.
    XLike {
        pre: &'static [&'static str],
        post: &'static [&'static str],
    },
    /// `pre · P(angle) · post`.
    PhaseLike {
        angle: PiFraction,
        pre: &'static [&'static str],
        post: &'static [&'static str],
    },
}

struct QasmGate {
    /// Uncontrolled instruction.
    plain: &'static str,
    /// Singly controlled library instruction, if any.
    single: Option<&'static str>,
    family: Family,
}

fn qasm_gate(name: &str) -> Option<QasmGate> {
    const NONE: &[&str] = &[];
    let g = match name {
        "X" => QasmGate {
            plain: "x",
            single: Some("cx"),
            family: Family::XLike { pre: NONE, post: NONE },
        },
        // Y = S X S†
        "Y" => QasmGate {
            plain: "y",
            single: Some("cy"),
            family: Family::XLike {
                pre: &["sdg"],
                post: &["s"],
            },
        },
        // H = Ry(-pi/4) X Ry(pi/4)
        "H" => QasmGate {
            plain: "h",
            single: Some("ch"),
            family: Family::XLike {
                pre: &["ry(pi/4)"],
                post: &["ry(-pi/4)"],
            },
        },
        "Z" => QasmGate {
            plain: "z",
            single: Some("cz"),
            family: Family::PhaseLike {
                angle: PiFraction::new(1, 1),
                pre: NONE,
                post: NONE,
            },
        },
        "S" => QasmGate {
            plain: "s",
            single: None,
            family: Family::PhaseLike {
                angle: PiFraction::new(1, 2),
                pre: NONE,
                post: NONE,
            },
        },
        "T" => QasmGate {
            plain: "t",
            single: None,
            family: Family::PhaseLike {
                angle: PiFraction::new(1, 4),
                pre: NONE,
                post: NONE,
            },
        },
        // SX = H S H
        "SX" => QasmGate {
            plain: "sx",
            single: Some("csx"),
            family: Family::PhaseLike {
                angle: PiFraction::new(1, 2),
                pre: &["h"],
                post: &["h"],
            },
        },
        _ => return None,
    };
    Some(g)
}

/// Collects QASM instruction lines.
struct QasmWriter {
    lines: Vec<String>,
}

impl QasmWriter {
    fn op(&mut self, name: &str, qubits: &[usize]) {
        let args: Vec<String> = qubits.iter().map(|q| format!("q[{q}]")).collect();
        self.lines.push(format!("{name} {};", args.join(",")));
    }

    fn mcx(&mut self, controls: &[usize], target: usize, gate: &str) -> Result<(), ExportError> {
        let name = match controls.len() {
            0 => "x",
            1 => "cx",
            2 => "ccx",
            3 => "c3x",
            4 => "c4x",
            k => {
                return Err(ExportError::UnsupportedGateInDialect {
                    gate: gate.to_owned(),
                    dialect: "OpenQASM 2",
                    reason: format!("{k} controls on an X-type gate; at most {MAX_MCX_CONTROLS} are supported"),
                })
            }
        };
        let mut qubits = controls.to_vec();
        qubits.push(target);
        self.op(name, &qubits);
        Ok(())
    }

    /// Phase `e^{i angle}` on the all-ones subspace of `controls + target`.
    fn mcphase(&mut self, angle: PiFraction, controls: &[usize], target: usize, gate: &str) -> Result<(), ExportError> {
        match controls {
            [] => self.op(&format!("u1({angle})"), &[target]),
            [c] => self.op(&format!("cu1({angle})"), &[*c, target]),
            [rest @ .., last] => {
                let half = angle.half();
                self.op(&format!("cu1({half})"), &[*last, target]);
                self.mcx(rest, *last, gate)?;
                self.op(&format!("cu1({})", half.neg()), &[*last, target]);
                self.mcx(rest, *last, gate)?;
                self.mcphase(half, rest, target, gate)?;
            }
        }
        Ok(())
    }

    fn basis_change(&mut self, ops: &[&str], target: usize) {
        for op in ops {
            self.op(op, &[target]);
        }
    }
}

fn lower_qasm(w: &mut QasmWriter, p: &GatePlacement, registry: &GateRegistry) -> Result<(), ExportError> {
    let anti: Vec<usize> = p.anti_controls.iter().copied().collect();
    for &a in &anti {
        w.op("x", &[a]);
    }
    let mut controls: Vec<usize> = p.controls.iter().chain(&p.anti_controls).copied().collect();
    controls.sort_unstable();

    if p.is_swap() {
        let partner = p.swap_partner.expect("validated SWAP has a partner");
        match controls.len() {
            0 => w.op("swap", &[p.target, partner]),
            1 => w.op("cswap", &[controls[0], p.target, partner]),
            _ => {
                let mut inner = controls.clone();
                inner.push(p.target);
                w.op("cx", &[partner, p.target]);
                w.mcx(&inner, partner, &p.name)?;
                w.op("cx", &[partner, p.target]);
            }
        }
    } else {
        let gate = match qasm_gate(&p.name) {
            Some(g) => g,
            None if registry.get(&p.name).is_some() => {
                return Err(ExportError::UnsupportedGateInDialect {
                    gate: p.name.clone(),
                    dialect: "OpenQASM 2",
                    reason: "custom matrix gates are only exported as framework source".into(),
                })
            }
            None => return Err(ExportError::UnknownGate(p.name.clone())),
        };
        let t = p.target;
        match (controls.len(), gate.single) {
            (0, _) => w.op(gate.plain, &[t]),
            (1, Some(single)) => w.op(single, &[controls[0], t]),
            _ => match gate.family {
                Family::XLike { pre, post } => {
                    w.basis_change(pre, t);
                    w.mcx(&controls, t, &p.name)?;
                    w.basis_change(post, t);
                }
                Family::PhaseLike { angle, pre, post } => {
                    w.basis_change(pre, t);
                    w.mcphase(angle, &controls, t, &p.name)?;
                    w.basis_change(post, t);
                }
            },
        }
    }

    for &a in &anti {
        w.op("x", &[a]);
    }
    Ok(())
}

fn header_lines(circuit: &Circuit, comment: &str) -> Vec<String> {
    vec![
        format!(
            "{comment} Exported circuit: {} qubits, {} moments.",
            circuit.n_qubits(),
            circuit.n_moments()
        ),
        format!("{comment} Grid row i is qubit q[i]. Editor bitstrings list q[0] first (leftmost);"),
        format!("{comment} Qiskit prints measured bitstrings with q[0] last (rightmost)."),
    ]
}

/// Exports `circuit` as source text in `format`.
pub fn export_circuit(
    circuit: &Circuit,
    registry: &GateRegistry,
    format: CircuitFormat,
) -> Result<String, ExportError> {
    match format {
        CircuitFormat::OpenQasm2 => export_qasm(circuit, registry, None),
        CircuitFormat::FrameworkSource => export_qiskit(circuit, registry, None),
    }
}

/// Like [`export_circuit`], preceded by X gates that prepare `input` from
/// the all-zero state.
pub fn export_circuit_with_input(
    circuit: &Circuit,
    registry: &GateRegistry,
    format: CircuitFormat,
    input: &crate::BitString,
) -> Result<String, ExportError> {
    let ones: Vec<usize> = (0..input.len()).filter(|&q| input.bit(q)).collect();
    match format {
        CircuitFormat::OpenQasm2 => export_qasm(circuit, registry, Some(&ones)),
        CircuitFormat::FrameworkSource => export_qiskit(circuit, registry, Some(&ones)),
    }
}

fn export_qasm(circuit: &Circuit, registry: &GateRegistry, prepare: Option<&[usize]>) -> Result<String, ExportError> {
    let n = circuit.n_qubits();
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    for line in header_lines(circuit, "//") {
        out.push_str(&line);
        out.push('\n');
    }
    writeln!(out, "qreg q[{n}];\ncreg c[{n}];").unwrap();
    if let Some(ones) = prepare.filter(|o| !o.is_empty()) {
        out.push_str("// input preparation\n");
        for q in ones {
            writeln!(out, "x q[{q}];").unwrap();
        }
    }
    let mut current_moment = None;
    for p in circuit.placements_in_time_order() {
        if current_moment != Some(p.time) {
            writeln!(out, "// moment {}", p.time).unwrap();
            current_moment = Some(p.time);
        }
        let mut w = QasmWriter { lines: Vec::new() };
        lower_qasm(&mut w, p, registry)?;
        for line in w.lines {
            out.push_str(&line);
            out.push('\n');
        }
    }
    out.push_str("measure q -> c;\n");
    Ok(out)
}

fn qiskit_class(name: &str) -> Option<(&'static str, &'static str)> {
    Some(match name {
        "X" => ("x", "XGate"),
        "Y" => ("y", "YGate"),
        "Z" => ("z", "ZGate"),
        "H" => ("h", "HGate"),
        "S" => ("s", "SGate"),
        "T" => ("t", "TGate"),
        "SX" => ("sx", "SXGate"),
        "SWAP" => ("swap", "SwapGate"),
        _ => return None,
    })
}

fn python_matrix(def: &GateDefinition) -> String {
    let rows: Vec<String> = def
        .matrix()
        .rows()
        .map(|r| {
            let entries: Vec<String> = r.iter().map(|c| format!("complex({:?}, {:?})", c.re, c.im)).collect();
            format!("[{}]", entries.join(", "))
        })
        .collect();
    format!("np.array([{}])", rows.join(", "))
}

fn export_qiskit(circuit: &Circuit, registry: &GateRegistry, prepare: Option<&[usize]>) -> Result<String, ExportError> {
    let n = circuit.n_qubits();
    let mut body = Vec::new();
    let mut classes = std::collections::BTreeSet::new();
    let mut needs_numpy = false;

    if let Some(ones) = prepare {
        for q in ones {
            body.push(format!("qc.x({q})"));
        }
    }

    for p in circuit.placements_in_time_order() {
        let mut controls: Vec<usize> = p.controls.iter().chain(&p.anti_controls).copied().collect();
        controls.sort_unstable();
        // ctrl_state bit i is the required value of controls[i]
        let ctrl_state = controls
            .iter()
            .enumerate()
            .filter(|(_, q)| p.controls.contains(q))
            .fold(0u64, |acc, (i, _)| acc | (1 << i));

        let (gate_expr, targets, method) = if let Some((method, class)) = qiskit_class(&p.name) {
            classes.insert(class);
            let targets = match p.swap_partner {
                Some(partner) => vec![p.target, partner],
                None => vec![p.target],
            };
            (format!("{class}()"), targets, Some(method))
        } else {
            let def = registry
                .get(&p.name)
                .ok_or_else(|| ExportError::UnknownGate(p.name.clone()))?;
            classes.insert("UnitaryGate");
            needs_numpy = true;
            // Qiskit treats the first listed qubit as the least significant
            // bit of the matrix index; the grid's top row is the most
            // significant one, so the span is listed bottom-up.
            let targets = (p.target..p.target + def.arity()).rev().collect();
            (
                format!("UnitaryGate({}, label={:?})", python_matrix(def), p.name),
                targets,
                None,
            )
        };

        let list = |qs: &[usize]| qs.iter().map(usize::to_string).collect::<Vec<_>>().join(", ");
        let line = match (controls.is_empty(), method) {
            (true, Some(method)) => format!("qc.{method}({})", list(&targets)),
            (true, None) => format!("qc.append({gate_expr}, [{}])", list(&targets)),
            (false, _) => {
                let mut qargs = controls.clone();
                qargs.extend(&targets);
                format!(
                    "qc.append({gate_expr}.control({}, ctrl_state={ctrl_state}), [{}])",
                    controls.len(),
                    list(&qargs)
                )
            }
        };
        body.push(format!("{line}  # moment {}", p.time));
    }

    let mut out = String::new();
    for line in header_lines(circuit, "#") {
        out.push_str(&line);
        out.push('\n');
    }
    if needs_numpy {
        out.push_str("import numpy as np\n");
    }
    out.push_str("from qiskit import QuantumCircuit\n");
    if !classes.is_empty() {
        let names: Vec<&str> = classes.into_iter().collect();
        writeln!(out, "from qiskit.circuit.library import {}", names.join(", ")).unwrap();
    }
    writeln!(out, "\nqc = QuantumCircuit({n}, {n})").unwrap();
    for line in body {
        out.push_str(&line);
        out.push('\n');
    }
    writeln!(out, "qc.measure(range({n}), range({n}))").unwrap();
    Ok(out)
}

#[derive(Serialize)]
struct ResultRow<'a> {
    bitstring: &'a str,
    re: f64,
    im: f64,
    p: f64,
}

/// Exports the final state and its probabilities, one record per basis
/// state in index order.
pub fn export_results(state: &StateVector, dist: &Distribution, format: ResultFormat) -> Result<String, ExportError> {
    if state.amplitudes().len() != dist.probabilities().len() {
        return Err(ExportError::LengthMismatch {
            state: state.amplitudes().len(),
            dist: dist.probabilities().len(),
        });
    }
    let amps = state.export_rows();
    let rows: Vec<ResultRow> = amps
        .iter()
        .zip(dist.probabilities())
        .map(|(a, &p)| ResultRow {
            bitstring: &a.bitstring,
            re: a.re,
            im: a.im,
            p,
        })
        .collect();
    Ok(match format {
        ResultFormat::Tabular => {
            let mut out = String::from("bitstring,re,im,p\n");
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{}",
                    r.bitstring,
                    format_number(r.re),
                    format_number(r.im),
                    format_number(r.p)
                )
                .unwrap();
            }
            out
        }
        ResultFormat::Structured => {
            let mut out = serde_json::to_string_pretty(&rows).expect("rows serialize");
            out.push('\n');
            out
        }
    })
}
