// SPDX-License-Identifier: Apache-2.0

//! Interpreter for the OpenQASM 2 subset produced by the exporter.
//!
//! Qubit `q[0]` is the most significant bit of the state index, matching the
//! editor. `measure`, `barrier` and `creg` are accepted and ignored.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Final state after running `source` from the basis state `initial`.
pub fn run(source: &str, initial: usize) -> Result<Vec<Complex64>, String> {
    let mut n = None;
    let mut state: Vec<Complex64> = Vec::new();
    let stripped: String = source
        .lines()
        .map(|l| l.split("//").next().unwrap_or(""))
        .collect::<Vec<_>>()
        .join("\n");
    for stmt in stripped.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        if stmt.starts_with("OPENQASM") || stmt.starts_with("include") || stmt.starts_with("creg") {
            continue;
        }
        if stmt.starts_with("measure") || stmt.starts_with("barrier") {
            continue;
        }
        if let Some(rest) = stmt.strip_prefix("qreg") {
            let size = register_size(rest.trim())?;
            if initial >= 1 << size {
                return Err(format!("initial index {initial} out of range"));
            }
            n = Some(size);
            state = vec![ZERO; 1 << size];
            state[initial] = ONE;
            continue;
        }
        let n = n.ok_or("gate before qreg")?;
        let (head, args) = split_head(stmt)?;
        let (name, params) = match head.find('(') {
            Some(open) => {
                let close = head.rfind(')').ok_or("unbalanced parameters")?;
                let params = head[open + 1..close]
                    .split(',')
                    .map(eval_angle)
                    .collect::<Result<Vec<_>, _>>()?;
                (&head[..open], params)
            }
            None => (head, Vec::new()),
        };
        let qubits = args
            .split(',')
            .map(|a| qubit_index(a.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        if qubits.iter().any(|&q| q >= n) {
            return Err(format!("qubit out of range in `{stmt}`"));
        }
        let mut sorted = qubits.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != qubits.len() {
            return Err(format!("repeated qubit in `{stmt}`"));
        }
        let m = gate_matrix(name, &params)?;
        if m.len() != 1 << (2 * qubits.len()) {
            return Err(format!("`{name}` applied to {} qubits", qubits.len()));
        }
        apply(&mut state, n, &qubits, &m);
    }
    Ok(state)
}

fn split_head(stmt: &str) -> Result<(&str, &str), String> {
    // split at the first whitespace that is not inside parentheses
    let mut depth = 0;
    for (i, ch) in stmt.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c.is_whitespace() && depth == 0 => return Ok((&stmt[..i], stmt[i..].trim())),
            _ => {}
        }
    }
    Err(format!("no arguments in `{stmt}`"))
}

fn register_size(decl: &str) -> Result<usize, String> {
    let open = decl.find('[').ok_or("bad qreg")?;
    let close = decl.find(']').ok_or("bad qreg")?;
    decl[open + 1..close]
        .trim()
        .parse()
        .map_err(|_| "bad qreg size".to_owned())
}

fn qubit_index(arg: &str) -> Result<usize, String> {
    let inner = arg
        .strip_prefix("q[")
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| format!("bad qubit argument `{arg}`"))?;
    inner.trim().parse().map_err(|_| format!("bad qubit index `{arg}`"))
}

/// Applies a `2^k x 2^k` row-major matrix to `qubits`, the first one being the
/// most significant bit of the local index.
fn apply(state: &mut [Complex64], n: usize, qubits: &[usize], m: &[Complex64]) {
    let k = qubits.len();
    let dim = 1 << k;
    let masks: Vec<usize> = qubits.iter().map(|&q| 1 << (n - 1 - q)).collect();
    let all: usize = masks.iter().sum();
    let mut local = vec![ZERO; dim];
    for base in 0..state.len() {
        if base & all != 0 {
            continue;
        }
        let index_of = |l: usize| {
            (0..k).fold(base, |acc, j| {
                if l & (1 << (k - 1 - j)) != 0 {
                    acc | masks[j]
                } else {
                    acc
                }
            })
        };
        for (l, slot) in local.iter_mut().enumerate() {
            *slot = state[index_of(l)];
        }
        for r in 0..dim {
            state[index_of(r)] = (0..dim).map(|c| m[r * dim + c] * local[c]).sum();
        }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Controlled version of `u` with `controls` leading qubits.
fn controlled(u: &[Complex64], controls: usize) -> Vec<Complex64> {
    let inner = (u.len() as f64).sqrt() as usize;
    let dim = inner << controls;
    let mut m = vec![ZERO; dim * dim];
    for i in 0..dim - inner {
        m[i * dim + i] = ONE;
    }
    let off = dim - inner;
    for r in 0..inner {
        for col in 0..inner {
            m[(off + r) * dim + off + col] = u[r * inner + col];
        }
    }
    m
}

fn phase(lambda: f64) -> Vec<Complex64> {
    vec![ONE, ZERO, ZERO, Complex64::from_polar(1.0, lambda)]
}

fn gate_matrix(name: &str, params: &[f64]) -> Result<Vec<Complex64>, String> {
    let h = FRAC_1_SQRT_2;
    let x = vec![ZERO, ONE, ONE, ZERO];
    let want = |k: usize| {
        if params.len() == k {
            Ok(())
        } else {
            Err(format!("`{name}` takes {k} parameters"))
        }
    };
    let m = match name {
        "id" => vec![ONE, ZERO, ZERO, ONE],
        "x" => x,
        "y" => vec![ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO],
        "z" => phase(PI),
        "h" => vec![c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)],
        "s" => phase(PI / 2.0),
        "sdg" => phase(-PI / 2.0),
        "t" => phase(PI / 4.0),
        "tdg" => phase(-PI / 4.0),
        "sx" => vec![c(0.5, 0.5), c(0.5, -0.5), c(0.5, -0.5), c(0.5, 0.5)],
        "u1" | "p" => {
            want(1)?;
            phase(params[0])
        }
        "rz" => {
            want(1)?;
            let half = params[0] / 2.0;
            vec![
                Complex64::from_polar(1.0, -half),
                ZERO,
                ZERO,
                Complex64::from_polar(1.0, half),
            ]
        }
        "ry" => {
            want(1)?;
            let (s, co) = (params[0] / 2.0).sin_cos();
            vec![c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)]
        }
        "swap" => {
            let mut m = vec![ZERO; 16];
            for (r, col) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
                m[r * 4 + col] = ONE;
            }
            m
        }
        "cx" => controlled(&x, 1),
        "ccx" => controlled(&x, 2),
        "c3x" => controlled(&x, 3),
        "c4x" => controlled(&x, 4),
        "cswap" => controlled(&gate_matrix("swap", &[])?, 1),
        other => {
            let base = other
                .strip_prefix('c')
                .ok_or_else(|| format!("unsupported gate `{other}`"))?;
            if !matches!(base, "y" | "z" | "h" | "sx" | "u1" | "p" | "rz" | "ry" | "s" | "t") {
                return Err(format!("unsupported gate `{other}`"));
            }
            controlled(&gate_matrix(base, params)?, 1)
        }
    };
    if !params.is_empty() && !matches!(name, "u1" | "p" | "rz" | "ry" | "cu1" | "cp" | "crz" | "cry") {
        return Err(format!("`{name}` takes no parameters"));
    }
    Ok(m)
}

/// Evaluates expressions over numbers, `pi`, `+ - * /` and parentheses.
pub fn eval_angle(text: &str) -> Result<f64, String> {
    let tokens = tokenize(text)?;
    let mut pos = 0;
    let v = expr(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(format!("trailing input in `{text}`"));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if "+-*/()".contains(ch) {
            out.push(Tok::Op(ch));
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.' || chars[i] == 'e') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Tok::Num(s.parse().map_err(|_| format!("bad number `{s}`"))?));
        } else if chars[i..].starts_with(&['p', 'i']) {
            out.push(Tok::Num(PI));
            i += 2;
        } else {
            return Err(format!("unexpected `{ch}` in angle"));
        }
    }
    Ok(out)
}

fn expr(t: &[Tok], pos: &mut usize) -> Result<f64, String> {
    let mut v = term(t, pos)?;
    while let Some(Tok::Op(op @ ('+' | '-'))) = t.get(*pos) {
        *pos += 1;
        let rhs = term(t, pos)?;
        v = if *op == '+' { v + rhs } else { v - rhs };
    }
    Ok(v)
}

fn term(t: &[Tok], pos: &mut usize) -> Result<f64, String> {
    let mut v = factor(t, pos)?;
    while let Some(Tok::Op(op @ ('*' | '/'))) = t.get(*pos) {
        *pos += 1;
        let rhs = factor(t, pos)?;
        v = if *op == '*' { v * rhs } else { v / rhs };
    }
    Ok(v)
}

fn factor(t: &[Tok], pos: &mut usize) -> Result<f64, String> {
    match t.get(*pos) {
        Some(Tok::Num(v)) => {
            *pos += 1;
            Ok(*v)
        }
        Some(Tok::Op('-')) => {
            *pos += 1;
            Ok(-factor(t, pos)?)
        }
        Some(Tok::Op('(')) => {
            *pos += 1;
            let v = expr(t, pos)?;
            if t.get(*pos) != Some(&Tok::Op(')')) {
                return Err("missing `)`".into());
            }
            *pos += 1;
            Ok(v)
        }
        other => Err(format!("unexpected token {other:?}")),
    }
}
