// SPDX-License-Identifier: Apache-2.0

//! Gate-count conditions such as `C1X == 2`.
//!
//! Grammar: `[C<k>]<NAME> <cmp> <int>` where `cmp` is one of
//! `== != < <= > >=`. With the `C<k>` prefix only placements of `NAME` that
//! carry exactly `k` control dots (controls and anti-controls together) are
//! counted; without it every placement of `NAME` counts.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::circuit::{Circuit, GatePlacement};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid condition {text:?}: {message}")]
pub struct ConditionSyntaxError {
    pub text: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    // two-character operators first so `<=` is not read as `<`
    const TOKENS: [(&'static str, Comparator); 6] = [
        ("==", Comparator::Eq),
        ("!=", Comparator::Ne),
        ("<=", Comparator::Le),
        (">=", Comparator::Ge),
        ("<", Comparator::Lt),
        (">", Comparator::Gt),
    ];

    pub fn symbol(self) -> &'static str {
        Self::TOKENS.iter().find(|(_, c)| *c == self).map(|(s, _)| *s).unwrap()
    }

    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Comparator::Eq => lhs == rhs,
            Comparator::Ne => lhs != rhs,
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
        }
    }
}

/// A parsed gate-count condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub gate: String,
    /// Exact number of control dots required; `None` matches any.
    pub controls: Option<usize>,
    pub comparator: Comparator,
    pub value: i64,
}

impl Condition {
    pub fn matches(&self, placement: &GatePlacement) -> bool {
        placement.name == self.gate && self.controls.is_none_or(|k| placement.control_count() == k)
    }

    /// Number of placements in `circuit` this condition counts.
    pub fn count(&self, circuit: &Circuit) -> usize {
        circuit.placements().iter().filter(|p| self.matches(p)).count()
    }

    pub fn holds(&self, circuit: &Circuit) -> bool {
        self.comparator.holds(self.count(circuit) as i64, self.value)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(k) = self.controls {
            write!(f, "C{k}")?;
        }
        write!(f, "{} {} {}", self.gate, self.comparator.symbol(), self.value)
    }
}

impl FromStr for Condition {
    type Err = ConditionSyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_condition(s)
    }
}

pub fn parse_condition(text: &str) -> Result<Condition, ConditionSyntaxError> {
    let fail = |message: &str| ConditionSyntaxError {
        text: text.to_owned(),
        message: message.to_owned(),
    };
    let (pos, symbol, comparator) = Comparator::TOKENS
        .iter()
        .filter_map(|&(sym, cmp)| text.find(sym).map(|pos| (pos, sym, cmp)))
        .min_by_key(|&(pos, sym, _)| (pos, usize::MAX - sym.len()))
        .ok_or_else(|| fail("missing comparison operator"))?;
    let lhs = text[..pos].trim();
    let rhs = text[pos + symbol.len()..].trim();
    if lhs.is_empty() {
        return Err(fail("missing gate name before the operator"));
    }
    if lhs.chars().any(|c| c.is_whitespace() || "=!<>".contains(c)) {
        return Err(fail("gate name must be a single token"));
    }
    if rhs.is_empty() {
        return Err(fail("missing count after the operator"));
    }
    let value: i64 = rhs.parse().map_err(|_| fail("count must be an integer"))?;

    let (controls, gate) = split_control_prefix(lhs);
    Ok(Condition {
        gate: gate.to_owned(),
        controls,
        comparator,
        value,
    })
}

/// `C1X` -> `(Some(1), "X")`; `CX` and `C1` have no prefix.
fn split_control_prefix(lhs: &str) -> (Option<usize>, &str) {
    let Some(rest) = lhs.strip_prefix('C') else {
        return (None, lhs);
    };
    let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 || digits == rest.len() {
        return (None, lhs);
    }
    match rest[..digits].parse() {
        Ok(k) => (Some(k), &rest[digits..]),
        Err(_) => (None, lhs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_controlled_count() {
        let c = parse_condition("C1X == 2").unwrap();
        assert_eq!(
            c,
            Condition {
                gate: "X".into(),
                controls: Some(1),
                comparator: Comparator::Eq,
                value: 2
            }
        );
        assert_eq!(c.to_string(), "C1X == 2");
    }

    #[test]
    fn parses_unprefixed_count() {
        let c = parse_condition("H <= 3").unwrap();
        assert_eq!(
            (c.gate.as_str(), c.controls, c.comparator, c.value),
            ("H", None, Comparator::Le, 3)
        );
        let c = parse_condition("CX>=1").unwrap();
        assert_eq!(
            (c.gate.as_str(), c.controls, c.comparator),
            ("CX", None, Comparator::Ge,)
        );
        let c = parse_condition("C2SWAP != 0").unwrap();
        assert_eq!((c.gate.as_str(), c.controls), ("SWAP", Some(2)));
        assert_eq!(parse_condition("T < 4").unwrap().comparator, Comparator::Lt);
        assert_eq!(parse_condition("T > 4").unwrap().comparator, Comparator::Gt);
    }

    #[test]
    fn syntax_errors() {
        for bad in ["C1X =", "C1X ==", "== 2", "X == two", "X Y == 2", "", "X 2"] {
            assert!(parse_condition(bad).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn counts_by_control_number() {
        let circuit = Circuit::blank(3, 3).unwrap().with_placements_unchecked(vec![
            GatePlacement::new("X", 1, 0).with_controls([0]),
            GatePlacement::new("X", 2, 1).with_anti_controls([1]),
            GatePlacement::new("X", 0, 2),
        ]);
        assert_eq!(parse_condition("C1X == 2").unwrap().count(&circuit), 2);
        assert_eq!(parse_condition("C0X == 1").unwrap().count(&circuit), 1);
        assert_eq!(parse_condition("X == 3").unwrap().count(&circuit), 3);
        assert!(!parse_condition("C1X == 3").unwrap().holds(&circuit));
    }
}
