// SPDX-License-Identifier: Apache-2.0

//! Ket notation for superpositions.
//!
//! A superposition is a `+`/`-` separated list of `[amplitude] ket` terms.
//! The amplitude defaults to 1 and may be parenthesized to hold a complex
//! expression. Kets close with `⟩` or `>` and take one of two shapes:
//!
//! * a tape, started by the machine's initial state: symbols written by
//!   name, `n̄` (digits then U+0304) or `nbar:n` for `1^{n+1}`, `λ` for the
//!   empty tape;
//! * a full configuration `⟨α, q, β, n⟩` (or `<α, q, β, n>`).

use thiserror::Error;

use super::amp_expr::{AmpSyntaxError, Cursor};
use crate::machine::{Amplitude, Machine, State, Symbol};

const COMBINING_MACRON: char = '\u{0304}';
const OPEN: [char; 2] = ['⟨', '<'];
const CLOSE: [char; 2] = ['⟩', '>'];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("column {col}: expected {expected}")]
pub struct KetSyntaxError {
    pub col: usize,
    pub expected: String,
}

impl From<AmpSyntaxError> for KetSyntaxError {
    fn from(e: AmpSyntaxError) -> Self {
        Self { col: e.col, expected: e.expected }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Ket {
    Tape(Vec<Symbol>),
    Full { left: Vec<Symbol>, state: State, right: Vec<Symbol>, counter: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub amp: Amplitude,
    pub ket: Ket,
}

pub fn parse_terms(m: &Machine, text: &str) -> Result<Vec<Term>, KetSyntaxError> {
    let mut cur = Cursor::new(text);
    let mut terms = Vec::new();
    let mut first = true;
    loop {
        let mut sign = 1.0;
        if cur.eat('+') {
        } else if cur.eat('-') {
            sign = -1.0;
        } else if !first {
            return Err(cur.error("`+`, `-` or end of input").into());
        }
        let amp = if cur.eat('(') {
            let a = cur.amplitude()?;
            if !cur.eat(')') {
                return Err(cur.error("`)`").into());
            }
            a
        } else if cur.starts_expr() {
            let x = cur.real_expr()?;
            if cur.eat('i') {
                Amplitude::new(0.0, x)
            } else {
                Amplitude::new(x, 0.0)
            }
        } else {
            Amplitude::new(1.0, 0.0)
        };
        cur.eat('*');
        if !cur.eat('|') {
            return Err(cur.error("`|` opening a ket").into());
        }
        let ket = if cur.eat_any(&OPEN) {
            let ket = full(m, &mut cur)?;
            if !cur.eat_any(&CLOSE) {
                return Err(cur.error("`⟩` closing the ket").into());
            }
            ket
        } else {
            Ket::Tape(tape(m, &mut cur, &CLOSE)?)
        };
        if !cur.eat_any(&CLOSE) {
            return Err(cur.error("`⟩` closing the ket").into());
        }
        terms.push(Term { amp: amp * sign, ket });
        first = false;
        if cur.at_end() {
            return Ok(terms);
        }
    }
}

fn full(m: &Machine, cur: &mut Cursor) -> Result<Ket, KetSyntaxError> {
    let left = tape(m, cur, &[','])?;
    expect(cur, ',')?;
    cur.skip_ws();
    let col = cur.col();
    let mut name = String::new();
    while let Some(c) = cur.peek_raw(0).filter(|c| *c != ',' && !c.is_whitespace()) {
        name.push(c);
        cur.bump();
    }
    let state = m
        .states()
        .lookup(&name)
        .ok_or_else(|| KetSyntaxError { col, expected: format!("a state name, found `{name}`") })?;
    expect(cur, ',')?;
    let right = tape(m, cur, &[','])?;
    expect(cur, ',')?;
    cur.skip_ws();
    let counter = number(cur).ok_or_else(|| cur.error("a counter value"))?;
    Ok(Ket::Full { left, state, right, counter })
}

fn expect(cur: &mut Cursor, c: char) -> Result<(), KetSyntaxError> {
    if cur.eat(c) {
        Ok(())
    } else {
        Err(cur.error(format!("`{c}`")).into())
    }
}

fn number(cur: &mut Cursor) -> Option<u64> {
    let mut digits = String::new();
    while let Some(c) = cur.peek_raw(0).filter(char::is_ascii_digit) {
        digits.push(c);
        cur.bump();
    }
    digits.parse().ok()
}

/// Reads tape items until one of `stop` (not consumed).
fn tape(m: &Machine, cur: &mut Cursor, stop: &[char]) -> Result<Vec<Symbol>, KetSyntaxError> {
    let mut out = Vec::new();
    let mut names: Vec<&str> = m.alphabet().names().iter().map(String::as_str).collect();
    names.push(crate::machine::BLANK_ALIAS);
    names.sort_by_key(|n| std::cmp::Reverse(n.chars().count()));
    loop {
        match cur.peek() {
            None => return Err(cur.error("`⟩` closing the ket").into()),
            Some(c) if stop.contains(&c) => return Ok(out),
            Some('λ') => {
                cur.bump();
            }
            Some(_) => {
                if cur.eat_str("nbar:") {
                    let n = number(cur).ok_or_else(|| cur.error("a count after `nbar:`"))?;
                    out.extend(std::iter::repeat_n(Symbol::ONE, n as usize + 1));
                    continue;
                }
                if let Some(n) = barred(cur) {
                    out.extend(std::iter::repeat_n(Symbol::ONE, n as usize + 1));
                    continue;
                }
                let rest = cur.rest();
                let Some(name) = names.iter().find(|n| rest.starts_with(**n)) else {
                    return Err(cur.error("a tape symbol").into());
                };
                for _ in 0..name.chars().count() {
                    cur.bump();
                }
                out.push(m.alphabet().lookup(name).expect("name comes from the alphabet"));
            }
        }
    }
}

/// `n̄`: digits followed by a combining macron. Leaves the cursor alone
/// otherwise.
fn barred(cur: &mut Cursor) -> Option<u64> {
    let mut k = 0;
    while cur.peek_raw(k).is_some_and(|c| c.is_ascii_digit()) {
        k += 1;
    }
    if k == 0 || cur.peek_raw(k) != Some(COMBINING_MACRON) {
        return None;
    }
    let n = number(cur);
    cur.bump();
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compat::{example_p, example_s};

    fn tape_of(t: &Term) -> &[Symbol] {
        match &t.ket {
            Ket::Tape(s) => s,
            Ket::Full { .. } => panic!("expected a tape ket"),
        }
    }

    #[test]
    fn barred_numbers() {
        let m = example_p();
        let t = parse_terms(&m, "|3̄⟩").unwrap();
        assert_eq!(tape_of(&t[0]).len(), 4);
        let t = parse_terms(&m, "|nbar:3>").unwrap();
        assert_eq!(tape_of(&t[0]).len(), 4);
        let t = parse_terms(&m, "|12̄⟩").unwrap();
        assert_eq!(tape_of(&t[0]).len(), 13);
    }

    #[test]
    fn dollar_tapes() {
        let m = example_s();
        let dollar = m.alphabet().lookup("$").unwrap();
        let t = parse_terms(&m, "1|$0̄⟩").unwrap();
        assert_eq!(tape_of(&t[0]), &[dollar, Symbol::ONE]);
        let t = parse_terms(&m, "|$ 111⟩").unwrap();
        assert_eq!(tape_of(&t[0]), &[dollar, Symbol::ONE, Symbol::ONE, Symbol::ONE]);
        let t = parse_terms(&m, "|1□1⟩").unwrap();
        assert_eq!(tape_of(&t[0]), &[Symbol::ONE, Symbol::BLANK, Symbol::ONE]);
    }

    #[test]
    fn signs_and_amplitudes() {
        let m = example_p();
        let t = parse_terms(&m, "1/sqrt(2) |0̄⟩ - 1/sqrt(2)|2̄⟩").unwrap();
        assert_eq!(t.len(), 2);
        assert!((t[1].amp.re + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let t = parse_terms(&m, "(0.6+0.8i)|1̄⟩").unwrap();
        assert_eq!(t[0].amp, Amplitude::new(0.6, 0.8));
        let t = parse_terms(&m, "0.5i * |1̄⟩").unwrap();
        assert_eq!(t[0].amp, Amplitude::new(0.0, 0.5));
    }

    #[test]
    fn full_configurations() {
        let m = example_p();
        let q1 = m.states().lookup("q1").unwrap();
        let t = parse_terms(&m, "1 |⟨λ, q1, 1, 0⟩⟩").unwrap();
        assert_eq!(t[0].ket, Ket::Full { left: vec![], state: q1, right: vec![Symbol::ONE], counter: 0 });
        let t = parse_terms(&m, "|<11, qf, _1, 3>>").unwrap();
        assert!(matches!(&t[0].ket, Ket::Full { counter: 3, left, .. } if left.len() == 2));
    }

    #[test]
    fn syntax_errors() {
        let m = example_p();
        assert_eq!(parse_terms(&m, "|2̄").unwrap_err().expected, "`⟩` closing the ket");
        assert_eq!(parse_terms(&m, "|x⟩").unwrap_err().col, 2);
        assert!(parse_terms(&m, "|⟨λ, nope, 1, 0⟩⟩").is_err());
        assert!(parse_terms(&m, "|1⟩ |1⟩").is_err());
        assert!(parse_terms(&m, "").is_err());
    }
}
