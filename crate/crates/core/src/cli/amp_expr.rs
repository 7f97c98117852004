// SPDX-License-Identifier: Apache-2.0

//! Amplitude expressions: `[-] factor (('*'|'/') factor)*` with
//! `factor := decimal | sqrt(decimal)`, optionally combined into
//! `expr + expr i`, `expr - expr i` or `expr i`. Whitespace is ignored.

use thiserror::Error;

use crate::machine::Amplitude;

/// A failure at a 1-based character column of the parsed text.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("column {col}: expected {expected}")]
pub struct AmpSyntaxError {
    pub col: usize,
    pub expected: String,
}

/// Character cursor shared by the amplitude, ket and machine-file parsers.
#[derive(Clone, Debug)]
pub(crate) struct Cursor {
    chars: Vec<char>,
    pos: usize,
}

impl Cursor {
    pub(crate) fn new(text: &str) -> Self {
        Self { chars: text.chars().collect(), pos: 0 }
    }

    /// 1-based column of the next unread character.
    pub(crate) fn col(&self) -> usize {
        self.pos + 1
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    /// Next non-whitespace character, not consumed.
    pub(crate) fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    /// Character after the next one, whitespace included.
    pub(crate) fn peek_raw(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    pub(crate) fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied();
        self.pos += usize::from(c.is_some());
        c
    }

    pub(crate) fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_any(&mut self, cs: &[char]) -> bool {
        match self.peek() {
            Some(c) if cs.contains(&c) => {
                self.pos += 1;
                true
            }
            _ => false,
        }
    }

    pub(crate) fn eat_str(&mut self, s: &str) -> bool {
        self.skip_ws();
        let n = s.chars().count();
        if self.chars.len() >= self.pos + n && self.chars[self.pos..self.pos + n].iter().copied().eq(s.chars()) {
            self.pos += n;
            true
        } else {
            false
        }
    }

    pub(crate) fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    pub(crate) fn error(&mut self, expected: impl Into<String>) -> AmpSyntaxError {
        self.skip_ws();
        AmpSyntaxError { col: self.col(), expected: expected.into() }
    }

    /// Raw remainder as a string, from the current position.
    pub(crate) fn rest(&self) -> String {
        self.chars[self.pos.min(self.chars.len())..].iter().collect()
    }

    fn decimal(&mut self) -> Result<f64, AmpSyntaxError> {
        self.skip_ws();
        let start = self.pos;
        let digits = |cur: &mut Cursor| {
            let s = cur.pos;
            while cur.chars.get(cur.pos).is_some_and(char::is_ascii_digit) {
                cur.pos += 1;
            }
            cur.pos - s
        };
        let mut n = digits(self);
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.error("a decimal number"));
        }
        if matches!(self.chars.get(self.pos), Some('e' | 'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.chars.get(self.pos), Some('+' | '-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = mark;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse().map_err(|_| AmpSyntaxError { col: start + 1, expected: "a decimal number".into() })
    }

    fn factor(&mut self) -> Result<f64, AmpSyntaxError> {
        if self.eat_str("sqrt") {
            if !self.eat('(') {
                return Err(self.error("`(`"));
            }
            let x = self.decimal()?;
            if !self.eat(')') {
                return Err(self.error("`)`"));
            }
            Ok(x.sqrt())
        } else {
            self.decimal()
        }
    }

    /// True when the next token can start a real expression.
    pub(crate) fn starts_expr(&mut self) -> bool {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == '.' => true,
            Some('s') => self.peek_raw(1) == Some('q'),
            _ => false,
        }
    }

    /// `[-] factor (('*'|'/') factor)*`.
    pub(crate) fn real_expr(&mut self) -> Result<f64, AmpSyntaxError> {
        let sign = if self.eat('-') { -1.0 } else { 1.0 };
        let mut value = self.factor()?;
        loop {
            if self.eat('*') {
                // `*` directly before a ket belongs to the term, not the product.
                if !self.starts_expr() {
                    self.pos -= 1;
                    break;
                }
                value *= self.factor()?;
            } else if self.eat('/') {
                value /= self.factor()?;
            } else {
                break;
            }
        }
        Ok(sign * value)
    }

    /// A full complex amplitude as described in the module header.
    pub(crate) fn amplitude(&mut self) -> Result<Amplitude, AmpSyntaxError> {
        let first = self.real_expr()?;
        if self.eat('i') {
            return Ok(Amplitude::new(0.0, first));
        }
        let save = self.pos;
        let sign = if self.eat('+') {
            1.0
        } else if self.eat('-') {
            -1.0
        } else {
            return Ok(Amplitude::new(first, 0.0));
        };
        if !self.starts_expr() {
            self.pos = save;
            return Ok(Amplitude::new(first, 0.0));
        }
        let second = self.real_expr()?;
        if !self.eat('i') {
            return Err(self.error("`i` after the imaginary part"));
        }
        Ok(Amplitude::new(first, sign * second))
    }
}

/// Parses a complete amplitude expression.
pub fn parse_amplitude(text: &str) -> Result<Amplitude, AmpSyntaxError> {
    let mut cur = Cursor::new(text);
    let a = cur.amplitude()?;
    if !cur.at_end() {
        return Err(cur.error("end of amplitude"));
    }
    if !(a.re.is_finite() && a.im.is_finite()) {
        return Err(AmpSyntaxError { col: 1, expected: "a finite amplitude".into() });
    }
    Ok(a)
}
