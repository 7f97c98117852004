// SPDX-License-Identifier: Apache-2.0

//! Machine file format.
//!
//! ```text
//! # comment
//! machine example_p
//! alphabet: 1, _
//! states: q0, q1, q2, qf, p
//! sources: q0
//! targets: qf, p
//! initial: q0
//! final: qf
//! q0 , 1 -> q1 , _ , R : 1
//! ```
//!
//! A bare `bv` line marks a machine with a final-to-initial loop; a bare
//! `counterless` line marks an encoded machine whose rows may be partial.
//! Several rule lines may share a `(q, a)` row.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::amp_expr::parse_amplitude;
use super::format::exact_complex;
use crate::compat::{BvMachine, CompatError, PlainMachine};
use crate::machine::{build_machine, Direction, Machine, MachineDescription, MachineError, RuleSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MachineFileError {
    #[error("SyntaxError: line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Compat(#[from] CompatError),
}

impl MachineFileError {
    pub fn name(&self) -> &'static str {
        match self {
            MachineFileError::Syntax { .. } => "SyntaxError",
            MachineFileError::Machine(e) => e.name(),
            MachineFileError::Compat(e) => e.name(),
        }
    }
}

/// Which presentation a file declares.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MachineKind {
    Qtm,
    Bv,
    Counterless,
}

/// A file parsed into its name-level form plus the declared kind.
#[derive(Clone, Debug, PartialEq)]
pub struct MachineSource {
    pub kind: MachineKind,
    pub description: MachineDescription,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParsedMachine {
    Qtm(Machine),
    Bv(BvMachine),
    Counterless(PlainMachine),
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> MachineFileError {
    MachineFileError::Syntax { line, col, message: message.into() }
}

fn char_col(line: &str, byte: usize) -> usize {
    line[..byte].chars().count() + 1
}

fn list(value: &str) -> Vec<String> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

/// Parses the text into names, checking syntax and duplicate rule keys
/// but not machine semantics.
pub fn parse_source(text: &str) -> Result<MachineSource, MachineFileError> {
    let mut name = None;
    let mut kind = MachineKind::Qtm;
    let mut headers: BTreeMap<&str, (usize, String)> = BTreeMap::new();
    let mut rules = Vec::new();
    let mut keys: BTreeMap<(String, String, String, String, Direction), usize> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = raw.split('#').next().unwrap_or("");
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = char_col(line, line.len() - line.trim_start().len());
        if name.is_none() {
            let Some(n) = trimmed.strip_prefix("machine").filter(|r| r.starts_with(char::is_whitespace)) else {
                return Err(syntax(ln, indent, "expected `machine NAME` as the first line"));
            };
            name = Some(n.trim().to_string());
            continue;
        }
        match trimmed {
            "bv" | "counterless" => {
                if kind != MachineKind::Qtm {
                    return Err(syntax(ln, indent, "at most one `bv` or `counterless` flag"));
                }
                kind = if trimmed == "bv" { MachineKind::Bv } else { MachineKind::Counterless };
                continue;
            }
            _ => {}
        }
        if let Some(arrow) = line.find("->") {
            let spec = parse_rule(line, arrow, ln)?;
            let key = (spec.from.clone(), spec.read.clone(), spec.to.clone(), spec.write.clone(), spec.dir);
            if let Some(first) = keys.insert(key, ln) {
                return Err(syntax(
                    ln,
                    indent,
                    format!("duplicate rule `{spec}` (first on line {first}, again on line {ln})"),
                ));
            }
            rules.push(spec);
            continue;
        }
        let Some(colon) = line.find(':') else {
            return Err(syntax(ln, indent, "expected `key: value` or a rule `q , a -> p , b , D : amp`"));
        };
        let key = line[..colon].trim();
        let known = ["alphabet", "states", "sources", "targets", "initial", "final"];
        let Some(key) = known.iter().find(|k| **k == key) else {
            return Err(syntax(ln, indent, format!("unknown header `{key}`")));
        };
        if let Some((first, _)) = headers.get(key) {
            return Err(syntax(ln, indent, format!("header `{key}` repeated (first on line {first})")));
        }
        headers.insert(key, (ln, line[colon + 1..].trim().to_string()));
    }
    let name = name.ok_or_else(|| syntax(1, 1, "empty machine file"))?;
    let mut take = |key: &str| -> Result<String, MachineFileError> {
        headers
            .remove(key)
            .map(|(_, v)| v)
            .ok_or_else(|| syntax(text.lines().count().max(1), 1, format!("missing header `{key}`")))
    };
    let description = MachineDescription {
        name,
        alphabet: list(&take("alphabet")?),
        states: list(&take("states")?),
        sources: list(&take("sources")?),
        targets: list(&take("targets")?),
        initial: take("initial")?,
        final_state: take("final")?,
        rules,
    };
    Ok(MachineSource { kind, description })
}

fn parse_rule(line: &str, arrow: usize, ln: usize) -> Result<RuleSpec, MachineFileError> {
    let lhs = &line[..arrow];
    let rhs_start = arrow + 2;
    let rhs_all = &line[rhs_start..];
    let Some(colon) = rhs_all.find(':') else {
        return Err(syntax(ln, char_col(line, line.len()), "`:` before the amplitude"));
    };
    let rhs = &rhs_all[..colon];
    let amp_start = rhs_start + colon + 1;
    let lhs_parts: Vec<&str> = lhs.split(',').map(str::trim).collect();
    if lhs_parts.len() != 2 || lhs_parts.iter().any(|p| p.is_empty()) {
        return Err(syntax(ln, char_col(line, 0), "`state , symbol` before `->`"));
    }
    let rhs_parts: Vec<&str> = rhs.split(',').map(str::trim).collect();
    if rhs_parts.len() != 3 || rhs_parts.iter().any(|p| p.is_empty()) {
        return Err(syntax(ln, char_col(line, rhs_start), "`state , symbol , L|R` after `->`"));
    }
    let dir = match rhs_parts[2] {
        "L" => Direction::L,
        "R" => Direction::R,
        _ => {
            let at = rhs_start + rhs.rfind(rhs_parts[2]).unwrap_or(0);
            return Err(syntax(ln, char_col(line, at), "direction `L` or `R`"));
        }
    };
    let amp = parse_amplitude(&line[amp_start..])
        .map_err(|e| syntax(ln, char_col(line, amp_start) + e.col - 1, format!("amplitude: {}", e.expected)))?;
    Ok(RuleSpec::new(lhs_parts[0], lhs_parts[1], rhs_parts[0], rhs_parts[1], dir, amp))
}

/// Parses and builds whichever machine the file declares.
pub fn parse_machine(text: &str) -> Result<ParsedMachine, MachineFileError> {
    let src = parse_source(text)?;
    Ok(match src.kind {
        MachineKind::Qtm => ParsedMachine::Qtm(build_machine(&src.description)?),
        MachineKind::Bv => ParsedMachine::Bv(BvMachine::from_description(&src.description)?),
        MachineKind::Counterless => ParsedMachine::Counterless(PlainMachine::from_description(&src.description)?),
    })
}

/// Parses a file that must declare an ordinary machine.
pub fn parse_qtm(text: &str) -> Result<Machine, MachineFileError> {
    let src = parse_source(text)?;
    if src.kind != MachineKind::Qtm {
        return Err(syntax(1, 1, "expected a machine without `bv` or `counterless` flag"));
    }
    Ok(build_machine(&src.description)?)
}

/// Prints a description so that [`parse_source`] returns it unchanged.
pub fn print_machine(d: &MachineDescription, kind: MachineKind) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "machine {}", d.name);
    match kind {
        MachineKind::Qtm => {}
        MachineKind::Bv => out.push_str("bv\n"),
        MachineKind::Counterless => out.push_str("counterless\n"),
    }
    let _ = writeln!(out, "alphabet: {}", d.alphabet.join(", "));
    let _ = writeln!(out, "states: {}", d.states.join(", "));
    let _ = writeln!(out, "sources: {}", d.sources.join(", "));
    let _ = writeln!(out, "targets: {}", d.targets.join(", "));
    let _ = writeln!(out, "initial: {}", d.initial);
    let _ = writeln!(out, "final: {}", d.final_state);
    for r in &d.rules {
        let _ = writeln!(out, "{r} : {}", exact_complex(r.amp));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compat::{example_p, example_s};
    use crate::machine::Amplitude;

    const HEADER: &str =
        "machine t\nalphabet: 1, _\nstates: q0, qf\nsources: q0\ntargets: qf\ninitial: q0\nfinal: qf\n";

    #[test]
    fn rule_amplitude() {
        let text = format!("{HEADER}q0 , 1 -> qf , 1 , R : 1/sqrt(2)\nq0 , _ -> qf , _ , R : 1\n");
        let src = parse_source(&text).unwrap();
        assert!((src.description.rules[0].amp - Amplitude::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn duplicate_key_cites_both_lines() {
        let text = format!("{HEADER}q0 , 1 -> qf , 1 , R : 0.5\nq0 , 1 -> qf , 1 , R : 0.5\n");
        let err = parse_source(&text).unwrap_err();
        assert_eq!(err.name(), "SyntaxError");
        let msg = err.to_string();
        assert!(msg.contains("line 8") && msg.contains("line 9"), "{msg}");
    }

    #[test]
    fn diagnostics_have_positions() {
        let text = format!("{HEADER}q0 , 1 -> qf , 1 , X : 1\n");
        assert_eq!(
            parse_source(&text).unwrap_err(),
            MachineFileError::Syntax { line: 8, col: 20, message: "direction `L` or `R`".into() }
        );
        let text = format!("{HEADER}q0 , 1 -> qf , 1 , R : 1/\n");
        assert!(matches!(parse_source(&text).unwrap_err(), MachineFileError::Syntax { line: 8, col: 26, .. }));
        assert!(matches!(parse_source("alphabet: 1").unwrap_err(), MachineFileError::Syntax { line: 1, .. }));
        let text = HEADER.replace("final: qf\n", "");
        assert!(parse_source(&text).unwrap_err().to_string().contains("missing header `final`"));
    }

    #[test]
    fn semantic_errors_are_forwarded() {
        let text = format!("{HEADER}q0 , 1 -> qf , 1 , R : 1\n");
        assert_eq!(parse_machine(&text).unwrap_err().name(), "MissingRow");
    }

    #[test]
    fn print_parse_round_trip() {
        for m in [example_p(), example_s()] {
            let text = print_machine(&m.to_description(), MachineKind::Qtm);
            assert_eq!(parse_qtm(&text).unwrap(), m);
        }
    }

    #[test]
    fn golden_files_match_reference_machines() {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/machines");
        let p = std::fs::read_to_string(format!("{dir}/example_p.qtm")).unwrap();
        let s = std::fs::read_to_string(format!("{dir}/example_s.qtm")).unwrap();
        assert_eq!(parse_qtm(&p).unwrap(), example_p());
        assert_eq!(parse_qtm(&s).unwrap(), example_s());
    }
}
