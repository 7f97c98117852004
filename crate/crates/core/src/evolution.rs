// SPDX-License-Identifier: Apache-2.0

//! The time evolution operator, its adjoint, and multi-step computations.
//!
//! On a basis configuration `|C⟩` the operator acts in one of three ways:
//!
//! * counter 0 and state not a target: apply the row `δ₀(q, u)`, writing,
//!   moving and changing state while the counter stays 0;
//! * source state with counter > 0: decrement the counter;
//! * target state: increment the counter.
//!
//! Everything else follows by linearity. The adjoint is built directly from
//! the conjugated table through the machine's reverse index, so both
//! directions stay sparse.

use std::collections::{HashMap, HashSet};
use std::ops::Deref;

use thiserror::Error;

use crate::configuration::{Configuration, QConfiguration};
use crate::machine::{Amplitude, Direction, Machine, Move, Symbol, ValidationReport, DEFAULT_UNITARITY_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("UnvalidatedMachine: {} local condition violation(s)", .report.violations.len())]
    UnvalidatedMachine { report: ValidationReport },
}

impl EvolutionError {
    pub fn name(&self) -> &'static str {
        match self {
            EvolutionError::UnvalidatedMachine { .. } => "UnvalidatedMachine",
        }
    }
}

/// Which of the three evolution cases applies to a basis configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvolutionCase {
    /// Counter 0, state not a target: the transition row applies.
    Transition,
    /// Source state with positive counter: the counter decreases.
    SourceCountdown,
    /// Target state: the counter increases.
    TargetCountup,
}

pub fn evolution_case(m: &Machine, c: &Configuration) -> EvolutionCase {
    if m.is_target(c.state()) {
        EvolutionCase::TargetCountup
    } else if c.counter() > 0 {
        debug_assert!(m.is_source(c.state()), "counter on a plain state");
        EvolutionCase::SourceCountdown
    } else {
        EvolutionCase::Transition
    }
}

/// A machine whose local unitarity conditions have been checked, or
/// explicitly waived for negative tests.
#[derive(Clone, Debug)]
pub struct Qtm {
    machine: Machine,
    report: ValidationReport,
    waived: bool,
}

impl Qtm {
    /// Validates with the default tolerance.
    pub fn new(machine: Machine) -> Result<Self, EvolutionError> {
        Self::with_tolerance(machine, DEFAULT_UNITARITY_TOLERANCE)
    }

    pub fn with_tolerance(machine: Machine, tolerance: f64) -> Result<Self, EvolutionError> {
        let report = machine.validate(tolerance);
        if !report.valid {
            return Err(EvolutionError::UnvalidatedMachine { report });
        }
        Ok(Self { machine, report, waived: false })
    }

    /// Accepts the machine regardless of the validation outcome. Norm is not
    /// preserved by the resulting evolution when the conditions fail.
    pub fn waive_validation(machine: Machine) -> Self {
        let report = machine.validate(DEFAULT_UNITARITY_TOLERANCE);
        Self { machine, report, waived: true }
    }

    pub fn machine(&self) -> &Machine {
        &self.machine
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn is_waived(&self) -> bool {
        self.waived
    }

    pub fn into_machine(self) -> Machine {
        self.machine
    }

    pub fn step(&self, phi: &QConfiguration) -> QConfiguration {
        step(self, phi)
    }

    pub fn step_backward(&self, phi: &QConfiguration) -> QConfiguration {
        step_backward(self, phi)
    }

    pub fn evolve(&self, phi: &QConfiguration, steps: usize) -> QConfiguration {
        evolve(self, phi, steps)
    }

    pub fn computation(&self, phi: QConfiguration) -> Computation<'_> {
        computation(self, phi)
    }
}

impl Deref for Qtm {
    type Target = Machine;

    fn deref(&self) -> &Machine {
        &self.machine
    }
}

/// One application of the time evolution operator.
pub fn step(m: &Qtm, phi: &QConfiguration) -> QConfiguration {
    apply_forward(&m.machine, phi)
}

/// One application of the adjoint (the inverse, for a valid machine).
pub fn step_backward(m: &Qtm, phi: &QConfiguration) -> QConfiguration {
    apply_backward(&m.machine, phi)
}

/// `U^k φ`.
pub fn evolve(m: &Qtm, phi: &QConfiguration, steps: usize) -> QConfiguration {
    let mut current = phi.clone();
    for _ in 0..steps {
        current = step(m, &current);
    }
    current
}

/// The sequence `φ₀, φ₁, …` with `φ_i = U^i φ₀`. Never ends.
pub struct Computation<'a> {
    machine: &'a Qtm,
    next: QConfiguration,
}

pub fn computation(m: &Qtm, phi: QConfiguration) -> Computation<'_> {
    Computation { machine: m, next: phi }
}

impl Iterator for Computation<'_> {
    type Item = QConfiguration;

    fn next(&mut self) -> Option<QConfiguration> {
        let following = step(self.machine, &self.next);
        Some(std::mem::replace(&mut self.next, following))
    }
}

/// Forward evolution without any validation gate. The isometry oracle
/// needs this to probe machines that fail the local conditions.
pub(crate) fn apply_forward(m: &Machine, phi: &QConfiguration) -> QConfiguration {
    let mut out = QConfiguration::new();
    for (c, amp) in phi.iter() {
        forward_basis(m, c, *amp, &mut out);
    }
    out
}

fn forward_basis(m: &Machine, c: &Configuration, amp: Amplitude, out: &mut QConfiguration) {
    match evolution_case(m, c) {
        EvolutionCase::TargetCountup => out.add_term(c.with_counter(c.counter() + 1), amp),
        EvolutionCase::SourceCountdown => out.add_term(c.with_counter(c.counter() - 1), amp),
        EvolutionCase::Transition => {
            let row = m.row(c.state(), c.current_symbol()).expect("rows are total outside target states");
            for (mv, weight) in row.iter() {
                out.add_term(successor(c, mv), amp * weight);
            }
        }
    }
}

/// `C_{p,v,d}`: overwrite the current cell with `v`, move, enter `p`.
/// The tape is extended with blanks on demand and re-canonicalized.
pub(crate) fn successor(c: &Configuration, mv: &Move) -> Configuration {
    let rest = c.right().get(1..).unwrap_or(&[]);
    match mv.dir {
        Direction::R => {
            let mut left = c.left().to_vec();
            left.push(mv.write);
            Configuration::canonical(left, mv.state, rest.to_vec(), 0)
        }
        Direction::L => {
            let mut left = c.left().to_vec();
            let w = left.pop().unwrap_or(Symbol::BLANK);
            let mut right = Vec::with_capacity(rest.len() + 2);
            right.push(w);
            right.push(mv.write);
            right.extend_from_slice(rest);
            Configuration::canonical(left, mv.state, right, 0)
        }
    }
}

pub(crate) fn apply_backward(m: &Machine, phi: &QConfiguration) -> QConfiguration {
    let mut out = QConfiguration::new();
    for (d, amp) in phi.iter() {
        backward_basis(m, d, *amp, &mut out);
    }
    out
}

fn backward_basis(m: &Machine, d: &Configuration, amp: Amplitude, out: &mut QConfiguration) {
    let p = d.state();
    if m.is_source(p) {
        out.add_term(d.with_counter(d.counter() + 1), amp);
        return;
    }
    if m.is_target(p) && d.counter() > 0 {
        out.add_term(d.with_counter(d.counter() - 1), amp);
        return;
    }
    // Counter 0 outside the sources: the preimages are the configurations
    // that reach `d` through one transition.
    let (left, right) = (d.left(), d.right());

    // Arrived moving right: the written symbol is the last one on the left.
    let (alpha, v) = match left.split_last() {
        Some((v, alpha)) => (alpha, *v),
        None => (&[][..], Symbol::BLANK),
    };
    for pred in m.predecessors(&Move { state: p, write: v, dir: Direction::R }) {
        let mut tail = Vec::with_capacity(right.len() + 1);
        tail.push(pred.read);
        tail.extend_from_slice(right);
        let c = Configuration::canonical(alpha.to_vec(), pred.state, tail, 0);
        out.add_term(c, amp * pred.amp.conj());
    }

    // Arrived moving left: the head sits on the old left neighbour `w`,
    // followed by the written symbol `v`.
    let at = |i: usize| right.get(i).copied().unwrap_or(Symbol::BLANK);
    let (w, v) = (at(0), at(1));
    let beta = right.get(2..).unwrap_or(&[]);
    for pred in m.predecessors(&Move { state: p, write: v, dir: Direction::L }) {
        let mut new_left = left.to_vec();
        new_left.push(w);
        let mut tail = Vec::with_capacity(beta.len() + 1);
        tail.push(pred.read);
        tail.extend_from_slice(beta);
        let c = Configuration::canonical(new_left, pred.state, tail, 0);
        out.add_term(c, amp * pred.amp.conj());
    }
}

/// Result of the brute-force isometry probe.
#[derive(Clone, Debug, PartialEq)]
pub struct IsometryReport {
    /// Number of basis configurations whose images were compared.
    pub configurations: usize,
    /// `max |⟨U C_i | U C_j⟩ − δ_ij|` over all collected pairs.
    pub max_deviation: f64,
    /// A pair attaining the maximum (the same configuration twice when the
    /// worst entry is on the diagonal).
    pub worst_pair: Option<(Configuration, Configuration)>,
}

/// Longest left and right tape windows used for seeding. A right-moving and
/// a left-moving transition can only collide on configurations that differ
/// within three cells of the head, so these windows expose every failure
/// of the local conditions.
const SEED_LEFT: usize = 2;
const SEED_RIGHT: usize = 3;
/// Counters given to source and target seeds.
const SEED_COUNTERS: [u64; 3] = [0, 1, 2];

/// Collects every basis configuration reachable within `depth` steps from a
/// seed set of small tapes in every state, then compares the images of all
/// collected configurations pairwise. For a machine satisfying the local
/// conditions the Gram matrix is the identity.
pub fn isometry_check(m: &Machine, depth: usize) -> IsometryReport {
    let mut seen: HashSet<Configuration> = HashSet::new();
    let mut collected: Vec<Configuration> = Vec::new();
    let lefts = words(m, SEED_LEFT);
    let rights = words(m, SEED_RIGHT);
    for q in m.states().states() {
        let counters: &[u64] = if m.is_source(q) || m.is_target(q) { &SEED_COUNTERS } else { &SEED_COUNTERS[..1] };
        for left in &lefts {
            for right in &rights {
                for &n in counters {
                    let c = Configuration::canonical(left.clone(), q, right.clone(), n);
                    if seen.insert(c.clone()) {
                        collected.push(c);
                    }
                }
            }
        }
    }

    let mut frontier = collected.clone();
    let mut images: Vec<QConfiguration> = Vec::new();
    for level in 0..=depth {
        let mut next = Vec::new();
        for c in &frontier {
            let image = apply_forward(m, &QConfiguration::basis(c.clone()));
            if level < depth {
                for d in image.configurations() {
                    if seen.insert(d.clone()) {
                        next.push(d.clone());
                    }
                }
            }
            images.push(image);
        }
        if level < depth {
            collected.extend(next.iter().cloned());
        }
        frontier = next;
    }
    debug_assert_eq!(images.len(), collected.len());

    // Gram entries are nonzero only for pairs whose images share a term.
    let mut by_image: HashMap<&Configuration, Vec<(usize, Amplitude)>> = HashMap::new();
    for (i, image) in images.iter().enumerate() {
        for (d, amp) in image.iter() {
            by_image.entry(d).or_default().push((i, *amp));
        }
    }
    let mut gram: HashMap<(usize, usize), Amplitude> = HashMap::new();
    for hits in by_image.values() {
        for (x, &(i, a)) in hits.iter().enumerate() {
            for &(j, b) in &hits[x + 1..] {
                let key = if i < j { (i, j) } else { (j, i) };
                let term = if i < j { a.conj() * b } else { b.conj() * a };
                *gram.entry(key).or_default() += term;
            }
        }
    }

    let mut max_deviation: f64 = 0.0;
    let mut worst = None;
    for (i, image) in images.iter().enumerate() {
        let dev = (image.norm_sqr() - 1.0).abs();
        if dev > max_deviation {
            max_deviation = dev;
            worst = Some((i, i));
        }
    }
    for (&(i, j), value) in &gram {
        let dev = value.norm();
        if dev > max_deviation {
            max_deviation = dev;
            worst = Some((i, j));
        }
    }
    IsometryReport {
        configurations: collected.len(),
        max_deviation,
        worst_pair: worst.map(|(i, j)| (collected[i].clone(), collected[j].clone())),
    }
}

/// All words over the alphabet of length at most `max_len`.
fn words(m: &Machine, max_len: usize) -> Vec<Vec<Symbol>> {
    let symbols: Vec<Symbol> = m.alphabet().symbols().collect();
    let mut out = vec![vec![]];
    let mut layer = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for s in &symbols {
                let mut w2: Vec<Symbol> = w.clone();
                w2.push(*s);
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compat::{example_p, example_s};
    use crate::configuration::parse_input;

    fn tape(m: &Machine, s: &str) -> Vec<Symbol> {
        s.chars().map(|ch| m.alphabet().lookup(&ch.to_string()).unwrap()).collect()
    }

    fn one() -> Amplitude {
        Amplitude::new(1.0, 0.0)
    }

    #[test]
    fn example_s_first_step() {
        let qtm = Qtm::new(example_s()).unwrap();
        let q1 = qtm.states().lookup("q1").unwrap();
        let phi = QConfiguration::basis(Configuration::canonical(vec![], qtm.initial(), tape(&qtm, "$111"), 0));
        let expected = QConfiguration::basis(Configuration::canonical(tape(&qtm, "$"), q1, tape(&qtm, "111"), 0));
        assert_eq!(qtm.step(&phi), expected);
    }

    #[test]
    fn counters_move_in_sources_and_targets() {
        let qtm = Qtm::new(example_s()).unwrap();
        let t = tape(&qtm, "$1");
        let fin = |n| QConfiguration::basis(Configuration::canonical(t.clone(), qtm.final_state(), t.clone(), n));
        let ini = |n| QConfiguration::basis(Configuration::canonical(t.clone(), qtm.initial(), t.clone(), n));
        assert_eq!(qtm.step(&fin(4)), fin(5));
        assert_eq!(qtm.step(&ini(2)), ini(1));
        assert_eq!(qtm.step_backward(&ini(1)), ini(2));
        assert_eq!(qtm.step_backward(&fin(5)), fin(4));
    }

    #[test]
    fn evolve_zero_steps_is_identity() {
        let qtm = Qtm::new(example_p()).unwrap();
        let phi = parse_input(&qtm, "1/sqrt(2)|0̄⟩ + 1/sqrt(2)|2̄⟩").unwrap();
        assert_eq!(qtm.evolve(&phi, 0), phi);
    }

    #[test]
    fn example_p_predecessor_trace() {
        let qtm = Qtm::new(example_p()).unwrap();
        let phi = parse_input(&qtm, "1|2̄⟩").unwrap();
        let out = qtm.evolve(&phi, 2);
        let expected = QConfiguration::basis(Configuration::canonical(vec![], qtm.final_state(), tape(&qtm, "1"), 0));
        assert_eq!(out, expected);
        assert_eq!(out.configurations().next().unwrap().val(), 1);
    }

    #[test]
    fn computation_iterator_matches_evolve() {
        let qtm = Qtm::new(example_s()).unwrap();
        let phi = parse_input(&qtm, "|$1̄⟩").unwrap();
        let seq: Vec<_> = qtm.computation(phi.clone()).take(6).collect();
        for (k, psi) in seq.iter().enumerate() {
            assert_eq!(psi, &qtm.evolve(&phi, k));
        }
    }

    #[test]
    fn unvalidated_machine_is_refused_unless_waived() {
        let m = example_s();
        let q1 = m.states().lookup("q1").unwrap();
        let bad = m.with_row(q1, Symbol::ONE, m.row(q1, Symbol::BLANK).unwrap().clone()).unwrap();
        assert!(matches!(Qtm::new(bad.clone()), Err(EvolutionError::UnvalidatedMachine { .. })));
        let waived = Qtm::waive_validation(bad);
        assert!(waived.is_waived());
        assert!(!waived.report().valid);
    }

    #[test]
    fn isometry_of_reference_machines() {
        for m in [example_p(), example_s()] {
            let r = isometry_check(&m, 5);
            assert!(r.max_deviation <= 1e-8, "{}: {}", m.name(), r.max_deviation);
        }
    }

    #[test]
    fn isometry_flags_duplicated_row() {
        let m = example_s();
        let q1 = m.states().lookup("q1").unwrap();
        let bad = m.with_row(q1, Symbol::ONE, m.row(q1, Symbol::BLANK).unwrap().clone()).unwrap();
        let r = isometry_check(&bad, 5);
        assert!((r.max_deviation - 1.0).abs() < 1e-9, "{}", r.max_deviation);
    }

    #[test]
    fn classical_permutation_machine_is_exactly_isometric() {
        let m = example_p();
        let r = isometry_check(&m, 3);
        assert_eq!(r.max_deviation, 0.0);
    }

    #[test]
    fn every_basis_configuration_is_in_exactly_one_case() {
        for m in [example_p(), example_s()] {
            for q in m.states().states() {
                let counters: &[u64] = if m.is_source(q) || m.is_target(q) { &[0, 1, 7] } else { &[0] };
                for &n in counters {
                    let c = Configuration::canonical(vec![], q, vec![Symbol::ONE], n);
                    let transition = n == 0 && !m.is_target(q);
                    let countdown = m.is_source(q) && n > 0;
                    let countup = m.is_target(q);
                    assert_eq!([transition, countdown, countup].iter().filter(|b| **b).count(), 1);
                    let expected = if transition {
                        EvolutionCase::Transition
                    } else if countdown {
                        EvolutionCase::SourceCountdown
                    } else {
                        EvolutionCase::TargetCountup
                    };
                    assert_eq!(evolution_case(&m, &c), expected);
                }
            }
        }
    }

    #[test]
    fn left_moves_extend_the_tape() {
        // single rule set where q0 moves left on every symbol
        let d = crate::machine::MachineDescription {
            name: "left".into(),
            alphabet: vec!["_".into(), "1".into()],
            states: vec!["q0".into(), "qf".into()],
            sources: vec!["q0".into()],
            targets: vec!["qf".into()],
            initial: "q0".into(),
            final_state: "qf".into(),
            rules: vec![
                crate::machine::RuleSpec::new("q0", "_", "qf", "1", Direction::L, one()),
                crate::machine::RuleSpec::new("q0", "1", "qf", "_", Direction::L, one()),
            ],
        };
        let qtm = Qtm::new(crate::machine::build_machine(&d).unwrap()).unwrap();
        let start = QConfiguration::basis(Configuration::canonical(vec![], qtm.initial(), vec![], 0));
        let next = qtm.step(&start);
        let expected = Configuration::canonical(vec![], qtm.final_state(), tape(&qtm, "_1"), 0);
        assert_eq!(next, QConfiguration::basis(expected));
        assert_eq!(qtm.step_backward(&next), start);
    }
}
