// SPDX-License-Identifier: Apache-2.0

//! Canonical configurations with counters and finite superpositions of them.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::machine::{Amplitude, Machine, State, Symbol};

/// Terms whose magnitude falls below this are dropped after arithmetic.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// Tolerance on the squared norm of an input superposition.
pub const INPUT_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigurationError {
    #[error("NonZeroCounterOnPlainState: state `{state}` carries counter {counter}")]
    NonZeroCounterOnPlainState { state: String, counter: u64 },
    #[error("UnknownState: state id {0} is not part of the machine")]
    UnknownState(u32),
    #[error("UnknownSymbol: symbol id {0} is not part of the machine alphabet")]
    UnknownSymbol(u32),
}

impl ConfigurationError {
    pub fn name(&self) -> &'static str {
        match self {
            ConfigurationError::NonZeroCounterOnPlainState { .. } => "NonZeroCounterOnPlainState",
            ConfigurationError::UnknownState(_) => "UnknownState",
            ConfigurationError::UnknownSymbol(_) => "UnknownSymbol",
        }
    }
}

/// `⟨α, q, β⟩` in canonical form: `α` has no leading blank, `β` no
/// trailing blank. The head reads the first symbol of `β` (blank if empty).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlainConfiguration {
    pub state: State,
    pub left: Vec<Symbol>,
    pub right: Vec<Symbol>,
}

impl PlainConfiguration {
    pub fn new(left: Vec<Symbol>, state: State, right: Vec<Symbol>) -> Self {
        let mut c = Self { state, left, right };
        trim(&mut c.left, &mut c.right);
        c
    }

    pub fn current_symbol(&self) -> Symbol {
        self.right.first().copied().unwrap_or(Symbol::BLANK)
    }
}

/// `⟨α, q, β, n⟩`: a canonical plain configuration plus its counter.
///
/// Ordered by state id, then counter, then `α` and `β` lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    state: State,
    counter: u64,
    left: Vec<Symbol>,
    right: Vec<Symbol>,
}

impl Ord for Configuration {
    fn cmp(&self, other: &Self) -> Ordering {
        self.state
            .cmp(&other.state)
            .then(self.counter.cmp(&other.counter))
            .then_with(|| self.left.cmp(&other.left))
            .then_with(|| self.right.cmp(&other.right))
    }
}

impl PartialOrd for Configuration {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn trim(left: &mut Vec<Symbol>, right: &mut Vec<Symbol>) {
    let lead = left.iter().take_while(|s| s.is_blank()).count();
    if lead > 0 {
        left.drain(..lead);
    }
    while right.last().is_some_and(|s| s.is_blank()) {
        right.pop();
    }
}

impl Configuration {
    /// Canonical configuration without checking the counter discipline.
    /// Callers inside the crate use this when the discipline holds by
    /// construction.
    pub fn canonical(left: Vec<Symbol>, state: State, right: Vec<Symbol>, counter: u64) -> Self {
        let mut c = Self { state, counter, left, right };
        trim(&mut c.left, &mut c.right);
        c
    }

    pub fn from_plain(plain: PlainConfiguration, counter: u64) -> Self {
        Self::canonical(plain.left, plain.state, plain.right, counter)
    }

    pub fn state(&self) -> State {
        self.state
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn left(&self) -> &[Symbol] {
        &self.left
    }

    pub fn right(&self) -> &[Symbol] {
        &self.right
    }

    pub fn plain(&self) -> PlainConfiguration {
        PlainConfiguration { state: self.state, left: self.left.clone(), right: self.right.clone() }
    }

    pub fn current_symbol(&self) -> Symbol {
        self.right.first().copied().unwrap_or(Symbol::BLANK)
    }

    /// Same tape and state, different counter.
    pub fn with_counter(&self, counter: u64) -> Self {
        Self { counter, ..self.clone() }
    }

    /// Number of `1` symbols on the tape.
    pub fn val(&self) -> u64 {
        val(self)
    }

    pub fn display<'a>(&'a self, m: &'a Machine) -> ConfigurationDisplay<'a> {
        ConfigurationDisplay { config: self, machine: m }
    }
}

/// Strips leading blanks of `α` and trailing blanks of `β`, after checking
/// that only source and target states carry a nonzero counter.
pub fn canonicalize(
    m: &Machine,
    left: Vec<Symbol>,
    state: State,
    right: Vec<Symbol>,
    counter: u64,
) -> Result<Configuration, ConfigurationError> {
    if !m.states().contains(state) {
        return Err(ConfigurationError::UnknownState(state.id()));
    }
    if let Some(s) = left.iter().chain(&right).find(|s| !m.alphabet().contains(**s)) {
        return Err(ConfigurationError::UnknownSymbol(s.id()));
    }
    if counter != 0 && !m.is_source(state) && !m.is_target(state) {
        return Err(ConfigurationError::NonZeroCounterOnPlainState {
            state: m.states().name(state).to_string(),
            counter,
        });
    }
    Ok(Configuration::canonical(left, state, right, counter))
}

/// Count of `1` symbols in `αβ`.
pub fn val(c: &Configuration) -> u64 {
    c.left.iter().chain(&c.right).filter(|s| **s == Symbol::ONE).count() as u64
}

/// Membership of a configuration's state in the distinguished state sets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Classification {
    pub source: bool,
    pub target: bool,
    pub initial: bool,
    pub final_: bool,
}

pub fn classify(m: &Machine, c: &Configuration) -> Result<Classification, ConfigurationError> {
    let q = c.state;
    if !m.states().contains(q) {
        return Err(ConfigurationError::UnknownState(q.id()));
    }
    Ok(Classification {
        source: m.is_source(q),
        target: m.is_target(q),
        initial: q == m.initial(),
        final_: q == m.final_state(),
    })
}

pub struct ConfigurationDisplay<'a> {
    config: &'a Configuration,
    machine: &'a Machine,
}

/// Writes a tape half, `λ` when empty. Single-character symbol names are
/// concatenated; longer names are separated by spaces.
pub(crate) fn write_tape(f: &mut impl fmt::Write, m: &Machine, tape: &[Symbol]) -> fmt::Result {
    if tape.is_empty() {
        return f.write_str("λ");
    }
    let names: Vec<&str> = tape.iter().map(|s| m.alphabet().name(*s)).collect();
    if names.iter().all(|n| n.chars().count() == 1) {
        for n in names {
            f.write_str(n)?;
        }
        Ok(())
    } else {
        f.write_str(&names.join(" "))
    }
}

impl fmt::Display for ConfigurationDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.machine;
        f.write_str("⟨")?;
        write_tape(f, m, &self.config.left)?;
        write!(f, ", {}, ", m.states().name(self.config.state))?;
        write_tape(f, m, &self.config.right)?;
        write!(f, ", {}⟩", self.config.counter)
    }
}

/// Finite-support superposition `Σ e_C |C⟩`. Zero terms are never stored.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QConfiguration {
    terms: BTreeMap<Configuration, Amplitude>,
}

impl QConfiguration {
    pub fn new() -> Self {
        Self::default()
    }

    /// The basis vector `|C⟩`.
    pub fn basis(c: Configuration) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(c, Amplitude::new(1.0, 0.0));
        Self { terms }
    }

    /// Adds `amp` to the coefficient of `c`, dropping the term if the sum
    /// vanishes below the prune threshold.
    pub fn add_term(&mut self, c: Configuration, amp: Amplitude) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(c) {
            Entry::Vacant(e) => {
                if amp.norm() >= PRUNE_THRESHOLD {
                    e.insert(amp);
                }
            }
            Entry::Occupied(mut e) => {
                let sum = *e.get() + amp;
                if sum.norm() < PRUNE_THRESHOLD {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn get(&self, c: &Configuration) -> Amplitude {
        self.terms.get(c).copied().unwrap_or_default()
    }

    pub fn contains(&self, c: &Configuration) -> bool {
        self.terms.contains_key(c)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Configuration, &Amplitude)> {
        self.terms.iter()
    }

    pub fn configurations(&self) -> impl Iterator<Item = &Configuration> {
        self.terms.keys()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &QConfiguration) -> Amplitude {
        inner_product(self, other)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, factor: Amplitude) -> QConfiguration {
        self.terms.iter().map(|(c, a)| (c.clone(), a * factor)).collect()
    }

    pub fn add(&self, other: &QConfiguration) -> QConfiguration {
        let mut out = self.clone();
        for (c, a) in &other.terms {
            out.add_term(c.clone(), *a);
        }
        out
    }

    /// Keeps only the terms satisfying `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Configuration) -> bool) -> QConfiguration {
        Self { terms: self.terms.iter().filter(|(c, _)| keep(c)).map(|(c, a)| (c.clone(), *a)).collect() }
    }

    /// Largest coefficient-wise distance to `other`.
    pub fn max_coefficient_distance(&self, other: &QConfiguration) -> f64 {
        let mut worst: f64 = 0.0;
        for (c, a) in &self.terms {
            worst = worst.max((a - other.get(c)).norm());
        }
        for (c, b) in &other.terms {
            if !self.terms.contains_key(c) {
                worst = worst.max(b.norm());
            }
        }
        worst
    }

    pub fn display<'a>(&'a self, m: &'a Machine) -> QConfigurationDisplay<'a> {
        QConfigurationDisplay { q: self, machine: m }
    }
}

impl FromIterator<(Configuration, Amplitude)> for QConfiguration {
    fn from_iter<T: IntoIterator<Item = (Configuration, Amplitude)>>(iter: T) -> Self {
        let mut q = QConfiguration::new();
        for (c, a) in iter {
            q.add_term(c, a);
        }
        q
    }
}

/// `⟨φ|ψ⟩ = Σ conj(φ(C)) ψ(C)`.
pub fn inner_product(phi: &QConfiguration, psi: &QConfiguration) -> Amplitude {
    let (small, large, swap) = if phi.len() <= psi.len() { (phi, psi, false) } else { (psi, phi, true) };
    small
        .terms
        .iter()
        .filter_map(|(c, a)| large.terms.get(c).map(|b| (a, b)))
        .map(|(a, b)| if swap { b.conj() * a } else { a.conj() * b })
        .sum()
}

pub fn norm(phi: &QConfiguration) -> f64 {
    phi.norm()
}

pub struct QConfigurationDisplay<'a> {
    q: &'a QConfiguration,
    machine: &'a Machine,
}

impl fmt::Display for QConfigurationDisplay<'_> {
    /// One term per line, `amplitude<TAB>configuration`, sorted by
    /// configuration order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, a) in self.q.iter() {
            writeln!(f, "{}\t{}", crate::cli::format::complex(*a), c.display(self.machine))?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InputError {
    #[error("SyntaxError: {0}")]
    Syntax(#[from] crate::cli::input::KetSyntaxError),
    #[error("NotNormalized: squared norm {0}")]
    NotNormalized(f64),
    #[error("NonInitialTerm: {0}")]
    NonInitialTerm(String),
    #[error(transparent)]
    Configuration(#[from] ConfigurationError),
}

impl InputError {
    pub fn name(&self) -> &'static str {
        match self {
            InputError::Syntax(_) => "SyntaxError",
            InputError::NotNormalized(_) => "NotNormalized",
            InputError::NonInitialTerm(_) => "NonInitialTerm",
            InputError::Configuration(e) => e.name(),
        }
    }
}

/// Parses a superposition written in ket notation, without restricting
/// which configurations may appear. The result need not be normalized.
pub fn parse_qconfiguration(m: &Machine, text: &str) -> Result<QConfiguration, InputError> {
    let terms = crate::cli::input::parse_terms(m, text)?;
    let mut q = QConfiguration::new();
    for term in terms {
        let c = match term.ket {
            crate::cli::input::Ket::Tape(tape) => canonicalize(m, vec![], m.initial(), tape, 0)?,
            crate::cli::input::Ket::Full { left, state, right, counter } => {
                canonicalize(m, left, state, right, counter)?
            }
        };
        q.add_term(c, term.amp);
    }
    Ok(q)
}

/// Parses an initial superposition: every term must be an initial
/// configuration (initial state, counter 0) and the squared norm must be
/// 1 within [`INPUT_NORM_TOLERANCE`].
pub fn parse_input(m: &Machine, text: &str) -> Result<QConfiguration, InputError> {
    let q = parse_qconfiguration(m, text)?;
    check_initial(m, &q)?;
    Ok(q)
}

/// Checks that `q` is a normalized superposition of initial configurations.
pub fn check_initial(m: &Machine, q: &QConfiguration) -> Result<(), InputError> {
    if let Some(c) = q.configurations().find(|c| c.state() != m.initial() || c.counter() != 0) {
        return Err(InputError::NonInitialTerm(c.display(m).to_string()));
    }
    let mass = q.norm_sqr();
    if (mass - 1.0).abs() > INPUT_NORM_TOLERANCE {
        return Err(InputError::NotNormalized(mass));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compat::{example_p, example_s};
    use proptest::prelude::*;

    fn tape(m: &Machine, s: &str) -> Vec<Symbol> {
        s.chars().map(|ch| m.alphabet().lookup(&ch.to_string()).unwrap()).collect()
    }

    #[test]
    fn canonicalize_strips_padding() {
        let m = example_p();
        let q1 = m.states().lookup("q1").unwrap();
        let c = canonicalize(&m, tape(&m, "__1"), q1, tape(&m, "1__"), 0).unwrap();
        assert_eq!(c.left(), tape(&m, "1").as_slice());
        assert_eq!(c.right(), tape(&m, "1").as_slice());
        let empty = canonicalize(&m, vec![], q1, tape(&m, "_"), 0).unwrap();
        assert!(empty.left().is_empty() && empty.right().is_empty());
        assert_eq!(empty.current_symbol(), Symbol::BLANK);
    }

    #[test]
    fn counter_on_plain_state_is_rejected() {
        let m = example_p();
        let q1 = m.states().lookup("q1").unwrap();
        assert_eq!(
            canonicalize(&m, vec![], q1, tape(&m, "1"), 5),
            Err(ConfigurationError::NonZeroCounterOnPlainState { state: "q1".into(), counter: 5 })
        );
        let qf = m.final_state();
        assert!(canonicalize(&m, vec![], qf, tape(&m, "1"), 5).is_ok());
    }

    #[test]
    fn val_counts_ones() {
        let m = example_s();
        let qf = m.final_state();
        assert_eq!(Configuration::canonical(tape(&m, "11"), qf, tape(&m, "1"), 3).val(), 3);
        assert_eq!(Configuration::canonical(vec![], qf, vec![], 0).val(), 0);
        assert_eq!(Configuration::canonical(tape(&m, "$"), qf, tape(&m, "111"), 0).val(), 3);
    }

    #[test]
    fn classify_flags() {
        let m = example_s();
        let qf = Configuration::canonical(vec![], m.final_state(), vec![], 0);
        assert_eq!(classify(&m, &qf).unwrap(), Classification { target: true, final_: true, ..Default::default() });
        let qi = Configuration::canonical(vec![], m.initial(), vec![], 0);
        assert_eq!(classify(&m, &qi).unwrap(), Classification { source: true, initial: true, ..Default::default() });
        let q1 = Configuration::canonical(vec![], m.states().lookup("q1").unwrap(), vec![], 0);
        assert_eq!(classify(&m, &q1).unwrap(), Classification::default());
        let ghost = Configuration::canonical(vec![], State::from_id(99), vec![], 0);
        assert_eq!(classify(&m, &ghost), Err(ConfigurationError::UnknownState(99)));
    }

    #[test]
    fn inner_products_of_basis_vectors() {
        let m = example_p();
        let c = QConfiguration::basis(Configuration::canonical(vec![], m.initial(), tape(&m, "1"), 0));
        let d = QConfiguration::basis(Configuration::canonical(vec![], m.initial(), tape(&m, "11"), 0));
        assert_eq!(c.inner_product(&c), Amplitude::new(1.0, 0.0));
        assert_eq!(c.inner_product(&d), Amplitude::new(0.0, 0.0));
        let h = Amplitude::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let sum = c.scale(h).add(&d.scale(h));
        assert!((sum.norm() - 1.0).abs() < 1e-12);
        let i = Amplitude::new(0.0, 1.0);
        // conjugate-linear in the first argument
        assert_eq!(c.scale(i).inner_product(&c), -i);
    }

    #[test]
    fn parse_input_examples() {
        let m = example_p();
        let q = parse_input(&m, "1/sqrt(2) |0̄⟩ + 1/sqrt(2) |2̄⟩").unwrap();
        let tapes: Vec<_> = q.configurations().map(|c| c.right().len()).collect();
        assert_eq!(tapes, vec![1, 3]);
        let q = parse_input(&m, "1 |3̄⟩").unwrap();
        assert_eq!(q.configurations().next().unwrap().right(), tape(&m, "1111").as_slice());
        assert!(matches!(
            parse_input(&m, "0.5 |0̄⟩ + 0.5 |1̄⟩"),
            Err(InputError::NotNormalized(mass)) if (mass - 0.5).abs() < 1e-12
        ));
        assert!(matches!(parse_input(&m, "1 |⟨λ, q1, 1, 0⟩⟩"), Err(InputError::NonInitialTerm(_))));
    }

    fn arb_tape() -> impl Strategy<Value = Vec<Symbol>> {
        // Example S alphabet: blank, 1, $
        prop::collection::vec((0u32..3).prop_map(Symbol::from_id), 0..8)
    }

    proptest! {
        #[test]
        fn canonicalization_is_idempotent_and_padding_invariant(
            left in arb_tape(), right in arb_tape(), k in 0usize..=8
        ) {
            let m = example_s();
            let q = m.final_state();
            let c = Configuration::canonical(left.clone(), q, right.clone(), 2);
            let again = Configuration::canonical(c.left().to_vec(), q, c.right().to_vec(), 2);
            prop_assert_eq!(&again, &c);
            let mut padded_left = vec![Symbol::BLANK; k];
            padded_left.extend(&left);
            let mut padded_right = right.clone();
            padded_right.extend(vec![Symbol::BLANK; k]);
            let padded = Configuration::canonical(padded_left, q, padded_right, 2);
            prop_assert_eq!(&padded, &c);
            let raw_ones = left.iter().chain(&right).filter(|s| **s == Symbol::ONE).count() as u64;
            prop_assert_eq!(c.val(), raw_ones);
        }

        #[test]
        fn distinct_basis_vectors_are_orthonormal(
            a in arb_tape(), b in arb_tape(), c in arb_tape(), d in arb_tape()
        ) {
            let m = example_s();
            let q = m.final_state();
            let x = Configuration::canonical(a, q, b, 0);
            let y = Configuration::canonical(c, q, d, 1);
            let (bx, by) = (QConfiguration::basis(x), QConfiguration::basis(y));
            prop_assert_eq!(bx.inner_product(&bx), Amplitude::new(1.0, 0.0));
            prop_assert_eq!(bx.inner_product(&by), Amplitude::new(0.0, 0.0));
        }
    }
}
