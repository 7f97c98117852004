// SPDX-License-Identifier: Apache-2.0

//! Reference machines and conversions to and from other presentations:
//! Bernstein–Vazirani style machines with a final-to-initial loop, the
//! counterless extra-symbol encoding, and the two-tape counter view.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::configuration::{Configuration, PlainConfiguration, QConfiguration};
use crate::evolution::successor;
use crate::machine::{
    build_machine, Alphabet, Amplitude, Direction, Machine, MachineDescription, MachineError, Move, RuleSpec, State,
    StateTable, Symbol, TransitionRow,
};

/// Prefix marking the hatted copy of a symbol.
pub const HAT_PREFIX: char = '^';

const LOOP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompatError {
    #[error("BadBackLoop: {0}")]
    BadBackLoop(String),
    #[error("AlphabetCollision: symbol `{0}` already uses the hat prefix")]
    AlphabetCollision(String),
    #[error("MalformedCounterTape: {0}")]
    MalformedCounterTape(String),
    #[error("MalformedEncoding: {0}")]
    MalformedEncoding(String),
    #[error("UnsupportedMachine: {0}")]
    UnsupportedMachine(String),
    #[error("StuckConfiguration: no transition for {0}")]
    StuckConfiguration(String),
    #[error(transparent)]
    Machine(#[from] MachineError),
}

impl CompatError {
    pub fn name(&self) -> &'static str {
        match self {
            CompatError::BadBackLoop(_) => "BadBackLoop",
            CompatError::AlphabetCollision(_) => "AlphabetCollision",
            CompatError::MalformedCounterTape(_) => "MalformedCounterTape",
            CompatError::MalformedEncoding(_) => "MalformedEncoding",
            CompatError::UnsupportedMachine(_) => "UnsupportedMachine",
            CompatError::StuckConfiguration(_) => "StuckConfiguration",
            CompatError::Machine(e) => e.name(),
        }
    }
}

fn one() -> Amplitude {
    Amplitude::new(1.0, 0.0)
}

fn rule(from: &str, read: &str, to: &str, write: &str, amp: f64) -> RuleSpec {
    RuleSpec::new(from, read, to, write, Direction::R, Amplitude::new(amp, 0.0))
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Reversible predecessor machine. On `1^{n+2}` it erases two `1`s and
/// halts with `n` of them left; on a single `1` it loops in `q1`/`q2`
/// forever. `p` is a dead end for malformed tapes.
pub fn example_p_description() -> MachineDescription {
    MachineDescription {
        name: "example_p".into(),
        alphabet: strings(&["1", "_"]),
        states: strings(&["q0", "q1", "q2", "qf", "p"]),
        sources: strings(&["q0"]),
        targets: strings(&["qf", "p"]),
        initial: "q0".into(),
        final_state: "qf".into(),
        rules: vec![
            rule("q0", "1", "q1", "_", 1.0),
            rule("q0", "_", "p", "_", 1.0),
            rule("q1", "1", "qf", "_", 1.0),
            rule("q1", "_", "q2", "_", 1.0),
            rule("q2", "_", "q1", "1", 1.0),
            rule("q2", "1", "p", "1", 1.0),
        ],
    }
}

/// Successor machine on `$`-prefixed tapes. Each step in `q1` sends half
/// of the remaining mass to `qf`, so the output is reached only in the limit.
pub fn example_s_description() -> MachineDescription {
    // Same value the machine-file grammar yields for `1/sqrt(2)`.
    let h = 1.0 / 2f64.sqrt();
    let mut rules = vec![
        rule("q0", "$", "q1", "$", 1.0),
        rule("q0", "1", "p", "1", 1.0),
        rule("q0", "_", "p", "_", 1.0),
        rule("q1", "$", "p", "$", 1.0),
        rule("s", "$", "qf", "$", 1.0),
    ];
    for a in ["1", "_"] {
        rules.push(rule("q1", a, "q1", a, h));
        rules.push(rule("q1", a, "qf", a, h));
        rules.push(rule("s", a, "q1", a, h));
        rules.push(rule("s", a, "qf", a, -h));
    }
    MachineDescription {
        name: "example_s".into(),
        alphabet: strings(&["$", "1", "_"]),
        states: strings(&["q0", "s", "q1", "qf", "p"]),
        sources: strings(&["q0", "s"]),
        targets: strings(&["qf", "p"]),
        initial: "q0".into(),
        final_state: "qf".into(),
        rules,
    }
}

pub fn example_p() -> Machine {
    build_machine(&example_p_description()).expect("reference machine is well formed")
}

pub fn example_s() -> Machine {
    build_machine(&example_s_description()).expect("reference machine is well formed")
}

/// A corpus entry together with the validator verdict it must receive.
#[derive(Clone, Debug)]
pub struct ReferenceMachine {
    pub name: &'static str,
    pub machine: Machine,
    pub valid: bool,
}

/// The two reference machines plus variants that break one local
/// condition each.
pub fn reference_machines() -> Vec<ReferenceMachine> {
    let p = example_p();
    let s = example_s();
    let sym = |m: &Machine, n: &str| m.alphabet().lookup(n).unwrap();
    let st = |m: &Machine, n: &str| m.states().lookup(n).unwrap();

    let scaled = {
        let (q, a) = (st(&p, "q0"), sym(&p, "1"));
        let row = p.row(q, a).unwrap().scaled(Amplitude::new(0.9, 0.0));
        p.with_row(q, a, row).unwrap()
    };
    let duplicated = {
        let q1 = st(&s, "q1");
        let row = s.row(q1, Symbol::BLANK).unwrap().clone();
        s.with_row(q1, Symbol::ONE, row).unwrap()
    };
    let collision = {
        let (q2, p_state) = (st(&p, "q2"), st(&p, "p"));
        let row: TransitionRow =
            [(Move { state: p_state, write: Symbol::ONE, dir: Direction::L }, one())].into_iter().collect();
        p.with_row(q2, Symbol::ONE, row).unwrap()
    };
    vec![
        ReferenceMachine { name: "example_p", machine: p, valid: true },
        ReferenceMachine { name: "example_s", machine: s, valid: true },
        ReferenceMachine { name: "example_p_scaled_row", machine: scaled, valid: false },
        ReferenceMachine { name: "example_s_duplicate_row", machine: duplicated, valid: false },
        ReferenceMachine { name: "example_p_left_collision", machine: collision, valid: false },
    ]
}

/// Machine in the Bernstein–Vazirani presentation: no counter, and the
/// final state loops back into the initial one with `δ(q_f, a) = |q₀, a, R⟩`.
///
/// Targets other than `q_f` may be declared as sinks: they carry no rows
/// and are kept as targets by [`from_bv`].
#[derive(Clone, Debug, PartialEq)]
pub struct BvMachine {
    name: String,
    alphabet: Alphabet,
    states: StateTable,
    initial: State,
    final_state: State,
    sinks: BTreeSet<State>,
    delta: BTreeMap<(State, Symbol), TransitionRow>,
}

impl BvMachine {
    /// Builds from a description whose `sources` is empty or `[initial]`
    /// and whose `targets` holds `final` plus any sinks.
    pub fn from_description(d: &MachineDescription) -> Result<Self, CompatError> {
        let alphabet = Alphabet::new(&d.alphabet)?;
        let states = StateTable::new(&d.states)?;
        let state = |name: &str| states.lookup(name).ok_or_else(|| MachineError::UnknownState(name.into()));
        let symbol = |name: &str| alphabet.lookup(name).ok_or_else(|| MachineError::UnknownSymbol(name.into()));
        let initial = state(&d.initial)?;
        let final_state = state(&d.final_state)?;
        if initial == final_state {
            return Err(CompatError::BadBackLoop("initial and final state coincide".into()));
        }
        for s in &d.sources {
            if state(s)? != initial {
                return Err(CompatError::UnsupportedMachine(format!("extra source state `{s}`")));
            }
        }
        let mut sinks = BTreeSet::new();
        for t in &d.targets {
            let t = state(t)?;
            if t == initial {
                return Err(CompatError::BadBackLoop("initial state declared as target".into()));
            }
            if t != final_state {
                sinks.insert(t);
            }
        }
        let mut delta: BTreeMap<(State, Symbol), TransitionRow> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for r in &d.rules {
            let (from, read) = (state(&r.from)?, symbol(&r.read)?);
            let mv = Move { state: state(&r.to)?, write: symbol(&r.write)?, dir: r.dir };
            if !(r.amp.re.is_finite() && r.amp.im.is_finite()) {
                return Err(MachineError::NonFiniteAmplitude { rule: r.to_string() }.into());
            }
            if !seen.insert((from, read, mv)) {
                return Err(MachineError::DuplicateRule { rule: r.to_string() }.into());
            }
            delta.entry((from, read)).or_default().set(mv, r.amp);
        }
        let b = Self { name: d.name.clone(), alphabet, states, initial, final_state, sinks, delta };
        b.check()?;
        Ok(b)
    }

    fn check(&self) -> Result<(), CompatError> {
        for q in self.states.states() {
            for a in self.alphabet.symbols() {
                let row = self.delta.get(&(q, a));
                if self.sinks.contains(&q) {
                    if row.is_some_and(|r| !r.is_empty()) {
                        return Err(CompatError::UnsupportedMachine(format!(
                            "sink state `{}` has a row",
                            self.states.name(q)
                        )));
                    }
                    continue;
                }
                let row = row.ok_or_else(|| MachineError::MissingRow {
                    state: self.states.name(q).into(),
                    symbol: self.alphabet.name(a).into(),
                })?;
                if q == self.final_state {
                    let expected = Move { state: self.initial, write: a, dir: Direction::R };
                    if row.len() != 1 || (row.get(&expected) - one()).norm() > LOOP_TOLERANCE {
                        return Err(CompatError::BadBackLoop(format!(
                            "row ({}, {}) must be exactly ({}, {}, R) with amplitude 1",
                            self.states.name(q),
                            self.alphabet.name(a),
                            self.states.name(self.initial),
                            self.alphabet.name(a)
                        )));
                    }
                } else if row.iter().any(|(mv, _)| mv.state == self.initial) {
                    return Err(CompatError::BadBackLoop(format!(
                        "row ({}, {}) enters the initial state",
                        self.states.name(q),
                        self.alphabet.name(a)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn states(&self) -> &StateTable {
        &self.states
    }

    pub fn initial(&self) -> State {
        self.initial
    }

    pub fn final_state(&self) -> State {
        self.final_state
    }

    pub fn sinks(&self) -> &BTreeSet<State> {
        &self.sinks
    }

    pub fn row(&self, q: State, a: Symbol) -> Option<&TransitionRow> {
        self.delta.get(&(q, a))
    }

    pub fn rows(&self) -> impl Iterator<Item = (State, Symbol, &TransitionRow)> {
        self.delta.iter().map(|((q, a), r)| (*q, *a, r))
    }

    pub fn to_description(&self) -> MachineDescription {
        let name = |q: State| self.states.name(q).to_string();
        MachineDescription {
            name: self.name.clone(),
            alphabet: self.alphabet.names().to_vec(),
            states: self.states.names().to_vec(),
            sources: vec![name(self.initial)],
            targets: std::iter::once(self.final_state).chain(self.sinks.iter().copied()).map(name).collect(),
            initial: name(self.initial),
            final_state: name(self.final_state),
            rules: describe_rows(&self.alphabet, &self.states, self.rows()),
        }
    }
}

fn describe_rows<'a>(
    alphabet: &Alphabet,
    states: &StateTable,
    rows: impl Iterator<Item = (State, Symbol, &'a TransitionRow)>,
) -> Vec<RuleSpec> {
    rows.flat_map(|(q, a, row)| {
        row.iter()
            .map(|(mv, amp)| RuleSpec {
                from: states.name(q).to_string(),
                read: alphabet.name(a).to_string(),
                to: states.name(mv.state).to_string(),
                write: alphabet.name(mv.write).to_string(),
                dir: mv.dir,
                amp: *amp,
            })
            .collect::<Vec<_>>()
    })
    .collect()
}

/// Drops the back-loop: `q₀` becomes the only source, `q_f` (with any
/// sinks) the targets, and every other row is kept verbatim.
pub fn from_bv(b: &BvMachine) -> Result<Machine, CompatError> {
    let delta = b
        .delta
        .iter()
        .filter(|((q, _), _)| *q != b.final_state)
        .map(|((q, a), row)| {
            let kept: TransitionRow =
                row.iter().filter(|(mv, _)| mv.state != b.initial).map(|(mv, amp)| (*mv, *amp)).collect();
            ((*q, *a), kept)
        })
        .collect();
    let mut targets = b.sinks.clone();
    targets.insert(b.final_state);
    Ok(Machine::from_parts(
        b.name.clone(),
        b.alphabet.clone(),
        b.states.clone(),
        BTreeSet::from([b.initial]),
        targets,
        b.initial,
        b.final_state,
        delta,
    )?)
}

/// Inverse of [`from_bv`] for machines whose only source is the initial state.
pub fn bv_form(m: &Machine) -> Result<BvMachine, CompatError> {
    if m.sources().len() != 1 {
        return Err(CompatError::UnsupportedMachine(format!(
            "{} source states; the looped form has only the initial one",
            m.sources().len()
        )));
    }
    let mut delta: BTreeMap<(State, Symbol), TransitionRow> =
        m.rows().map(|(q, a, row)| ((q, a), row.clone())).collect();
    for a in m.alphabet().symbols() {
        let back = Move { state: m.initial(), write: a, dir: Direction::R };
        delta.insert((m.final_state(), a), [(back, one())].into_iter().collect());
    }
    let sinks = m.targets().iter().copied().filter(|q| *q != m.final_state()).collect();
    let b = BvMachine {
        name: m.name().to_string(),
        alphabet: m.alphabet().clone(),
        states: m.states().clone(),
        initial: m.initial(),
        final_state: m.final_state(),
        sinks,
        delta,
    };
    b.check()?;
    Ok(b)
}

/// Counterless machine: a total-or-partial `δ` over `Q × Σ` stepped without
/// source/target cases. Produced by [`encode_extra_symbols`].
#[derive(Clone, Debug, PartialEq)]
pub struct PlainMachine {
    name: String,
    alphabet: Alphabet,
    states: StateTable,
    sources: BTreeSet<State>,
    targets: BTreeSet<State>,
    initial: State,
    final_state: State,
    delta: BTreeMap<(State, Symbol), TransitionRow>,
}

impl PlainMachine {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn states(&self) -> &StateTable {
        &self.states
    }

    pub fn row(&self, q: State, a: Symbol) -> Option<&TransitionRow> {
        self.delta.get(&(q, a))
    }

    pub fn rows(&self) -> impl Iterator<Item = (State, Symbol, &TransitionRow)> {
        self.delta.iter().map(|((q, a), r)| (*q, *a, r))
    }

    /// One step. Configurations must carry counter 0; a configuration
    /// without a row is an error rather than silently dropped mass.
    pub fn step(&self, phi: &QConfiguration) -> Result<QConfiguration, CompatError> {
        let mut out = QConfiguration::new();
        for (c, amp) in phi.iter() {
            let row = self.row(c.state(), c.current_symbol()).ok_or_else(|| {
                CompatError::StuckConfiguration(format!(
                    "state `{}` reading `{}`",
                    self.states.name(c.state()),
                    self.alphabet.name(c.current_symbol())
                ))
            })?;
            for (mv, x) in row.iter() {
                out.add_term(successor(c, mv), amp * x);
            }
        }
        Ok(out)
    }

    pub fn evolve(&self, phi: &QConfiguration, steps: usize) -> Result<QConfiguration, CompatError> {
        (0..steps).try_fold(phi.clone(), |acc, _| self.step(&acc))
    }

    pub fn to_description(&self) -> MachineDescription {
        let names = |set: &BTreeSet<State>| set.iter().map(|q| self.states.name(*q).to_string()).collect();
        MachineDescription {
            name: self.name.clone(),
            alphabet: self.alphabet.names().to_vec(),
            states: self.states.names().to_vec(),
            sources: names(&self.sources),
            targets: names(&self.targets),
            initial: self.states.name(self.initial).to_string(),
            final_state: self.states.name(self.final_state).to_string(),
            rules: describe_rows(&self.alphabet, &self.states, self.rows()),
        }
    }

    /// Rebuilds from a description; rows may be partial.
    pub fn from_description(d: &MachineDescription) -> Result<Self, CompatError> {
        let alphabet = Alphabet::new(&d.alphabet)?;
        let states = StateTable::new(&d.states)?;
        let state = |name: &str| states.lookup(name).ok_or_else(|| MachineError::UnknownState(name.into()));
        let symbol = |name: &str| alphabet.lookup(name).ok_or_else(|| MachineError::UnknownSymbol(name.into()));
        let set = |names: &[String]| names.iter().map(|n| state(n)).collect::<Result<BTreeSet<_>, _>>();
        let mut delta: BTreeMap<(State, Symbol), TransitionRow> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for r in &d.rules {
            let (from, read) = (state(&r.from)?, symbol(&r.read)?);
            let mv = Move { state: state(&r.to)?, write: symbol(&r.write)?, dir: r.dir };
            if !seen.insert((from, read, mv)) {
                return Err(MachineError::DuplicateRule { rule: r.to_string() }.into());
            }
            delta.entry((from, read)).or_default().set(mv, r.amp);
        }
        Ok(Self {
            name: d.name.clone(),
            sources: set(&d.sources)?,
            targets: set(&d.targets)?,
            initial: state(&d.initial)?,
            final_state: state(&d.final_state)?,
            alphabet,
            states,
            delta,
        })
    }
}

/// Counterless simulation of a machine together with the configuration
/// bijection. A counter of `n` is stored as `n` hatted cells: left of the
/// head in a target state, right of it (head on the first) in a source.
#[derive(Clone, Debug)]
pub struct ExtraSymbolEncoding {
    original: Machine,
    encoded: PlainMachine,
    hat: BTreeMap<Symbol, Symbol>,
    unhat: BTreeMap<Symbol, Symbol>,
}

pub fn encode_extra_symbols(m: &Machine) -> Result<ExtraSymbolEncoding, CompatError> {
    if let Some(name) = m.alphabet().names().iter().find(|n| n.starts_with(HAT_PREFIX)) {
        return Err(CompatError::AlphabetCollision(name.clone()));
    }
    let mut alphabet = m.alphabet().clone();
    let mut hat = BTreeMap::new();
    for a in m.alphabet().symbols() {
        let h = alphabet.push(format!("{HAT_PREFIX}{}", m.alphabet().name(a)))?;
        hat.insert(a, h);
    }
    let unhat = hat.iter().map(|(a, h)| (*h, *a)).collect();
    let mut delta = BTreeMap::new();
    for q in m.states().states() {
        for a in m.alphabet().symbols() {
            if m.is_target(q) {
                let mv = Move { state: q, write: hat[&a], dir: Direction::R };
                delta.insert((q, a), [(mv, one())].into_iter().collect());
                continue;
            }
            if let Some(row) = m.row(q, a) {
                delta.insert((q, a), row.clone());
            }
            if m.is_source(q) {
                let mv = Move { state: q, write: a, dir: Direction::R };
                delta.insert((q, hat[&a]), [(mv, one())].into_iter().collect());
            }
        }
    }
    let encoded = PlainMachine {
        name: format!("{}_extra_symbols", m.name()),
        alphabet,
        states: m.states().clone(),
        sources: m.sources().clone(),
        targets: m.targets().clone(),
        initial: m.initial(),
        final_state: m.final_state(),
        delta,
    };
    Ok(ExtraSymbolEncoding { original: m.clone(), encoded, hat, unhat })
}

impl ExtraSymbolEncoding {
    pub fn original(&self) -> &Machine {
        &self.original
    }

    pub fn machine(&self) -> &PlainMachine {
        &self.encoded
    }

    pub fn hat(&self, a: Symbol) -> Symbol {
        self.hat[&a]
    }

    fn is_hat(&self, a: Symbol) -> bool {
        self.unhat.contains_key(&a)
    }

    /// Maps `⟨α, q_t, γβ, |γ|⟩ ↦ ⟨αγ̂, q_t, β⟩`, `⟨αγ, q_s, β, |γ|⟩ ↦
    /// ⟨α, q_s, γ̂β⟩`, and plain configurations to themselves.
    pub fn encode(&self, c: &Configuration) -> Configuration {
        let n = c.counter() as usize;
        let (mut left, mut right) = (c.left().to_vec(), c.right().to_vec());
        if self.original.is_target(c.state()) {
            if right.len() < n {
                right.resize(n, Symbol::BLANK);
            }
            let beta = right.split_off(n);
            left.extend(right.iter().map(|a| self.hat[a]));
            Configuration::canonical(left, c.state(), beta, 0)
        } else if self.original.is_source(c.state()) {
            if left.len() < n {
                let mut padded = vec![Symbol::BLANK; n - left.len()];
                padded.extend(left);
                left = padded;
            }
            let gamma = left.split_off(left.len() - n);
            let mut r: Vec<Symbol> = gamma.iter().map(|a| self.hat[a]).collect();
            r.extend(right);
            Configuration::canonical(left, c.state(), r, 0)
        } else {
            c.clone()
        }
    }

    /// Inverse of [`ExtraSymbolEncoding::encode`]; rejects hatted cells in
    /// any position other than the three legal shapes.
    pub fn decode(&self, e: &Configuration) -> Result<Configuration, CompatError> {
        let q = e.state();
        let malformed = |what: &str| {
            CompatError::MalformedEncoding(format!("{what} in state `{}`", self.original.states().name(q)))
        };
        if e.counter() != 0 {
            return Err(malformed("nonzero counter"));
        }
        let (left, right) = (e.left(), e.right());
        let plain = |s: &[Symbol]| s.iter().all(|a| !self.is_hat(*a));
        let unhat = |s: &[Symbol]| s.iter().map(|a| self.unhat[a]).collect::<Vec<_>>();
        if self.original.is_target(q) {
            let k = left.iter().rev().take_while(|a| self.is_hat(**a)).count();
            let (alpha, gamma) = left.split_at(left.len() - k);
            if !plain(alpha) || !plain(right) {
                return Err(malformed("hatted cell outside the suffix left of the head"));
            }
            let mut r = unhat(gamma);
            r.extend_from_slice(right);
            Ok(Configuration::canonical(alpha.to_vec(), q, r, k as u64))
        } else if self.original.is_source(q) {
            let k = right.iter().take_while(|a| self.is_hat(**a)).count();
            let (gamma, beta) = right.split_at(k);
            if !plain(left) || !plain(beta) {
                return Err(malformed("hatted cell outside the prefix under the head"));
            }
            let mut l = left.to_vec();
            l.extend(unhat(gamma));
            Ok(Configuration::canonical(l, q, beta.to_vec(), k as u64))
        } else if plain(left) && plain(right) {
            Ok(e.clone())
        } else {
            Err(malformed("hatted cell"))
        }
    }

    pub fn encode_q(&self, phi: &QConfiguration) -> QConfiguration {
        phi.iter().map(|(c, a)| (self.encode(c), *a)).collect()
    }

    pub fn decode_q(&self, phi: &QConfiguration) -> Result<QConfiguration, CompatError> {
        phi.iter().map(|(c, a)| Ok((self.decode(c)?, *a))).collect()
    }
}

/// Counter tape cell content: only stars are legal.
pub const COUNTER_STAR: char = '*';

/// Second tape holding the counter in unary. Cells past `cells` are blank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterTape {
    pub cells: Vec<char>,
    pub head: usize,
}

impl fmt::Display for CounterTape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.cells.len().max(self.head + 1) {
            let c = self.cells.get(i).copied().unwrap_or('_');
            if i == self.head {
                write!(f, "[{c}]")?;
            } else {
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

/// A configuration viewed on a two-tape machine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoTapeConfiguration {
    pub main: PlainConfiguration,
    pub counter: CounterTape,
}

/// Sources park the counter head on the rightmost star (on the empty
/// origin cell when the counter is 0); targets on the first blank after the
/// stars; other states have an empty counter tape.
pub fn counter_tape_view(m: &Machine, c: &Configuration) -> TwoTapeConfiguration {
    let n = c.counter() as usize;
    let head = if m.is_source(c.state()) { n.saturating_sub(1) } else { n };
    TwoTapeConfiguration { main: c.plain(), counter: CounterTape { cells: vec![COUNTER_STAR; n], head } }
}

pub fn from_counter_tape(m: &Machine, e: &TwoTapeConfiguration) -> Result<Configuration, CompatError> {
    let q = e.main.state;
    let bad = |what: String| CompatError::MalformedCounterTape(format!("{what} in state `{}`", m.states().name(q)));
    if let Some(c) = e.counter.cells.iter().find(|c| **c != COUNTER_STAR) {
        return Err(bad(format!("cell `{c}`")));
    }
    let n = e.counter.cells.len();
    let expected = if m.is_source(q) {
        n.saturating_sub(1)
    } else if m.is_target(q) {
        n
    } else if n == 0 {
        0
    } else {
        return Err(bad(format!("{n} stars")));
    };
    if e.counter.head != expected {
        return Err(bad(format!("head at {} instead of {expected}", e.counter.head)));
    }
    if !m.states().contains(q) {
        return Err(bad("unknown state".into()));
    }
    Ok(Configuration::from_plain(e.main.clone(), n as u64))
}
