// SPDX-License-Identifier: Apache-2.0

//! Machines with source and target states, and the local unitarity
//! conditions on their transition function.
//!
//! A [`Machine`] is the pre-machine tuple: it is structurally well formed
//! but nothing guarantees that its evolution operator is unitary. The three
//! local conditions checked by [`Machine::validate`] are exactly what is
//! needed to promote it to a proper quantum Turing machine.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Complex weight of a transition or of a configuration in a superposition.
pub type Amplitude = Complex64;

/// Default tolerance for the local unitarity conditions.
pub const DEFAULT_UNITARITY_TOLERANCE: f64 = 1e-9;

/// Textual name of the blank symbol. `□` is accepted as an alias.
pub const BLANK_NAME: &str = "_";
/// Alias of [`BLANK_NAME`] accepted on input.
pub const BLANK_ALIAS: &str = "□";

/// Interned tape symbol. Ids are indices into the owning [`Alphabet`];
/// the blank is always id 0 and `1` is always id 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(u32);

impl Symbol {
    pub const BLANK: Symbol = Symbol(0);
    pub const ONE: Symbol = Symbol(1);

    pub fn id(self) -> u32 {
        self.0
    }

    #[cfg(test)]
    pub(crate) const fn from_id(id: u32) -> Self {
        Symbol(id)
    }

    pub fn is_blank(self) -> bool {
        self == Self::BLANK
    }
}

/// Interned machine state; an index into the owning [`StateTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State(u32);

impl State {
    pub fn id(self) -> u32 {
        self.0
    }

    #[cfg(test)]
    pub(crate) const fn from_id(id: u32) -> Self {
        State(id)
    }
}

/// Head movement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    L,
    R,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::L => f.write_str("L"),
            Direction::R => f.write_str("R"),
        }
    }
}

/// Finite tape alphabet. The blank and `1` are always present.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    /// Builds an alphabet from symbol names in declaration order. The blank
    /// (`_` or `□`) and `1` must both be listed; they receive the reserved ids.
    pub fn new<I, S>(names: I) -> Result<Self, MachineError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out = vec![BLANK_NAME.to_string(), "1".to_string()];
        let (mut blank, mut one) = (false, false);
        let mut seen = BTreeSet::new();
        for name in names {
            let name = name.as_ref();
            let canonical = if name == BLANK_ALIAS { BLANK_NAME } else { name };
            if canonical.is_empty() || canonical.chars().any(char::is_whitespace) {
                return Err(MachineError::BadSymbolName(name.to_string()));
            }
            if !seen.insert(canonical.to_string()) {
                return Err(MachineError::DuplicateSymbol(name.to_string()));
            }
            match canonical {
                BLANK_NAME => blank = true,
                "1" => one = true,
                other => out.push(other.to_string()),
            }
        }
        if !blank {
            return Err(MachineError::MissingDistinguishedSymbol(BLANK_NAME));
        }
        if !one {
            return Err(MachineError::MissingDistinguishedSymbol("1"));
        }
        Ok(Self { names: out })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<Symbol> {
        let name = if name == BLANK_ALIAS { BLANK_NAME } else { name };
        self.names.iter().position(|n| n == name).map(|i| Symbol(i as u32))
    }

    pub fn name(&self, symbol: Symbol) -> &str {
        &self.names[symbol.0 as usize]
    }

    pub fn contains(&self, symbol: Symbol) -> bool {
        (symbol.0 as usize) < self.names.len()
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        (0..self.names.len() as u32).map(Symbol)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Appends a new symbol; used by encodings that extend an alphabet.
    pub(crate) fn push(&mut self, name: String) -> Result<Symbol, MachineError> {
        if self.lookup(&name).is_some() {
            return Err(MachineError::DuplicateSymbol(name));
        }
        self.names.push(name);
        Ok(Symbol(self.names.len() as u32 - 1))
    }
}

/// Finite set of named states, in declaration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateTable {
    names: Vec<String>,
}

impl StateTable {
    pub fn new<I, S>(names: I) -> Result<Self, MachineError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out: Vec<String> = Vec::new();
        for name in names {
            let name = name.as_ref();
            if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == ',') {
                return Err(MachineError::BadStateName(name.to_string()));
            }
            if out.iter().any(|n| n == name) {
                return Err(MachineError::DuplicateState(name.to_string()));
            }
            out.push(name.to_string());
        }
        if out.is_empty() {
            return Err(MachineError::NoStates);
        }
        Ok(Self { names: out })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<State> {
        self.names.iter().position(|n| n == name).map(|i| State(i as u32))
    }

    pub fn name(&self, state: State) -> &str {
        &self.names[state.0 as usize]
    }

    pub fn contains(&self, state: State) -> bool {
        (state.0 as usize) < self.names.len()
    }

    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.names.len() as u32).map(State)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Destination of a transition: new state, written symbol, head move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Move {
    pub state: State,
    pub write: Symbol,
    pub dir: Direction,
}

/// Sparse row `δ₀(q, a)` of the transition function. Zero entries are
/// never stored.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransitionRow {
    entries: BTreeMap<Move, Amplitude>,
}

impl TransitionRow {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the weight of one destination. Zero weights remove the entry.
    pub fn set(&mut self, mv: Move, amp: Amplitude) {
        if amp == Amplitude::new(0.0, 0.0) {
            self.entries.remove(&mv);
        } else {
            self.entries.insert(mv, amp);
        }
    }

    pub fn get(&self, mv: &Move) -> Amplitude {
        self.entries.get(mv).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Move, &Amplitude)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.values().map(|a| a.norm_sqr()).sum()
    }

    /// `Σ conj(self[k]) · other[k]` over common destinations.
    pub fn inner(&self, other: &TransitionRow) -> Amplitude {
        let (small, large, flip) = if self.len() <= other.len() { (self, other, false) } else { (other, self, true) };
        small
            .entries
            .iter()
            .filter_map(|(k, a)| large.entries.get(k).map(|b| (a, b)))
            .map(|(a, b)| if flip { b.conj() * a } else { a.conj() * b })
            .sum()
    }

    pub fn scaled(&self, factor: Amplitude) -> TransitionRow {
        let mut out = TransitionRow::new();
        for (mv, amp) in &self.entries {
            out.set(*mv, amp * factor);
        }
        out
    }
}

impl FromIterator<(Move, Amplitude)> for TransitionRow {
    fn from_iter<T: IntoIterator<Item = (Move, Amplitude)>>(iter: T) -> Self {
        let mut row = TransitionRow::new();
        for (mv, amp) in iter {
            row.set(mv, row.get(&mv) + amp);
        }
        row
    }
}

/// One textual rule `from, read -> to, write, dir : amp`, as produced by the
/// machine-file parser or written by hand in code.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleSpec {
    pub from: String,
    pub read: String,
    pub to: String,
    pub write: String,
    pub dir: Direction,
    pub amp: Amplitude,
}

impl RuleSpec {
    pub fn new(from: &str, read: &str, to: &str, write: &str, dir: Direction, amp: Amplitude) -> Self {
        Self { from: from.to_string(), read: read.to_string(), to: to.to_string(), write: write.to_string(), dir, amp }
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} , {} -> {} , {} , {}", self.from, self.read, self.to, self.write, self.dir)
    }
}

/// Name-based description of a machine, before interning and checks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MachineDescription {
    pub name: String,
    pub alphabet: Vec<String>,
    pub states: Vec<String>,
    pub sources: Vec<String>,
    pub targets: Vec<String>,
    pub initial: String,
    pub final_state: String,
    pub rules: Vec<RuleSpec>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MachineError {
    #[error("MissingRow: no transition row for ({state}, {symbol})")]
    MissingRow { state: String, symbol: String },
    #[error("SourceAsDestination: rule `{rule}` enters a source state")]
    SourceAsDestination { rule: String },
    #[error("RowForTargetState: rule `{rule}` leaves a target state")]
    RowForTargetState { rule: String },
    #[error("UnknownSymbol: `{0}`")]
    UnknownSymbol(String),
    #[error("UnknownState: `{0}`")]
    UnknownState(String),
    #[error("NonFiniteAmplitude: rule `{rule}`")]
    NonFiniteAmplitude { rule: String },
    #[error("DuplicateRule: `{rule}`")]
    DuplicateRule { rule: String },
    #[error("RowNormExceeded: row ({state}, {symbol}) has squared norm {norm_sqr}")]
    RowNormExceeded { state: String, symbol: String, norm_sqr: f64 },
    #[error("MissingDistinguishedSymbol: alphabet lacks `{0}`")]
    MissingDistinguishedSymbol(&'static str),
    #[error("DuplicateSymbol: `{0}`")]
    DuplicateSymbol(String),
    #[error("DuplicateState: `{0}`")]
    DuplicateState(String),
    #[error("BadSymbolName: `{0}`")]
    BadSymbolName(String),
    #[error("BadStateName: `{0}`")]
    BadStateName(String),
    #[error("NoStates: a machine needs at least one state")]
    NoStates,
    #[error("InitialNotSource: `{0}` is not declared as a source state")]
    InitialNotSource(String),
    #[error("FinalNotTarget: `{0}` is not declared as a target state")]
    FinalNotTarget(String),
    #[error("SourceTargetOverlap: `{0}` is both a source and a target state")]
    SourceTargetOverlap(String),
}

impl MachineError {
    /// Short variant name, used for CLI diagnostics and FFI messages.
    pub fn name(&self) -> &'static str {
        match self {
            MachineError::MissingRow { .. } => "MissingRow",
            MachineError::SourceAsDestination { .. } => "SourceAsDestination",
            MachineError::RowForTargetState { .. } => "RowForTargetState",
            MachineError::UnknownSymbol(_) => "UnknownSymbol",
            MachineError::UnknownState(_) => "UnknownState",
            MachineError::NonFiniteAmplitude { .. } => "NonFiniteAmplitude",
            MachineError::DuplicateRule { .. } => "DuplicateRule",
            MachineError::RowNormExceeded { .. } => "RowNormExceeded",
            MachineError::MissingDistinguishedSymbol(_) => "MissingDistinguishedSymbol",
            MachineError::DuplicateSymbol(_) => "DuplicateSymbol",
            MachineError::DuplicateState(_) => "DuplicateState",
            MachineError::BadSymbolName(_) => "BadSymbolName",
            MachineError::BadStateName(_) => "BadStateName",
            MachineError::NoStates => "NoStates",
            MachineError::InitialNotSource(_) => "InitialNotSource",
            MachineError::FinalNotTarget(_) => "FinalNotTarget",
            MachineError::SourceTargetOverlap(_) => "SourceTargetOverlap",
        }
    }
}

/// A predecessor entry of the reverse transition index: applying row
/// `(state, read)` with weight `amp` produces the indexed [`Move`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Predecessor {
    pub state: State,
    pub read: Symbol,
    pub amp: Amplitude,
}

/// The pre-machine `⟨Σ, Q, Q_s, Q_t, δ₀, q_i, q_f⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Machine {
    name: String,
    alphabet: Alphabet,
    states: StateTable,
    sources: BTreeSet<State>,
    targets: BTreeSet<State>,
    initial: State,
    final_state: State,
    delta: BTreeMap<(State, Symbol), TransitionRow>,
    predecessors: BTreeMap<Move, Vec<Predecessor>>,
}

/// Interns and checks a description. Every `(q, a)` with `q` not a target
/// must have a row; missing rows are an error, never defaulted.
pub fn build_machine(description: &MachineDescription) -> Result<Machine, MachineError> {
    let alphabet = Alphabet::new(&description.alphabet)?;
    let states = StateTable::new(&description.states)?;
    let state = |name: &str| states.lookup(name).ok_or_else(|| MachineError::UnknownState(name.to_string()));
    let symbol = |name: &str| alphabet.lookup(name).ok_or_else(|| MachineError::UnknownSymbol(name.to_string()));
    let sources = description.sources.iter().map(|s| state(s)).collect::<Result<BTreeSet<_>, _>>()?;
    let targets = description.targets.iter().map(|s| state(s)).collect::<Result<BTreeSet<_>, _>>()?;
    let initial = state(&description.initial)?;
    let final_state = state(&description.final_state)?;

    let mut delta: BTreeMap<(State, Symbol), TransitionRow> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for rule in &description.rules {
        let from = state(&rule.from)?;
        let read = symbol(&rule.read)?;
        let to = state(&rule.to)?;
        let write = symbol(&rule.write)?;
        if !(rule.amp.re.is_finite() && rule.amp.im.is_finite()) {
            return Err(MachineError::NonFiniteAmplitude { rule: rule.to_string() });
        }
        let mv = Move { state: to, write, dir: rule.dir };
        if !seen.insert((from, read, mv)) {
            return Err(MachineError::DuplicateRule { rule: rule.to_string() });
        }
        delta.entry((from, read)).or_default().set(mv, rule.amp);
    }
    Machine::from_parts(description.name.clone(), alphabet, states, sources, targets, initial, final_state, delta)
}

impl Machine {
    /// Assembles a machine from interned parts, enforcing every structural
    /// invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        name: String,
        alphabet: Alphabet,
        states: StateTable,
        sources: BTreeSet<State>,
        targets: BTreeSet<State>,
        initial: State,
        final_state: State,
        delta: BTreeMap<(State, Symbol), TransitionRow>,
    ) -> Result<Machine, MachineError> {
        if let Some(q) = sources.intersection(&targets).next() {
            return Err(MachineError::SourceTargetOverlap(states.name(*q).to_string()));
        }
        if !sources.contains(&initial) {
            return Err(MachineError::InitialNotSource(states.name(initial).to_string()));
        }
        if !targets.contains(&final_state) {
            return Err(MachineError::FinalNotTarget(states.name(final_state).to_string()));
        }
        let rule_text = |q: State, a: Symbol, mv: &Move| {
            format!(
                "{} , {} -> {} , {} , {}",
                states.name(q),
                alphabet.name(a),
                states.name(mv.state),
                alphabet.name(mv.write),
                mv.dir
            )
        };
        for (&(q, a), row) in &delta {
            for (mv, amp) in row.iter() {
                if !(amp.re.is_finite() && amp.im.is_finite()) {
                    return Err(MachineError::NonFiniteAmplitude { rule: rule_text(q, a, mv) });
                }
                if targets.contains(&q) {
                    return Err(MachineError::RowForTargetState { rule: rule_text(q, a, mv) });
                }
                if sources.contains(&mv.state) {
                    return Err(MachineError::SourceAsDestination { rule: rule_text(q, a, mv) });
                }
            }
            let norm_sqr = row.norm_sqr();
            if norm_sqr > 1.0 + DEFAULT_UNITARITY_TOLERANCE {
                return Err(MachineError::RowNormExceeded {
                    state: states.name(q).to_string(),
                    symbol: alphabet.name(a).to_string(),
                    norm_sqr,
                });
            }
        }
        for q in states.states().filter(|q| !targets.contains(q)) {
            for a in alphabet.symbols() {
                if delta.get(&(q, a)).is_none_or(TransitionRow::is_empty) {
                    return Err(MachineError::MissingRow {
                        state: states.name(q).to_string(),
                        symbol: alphabet.name(a).to_string(),
                    });
                }
            }
        }
        let mut predecessors: BTreeMap<Move, Vec<Predecessor>> = BTreeMap::new();
        for (&(state, read), row) in &delta {
            for (mv, &amp) in row.iter() {
                predecessors.entry(*mv).or_default().push(Predecessor { state, read, amp });
            }
        }
        Ok(Machine { name, alphabet, states, sources, targets, initial, final_state, delta, predecessors })
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

    pub fn sources(&self) -> &BTreeSet<State> {
        &self.sources
    }

    pub fn targets(&self) -> &BTreeSet<State> {
        &self.targets
    }

    pub fn initial(&self) -> State {
        self.initial
    }

    pub fn final_state(&self) -> State {
        self.final_state
    }

    pub fn is_source(&self, q: State) -> bool {
        self.sources.contains(&q)
    }

    pub fn is_target(&self, q: State) -> bool {
        self.targets.contains(&q)
    }

    /// Row `δ₀(q, a)`; `None` exactly when `q` is a target state.
    pub fn row(&self, q: State, a: Symbol) -> Option<&TransitionRow> {
        self.delta.get(&(q, a))
    }

    /// All rows, ordered by `(state, symbol)`.
    pub fn rows(&self) -> impl Iterator<Item = (State, Symbol, &TransitionRow)> {
        self.delta.iter().map(|(&(q, a), row)| (q, a, row))
    }

    /// Rows whose application yields `mv`, with their weights.
    pub fn predecessors(&self, mv: &Move) -> &[Predecessor] {
        self.predecessors.get(mv).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Number of nonzero transition entries.
    pub fn rule_count(&self) -> usize {
        self.delta.values().map(TransitionRow::len).sum()
    }

    /// Returns the description this machine was (or could have been) built from.
    pub fn to_description(&self) -> MachineDescription {
        let names = |set: &BTreeSet<State>| set.iter().map(|q| self.states.name(*q).to_string()).collect::<Vec<_>>();
        MachineDescription {
            name: self.name.clone(),
            alphabet: self.alphabet.names().to_vec(),
            states: self.states.names().to_vec(),
            sources: names(&self.sources),
            targets: names(&self.targets),
            initial: self.states.name(self.initial).to_string(),
            final_state: self.states.name(self.final_state).to_string(),
            rules: self
                .rows()
                .flat_map(|(q, a, row)| {
                    row.iter().map(move |(mv, amp)| RuleSpec {
                        from: self.states.name(q).to_string(),
                        read: self.alphabet.name(a).to_string(),
                        to: self.states.name(mv.state).to_string(),
                        write: self.alphabet.name(mv.write).to_string(),
                        dir: mv.dir,
                        amp: *amp,
                    })
                })
                .collect(),
        }
    }

    /// Returns a copy with row `(q, a)` replaced. Structural invariants are
    /// re-checked; the result is not validated.
    pub fn with_row(&self, q: State, a: Symbol, row: TransitionRow) -> Result<Machine, MachineError> {
        let mut delta = self.delta.clone();
        delta.insert((q, a), row);
        Machine::from_parts(
            self.name.clone(),
            self.alphabet.clone(),
            self.states.clone(),
            self.sources.clone(),
            self.targets.clone(),
            self.initial,
            self.final_state,
            delta,
        )
    }

    /// Checks the three local unitarity conditions.
    pub fn validate(&self, tolerance: f64) -> ValidationReport {
        validate_local_conditions(self, tolerance)
    }
}

/// Which local condition a violation belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LocalCondition {
    /// Every row has unit norm.
    UnitRows = 1,
    /// Distinct rows are orthogonal.
    OrthogonalRows = 2,
    /// Right-moving and left-moving parts of rows do not interfere.
    SeparatedMoves = 3,
}

impl LocalCondition {
    pub fn id(self) -> u8 {
        self as u8
    }
}

/// One failed check. `rows` lists the offending `(q, a)` keys; for the
/// third condition `written` holds the symbols `(b, b')`.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub condition: LocalCondition,
    pub rows: Vec<(State, Symbol)>,
    pub written: Vec<Symbol>,
    pub residual: f64,
}

impl Violation {
    pub fn describe(&self, m: &Machine) -> String {
        let rows = self
            .rows
            .iter()
            .map(|(q, a)| format!("({}, {})", m.states.name(*q), m.alphabet.name(*a)))
            .collect::<Vec<_>>()
            .join(" vs ");
        let written = if self.written.is_empty() {
            String::new()
        } else {
            let w = self.written.iter().map(|b| m.alphabet.name(*b)).collect::<Vec<_>>().join(", ");
            format!(" writing ({w})")
        };
        format!("condition {}: {}{} residual {:e}", self.condition.id(), rows, written, self.residual)
    }
}

/// Outcome of [`validate_local_conditions`]. `valid` holds exactly when
/// `violations` is empty.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    /// Largest residual over every evaluated check, satisfied or not.
    pub max_residual: f64,
    pub tolerance: f64,
}

impl ValidationReport {
    pub fn render(&self, m: &Machine) -> String {
        if self.valid {
            return format!(
                "3 conditions satisfied (max residual {:.3e} <= {:e})\n",
                self.max_residual, self.tolerance
            );
        }
        let mut out = format!("{} violation(s)\n", self.violations.len());
        for v in &self.violations {
            out.push_str(&v.describe(m));
            out.push('\n');
        }
        out
    }
}

/// Evaluates the three local unitarity conditions on `δ₀`, comparing
/// every residual against `tolerance`. Invalid machines produce a report,
/// not an error.
pub fn validate_local_conditions(m: &Machine, tolerance: f64) -> ValidationReport {
    let rows: Vec<(State, Symbol, &TransitionRow)> = m.rows().collect();
    let mut violations = Vec::new();
    let mut max_residual: f64 = 0.0;
    let mut check = |residual: f64, violation: &dyn Fn() -> Violation| {
        max_residual = max_residual.max(residual);
        if residual > tolerance {
            violations.push(violation());
        }
    };

    for &(q, a, row) in &rows {
        let residual = (row.norm_sqr() - 1.0).abs();
        check(residual, &|| Violation {
            condition: LocalCondition::UnitRows,
            rows: vec![(q, a)],
            written: vec![],
            residual,
        });
    }

    for (i, &(q, a, row)) in rows.iter().enumerate() {
        for &(q2, a2, row2) in &rows[i + 1..] {
            let residual = row2.inner(row).norm();
            check(residual, &|| Violation {
                condition: LocalCondition::OrthogonalRows,
                rows: vec![(q, a), (q2, a2)],
                written: vec![],
                residual,
            });
        }
    }

    // Σ_p conj(δ₀(q',a')(p,b',L)) δ₀(q,a)(p,b,R), over every pair of rows
    // (a row paired with itself included) and every pair of written symbols.
    let right_parts: Vec<BTreeMap<(Symbol, State), Amplitude>> =
        rows.iter().map(|(_, _, row)| split_by_direction(row, Direction::R)).collect();
    let left_parts: Vec<BTreeMap<(Symbol, State), Amplitude>> =
        rows.iter().map(|(_, _, row)| split_by_direction(row, Direction::L)).collect();
    for (i, &(q, a, _)) in rows.iter().enumerate() {
        if right_parts[i].is_empty() {
            continue;
        }
        for (j, &(q2, a2, _)) in rows.iter().enumerate() {
            if left_parts[j].is_empty() {
                continue;
            }
            let mut sums: BTreeMap<(Symbol, Symbol), Amplitude> = BTreeMap::new();
            for (&(b, p), amp_r) in &right_parts[i] {
                for (&(b2, p2), amp_l) in &left_parts[j] {
                    if p == p2 {
                        *sums.entry((b, b2)).or_default() += amp_l.conj() * amp_r;
                    }
                }
            }
            for ((b, b2), sum) in sums {
                let residual = sum.norm();
                check(residual, &|| Violation {
                    condition: LocalCondition::SeparatedMoves,
                    rows: vec![(q, a), (q2, a2)],
                    written: vec![b, b2],
                    residual,
                });
            }
        }
    }

    ValidationReport { valid: violations.is_empty(), violations, max_residual, tolerance }
}

fn split_by_direction(row: &TransitionRow, dir: Direction) -> BTreeMap<(Symbol, State), Amplitude> {
    row.iter().filter(|(mv, _)| mv.dir == dir).map(|(mv, amp)| ((mv.write, mv.state), *amp)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compat::{example_p, example_s};

    fn c(re: f64) -> Amplitude {
        Amplitude::new(re, 0.0)
    }

    #[test]
    fn alphabet_reserves_blank_and_one() {
        let a = Alphabet::new(["$", "1", "□"]).unwrap();
        assert_eq!(a.lookup("_"), Some(Symbol::BLANK));
        assert_eq!(a.lookup("□"), Some(Symbol::BLANK));
        assert_eq!(a.lookup("1"), Some(Symbol::ONE));
        assert_eq!(a.name(a.lookup("$").unwrap()), "$");
        assert_eq!(Alphabet::new(["1"]), Err(MachineError::MissingDistinguishedSymbol(BLANK_NAME)));
        assert!(matches!(Alphabet::new(["1", "_", "□"]), Err(MachineError::DuplicateSymbol(_))));
    }

    #[test]
    fn example_p_shape() {
        let m = example_p();
        assert_eq!(m.states().len(), 5);
        assert_eq!(m.rows().count(), 6);
        assert_eq!(m.rule_count(), 6);
    }

    #[test]
    fn missing_row_is_rejected() {
        let mut d = example_p().to_description();
        d.rules.retain(|r| !(r.from == "q1" && r.read == "_"));
        assert_eq!(build_machine(&d), Err(MachineError::MissingRow { state: "q1".into(), symbol: "_".into() }));
    }

    #[test]
    fn source_destination_is_rejected() {
        let mut d = example_s().to_description();
        d.rules.push(RuleSpec::new("q1", "$", "s", "$", Direction::L, c(0.0)));
        // a zero-weight rule into a source is still not stored
        assert!(build_machine(&d).is_ok());
        d.rules.pop();
        d.rules[0].to = "s".into();
        assert!(matches!(build_machine(&d), Err(MachineError::SourceAsDestination { .. })));
    }

    #[test]
    fn unknown_names_and_duplicates() {
        let mut d = example_p().to_description();
        d.rules[0].write = "x".into();
        assert_eq!(build_machine(&d), Err(MachineError::UnknownSymbol("x".into())));
        let mut d = example_p().to_description();
        d.rules[0].to = "nowhere".into();
        assert_eq!(build_machine(&d), Err(MachineError::UnknownState("nowhere".into())));
        let mut d = example_p().to_description();
        let dup = d.rules[0].clone();
        d.rules.push(dup);
        assert!(matches!(build_machine(&d), Err(MachineError::DuplicateRule { .. })));
    }

    #[test]
    fn non_finite_amplitude_is_rejected() {
        let mut d = example_p().to_description();
        d.rules[0].amp = Amplitude::new(f64::NAN, 0.0);
        assert!(matches!(build_machine(&d), Err(MachineError::NonFiniteAmplitude { .. })));
    }

    #[test]
    fn reference_machines_are_valid() {
        for m in [example_p(), example_s()] {
            let report = m.validate(DEFAULT_UNITARITY_TOLERANCE);
            assert!(report.valid, "{}", report.render(&m));
            assert!(report.max_residual <= 1e-12);
        }
    }

    #[test]
    fn scaled_row_violates_normalization() {
        let m = example_s();
        let q1 = m.states().lookup("q1").unwrap();
        let row = m.row(q1, Symbol::ONE).unwrap().scaled(c(0.9));
        let bad = m.with_row(q1, Symbol::ONE, row).unwrap();
        let report = bad.validate(DEFAULT_UNITARITY_TOLERANCE);
        assert!(!report.valid);
        let v = report.violations.iter().find(|v| v.condition == LocalCondition::UnitRows).unwrap();
        assert_eq!(v.rows, vec![(q1, Symbol::ONE)]);
        assert!((v.residual - 0.19).abs() < 1e-12);
    }

    #[test]
    fn identical_rows_violate_orthogonality() {
        let m = example_s();
        let q1 = m.states().lookup("q1").unwrap();
        let q0 = m.states().lookup("q0").unwrap();
        let unit: TransitionRow =
            [(Move { state: q1, write: Symbol::BLANK, dir: Direction::R }, c(1.0))].into_iter().collect();
        let dollar = m.alphabet().lookup("$").unwrap();
        let bad = m.with_row(q0, dollar, unit.clone()).and_then(|m| m.with_row(q0, Symbol::ONE, unit)).unwrap();
        let report = bad.validate(DEFAULT_UNITARITY_TOLERANCE);
        let v = report
            .violations
            .iter()
            .find(|v| {
                v.condition == LocalCondition::OrthogonalRows
                    && v.rows.contains(&(q0, Symbol::ONE))
                    && v.rows.contains(&(q0, dollar))
            })
            .unwrap();
        assert!((v.residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn right_left_collision_violates_third_condition() {
        // q0 writes 1 moving right into q1; q1 writes 1 moving left into q1.
        let d = MachineDescription {
            name: "collide".into(),
            alphabet: vec!["_".into(), "1".into()],
            states: vec!["q0".into(), "q1".into(), "qf".into()],
            sources: vec!["q0".into()],
            targets: vec!["qf".into()],
            initial: "q0".into(),
            final_state: "qf".into(),
            rules: vec![
                RuleSpec::new("q0", "_", "q1", "1", Direction::R, c(1.0)),
                RuleSpec::new("q0", "1", "qf", "1", Direction::R, c(1.0)),
                RuleSpec::new("q1", "_", "q1", "1", Direction::L, c(1.0)),
                RuleSpec::new("q1", "1", "qf", "_", Direction::R, c(1.0)),
            ],
        };
        let m = build_machine(&d).unwrap();
        let report = m.validate(DEFAULT_UNITARITY_TOLERANCE);
        assert!(report
            .violations
            .iter()
            .any(|v| v.condition == LocalCondition::SeparatedMoves && (v.residual - 1.0).abs() < 1e-12));
    }

    #[test]
    fn validation_is_deterministic() {
        let m = example_s();
        let q1 = m.states().lookup("q1").unwrap();
        let bad = m.with_row(q1, Symbol::ONE, m.row(q1, Symbol::BLANK).unwrap().clone()).unwrap();
        assert_eq!(bad.validate(1e-9), bad.validate(1e-9));
    }
}
