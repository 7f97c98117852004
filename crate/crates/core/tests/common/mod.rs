// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures for the integration tests: a seeded generator of
//! permutation-style machines, deliberate corruptions of them, and an
//! independent dense-tape stepper for looped machines.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use qtm::compat::BvMachine;
use qtm::configuration::{Configuration, QConfiguration};
use qtm::machine::{build_machine, Amplitude, Direction, Machine, MachineDescription, RuleSpec, State, Symbol};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Destination `(state, write, dir)` by name.
type Image = (String, String, Direction);

/// `(q, a)` key and its weighted images.
pub type Row = ((String, String), Vec<(Image, Amplitude)>);

/// Name-level machine whose rows are lists of weighted images. Kept apart
/// from [`MachineDescription`] so corruptions can edit single rows.
#[derive(Clone, Debug)]
pub struct Generated {
    pub name: String,
    pub alphabet: Vec<String>,
    pub states: Vec<String>,
    pub targets: Vec<String>,
    pub rows: Vec<Row>,
}

impl Generated {
    pub fn description(&self) -> MachineDescription {
        let rules = self
            .rows
            .iter()
            .flat_map(|((q, a), entries)| {
                entries.iter().map(move |((p, b, d), amp)| RuleSpec::new(q, a, p, b, *d, *amp))
            })
            .collect();
        MachineDescription {
            name: self.name.clone(),
            alphabet: self.alphabet.clone(),
            states: self.states.clone(),
            sources: vec!["q0".into()],
            targets: self.targets.clone(),
            initial: "q0".into(),
            final_state: "qf".into(),
            rules,
        }
    }

    pub fn machine(&self) -> Machine {
        build_machine(&self.description()).expect("generated machine is well formed")
    }

    fn singletons(&self) -> Vec<usize> {
        (0..self.rows.len()).filter(|&i| self.rows[i].1.len() == 1).collect()
    }
}

fn phase(rng: &mut impl Rng) -> Amplitude {
    Amplitude::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
}

/// Random machine whose rows are an injective assignment of phased images,
/// each destination state receiving moves in one direction only. A few row
/// pairs are mixed by a 2×2 unitary when one of the two images enters a
/// target; that keeps the number of non-target terms from growing, so
/// supports stay linear in the number of steps.
pub fn permutation_machine(seed: u64) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alphabet = vec!["_".to_string(), "1".to_string()];
    if rng.random_bool(0.5) {
        alphabet.push("a".into());
    }
    let middle: Vec<String> = (1..=rng.random_range(1..=3)).map(|i| format!("m{i}")).collect();
    let sink = rng.random_bool(0.5);
    let mut states = vec!["q0".to_string()];
    states.extend(middle.iter().cloned());
    states.push("qf".into());
    let mut targets = vec!["qf".to_string()];
    if sink {
        states.push("s".into());
        targets.push("s".into());
    }
    let mut pool: Vec<Image> = Vec::new();
    for p in states.iter().skip(1) {
        let d = if rng.random_bool(0.5) { Direction::L } else { Direction::R };
        for b in &alphabet {
            pool.push((p.clone(), b.clone(), d));
        }
    }
    pool.shuffle(&mut rng);
    let mut rows = Vec::new();
    let mut k = 0;
    for q in std::iter::once(&"q0".to_string()).chain(middle.iter()) {
        for a in &alphabet {
            rows.push(((q.clone(), a.clone()), vec![(pool[k].clone(), phase(&mut rng))]));
            k += 1;
        }
    }
    let is_target = |img: &Image| targets.contains(&img.0);
    let mut used = vec![false; rows.len()];
    for _ in 0..2 {
        let free: Vec<usize> = (0..rows.len()).filter(|&i| !used[i]).collect();
        let xs: Vec<usize> = free.iter().copied().filter(|&i| !is_target(&rows[i].1[0].0)).collect();
        let ys: Vec<usize> = free.iter().copied().filter(|&i| is_target(&rows[i].1[0].0)).collect();
        // Corruptions need two single-image rows left over.
        if xs.is_empty() || ys.is_empty() || free.len() < 4 || rng.random_bool(0.25) {
            continue;
        }
        let (i, j) = (xs[rng.random_range(0..xs.len())], ys[rng.random_range(0..ys.len())]);
        let (x, y) = (rows[i].1[0].0.clone(), rows[j].1[0].0.clone());
        let t = rng.random_range(0.3..1.2f64);
        let (a, b, g) = (phase(&mut rng), phase(&mut rng), phase(&mut rng));
        let (c, s) = (Amplitude::new(t.cos(), 0.0), Amplitude::new(t.sin(), 0.0));
        rows[i].1 = vec![(x.clone(), g * a * c), (y.clone(), g * b * s)];
        rows[j].1 = vec![(x, -g * b.conj() * s), (y, g * a.conj() * c)];
        used[i] = true;
        used[j] = true;
    }
    Generated { name: format!("perm_{seed}"), alphabet, states, targets, rows }
}

/// The ways [`corrupt`] can break a valid machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Corruption {
    ScaledRow,
    SharedImage,
    OpposedMoves,
    SkewedRow,
}

pub const CORRUPTIONS: [Corruption; 4] =
    [Corruption::ScaledRow, Corruption::SharedImage, Corruption::OpposedMoves, Corruption::SkewedRow];

/// Breaks exactly one local condition of a generated machine.
pub fn corrupt(g: &Generated, how: Corruption, seed: u64) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = g.clone();
    out.name = format!("{}_{how:?}", g.name);
    let mut single = g.singletons();
    single.shuffle(&mut rng);
    let (i, j) = (single[0], single[1]);
    match how {
        Corruption::ScaledRow => {
            for e in &mut out.rows[i].1 {
                e.1 *= 0.8;
            }
        }
        Corruption::SharedImage => {
            out.rows[j].1[0].0 = out.rows[i].1[0].0.clone();
        }
        Corruption::OpposedMoves => {
            let (p, _, d) = out.rows[j].1[0].0.clone();
            let flipped = if d == Direction::L { Direction::R } else { Direction::L };
            out.rows[i].1[0].0 = (p, out.rows[i].1[0].0 .1.clone(), flipped);
        }
        Corruption::SkewedRow => {
            let (x, y) = (out.rows[i].1[0].0.clone(), out.rows[j].1[0].0.clone());
            let h = Amplitude::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            out.rows[i].1 = vec![(x, h), (y, h)];
        }
    }
    out
}

/// Random normalized superposition of `terms` distinct initial
/// configurations with tapes of length at most `max_len`.
pub fn random_input(m: &Machine, terms: usize, max_len: usize, rng: &mut impl Rng) -> QConfiguration {
    let symbols: Vec<Symbol> = m.alphabet().symbols().collect();
    let mut chosen: Vec<Configuration> = Vec::new();
    while chosen.len() < terms {
        let len = rng.random_range(0..=max_len);
        let tape: Vec<Symbol> = (0..len).map(|_| symbols[rng.random_range(0..symbols.len())]).collect();
        let c = Configuration::canonical(vec![], m.initial(), tape, 0);
        if !chosen.contains(&c) {
            chosen.push(c);
        }
    }
    let amps: Vec<Amplitude> =
        chosen.iter().map(|_| Amplitude::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let mut phi = QConfiguration::new();
    for (c, a) in chosen.into_iter().zip(amps) {
        phi.add_term(c, a / norm);
    }
    phi
}

/// Dense-tape configuration of a looped machine: absolute head position and
/// the non-blank cells.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DenseConfig {
    pub state: State,
    pub head: i64,
    pub cells: Vec<(i64, Symbol)>,
}

impl DenseConfig {
    pub fn start(q: State, tape: &[Symbol]) -> Self {
        let cells = tape.iter().enumerate().filter(|(_, s)| !s.is_blank()).map(|(i, s)| (i as i64, *s)).collect();
        DenseConfig { state: q, head: 0, cells }
    }

    fn read(&self) -> Symbol {
        self.cells.iter().find(|(i, _)| *i == self.head).map_or(Symbol::BLANK, |(_, s)| *s)
    }

    /// Same tape seen relative to the head, trimmed of blanks.
    pub fn relative(&self, counter: u64) -> Configuration {
        let lo = self.cells.first().map_or(self.head, |c| c.0.min(self.head));
        let hi = self.cells.last().map_or(self.head, |c| c.0.max(self.head));
        let at = |i: i64| self.cells.iter().find(|(j, _)| *j == i).map_or(Symbol::BLANK, |(_, s)| *s);
        let left = (lo..self.head).map(at).collect();
        let right = (self.head..=hi).map(at).collect();
        Configuration::canonical(left, self.state, right, counter)
    }
}

/// One step of the looped machine's full transition table, written
/// directly on dense tapes.
pub fn bv_dense_step(b: &BvMachine, phi: &HashMap<DenseConfig, Amplitude>) -> HashMap<DenseConfig, Amplitude> {
    let mut out: HashMap<DenseConfig, Amplitude> = HashMap::new();
    for (c, amp) in phi {
        let Some(row) = b.row(c.state, c.read()) else { continue };
        for (mv, a) in row.iter() {
            let mut cells: BTreeMap<i64, Symbol> = c.cells.iter().copied().collect();
            if mv.write.is_blank() {
                cells.remove(&c.head);
            } else {
                cells.insert(c.head, mv.write);
            }
            let head = match mv.dir {
                Direction::L => c.head - 1,
                Direction::R => c.head + 1,
            };
            let next = DenseConfig { state: mv.state, head, cells: cells.into_iter().collect() };
            *out.entry(next).or_default() += amp * a;
        }
    }
    out.retain(|_, a| a.norm() > 1e-300);
    out
}

/// Largest coefficient gap between a sparse superposition and a dense one.
pub fn dense_distance(phi: &QConfiguration, dense: &HashMap<DenseConfig, Amplitude>) -> f64 {
    let mut other = QConfiguration::new();
    for (c, a) in dense {
        other.add_term(c.relative(0), *a);
    }
    phi.max_coefficient_distance(&other)
}
