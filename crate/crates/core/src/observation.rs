// SPDX-License-Identifier: Apache-2.0

//! Output measurement interleaved with evolution.
//!
//! A τ-observed run evolves one step at a time; at every step `h = τ(i)` the
//! freshly evolved q-configuration is measured for "final or not", so the
//! transition `φ_h → φ_{h+1}` emits an output `x_i` and `φ_{h+1}` is the
//! collapsed result. A run's probability is the product of the
//! probabilities of its observations.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::configuration::QConfiguration;
use crate::distribution::{ppd_of, Ppd, NORM_TOLERANCE};
use crate::evolution::Qtm;
use crate::machine::{Amplitude, Machine};

/// Default cap on the number of nodes of an enumerated run tree.
pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

/// Width, in standard errors, of the confidence radius of sampled frequencies.
pub const CONFIDENCE_SIGMAS: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservationError {
    #[error("NotNormalized: norm {0}")]
    NotNormalized(f64),
    #[error("NoOutcome: the q-configuration is zero")]
    NoOutcome,
    #[error("BudgetExceeded: run tree needs more than {0} nodes")]
    BudgetExceeded(usize),
    #[error("InvalidSchedule: {0}")]
    InvalidSchedule(String),
    #[error("HorizonTooShort: horizon {horizon} ends before the first observation at step {first}")]
    HorizonTooShort { horizon: usize, first: usize },
}

impl ObservationError {
    pub fn name(&self) -> &'static str {
        match self {
            ObservationError::NotNormalized(_) => "NotNormalized",
            ObservationError::NoOutcome => "NoOutcome",
            ObservationError::BudgetExceeded(_) => "BudgetExceeded",
            ObservationError::InvalidSchedule(_) => "InvalidSchedule",
            ObservationError::HorizonTooShort { .. } => "HorizonTooShort",
        }
    }
}

/// Strictly increasing `τ: ℕ → ℕ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TauSchedule {
    /// `τ(i) = stride·i + offset`.
    Every { stride: usize, offset: usize },
    /// The listed values, then continued with the last gap (1 for a
    /// single-element list).
    List(Vec<usize>),
}

impl TauSchedule {
    pub fn every(stride: usize, offset: usize) -> Result<Self, ObservationError> {
        if stride == 0 {
            return Err(ObservationError::InvalidSchedule("stride must be at least 1".into()));
        }
        Ok(TauSchedule::Every { stride, offset })
    }

    pub fn list(values: Vec<usize>) -> Result<Self, ObservationError> {
        if values.is_empty() {
            return Err(ObservationError::InvalidSchedule("empty list".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ObservationError::InvalidSchedule("list must be strictly increasing".into()));
        }
        Ok(TauSchedule::List(values))
    }

    /// Parses `every:K[,offset:O]` or `list:a,b,c`.
    pub fn parse(text: &str) -> Result<Self, ObservationError> {
        let bad = || ObservationError::InvalidSchedule(format!("`{text}`; expected every:K[,offset:O] or list:a,b,c"));
        let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
        if let Some(rest) = text.trim().strip_prefix("every:") {
            let (stride, offset) = match rest.split_once(',') {
                None => (num(rest)?, 0),
                Some((k, o)) => (num(k)?, num(o.trim().strip_prefix("offset:").ok_or_else(bad)?)?),
            };
            Self::every(stride, offset)
        } else if let Some(rest) = text.trim().strip_prefix("list:") {
            Self::list(rest.split(',').map(num).collect::<Result<_, _>>()?)
        } else {
            Err(bad())
        }
    }

    pub fn tau(&self, i: usize) -> usize {
        match self {
            TauSchedule::Every { stride, offset } => stride * i + offset,
            TauSchedule::List(v) => match v.get(i) {
                Some(t) => *t,
                None => {
                    let last = v[v.len() - 1];
                    let gap = if v.len() > 1 { last - v[v.len() - 2] } else { 1 };
                    last + gap * (i + 1 - v.len())
                }
            },
        }
    }

    /// True when some `τ(i) = h`.
    pub fn observes(&self, h: usize) -> bool {
        match self {
            TauSchedule::Every { stride, offset } => h >= *offset && (h - offset).is_multiple_of(*stride),
            TauSchedule::List(v) => {
                let last = v[v.len() - 1];
                if h <= last {
                    v.binary_search(&h).is_ok()
                } else {
                    let gap = if v.len() > 1 { last - v[v.len() - 2] } else { 1 };
                    (h - last).is_multiple_of(gap)
                }
            }
        }
    }
}

impl fmt::Display for TauSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauSchedule::Every { stride, offset: 0 } => write!(f, "every:{stride}"),
            TauSchedule::Every { stride, offset } => write!(f, "every:{stride},offset:{offset}"),
            TauSchedule::List(v) => {
                let items: Vec<String> = v.iter().map(ToString::to_string).collect();
                write!(f, "list:{}", items.join(","))
            }
        }
    }
}

/// Result of one output measurement: a natural number or ⊥.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Value(u64),
    Bottom,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Value(n) => write!(f, "{n}"),
            Outcome::Bottom => write!(f, "⊥"),
        }
    }
}

/// `φ → x → ψ` with the probability of observing `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputObservation {
    pub input: QConfiguration,
    pub outcome: Outcome,
    pub collapsed: QConfiguration,
    pub probability: f64,
}

fn check_norm(phi: &QConfiguration) -> Result<(), ObservationError> {
    if phi.is_empty() {
        return Err(ObservationError::NoOutcome);
    }
    let norm = phi.norm();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(ObservationError::NotNormalized(norm));
    }
    Ok(())
}

/// Final terms collapse to `(e_C/|e_C|)|C⟩`, keeping the phase so that
/// `Σ √Pr · ψ` over all outcomes gives back `φ`.
fn final_branch(m: &Machine, c: &crate::configuration::Configuration, e: Amplitude) -> (Outcome, QConfiguration, f64) {
    let p = e.norm_sqr();
    let mut collapsed = QConfiguration::new();
    collapsed.add_term(c.clone(), e / e.norm());
    debug_assert_eq!(c.state(), m.final_state());
    (Outcome::Value(c.val()), collapsed, p)
}

fn split(m: &Machine, phi: &QConfiguration) -> (QConfiguration, QConfiguration) {
    let fin = phi.filter(|c| c.state() == m.final_state());
    let rest = phi.filter(|c| c.state() != m.final_state());
    (fin, rest)
}

/// Every possible outcome of measuring `phi`, with its collapsed state and
/// probability. Outcomes of probability 0 are omitted.
pub fn measurement_outcomes(
    m: &Machine,
    phi: &QConfiguration,
) -> Result<Vec<(Outcome, QConfiguration, f64)>, ObservationError> {
    check_norm(phi)?;
    let (fin, rest) = split(m, phi);
    let mut out: Vec<_> = fin.iter().map(|(c, e)| final_branch(m, c, *e)).collect();
    if !rest.is_empty() {
        let norm = rest.norm();
        out.push((Outcome::Bottom, rest.scale(Amplitude::new(1.0 / norm, 0.0)), norm * norm));
    }
    Ok(out)
}

/// Samples an output observation: final versus non-final first, then a
/// final basis term proportionally to its squared amplitude.
pub fn measure_output<R: Rng + ?Sized>(
    m: &Machine,
    phi: &QConfiguration,
    rng: &mut R,
) -> Result<OutputObservation, ObservationError> {
    check_norm(phi)?;
    let (fin, rest) = split(m, phi);
    let p_final = fin.norm_sqr();
    let u: f64 = rng.random();
    let final_chosen = rest.is_empty() || (!fin.is_empty() && u < p_final);
    let (outcome, collapsed, probability) = if final_chosen {
        let v: f64 = rng.random::<f64>() * p_final;
        let mut acc = 0.0;
        let mut chosen = None;
        for (c, e) in fin.iter() {
            acc += e.norm_sqr();
            chosen = Some((c, *e));
            if v < acc {
                break;
            }
        }
        let (c, e) = chosen.expect("final part is non-empty");
        final_branch(m, c, e)
    } else {
        let norm = rest.norm();
        (Outcome::Bottom, rest.scale(Amplitude::new(1.0 / norm, 0.0)), norm * norm)
    };
    Ok(OutputObservation { input: phi.clone(), outcome, collapsed, probability })
}

/// What happened on the transition into step `k` of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunEvent {
    Start,
    Step,
    Measure(Outcome),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceLine {
    pub k: usize,
    pub event: RunEvent,
    pub probability: f64,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (event, x) = match self.event {
            RunEvent::Start => ("start", "-".to_string()),
            RunEvent::Step => ("step", "-".to_string()),
            RunEvent::Measure(o) => ("measure", o.to_string()),
        };
        write!(f, "{} | {event} | {x} | {}", self.k, crate::cli::format::sig(self.probability))
    }
}

/// One sampled τ-observed run up to the horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub outputs: Vec<Outcome>,
    pub probability: f64,
    /// First numeric output, if any.
    pub observed: Option<u64>,
    pub trace: Vec<TraceLine>,
    pub last: QConfiguration,
}

impl RunRecord {
    pub fn render_trace(&self) -> String {
        self.trace.iter().map(|l| format!("{l}\n")).collect()
    }
}

fn check_horizon(tau: &TauSchedule, horizon: usize) -> Result<(), ObservationError> {
    let first = tau.tau(0);
    if horizon < first + 1 {
        return Err(ObservationError::HorizonTooShort { horizon, first });
    }
    Ok(())
}

/// Samples one run of `horizon` steps.
pub fn sample_run<R: Rng + ?Sized>(
    m: &Qtm,
    phi0: &QConfiguration,
    tau: &TauSchedule,
    horizon: usize,
    rng: &mut R,
) -> Result<RunRecord, ObservationError> {
    check_horizon(tau, horizon)?;
    check_norm(phi0)?;
    let mut phi = phi0.clone();
    let mut record = RunRecord {
        outputs: Vec::new(),
        probability: 1.0,
        observed: None,
        trace: vec![TraceLine { k: 0, event: RunEvent::Start, probability: 1.0 }],
        last: QConfiguration::new(),
    };
    for h in 0..horizon {
        phi = m.step(&phi);
        let event = if tau.observes(h) {
            let obs = measure_output(m, &phi, rng)?;
            record.probability *= obs.probability;
            record.outputs.push(obs.outcome);
            if let (None, Outcome::Value(n)) = (record.observed, obs.outcome) {
                record.observed = Some(n);
            }
            phi = obs.collapsed;
            RunEvent::Measure(obs.outcome)
        } else {
            RunEvent::Step
        };
        record.trace.push(TraceLine { k: h + 1, event, probability: record.probability });
    }
    record.last = phi;
    Ok(record)
}

/// Observed output of one run, without keeping its trace.
fn observe_once<R: Rng>(
    m: &Qtm,
    phi0: &QConfiguration,
    tau: &TauSchedule,
    horizon: usize,
    rng: &mut R,
) -> Result<Option<u64>, ObservationError> {
    let mut phi = phi0.clone();
    for h in 0..horizon {
        phi = m.step(&phi);
        if tau.observes(h) {
            let obs = measure_output(m, &phi, rng)?;
            if let Outcome::Value(n) = obs.outcome {
                // Later observations repeat n; the rest of the run cannot change it.
                return Ok(Some(n));
            }
            phi = obs.collapsed;
        }
    }
    Ok(None)
}

/// Observed outputs of `runs` independent runs. Run `j` draws from its own
/// ChaCha8 stream `j` under `seed`, so results do not depend on scheduling.
pub fn sample_observed(
    m: &Qtm,
    phi0: &QConfiguration,
    tau: &TauSchedule,
    horizon: usize,
    runs: usize,
    seed: u64,
) -> Result<Vec<Option<u64>>, ObservationError> {
    check_horizon(tau, horizon)?;
    check_norm(phi0)?;
    (0..runs)
        .into_par_iter()
        .map(|j| {
            let mut rng = run_rng(seed, j as u64);
            observe_once(m, phi0, tau, horizon, &mut rng)
        })
        .collect()
}

/// Generator for run `stream` of a sampling session seeded with `seed`.
pub fn run_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sampled frequencies with a confidence radius per entry.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalPpd {
    pub ppd: Ppd,
    pub runs: usize,
    /// `CONFIDENCE_SIGMAS · sqrt(p̂(1−p̂)/N)` for each observed `n`.
    pub radius: BTreeMap<u64, f64>,
    pub bottom_radius: f64,
}

fn radius(p: f64, n: usize) -> f64 {
    CONFIDENCE_SIGMAS * (p * (1.0 - p) / n as f64).sqrt()
}

/// Frequency of each observed output; runs that never observed a number
/// count towards ⊥.
pub fn empirical_ppd<I: IntoIterator<Item = Option<u64>>>(observed: I) -> EmpiricalPpd {
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    let mut runs = 0;
    for o in observed {
        runs += 1;
        if let Some(n) = o {
            *counts.entry(n).or_default() += 1;
        }
    }
    let total = runs.max(1) as f64;
    let ppd = Ppd::from_entries(counts.iter().map(|(n, c)| (*n, *c as f64 / total)))
        .expect("frequencies form a partial distribution");
    let radius_map = ppd.iter().map(|(n, p)| (n, radius(p, runs.max(1)))).collect();
    let bottom_radius = radius(ppd.bottom().max(0.0), runs.max(1));
    EmpiricalPpd { ppd, runs, radius: radius_map, bottom_radius }
}

impl EmpiricalPpd {
    /// `n<TAB>frequency<TAB>±radius` lines, then ⊥.
    pub fn serialize(&self) -> String {
        use crate::cli::format::sig;
        let mut out = String::new();
        for (n, p) in self.ppd.iter() {
            let _ = writeln!(out, "{n}\t{}\t±{}", sig(p), sig(self.radius[&n]));
        }
        let _ = writeln!(out, "⊥\t{}\t±{}", sig(self.ppd.bottom().max(0.0)), sig(self.bottom_radius));
        out
    }
}

/// Node of an enumerated run tree: the state of one run prefix after
/// `depth` steps.
#[derive(Clone, Debug, PartialEq)]
pub struct RunNode {
    pub parent: Option<usize>,
    pub depth: usize,
    pub event: RunEvent,
    pub psi: QConfiguration,
    pub probability: f64,
    pub observed: Option<u64>,
}

/// Every τ-observed run prefix up to a horizon, level by level.
#[derive(Clone, Debug)]
pub struct RunTree {
    nodes: Vec<RunNode>,
    levels: Vec<Vec<usize>>,
}

/// Expands all runs exactly. Fails once the tree would exceed `budget` nodes.
pub fn enumerate_runs(
    m: &Qtm,
    phi0: &QConfiguration,
    tau: &TauSchedule,
    horizon: usize,
    budget: usize,
) -> Result<RunTree, ObservationError> {
    check_norm(phi0)?;
    let mut tree = RunTree {
        nodes: vec![RunNode {
            parent: None,
            depth: 0,
            event: RunEvent::Start,
            psi: phi0.clone(),
            probability: 1.0,
            observed: None,
        }],
        levels: vec![vec![0]],
    };
    for h in 0..horizon {
        let mut level = Vec::new();
        for &id in &tree.levels[h] {
            let parent = &tree.nodes[id];
            let evolved = m.step(&parent.psi);
            let (prob, observed) = (parent.probability, parent.observed);
            let children: Vec<RunNode> = if tau.observes(h) {
                measurement_outcomes(m, &evolved)?
                    .into_iter()
                    .map(|(outcome, psi, p)| RunNode {
                        parent: Some(id),
                        depth: h + 1,
                        event: RunEvent::Measure(outcome),
                        psi,
                        probability: prob * p,
                        observed: observed.or(match outcome {
                            Outcome::Value(n) => Some(n),
                            Outcome::Bottom => None,
                        }),
                    })
                    .collect()
            } else {
                vec![RunNode {
                    parent: Some(id),
                    depth: h + 1,
                    event: RunEvent::Step,
                    psi: evolved,
                    probability: prob,
                    observed,
                }]
            };
            for child in children {
                if tree.nodes.len() >= budget {
                    return Err(ObservationError::BudgetExceeded(budget));
                }
                level.push(tree.nodes.len());
                tree.nodes.push(child);
            }
        }
        tree.levels.push(level);
    }
    Ok(tree)
}

impl RunTree {
    pub fn horizon(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: usize) -> &RunNode {
        &self.nodes[id]
    }

    /// Run prefixes of length `k`.
    pub fn runs_at(&self, k: usize) -> impl Iterator<Item = &RunNode> {
        self.levels[k].iter().map(|id| &self.nodes[*id])
    }

    /// Outputs `x_0, x_1, …` emitted along the path to `id`.
    pub fn outputs(&self, id: usize) -> Vec<Outcome> {
        let mut out = Vec::new();
        let mut cur = Some(id);
        while let Some(i) = cur {
            if let RunEvent::Measure(o) = self.nodes[i].event {
                out.push(o);
            }
            cur = self.nodes[i].parent;
        }
        out.reverse();
        out
    }

    pub fn total_probability(&self, k: usize) -> f64 {
        self.runs_at(k).map(|r| r.probability).sum()
    }

    /// `n ↦ Pr{R : obsout(R[k]) = n}`.
    pub fn observed_distribution(&self, k: usize) -> Ppd {
        let mut mass: BTreeMap<u64, f64> = BTreeMap::new();
        for r in self.runs_at(k) {
            if let Some(n) = r.observed {
                *mass.entry(n).or_default() += r.probability;
            }
        }
        Ppd::from_entries(mass).expect("run probabilities form a partial distribution")
    }

    /// `Σ_R √Pr(R) · ψ_R` over the run prefixes of length `k`.
    pub fn reconstruct(&self, k: usize) -> QConfiguration {
        let mut out = QConfiguration::new();
        for r in self.runs_at(k) {
            let w = Amplitude::new(r.probability.sqrt(), 0.0);
            for (c, a) in r.psi.iter() {
                out.add_term(c.clone(), a * w);
            }
        }
        out
    }

    /// Indented rendering: one line per node, indented by depth.
    pub fn export(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![0usize];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for (id, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                children[p].push(id);
            }
        }
        while let Some(id) = stack.pop() {
            let n = &self.nodes[id];
            let line = TraceLine { k: n.depth, event: n.event, probability: n.probability };
            let _ = writeln!(out, "{}{line}", "  ".repeat(n.depth));
            stack.extend(children[id].iter().rev());
        }
        out
    }
}

/// Largest gap between the exact observed distribution at each depth
/// `τ(i)+1 ≤ horizon` and the ideal PPD of the unobserved computation.
/// Returns `(k, residual)` pairs.
pub fn consistency_residuals(
    m: &Qtm,
    phi0: &QConfiguration,
    tau: &TauSchedule,
    tree: &RunTree,
) -> Result<Vec<(usize, f64)>, ObservationError> {
    let mut out = Vec::new();
    let mut phi = phi0.clone();
    let mut k = 0;
    for i in 0.. {
        let target = tau.tau(i) + 1;
        if target > tree.horizon() {
            break;
        }
        while k < target {
            phi = m.step(&phi);
            k += 1;
        }
        let ideal = ppd_of(m, &phi).map_err(|_| ObservationError::NotNormalized(phi.norm()))?;
        let observed = tree.observed_distribution(k);
        let gap = ideal.max_distance(&observed).max((ideal.bottom() - observed.bottom()).abs());
        out.push((k, gap));
    }
    Ok(out)
}
