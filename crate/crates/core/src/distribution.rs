// SPDX-License-Identifier: Apache-2.0

//! Partial probability distributions over the naturals and the computed
//! output of a machine as the limit of a monotone sequence of them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::configuration::QConfiguration;
use crate::evolution::Qtm;
use crate::machine::Machine;

/// Slack allowed on probability sums and pointwise comparisons.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;
/// Slack allowed on the norm of an evolved q-configuration.
pub const NORM_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("NotNormalized: norm {0}")]
    NotNormalized(f64),
    #[error("NonMonotoneSequence: element {index} drops below its predecessor at {at}")]
    NonMonotoneSequence { index: usize, at: u64 },
    #[error("InvalidPpd: {0}")]
    InvalidPpd(String),
    #[error("InvalidPolicy: {0}")]
    InvalidPolicy(&'static str),
}

impl DistributionError {
    pub fn name(&self) -> &'static str {
        match self {
            DistributionError::NotNormalized(_) => "NotNormalized",
            DistributionError::NonMonotoneSequence { .. } => "NonMonotoneSequence",
            DistributionError::InvalidPpd(_) => "InvalidPpd",
            DistributionError::InvalidPolicy(_) => "InvalidPolicy",
        }
    }
}

/// Partial probability distribution on ℕ. Entries with zero mass are not
/// stored; the missing mass is `P(⊥)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ppd {
    mass: BTreeMap<u64, f64>,
}

impl Ppd {
    /// The everywhere-zero PPD (all mass on ⊥).
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a PPD, rejecting entries outside `[0, 1]` and total mass above
    /// `1 + PROBABILITY_TOLERANCE`.
    pub fn from_entries<I: IntoIterator<Item = (u64, f64)>>(entries: I) -> Result<Self, DistributionError> {
        let mut mass = BTreeMap::new();
        for (n, p) in entries {
            if !(0.0..=1.0 + PROBABILITY_TOLERANCE).contains(&p) || !p.is_finite() {
                return Err(DistributionError::InvalidPpd(format!("P({n}) = {p}")));
            }
            if p > 0.0 {
                *mass.entry(n).or_insert(0.0) += p;
            }
        }
        let ppd = Self { mass };
        if ppd.total() > 1.0 + PROBABILITY_TOLERANCE {
            return Err(DistributionError::InvalidPpd(format!("total mass {}", ppd.total())));
        }
        Ok(ppd)
    }

    pub fn get(&self, n: u64) -> f64 {
        self.mass.get(&n).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.mass.iter().map(|(n, p)| (*n, *p))
    }

    pub fn support(&self) -> impl Iterator<Item = u64> + '_ {
        self.mass.keys().copied()
    }

    pub fn total(&self) -> f64 {
        self.mass.values().sum()
    }

    /// `P(⊥) = 1 − Σ P(n)`.
    pub fn bottom(&self) -> f64 {
        1.0 - self.total()
    }

    /// A PD: no mass on ⊥, within tolerance.
    pub fn is_total(&self) -> bool {
        self.bottom().abs() <= PROBABILITY_TOLERANCE
    }

    /// Pointwise `self ≤ other` within [`PROBABILITY_TOLERANCE`].
    pub fn leq(&self, other: &Ppd) -> bool {
        leq(self, other)
    }

    /// Largest pointwise distance, ⊥ excluded.
    pub fn max_distance(&self, other: &Ppd) -> f64 {
        self.mass.keys().chain(other.mass.keys()).map(|n| (self.get(*n) - other.get(*n)).abs()).fold(0.0, f64::max)
    }

    /// `n<TAB>probability` lines sorted by `n`, then `⊥<TAB>mass`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (n, p) in self.iter() {
            let _ = writeln!(out, "{n}\t{}", crate::cli::format::sig(p));
        }
        let _ = writeln!(out, "⊥\t{}", crate::cli::format::sig(self.bottom().max(0.0)));
        out
    }

    /// Inverse of [`Ppd::serialize`]. The ⊥ line is checked for consistency.
    pub fn parse(text: &str) -> Result<Self, DistributionError> {
        let mut entries = Vec::new();
        let mut bottom = None;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (key, value) = line
                .split_once('\t')
                .ok_or_else(|| DistributionError::InvalidPpd(format!("malformed line `{line}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| DistributionError::InvalidPpd(format!("bad probability `{value}`")))?;
            if key == "⊥" {
                bottom = Some(value);
            } else {
                let n: u64 =
                    key.trim().parse().map_err(|_| DistributionError::InvalidPpd(format!("bad outcome `{key}`")))?;
                entries.push((n, value));
            }
        }
        let ppd = Ppd::from_entries(entries)?;
        if let Some(b) = bottom {
            if (b - ppd.bottom()).abs() > 1e-6 {
                return Err(DistributionError::InvalidPpd(format!(
                    "⊥ mass {b} disagrees with entries ({})",
                    ppd.bottom()
                )));
            }
        }
        Ok(ppd)
    }
}

/// Pointwise order on PPDs, within [`PROBABILITY_TOLERANCE`].
pub fn leq(p: &Ppd, q: &Ppd) -> bool {
    p.mass.iter().all(|(n, a)| *a <= q.get(*n) + PROBABILITY_TOLERANCE)
}

/// Supremum of a monotone sequence: its pointwise limit. For a finite
/// sequence that is the last element; monotonicity is checked on the way.
pub fn sup<'a, I>(sequence: I) -> Result<Ppd, DistributionError>
where
    I: IntoIterator<Item = &'a Ppd>,
{
    let mut current: Option<&Ppd> = None;
    for (index, next) in sequence.into_iter().enumerate() {
        if let Some(prev) = current {
            if let Some((&at, _)) = prev.mass.iter().find(|(n, a)| **a > next.get(**n) + PROBABILITY_TOLERANCE) {
                return Err(DistributionError::NonMonotoneSequence { index, at });
            }
        }
        current = Some(next);
    }
    Ok(current.cloned().unwrap_or_default())
}

/// PPD of a q-configuration: the squared magnitudes of its final terms,
/// grouped by the number of `1`s on the tape. Non-final mass is ⊥.
pub fn ppd_of(m: &Machine, phi: &QConfiguration) -> Result<Ppd, DistributionError> {
    let norm = phi.norm();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(DistributionError::NotNormalized(norm));
    }
    Ok(final_mass(m, phi))
}

/// Final mass grouped by value, without the normalization check.
pub(crate) fn final_mass(m: &Machine, phi: &QConfiguration) -> Ppd {
    let mut mass = BTreeMap::new();
    for (c, amp) in phi.iter() {
        if c.state() == m.final_state() {
            *mass.entry(c.val()).or_insert(0.0) += amp.norm_sqr();
        }
    }
    Ppd { mass }
}

/// True when every term of `phi` is in the final state.
pub fn is_final(m: &Machine, phi: &QConfiguration) -> bool {
    phi.configurations().all(|c| c.state() == m.final_state())
}

/// When [`compute_output`] stops iterating.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergencePolicy {
    /// Threshold on the gain of total mass over `window` steps.
    pub epsilon: f64,
    pub window: usize,
    /// Maximum number of steps.
    pub horizon: usize,
}

impl Default for ConvergencePolicy {
    fn default() -> Self {
        Self { epsilon: 1e-6, window: 8, horizon: 10_000 }
    }
}

/// Why [`compute_output`] stopped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OutputStatus {
    /// `φ_k` is entirely final; the PPD cannot change afterwards.
    Finitary { step: usize },
    /// Total mass still grows, but by less than `epsilon` over the last
    /// window ending at `step`.
    Converged { epsilon: f64, step: usize },
    /// Neither of the above by the horizon. Says nothing about divergence.
    HorizonReached { step: usize },
}

impl OutputStatus {
    pub fn step(&self) -> usize {
        match *self {
            OutputStatus::Finitary { step }
            | OutputStatus::Converged { step, .. }
            | OutputStatus::HorizonReached { step } => step,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            OutputStatus::Finitary { step } => format!("finitary({step})"),
            OutputStatus::Converged { epsilon, step } => format!("converged({epsilon:e}, {step})"),
            OutputStatus::HorizonReached { step } => format!("horizon-reached({step})"),
        }
    }
}

/// Finite-horizon approximation of the computed output.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputReport {
    pub ppd: Ppd,
    pub status: OutputStatus,
    /// Total final mass at steps `0..=status.step()`.
    pub history: Vec<f64>,
}

impl OutputReport {
    /// The PPD serialization preceded by a `# status` comment line.
    pub fn serialize(&self) -> String {
        format!("# status\t{}\n{}", self.status.label(), self.ppd.serialize())
    }
}

/// Iterates the machine from `phi` and reports the PPD at the stopping step.
///
/// A window with zero gain does not count as convergence: a stalled
/// residual ⊥ is reported as `HorizonReached`, since a later step may
/// still move mass into the final state.
pub fn compute_output(
    m: &Qtm,
    phi: &QConfiguration,
    policy: &ConvergencePolicy,
) -> Result<OutputReport, DistributionError> {
    if policy.horizon == 0 {
        return Err(DistributionError::InvalidPolicy("horizon must be at least 1"));
    }
    if policy.window == 0 {
        return Err(DistributionError::InvalidPolicy("window must be at least 1"));
    }
    let mut history = Vec::new();
    let mut current = phi.clone();
    let mut step = 0;
    loop {
        let ppd = ppd_of(m, &current)?;
        history.push(ppd.total());
        let status = if is_final(m, &current) {
            Some(OutputStatus::Finitary { step })
        } else if step >= policy.window {
            let gain = history[step] - history[step - policy.window];
            (gain > 0.0 && gain < policy.epsilon).then_some(OutputStatus::Converged { epsilon: policy.epsilon, step })
        } else {
            None
        };
        let status = status.or((step >= policy.horizon).then_some(OutputStatus::HorizonReached { step }));
        if let Some(status) = status {
            return Ok(OutputReport { ppd, status, history });
        }
        current = m.step(&current);
        step += 1;
    }
}
