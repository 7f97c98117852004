// SPDX-License-Identifier: Apache-2.0

//! Quantum Turing machines with source/target counters: construction and
//! local unitarity checks, exact evolution on sparse superpositions, the
//! computed output as a limit of partial distributions, and observation
//! protocols that interleave measurement with evolution.

pub mod cli;
pub mod compat;
pub mod configuration;
pub mod distribution;
pub mod evolution;
pub mod machine;
pub mod observation;

pub use configuration::{Configuration, QConfiguration};
pub use distribution::{compute_output, ppd_of, ConvergencePolicy, OutputReport, OutputStatus, Ppd};
pub use evolution::Qtm;
pub use machine::{build_machine, Amplitude, Machine, MachineDescription};
pub use observation::{enumerate_runs, measure_output, sample_run, TauSchedule};

use thiserror::Error;

/// Any error produced by the library, tagged with the name of its kind.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Machine(#[from] machine::MachineError),
    #[error(transparent)]
    MachineFile(#[from] cli::machine_file::MachineFileError),
    #[error(transparent)]
    Configuration(#[from] configuration::ConfigurationError),
    #[error(transparent)]
    Input(#[from] configuration::InputError),
    #[error(transparent)]
    Evolution(#[from] evolution::EvolutionError),
    #[error(transparent)]
    Distribution(#[from] distribution::DistributionError),
    #[error(transparent)]
    Observation(#[from] observation::ObservationError),
    #[error(transparent)]
    Compat(#[from] compat::CompatError),
    #[error("IoError: {0}")]
    Io(String),
}

impl Error {
    /// The error kind, e.g. `MissingRow` or `NotNormalized`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Machine(e) => e.name(),
            Error::MachineFile(e) => e.name(),
            Error::Configuration(e) => e.name(),
            Error::Input(e) => e.name(),
            Error::Evolution(e) => e.name(),
            Error::Distribution(e) => e.name(),
            Error::Observation(e) => e.name(),
            Error::Compat(e) => e.name(),
            Error::Io(_) => "IoError",
        }
    }
}
