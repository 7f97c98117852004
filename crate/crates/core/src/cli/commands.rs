// SPDX-License-Identifier: Apache-2.0

//! Subcommands of the `qtm` binary. Usage errors exit with 2, domain errors
//! with 1 after printing the error name and message.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::machine_file::{parse_machine, parse_qtm, print_machine, MachineKind, ParsedMachine};
use crate::compat::{counter_tape_view, encode_extra_symbols, from_bv};
use crate::configuration::{parse_input, QConfiguration};
use crate::distribution::{compute_output, ConvergencePolicy};
use crate::evolution::Qtm;
use crate::machine::{Machine, DEFAULT_UNITARITY_TOLERANCE};
use crate::observation::{
    consistency_residuals, empirical_ppd, enumerate_runs, sample_observed, TauSchedule, DEFAULT_NODE_BUDGET,
};
use crate::Error;

/// Environment variable consulted for `--seed` when the flag is absent.
pub const SEED_ENV: &str = "QTM_SEED";

pub const EXIT_DOMAIN_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qtm", version, about = "Quantum Turing machines with source/target counters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the three local unitarity conditions.
    Validate {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long, default_value_t = DEFAULT_UNITARITY_TOLERANCE)]
        tolerance: f64,
    },
    /// Print the superposition after a number of steps.
    Run {
        #[command(flatten)]
        common: MachineInput,
        #[arg(long, default_value_t = 0)]
        steps: usize,
    },
    /// Approximate the computed output distribution.
    Ppd {
        #[command(flatten)]
        common: MachineInput,
        #[arg(long, default_value_t = ConvergencePolicy::default().horizon)]
        horizon: usize,
        #[arg(long, default_value_t = ConvergencePolicy::default().epsilon)]
        epsilon: f64,
        #[arg(long, default_value_t = ConvergencePolicy::default().window)]
        window: usize,
    },
    /// Estimate the observed output distribution from sampled runs.
    Sample {
        #[command(flatten)]
        common: MachineInput,
        #[command(flatten)]
        observation: Observation,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        /// Defaults to the QTM_SEED environment variable, then 0.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the exact run tree and its agreement with the unobserved output.
    Enumerate {
        #[command(flatten)]
        common: MachineInput,
        #[command(flatten)]
        observation: Observation,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: usize,
    },
    /// Turn a looped (`bv`) machine file into an ordinary one.
    ConvertBv {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Remove counters: write the extra-symbol machine, or show the
    /// two-tape view of a superposition.
    Encode {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long, value_enum)]
        mode: EncodeMode,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Superposition to display in counter-tape mode.
        #[arg(long, required_if_eq("mode", "counter-tape"))]
        input: Option<String>,
        #[arg(long, default_value_t = 0)]
        steps: usize,
    },
}

#[derive(Debug, Args)]
pub struct MachineInput {
    #[arg(long)]
    pub machine: PathBuf,
    #[arg(long)]
    pub input: String,
}

#[derive(Debug, Args)]
pub struct Observation {
    /// `every:K[,offset:O]` or `list:a,b,c`.
    #[arg(long, default_value = "every:1")]
    pub tau: String,
    #[arg(long, default_value_t = 30)]
    pub horizon: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EncodeMode {
    ExtraSymbols,
    CounterTape,
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_or_print(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| Error::Io(e.to_string())),
    }
}

fn load(path: &Path) -> Result<Machine, Error> {
    Ok(parse_qtm(&read(path)?)?)
}

fn load_validated(common: &MachineInput) -> Result<(Qtm, QConfiguration), Error> {
    let qtm = Qtm::new(load(&common.machine)?)?;
    let phi = parse_input(&qtm, &common.input)?;
    Ok((qtm, phi))
}

fn seed_from_env() -> Result<u64, Error> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Error::Io(format!("{SEED_ENV}={v} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

/// Executes one parsed command. Returns the exit code.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, Error> {
    let mut text = String::new();
    let code = match cli.command {
        Command::Validate { machine, tolerance } => {
            let m = load(&machine)?;
            let report = m.validate(tolerance);
            text = report.render(&m);
            if report.valid {
                0
            } else {
                EXIT_DOMAIN_ERROR
            }
        }
        Command::Run { common, steps } => {
            let (qtm, phi) = load_validated(&common)?;
            text = qtm.evolve(&phi, steps).display(&qtm).to_string();
            0
        }
        Command::Ppd { common, horizon, epsilon, window } => {
            let (qtm, phi) = load_validated(&common)?;
            let report = compute_output(&qtm, &phi, &ConvergencePolicy { epsilon, window, horizon })?;
            text = report.serialize();
            0
        }
        Command::Sample { common, observation, runs, seed } => {
            let (qtm, phi) = load_validated(&common)?;
            let tau = TauSchedule::parse(&observation.tau)?;
            let seed = match seed {
                Some(s) => s,
                None => seed_from_env()?,
            };
            let observed = sample_observed(&qtm, &phi, &tau, observation.horizon, runs, seed)?;
            let e = empirical_ppd(observed);
            text = format!(
                "# seed\t{seed}\n# runs\t{}\n# tau\t{tau}\n# horizon\t{}\n{}",
                e.runs,
                observation.horizon,
                e.serialize()
            );
            0
        }
        Command::Enumerate { common, observation, budget } => {
            let (qtm, phi) = load_validated(&common)?;
            let tau = TauSchedule::parse(&observation.tau)?;
            let tree = enumerate_runs(&qtm, &phi, &tau, observation.horizon, budget)?;
            text = tree.export();
            let residuals = consistency_residuals(&qtm, &phi, &tau, &tree)?;
            for (k, r) in &residuals {
                text.push_str(&format!("# consistency\t{k}\t{}\n", super::format::sig(*r)));
            }
            let worst = residuals.iter().map(|(_, r)| *r).fold(0.0, f64::max);
            text.push_str(&format!("# max residual\t{}\n", super::format::sig(worst)));
            0
        }
        Command::ConvertBv { machine, output } => {
            let converted = match parse_machine(&read(&machine)?)? {
                ParsedMachine::Bv(b) => from_bv(&b)?,
                _ => {
                    return Err(super::machine_file::MachineFileError::Syntax {
                        line: 1,
                        col: 1,
                        message: "convert-bv expects a file with the `bv` flag".into(),
                    }
                    .into())
                }
            };
            write_or_print(output.as_deref(), &print_machine(&converted.to_description(), MachineKind::Qtm), out)?;
            return Ok(0);
        }
        Command::Encode { machine, mode, output, input, steps } => {
            let m = load(&machine)?;
            match mode {
                EncodeMode::ExtraSymbols => {
                    let enc = encode_extra_symbols(&m)?;
                    let printed = print_machine(&enc.machine().to_description(), MachineKind::Counterless);
                    write_or_print(output.as_deref(), &printed, out)?;
                    return Ok(0);
                }
                EncodeMode::CounterTape => {
                    let input = input.ok_or_else(|| Error::Io("counter-tape mode needs --input".into()))?;
                    let qtm = Qtm::new(m)?;
                    let phi = qtm.evolve(&parse_input(&qtm, &input)?, steps);
                    for (c, a) in phi.iter() {
                        let v = counter_tape_view(&qtm, c);
                        text.push_str(&format!(
                            "{}\t{}\tcounter {}\n",
                            super::format::complex(*a),
                            c.with_counter(0).display(&qtm),
                            v.counter
                        ));
                    }
                    write_or_print(output.as_deref(), &text, out)?;
                    return Ok(0);
                }
            }
        }
    };
    out.write_all(text.as_bytes()).map_err(|e| Error::Io(e.to_string()))?;
    Ok(code)
}

/// Parses `args` (program name first) and runs the command, writing
/// results to `out` and diagnostics to `err`.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let rendered = e.render().to_string();
            let _ =
                if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DOMAIN_ERROR
        }
    }
}
