//! `hyperqubit` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime error, 2 non-convergence, 3 invalid
//! configuration.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;
mod pulses;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hyperqubit::algorithms::RunMode;
use hyperqubit::grape::GateName;

use crate::commands::{Check, Context};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Sink;

#[derive(Parser)]
#[command(
    name = "hyperqubit",
    version,
    about = "Pulse synthesis, tomography and gate verification for a two-qubit trapped ion"
)]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (also holds the pulse library).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Shots per tomography setting; 0 uses exact expectations.
    #[arg(long, global = true, default_value_t = 0)]
    shots: u64,
    /// ideal, pulsed or pulsed+noise.
    #[arg(long, global = true, default_value = "ideal", value_parser = parse_mode)]
    mode: RunMode,
    #[command(subcommand)]
    command: Command,
}

fn parse_mode(s: &str) -> Result<RunMode, String> {
    s.parse().map_err(|e: hyperqubit::Error| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Optimize pulses for comma-separated gates, or `all`.
    Synthesize { gates: String },
    /// State tomography after one gate.
    Qst {
        gate: String,
        /// Input product state, two of u, d, +, -, i.
        #[arg(long, default_value = "+u")]
        input: String,
        /// Apply the noise model to the tomography pulses too.
        #[arg(long)]
        noisy_tomography: bool,
    },
    /// Process tomography of one gate.
    Qpt {
        gate: String,
        #[arg(long)]
        noisy_tomography: bool,
    },
    /// Two-qubit Grover search for every marked state.
    Grover,
    /// Numerical checks of the two-ion gate constructions.
    MultiionVerify {
        #[arg(value_enum)]
        check: Check,
        /// Quantization fields (G) for the ms-composite sweep.
        #[arg(long, value_delimiter = ',', default_value = "0,2,6,20")]
        b0: Vec<f64>,
        /// Mølmer–Sørensen angle for the ms-composite sweep.
        #[arg(long, default_value_t = 0.3)]
        tau: f64,
    },
    /// Gate output fidelity against the Zeeman-transition T2*.
    NoiseSweep {
        gate: String,
        /// T2* values (s) of |1>↔|3> and |4>↔|3>.
        #[arg(long, value_delimiter = ',', default_value = "1e-4,2e-4,5e-4,1e-3,2e-3,7e-3,2e-2")]
        t2: Vec<f64>,
        /// T2* (s) of the clock transition.
        #[arg(long, default_value_t = 20e-3)]
        t2_clock: f64,
    },
    /// Lab-frame against rotating-frame evolution for a resonant π pulse.
    RwaCheck {
        /// Scaled hyperfine constant A/2π in MHz.
        #[arg(long, default_value_t = 10.0)]
        hyperfine_mhz: f64,
        /// Rabi rate as a fraction of the Zeeman splitting.
        #[arg(long, default_value_t = 0.02)]
        ratio: f64,
        /// Driven level k of |k>↔|3> (1, 2 or 4).
        #[arg(long, default_value_t = 1)]
        transition: usize,
    },
}

fn gate(name: &str) -> Result<GateName, CliError> {
    name.parse().map_err(CliError::from)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(cli.config.as_deref())?.with_overrides(cli.seed, cli.out);
    cfg.validate()?;
    let sink = Sink::new(&cfg.output_dir)?;
    let ctx = Context { cfg, mode: cli.mode, shots: cli.shots, sink };
    match cli.command {
        Command::Synthesize { gates } => commands::synthesize_cmd(&ctx, &commands::parse_gates(&gates)?),
        Command::Qst { gate: g, input, noisy_tomography } => {
            commands::qst_cmd(&ctx, gate(&g)?, &input, noisy_tomography)
        }
        Command::Qpt { gate: g, noisy_tomography } => commands::qpt_cmd(&ctx, gate(&g)?, noisy_tomography),
        Command::Grover => commands::grover_cmd(&ctx),
        Command::MultiionVerify { check, b0, tau } => commands::multiion_cmd(&ctx, check, &b0, tau),
        Command::NoiseSweep { gate: g, t2, t2_clock } => commands::noise_sweep_cmd(&ctx, gate(&g)?, &t2, t2_clock),
        Command::RwaCheck { hyperfine_mhz, ratio, transition } => {
            commands::rwa_check_cmd(&ctx, hyperfine_mhz, ratio, transition)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
