use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sma_safety_cli::{cmd_check_invariance, cmd_fit, cmd_gen_trace, cmd_simulate, exit, GenTraceArgs};

/// Supervisory safe control toolkit for SMA-actuated soft legged robots.
///
/// Exit codes: 0 success, 1 certificate false, 2 calibration failure,
/// 3 safety precondition failed, 64 usage or parse error.
#[derive(Debug, Parser)]
#[command(name = "sma-safety", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit lumped thermal coefficients (a1, a2, a3) to a `step,temp_c,duty` trace.
    Fit {
        csv: PathBuf,
        /// Write the JSON result here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check the supervisor's invariance certificate for a model file.
    CheckInvariance { model: PathBuf },
    /// Run a scenario and write its trace CSV.
    Simulate {
        scenario: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Generate a synthetic calibration trace with random duty cycles and
    /// Gaussian process noise.
    GenTrace {
        #[arg(long)]
        a1: f64,
        #[arg(long)]
        a2: f64,
        #[arg(long)]
        a3: f64,
        /// Initial temperature; defaults to the ambient equilibrium.
        #[arg(long)]
        temp0: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        /// Noise standard deviation, degC.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::SUCCESS });
        }
    };
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let code = match cli.command {
        Command::Fit { csv, output } => cmd_fit(&csv, output.as_deref(), &mut out, &mut err),
        Command::CheckInvariance { model } => cmd_check_invariance(&model, &mut out, &mut err),
        Command::Simulate { scenario, output } => cmd_simulate(&scenario, &output, &mut out, &mut err),
        Command::GenTrace {
            a1,
            a2,
            a3,
            temp0,
            steps,
            sigma,
            seed,
            output,
        } => cmd_gen_trace(
            &GenTraceArgs {
                a1,
                a2,
                a3,
                temp0,
                steps,
                sigma,
                seed,
            },
            &output,
            &mut err,
        ),
    };
    ExitCode::from(code)
}
