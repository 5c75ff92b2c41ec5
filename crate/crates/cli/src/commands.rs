//! Subcommand bodies. Each returns its process exit code; summaries go to
//! `out`, diagnostics to `err`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sma_safety::safety::check_invariance;
use sma_safety::sim::run_scenario;
use sma_safety::thermal::{fit_lumped, read_trace_csv, write_trace_csv};
use sma_safety::{Error, LumpedThermalParams};

use crate::config::{parse_model, parse_scenario};
use crate::synth::noisy_trace;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const CERTIFICATE_FALSE: u8 = 1;
    pub const CALIBRATION_FAILURE: u8 = 2;
    pub const SAFETY_PRECONDITION: u8 = 3;
    pub const USAGE: u8 = 64;
}

#[derive(Debug, Serialize)]
struct FitReport {
    a1: f64,
    a2: f64,
    a3: f64,
    residual_rms: f64,
    rows: usize,
}

fn write_or_print(path: Option<&Path>, text: &str, out: &mut dyn Write) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => writeln!(out, "{text}"),
    }
}

/// `fit <csv> [-o json]`
pub fn cmd_fit(csv_in: &Path, json_out: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let trace = match File::open(csv_in)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", csv_in.display())))
        .and_then(read_trace_csv::<f64, _>)
    {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit::USAGE;
        }
    };
    let fit = match fit_lumped(&trace) {
        Ok(f) => f,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit::CALIBRATION_FAILURE;
        }
    };
    let report = FitReport {
        a1: fit.params.a1,
        a2: fit.params.a2,
        a3: fit.params.a3,
        residual_rms: fit.residual_rms,
        rows: fit.rows,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Err(e) = write_or_print(json_out, &json, out) {
        let _ = writeln!(err, "error: cannot write fit result: {e}");
        return exit::USAGE;
    }
    exit::SUCCESS
}

/// `check-invariance <model>`
pub fn cmd_check_invariance(model_path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let (sys, cfg) = match parse_model(model_path) {
        Ok(m) => m,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit::USAGE;
        }
    };
    let cert = check_invariance(&sys, &cfg);
    let _ = writeln!(out, "{}", serde_json::to_string(&cert).expect("certificate serializes"));
    if cert.holds {
        exit::SUCCESS
    } else {
        exit::CERTIFICATE_FALSE
    }
}

/// `simulate <scenario> -o <csv>`
pub fn cmd_simulate(scenario_path: &Path, trace_out: &Path, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let scenario = match parse_scenario(scenario_path) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit::USAGE;
        }
    };
    let cert = check_invariance(scenario.plant.thermal(), &scenario.safety);
    if !cert.holds {
        let _ = writeln!(err, "error: refusing to simulate: {}", cert.into_result().unwrap_err());
        return exit::SAFETY_PRECONDITION;
    }
    let log = match run_scenario(&scenario) {
        Ok(l) => l,
        Err(e @ Error::NotInvariant { .. }) => {
            let _ = writeln!(err, "error: refusing to simulate: {e}");
            return exit::SAFETY_PRECONDITION;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit::USAGE;
        }
    };
    let written = File::create(trace_out)
        .map_err(|e| Error::Parse(format!("cannot create {}: {e}", trace_out.display())))
        .and_then(|f| log.write_csv(BufWriter::new(f)));
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return exit::USAGE;
    }
    let _ = writeln!(out, "{}", log.summary());
    exit::SUCCESS
}

/// Parameters of `gen-trace`.
#[derive(Debug, Clone, Copy)]
pub struct GenTraceArgs {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub temp0: Option<f64>,
    pub steps: usize,
    pub sigma: f64,
    pub seed: u64,
}

/// `gen-trace ... -o <csv>`: synthetic calibration data.
pub fn cmd_gen_trace(args: &GenTraceArgs, csv_out: &Path, err: &mut dyn Write) -> u8 {
    let p = match LumpedThermalParams::new(args.a1, args.a2, args.a3) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit::USAGE;
        }
    };
    if !(args.sigma.is_finite() && args.sigma >= 0.0) {
        let _ = writeln!(err, "error: sigma must be finite and >= 0, got {}", args.sigma);
        return exit::USAGE;
    }
    let trace = noisy_trace(&p, args.temp0.unwrap_or(p.ambient()), args.steps, args.sigma, args.seed);
    let written = File::create(csv_out)
        .map_err(|e| Error::Parse(format!("cannot create {}: {e}", csv_out.display())))
        .and_then(|f| write_trace_csv(BufWriter::new(f), &trace));
    match written {
        Ok(()) => exit::SUCCESS,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit::USAGE
        }
    }
}
