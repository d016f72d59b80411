// Copyright 2026 The dicke-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! `dicke-pulse`: design, simulate and verify robust control pulses.
//!
//! Exit status: 0 on success, 1 on any error, 2 when `design` stops before
//! its convergence test is met (outputs are still written), 3 when `verify`
//! reports a failed check.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dicke_core::{cmd_design, cmd_simulate, cmd_verify, RunConfig};

#[derive(Parser)]
#[command(
    name = "dicke-pulse",
    version,
    about = "Robust ensemble pulse design for symmetric spin networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a pulse and evaluate it on the configured grid.
    Design {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate an existing pulse without optimizing.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        pulse: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the numerical self-checks and write a JSON report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<RunConfig, String> {
    RunConfig::from_file(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Design { config, out } => {
            let cfg = load(&config)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            let o = cmd_design(&cfg, &out).map_err(|e| e.to_string())?;
            let s = &o.summary;
            println!(
                "design: stop={:?} objective={:.6e} iterations={} min_fidelity={:.6} mean_fidelity={:.6}",
                o.result.stop,
                o.result.objective,
                o.result.history.len() - 1,
                s.min_fidelity,
                s.mean_fidelity
            );
            println!("wrote {}", out.display());
            Ok(if o.result.converged() { 0 } else { 2 })
        }
        Command::Simulate { config, pulse, out } => {
            let cfg = load(&config)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            let o = cmd_simulate(&cfg, &pulse, &out).map_err(|e| e.to_string())?;
            println!(
                "simulate: min_fidelity={:.6} mean_fidelity={:.6} max_fidelity={:.6}",
                o.summary.min_fidelity, o.summary.mean_fidelity, o.summary.max_fidelity
            );
            println!("wrote {}", out.display());
            Ok(0)
        }
        Command::Verify { config, out } => {
            let cfg = load(&config)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            let report = cmd_verify(&cfg, &out).map_err(|e| e.to_string())?;
            for c in &report.checks {
                println!(
                    "{} {:<28} measured={:.3e} tolerance={:.1e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.tolerance
                );
            }
            Ok(if report.passed { 0 } else { 3 })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
