// Copyright 2026 The dicke-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! The `design`, `simulate` and `verify` workflows.

use std::path::Path;

use crate::config::RunConfig;
use crate::dynamics::{build_generators, AmplitudeState, ControlPulse};
use crate::ensemble::{fidelity_map, FidelityMap, RunSummary, SampleGrid};
use crate::error::{Error, Result};
use crate::io;
use crate::optimizer::{design_pulse, DesignResult};
use crate::target::build_target;
use crate::verify::{run_checks, VerifyReport, DEFAULT_SEED};

pub const PULSE_FILE: &str = "pulse.csv";
pub const HISTORY_FILE: &str = "history.csv";
pub const FIDELITY_FILE: &str = "fidelity_map.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const VERIFY_FILE: &str = "verify.json";

#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub result: DesignResult,
    pub map: FidelityMap,
    pub summary: RunSummary,
}

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub map: FidelityMap,
    pub summary: RunSummary,
}

fn prepare_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("creating {}: {e}", out.display()),
        ))
    })
}

/// Evaluation grid of a configuration: uniform over the parameter box.
pub fn evaluation_grid(cfg: &RunConfig) -> Result<SampleGrid> {
    SampleGrid::uniform(&cfg.parameter_box()?, cfg.eval_grid_nx, cfg.eval_grid_nz)
}

/// Fidelity map and summary of `pulse` under `cfg`.
pub fn evaluate(cfg: &RunConfig, pulse: &ControlPulse) -> Result<SimulateOutcome> {
    let net = cfg.network()?;
    let target = build_target(cfg.target_kind, &net);
    let map = fidelity_map(
        pulse,
        &build_generators(&net),
        &evaluation_grid(cfg)?,
        &target,
        &AmplitudeState::ground(&net),
    )?;
    let summary = RunSummary::new(&map, pulse)?;
    Ok(SimulateOutcome { map, summary })
}

fn write_evaluation(out: &Path, eval: &SimulateOutcome) -> Result<()> {
    io::write_text(&out.join(FIDELITY_FILE), &io::fidelity_map_csv(&eval.map)?)?;
    io::write_text(&out.join(SUMMARY_FILE), &io::summary_json(&eval.summary)?)
}

/// Designs a pulse and writes `pulse.csv`, `history.csv`,
/// `fidelity_map.csv` and `summary.json` into `out`.
pub fn cmd_design(cfg: &RunConfig, out: &Path) -> Result<DesignOutcome> {
    let problem = cfg.design_problem()?;
    let result = design_pulse(&problem, &cfg.initial_pulse()?)?;
    let eval = evaluate(cfg, &result.pulse)?;
    prepare_dir(out)?;
    io::write_text(&out.join(PULSE_FILE), &io::pulse_csv(&result.pulse)?)?;
    io::write_text(&out.join(HISTORY_FILE), &io::history_csv(&result.history)?)?;
    write_evaluation(out, &eval)?;
    Ok(DesignOutcome {
        result,
        map: eval.map,
        summary: eval.summary,
    })
}

/// Evaluates the pulse in `pulse_path` and writes `fidelity_map.csv` and
/// `summary.json` into `out`.
pub fn cmd_simulate(cfg: &RunConfig, pulse_path: &Path, out: &Path) -> Result<SimulateOutcome> {
    let pulse = io::parse_pulse_csv(&io::read_text(pulse_path)?, cfg.dt, cfg.steps())?;
    let eval = evaluate(cfg, &pulse)?;
    prepare_dir(out)?;
    write_evaluation(out, &eval)?;
    Ok(eval)
}

/// Runs the check suite and writes `verify.json` into `out`.
pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<VerifyReport> {
    let report = run_checks(cfg, DEFAULT_SEED)?;
    prepare_dir(out)?;
    io::write_text(&out.join(VERIFY_FILE), &io::json_text(&report)?)?;
    Ok(report)
}
