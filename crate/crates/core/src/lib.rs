// Copyright 2026 The dicke-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Robust control pulses for symmetric spin-1/2 networks.
//!
//! The crate propagates Dicke-basis Ising dynamics whose control gains are
//! uncertain, represents the whole uncertain ensemble through a truncated
//! Legendre moment system, designs pulses on that moment system with a
//! damped Gauss-Newton / QP iteration, and evaluates them by direct
//! simulation over a grid of gains.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod legendre;
pub mod linalg;
pub mod moments;
pub mod optimizer;
pub mod run;
pub mod target;
pub mod verify;

pub use config::{RateMode, RunConfig};
pub use dynamics::{
    build_generators, hamiltonian_matrix, propagate, propagate_final, propagate_step, realify,
    AmplitudeState, ControlPulse, EnsembleParams, GeneratorSet, SpinNetwork,
};
pub use ensemble::{
    effort_index, fidelity, fidelity_map, slew_index, summarize, FidelityMap, FidelitySummary,
    GridKind, ParameterBox, RunSummary, SampleGrid,
};
pub use error::{Error, Result};
pub use legendre::{legendre_eval, Convention, GaussLegendre, JacobiCoupling, LegendreBasis};
pub use moments::{
    moment_generator, moments_from_ensemble, propagate_moments_dense, reconstruct, MomentGenerator,
    MomentState, MomentSystem, NodeEnsemble,
};
pub use optimizer::{
    design_pulse, objective, qp_step, residuals, sensitivity, ChannelBounds, DesignProblem,
    DesignResult, HistoryEntry, KktResidual, LowRankQp, QpSettings, QpSolution, RateBound,
    SignalRestrictions, SolverSettings, StopReason,
};
pub use run::{cmd_design, cmd_simulate, cmd_verify, evaluate, DesignOutcome, SimulateOutcome};
pub use target::{build_target, TargetKind, TargetProfile};
pub use verify::{run_checks, Check, VerifyReport};
