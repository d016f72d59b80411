// Copyright 2026 The dicke-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures for the criterion benchmarks in `benches/`.

use dicke_core::{
    build_generators, AmplitudeState, ControlPulse, Convention, GeneratorSet, MomentState,
    MomentSystem, ParameterBox, SpinNetwork,
};

/// Smooth deterministic pulse with `steps` samples of width `dt`.
pub fn wavy_pulse(steps: usize, dt: f64) -> ControlPulse {
    ControlPulse::new(
        (0..steps)
            .map(|k| 3.0 + 2.0 * (0.05 * k as f64).sin())
            .collect(),
        (0..steps)
            .map(|k| 3.0 + 1.5 * (0.03 * k as f64).cos())
            .collect(),
        dt,
    )
    .expect("fixture pulse is valid")
}

pub struct MomentFixture {
    pub net: SpinNetwork,
    pub gen: GeneratorSet,
    pub system: MomentSystem,
    pub m0: MomentState,
}

/// Moment system for `n` spins with orders `(k_xi, k_zeta)`; an order of 0
/// means that gain is certain.
pub fn moment_fixture(n: usize, k_xi: usize, k_zeta: usize) -> MomentFixture {
    let net = SpinNetwork::new(n, 1.0).expect("valid network");
    let gen = build_generators(&net);
    let bx = ParameterBox::new(
        if k_xi > 0 { 0.2 } else { 0.0 },
        if k_zeta > 0 { 0.1 } else { 0.0 },
    )
    .expect("valid box");
    let system = MomentSystem::new(gen.clone(), bx, k_xi, k_zeta, Convention::Unnormalized);
    let m0 = MomentState::from_constant(
        &AmplitudeState::ground(&net),
        k_xi,
        k_zeta,
        Convention::Unnormalized,
    );
    MomentFixture {
        net,
        gen,
        system,
        m0,
    }
}
