// Copyright 2026 The dicke-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Dicke-basis Ising dynamics of a symmetric spin-1/2 network.
//!
//! Amplitude vectors are indexed from `m = S` (index 0) down to `m = -S`
//! (index `N`). Every module in the crate shares this order.
//!
//! The Hamiltonian restricted to the Dicke subspace is
//!
//! ```text
//! A(xi, zeta) = d0 + zeta * u_z * dz + xi * u_x * x
//! ```
//!
//! with `d0 = chi (2 m^2 - N/2)`, `dz = 2 m` and `x` the symmetric
//! tridiagonal coupling `sqrt((S - m)(S + m + 1))` between `m` and `m + 1`.
//! All three are real, so `A` is real symmetric and `i dc/dt = A c`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::SymEig;

/// `N` spin-1/2 particles with OAT shearing strength `chi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinNetwork {
    n: usize,
    chi: f64,
}

impl SpinNetwork {
    pub fn new(n: usize, chi: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidNetwork(format!("need N >= 2, got {n}")));
        }
        if !chi.is_finite() {
            return Err(Error::InvalidNetwork(format!(
                "chi must be finite, got {chi}"
            )));
        }
        Ok(Self { n, chi })
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// Total spin `S = N / 2`.
    pub fn spin(&self) -> f64 {
        self.n as f64 / 2.0
    }

    /// Dicke dimension `N + 1`.
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// Magnetic quantum number stored at `index`.
    pub fn m_of(&self, index: usize) -> f64 {
        self.spin() - index as f64
    }

    /// Storage index of `m`, if `m` is on the Dicke ladder.
    pub fn index_of(&self, m: f64) -> Option<usize> {
        let k = self.spin() - m;
        let r = k.round();
        if (k - r).abs() > 1e-9 || r < 0.0 || r > self.n as f64 {
            return None;
        }
        Some(r as usize)
    }
}

/// Dicke-basis amplitudes `C_m` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeState {
    pub c: DVector<C64>,
    pub t: f64,
}

impl AmplitudeState {
    pub fn new(c: DVector<C64>, t: f64) -> Self {
        Self { c, t }
    }

    /// Basis state `|S, m>` with `m = S - index`.
    pub fn basis(net: &SpinNetwork, index: usize) -> Self {
        let mut c = DVector::from_element(net.dim(), C64::new(0.0, 0.0));
        c[index] = C64::new(1.0, 0.0);
        Self { c, t: 0.0 }
    }

    /// Ground state `|S, -S>`.
    pub fn ground(net: &SpinNetwork) -> Self {
        Self::basis(net, net.dim() - 1)
    }

    pub fn norm(&self) -> f64 {
        self.c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Real generators of the Dicke-basis Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    /// Diagonal of the drift `chi (2 m^2 - N/2)`.
    pub d0: DVector<f64>,
    /// Diagonal of the z control generator `2 m`.
    pub dz: DVector<f64>,
    /// Symmetric tridiagonal x control generator.
    pub x: DMatrix<f64>,
}

impl GeneratorSet {
    pub fn dim(&self) -> usize {
        self.d0.len()
    }
}

/// Multiplicative gains on the x and z control channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleParams {
    pub xi: f64,
    pub zeta: f64,
}

impl EnsembleParams {
    pub fn new(xi: f64, zeta: f64) -> Self {
        Self { xi, zeta }
    }

    pub fn nominal() -> Self {
        Self { xi: 1.0, zeta: 1.0 }
    }
}

/// Piecewise-constant control samples on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPulse {
    pub ux: Vec<f64>,
    pub uz: Vec<f64>,
    pub dt: f64,
}

impl ControlPulse {
    pub fn new(ux: Vec<f64>, uz: Vec<f64>, dt: f64) -> Result<Self> {
        if ux.len() != uz.len() {
            return Err(Error::Dimension(format!(
                "u_x has {} samples, u_z has {}",
                ux.len(),
                uz.len()
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::NonPositiveStep(dt));
        }
        if let Some(bad) = ux.iter().chain(uz.iter()).find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite control sample {bad}"
            )));
        }
        Ok(Self { ux, uz, dt })
    }

    pub fn constant(steps: usize, dt: f64, ux: f64, uz: f64) -> Result<Self> {
        Self::new(vec![ux; steps], vec![uz; steps], dt)
    }

    /// Number of samples `K_t`.
    pub fn len(&self) -> usize {
        self.ux.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ux.is_empty()
    }

    /// Horizon `T = K_t dt`.
    pub fn horizon(&self) -> f64 {
        self.len() as f64 * self.dt
    }

    /// Flattened `[u_x..., u_z...]`, the layout used by the optimizer.
    pub fn to_flat(&self) -> Vec<f64> {
        self.ux.iter().chain(self.uz.iter()).copied().collect()
    }

    pub fn from_flat(flat: &[f64], dt: f64) -> Result<Self> {
        if !flat.len().is_multiple_of(2) {
            return Err(Error::Dimension("flat pulse must have even length".into()));
        }
        let k = flat.len() / 2;
        Self::new(flat[..k].to_vec(), flat[k..].to_vec(), dt)
    }
}

pub fn build_generators(net: &SpinNetwork) -> GeneratorSet {
    let dim = net.dim();
    let s = net.spin();
    let half_n = net.particles() as f64 / 2.0;
    let d0 = DVector::from_fn(dim, |k, _| {
        let m = net.m_of(k);
        net.chi() * (2.0 * m * m - half_n)
    });
    let dz = DVector::from_fn(dim, |k, _| 2.0 * net.m_of(k));
    let mut x = DMatrix::zeros(dim, dim);
    // Row of m couples to m + 1 (index k - 1) with sqrt((S - m)(S + m + 1)).
    for k in 1..dim {
        let m = net.m_of(k);
        let zeta_plus = ((s - m) * (s + m + 1.0)).sqrt();
        x[(k, k - 1)] = zeta_plus;
        x[(k - 1, k)] = zeta_plus;
    }
    GeneratorSet { d0, dz, x }
}

/// Real symmetric `A = d0 + zeta uz dz + xi ux x`.
pub fn hamiltonian_matrix(gen: &GeneratorSet, p: EnsembleParams, ux: f64, uz: f64) -> DMatrix<f64> {
    let mut a = &gen.x * (p.xi * ux);
    for k in 0..gen.dim() {
        a[(k, k)] += gen.d0[k] + p.zeta * uz * gen.dz[k];
    }
    a
}

/// One exact step `c(t + dt) = exp(-i A dt) c(t)` with constant controls.
pub fn propagate_step(
    state: &AmplitudeState,
    gen: &GeneratorSet,
    p: EnsembleParams,
    ux: f64,
    uz: f64,
    dt: f64,
) -> Result<AmplitudeState> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveStep(dt));
    }
    let u = SymEig::new(&hamiltonian_matrix(gen, p, ux, uz)).unitary(dt);
    Ok(AmplitudeState {
        c: u * &state.c,
        t: state.t + dt,
    })
}

/// Full trajectory: `K_t + 1` states starting with `state0`.
pub fn propagate(
    state0: &AmplitudeState,
    gen: &GeneratorSet,
    p: EnsembleParams,
    pulse: &ControlPulse,
) -> Result<Vec<AmplitudeState>> {
    let mut traj = Vec::with_capacity(pulse.len() + 1);
    traj.push(state0.clone());
    for (&ux, &uz) in pulse.ux.iter().zip(&pulse.uz) {
        let next = propagate_step(traj.last().unwrap(), gen, p, ux, uz, pulse.dt)?;
        traj.push(next);
    }
    Ok(traj)
}

/// Final state only; same arithmetic path as [`propagate`].
pub fn propagate_final(
    state0: &AmplitudeState,
    gen: &GeneratorSet,
    p: EnsembleParams,
    pulse: &ControlPulse,
) -> Result<AmplitudeState> {
    let mut state = state0.clone();
    for (&ux, &uz) in pulse.ux.iter().zip(&pulse.uz) {
        state = propagate_step(&state, gen, p, ux, uz, pulse.dt)?;
    }
    Ok(state)
}

/// Real form of the dynamics on `z = [Re c; Im c]`: `dz/dt = B z` with
/// `B = [[0, A], [-A, 0]]`.
pub fn realify(gen: &GeneratorSet, p: EnsembleParams, ux: f64, uz: f64) -> DMatrix<f64> {
    let a = hamiltonian_matrix(gen, p, ux, uz);
    let n = a.nrows();
    let mut b = DMatrix::zeros(2 * n, 2 * n);
    b.view_mut((0, n), (n, n)).copy_from(&a);
    b.view_mut((n, 0), (n, n)).copy_from(&(-a));
    b
}
