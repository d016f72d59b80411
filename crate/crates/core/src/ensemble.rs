// Copyright 2026 The dicke-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Parameter box sampling, fidelity maps and pulse-effort indices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    propagate_final, AmplitudeState, ControlPulse, EnsembleParams, GeneratorSet,
};
use crate::error::{Error, Result};
use crate::legendre::GaussLegendre;
use crate::target::TargetProfile;

/// Relative uncertainty of the x and z control gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterBox {
    pub delta_xi: f64,
    pub delta_zeta: f64,
}

impl ParameterBox {
    pub fn new(delta_xi: f64, delta_zeta: f64) -> Result<Self> {
        for (name, d) in [("delta_xi", delta_xi), ("delta_zeta", delta_zeta)] {
            if !(0.0..1.0).contains(&d) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1), got {d}"
                )));
            }
        }
        Ok(Self {
            delta_xi,
            delta_zeta,
        })
    }

    pub fn xi_interval(&self) -> (f64, f64) {
        (1.0 - self.delta_xi, 1.0 + self.delta_xi)
    }

    pub fn zeta_interval(&self) -> (f64, f64) {
        (1.0 - self.delta_zeta, 1.0 + self.delta_zeta)
    }

    /// Moment orders with certain axes collapsed to order 0.
    pub fn effective_orders(&self, k_xi: usize, k_zeta: usize) -> (usize, usize) {
        (
            if self.delta_xi == 0.0 { 0 } else { k_xi },
            if self.delta_zeta == 0.0 { 0 } else { k_zeta },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    Uniform,
    GaussLegendre,
}

/// Tensor grid of `(xi, zeta)` evaluation points inside a [`ParameterBox`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    pub xi_nodes: Vec<f64>,
    pub zeta_nodes: Vec<f64>,
    pub kind: GridKind,
}

fn uniform_axis(delta: f64, count: usize) -> Vec<f64> {
    if delta == 0.0 || count <= 1 {
        return vec![1.0];
    }
    let step = 2.0 * delta / (count - 1) as f64;
    (0..count).map(|k| 1.0 - delta + k as f64 * step).collect()
}

fn gauss_axis(delta: f64, count: usize) -> Result<Vec<f64>> {
    if delta == 0.0 {
        return Ok(vec![1.0]);
    }
    Ok(GaussLegendre::new(count)?
        .nodes
        .iter()
        .map(|x| 1.0 + delta * x)
        .collect())
}

impl SampleGrid {
    /// Evenly spaced nodes including the interval endpoints; a zero-width
    /// axis collapses to the single point 1.
    pub fn uniform(bx: &ParameterBox, nx: usize, nz: usize) -> Result<Self> {
        if nx == 0 || nz == 0 {
            return Err(Error::InvalidArgument(
                "grid needs at least one node per axis".into(),
            ));
        }
        Ok(Self {
            xi_nodes: uniform_axis(bx.delta_xi, nx),
            zeta_nodes: uniform_axis(bx.delta_zeta, nz),
            kind: GridKind::Uniform,
        })
    }

    pub fn gauss_legendre(bx: &ParameterBox, nx: usize, nz: usize) -> Result<Self> {
        Ok(Self {
            xi_nodes: gauss_axis(bx.delta_xi, nx)?,
            zeta_nodes: gauss_axis(bx.delta_zeta, nz)?,
            kind: GridKind::GaussLegendre,
        })
    }

    pub fn len(&self) -> usize {
        self.xi_nodes.len() * self.zeta_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cells in row-major `(xi, zeta)` order.
    pub fn points(&self) -> impl Iterator<Item = EnsembleParams> + '_ {
        self.xi_nodes.iter().flat_map(move |&x| {
            self.zeta_nodes
                .iter()
                .map(move |&z| EnsembleParams::new(x, z))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityMap {
    pub grid: SampleGrid,
    /// Row-major over `(xi_i, zeta_j)`.
    pub values: Vec<f64>,
}

impl FidelityMap {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.zeta_nodes.len() + j]
    }

    pub fn cells(&self) -> impl Iterator<Item = (EnsembleParams, f64)> + '_ {
        self.grid.points().zip(self.values.iter().copied())
    }
}

/// `1 - sum_{a in support} (|c_a| - t_a)^2`. Not clamped; very poor states
/// give negative values.
pub fn fidelity(final_state: &AmplitudeState, target: &TargetProfile) -> f64 {
    1.0 - target
        .support
        .iter()
        .map(|&a| {
            let gap = final_state.c[a].norm() - target.magnitudes[a];
            gap * gap
        })
        .sum::<f64>()
}

pub fn fidelity_map(
    pulse: &ControlPulse,
    gen: &GeneratorSet,
    grid: &SampleGrid,
    target: &TargetProfile,
    psi0: &AmplitudeState,
) -> Result<FidelityMap> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty evaluation grid".into()));
    }
    let points: Vec<EnsembleParams> = grid.points().collect();
    let values = points
        .into_par_iter()
        .map(|p| propagate_final(psi0, gen, p, pulse).map(|s| fidelity(&s, target)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FidelityMap {
        grid: grid.clone(),
        values,
    })
}

/// `sum_k |f_k| dt`, the piecewise-constant integral of `|f|`.
pub fn effort_index(samples: &[f64], dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveStep(dt));
    }
    Ok(samples.iter().map(|v| v.abs()).sum::<f64>() * dt)
}

/// Effort index of the forward-difference derivative `(u_{k+1} - u_k) / dt`.
/// Equals the total variation of the samples.
pub fn slew_index(samples: &[f64], dt: f64) -> Result<f64> {
    let rates: Vec<f64> = samples.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
    effort_index(&rates, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelitySummary {
    pub max: f64,
    pub mean: f64,
    pub min: f64,
}

pub fn summarize(map: &FidelityMap) -> Result<FidelitySummary> {
    if map.values.is_empty() {
        return Err(Error::InvalidArgument("empty fidelity map".into()));
    }
    let mut sum = 0.0;
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for &v in &map.values {
        sum += v;
        max = max.max(v);
        min = min.min(v);
    }
    Ok(FidelitySummary {
        max,
        mean: sum / map.values.len() as f64,
        min,
    })
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub max_fidelity: f64,
    pub mean_fidelity: f64,
    pub min_fidelity: f64,
    #[serde(rename = "I_ux")]
    pub i_ux: f64,
    #[serde(rename = "I_uz")]
    pub i_uz: f64,
    #[serde(rename = "I_dux")]
    pub i_dux: f64,
    #[serde(rename = "I_duz")]
    pub i_duz: f64,
}

impl RunSummary {
    pub fn new(map: &FidelityMap, pulse: &ControlPulse) -> Result<Self> {
        let s = summarize(map)?;
        Ok(Self {
            max_fidelity: s.max,
            mean_fidelity: s.mean,
            min_fidelity: s.min,
            i_ux: effort_index(&pulse.ux, pulse.dt)?,
            i_uz: effort_index(&pulse.uz, pulse.dt)?,
            i_dux: slew_index(&pulse.ux, pulse.dt)?,
            i_duz: slew_index(&pulse.uz, pulse.dt)?,
        })
    }
}
