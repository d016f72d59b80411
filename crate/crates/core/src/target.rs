// Copyright 2026 The dicke-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Target Dicke-state profiles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::SpinNetwork;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetKind {
    /// `|S, -(S - 1)>`
    W,
    /// `|S, 0>` for even `N`, `|S, -1/2>` for odd `N`.
    Heds,
    /// `(|S, S> + |S, -S>) / sqrt(2)`
    Ghz,
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetKind::W => "W",
            TargetKind::Heds => "HEDS",
            TargetKind::Ghz => "GHZ",
        })
    }
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_uppercase().as_str() {
            "W" => Ok(TargetKind::W),
            "HEDS" => Ok(TargetKind::Heds),
            "GHZ" => Ok(TargetKind::Ghz),
            other => Err(Error::InvalidArgument(format!(
                "unknown target kind {other:?} (expected W, HEDS or GHZ)"
            ))),
        }
    }
}

/// Target magnitudes `t_a = |<psi_f | S, a>|` over the Dicke ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetProfile {
    pub kind: TargetKind,
    /// Indexed like amplitude vectors (index 0 is `m = S`).
    pub magnitudes: Vec<f64>,
    /// Indices with `t_a > 0`, ascending index (descending `m`).
    pub support: Vec<usize>,
    /// Index of the largest `m` in the support.
    pub a_max: usize,
}

impl TargetProfile {
    pub fn in_support(&self, index: usize) -> bool {
        self.magnitudes[index] > 0.0
    }
}

pub fn build_target(kind: TargetKind, net: &SpinNetwork) -> TargetProfile {
    let n = net.particles();
    let mut magnitudes = vec![0.0; net.dim()];
    match kind {
        // m = -(S - 1) sits one above the bottom of the ladder
        TargetKind::W => magnitudes[n - 1] = 1.0,
        // m = 0 (even N) or m = -1/2 (odd N)
        TargetKind::Heds => magnitudes[n.div_ceil(2)] = 1.0,
        TargetKind::Ghz => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            magnitudes[0] = h;
            magnitudes[n] = h;
        }
    }
    let support: Vec<usize> = (0..magnitudes.len())
        .filter(|&k| magnitudes[k] > 0.0)
        .collect();
    let a_max = support[0];
    TargetProfile {
        kind,
        magnitudes,
        support,
        a_max,
    }
}
