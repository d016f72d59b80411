// Copyright 2026 The dicke-pulse Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin network: {0}")]
    InvalidNetwork(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("point {0} lies outside [-1, 1]")]
    OutOfDomain(f64),

    #[error("quadrature has {nodes} nodes but order {order} needs at least {}", order + 1)]
    TooFewNodes { nodes: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("infeasible constraints on channel {channel} at sample indices {indices:?}")]
    Infeasible { channel: usize, indices: Vec<usize> },

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("pulse file: {0}")]
    PulseFormat(String),

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
