// Copyright 2026 The dicke-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Legendre polynomials on `[-1, 1]`, Gauss-Legendre quadrature and the
//! Jacobi (multiplication-by-x) operator on Legendre coefficients.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Scaling of the polynomial family.
///
/// `Unnormalized` is the classical `L_0 = 1` family with
/// `<L_n, L_n> = 2 / (2n + 1)`; `Orthonormal` rescales each `L_n` to unit norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Convention {
    #[default]
    Unnormalized,
    Orthonormal,
}

impl Convention {
    /// `<P_n, P_n>` on `[-1, 1]`.
    pub fn norm_sq(self, n: usize) -> f64 {
        match self {
            Convention::Unnormalized => 2.0 / (2 * n + 1) as f64,
            Convention::Orthonormal => 1.0,
        }
    }

    /// Factor multiplying `L_n` to obtain `P_n`.
    pub fn scale(self, n: usize) -> f64 {
        match self {
            Convention::Unnormalized => 1.0,
            Convention::Orthonormal => ((2 * n + 1) as f64 / 2.0).sqrt(),
        }
    }

    /// Order-(0, 0) moment of the constant function 1 over the square.
    pub fn unit_moment(self) -> f64 {
        match self {
            Convention::Unnormalized => 4.0,
            Convention::Orthonormal => 2.0,
        }
    }
}

/// `[L_0(x), ..., L_K(x)]` by the three-term recurrence
/// `(n + 1) L_{n+1} = (2n + 1) x L_n - n L_{n-1}`.
pub fn legendre_eval(order: usize, x: f64) -> Result<Vec<f64>> {
    if !(x.abs() <= 1.0 + 1e-12) {
        return Err(Error::OutOfDomain(x));
    }
    Ok(legendre_unchecked(order, x))
}

fn legendre_unchecked(order: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    out.push(1.0);
    if order >= 1 {
        out.push(x);
    }
    for n in 1..order {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * x * out[n] - nf * out[n - 1]) / (nf + 1.0);
        out.push(next);
    }
    out
}

/// Truncated Legendre family of order `K` in a given convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreBasis {
    pub order: usize,
    pub convention: Convention,
}

impl LegendreBasis {
    pub fn new(order: usize, convention: Convention) -> Self {
        Self { order, convention }
    }

    pub fn eval(&self, x: f64) -> Result<Vec<f64>> {
        let mut v = legendre_eval(self.order, x)?;
        for (n, p) in v.iter_mut().enumerate() {
            *p *= self.convention.scale(n);
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.order + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Gauss-Legendre rule on `[-1, 1]`, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `L_n` from Chebyshev-like initial guesses.
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArgument(
                "quadrature needs at least one node".into(),
            ));
        }
        let n = count;
        let nf = n as f64;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Action of multiplication by `x` on Legendre coefficients, truncated at
/// order `K` (couplings to order `K + 1` are dropped).
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiCoupling {
    pub r: DMatrix<f64>,
    pub convention: Convention,
}

impl JacobiCoupling {
    pub fn new(order: usize, convention: Convention) -> Self {
        let size = order + 1;
        let mut r = DMatrix::zeros(size, size);
        for i in 0..size {
            let fi = i as f64;
            let denom = 2.0 * fi + 1.0;
            match convention {
                // moment_i(x f) = ((i + 1) m_{i+1} + i m_{i-1}) / (2i + 1)
                Convention::Unnormalized => {
                    if i + 1 < size {
                        r[(i, i + 1)] = (fi + 1.0) / denom;
                    }
                    if i >= 1 {
                        r[(i, i - 1)] = fi / denom;
                    }
                }
                Convention::Orthonormal => {
                    if i + 1 < size {
                        let b = (fi + 1.0) / ((2.0 * fi + 1.0) * (2.0 * fi + 3.0)).sqrt();
                        r[(i, i + 1)] = b;
                        r[(i + 1, i)] = b;
                    }
                }
            }
        }
        Self { r, convention }
    }

    pub fn order(&self) -> usize {
        self.r.nrows() - 1
    }
}
