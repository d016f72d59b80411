// Copyright 2026 The dicke-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Small dense kernels shared by the propagators.
//!
//! Two independent routes to `exp(-i A dt)` live here: an eigendecomposition
//! route for real symmetric `A` (used on the hot path) and a general complex
//! Padé scaling-and-squaring `expm` (used by the dense moment route and by
//! cross-checks).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Eigendecomposition `A = V diag(values) V^T` of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEig {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(a.clone());
        Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    /// `exp(-i A dt)`.
    pub fn unitary(&self, dt: f64) -> DMatrix<C64> {
        let n = self.values.len();
        let phases: Vec<C64> = self
            .values
            .iter()
            .map(|&l| C64::from_polar(1.0, -l * dt))
            .collect();
        let v = &self.vectors;
        DMatrix::from_fn(n, n, |r, c| {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += phases[k] * (v[(r, k)] * v[(c, k)]);
            }
            acc
        })
    }

    /// Directional derivative of `exp(-i A dt)` along the real symmetric
    /// direction `da`, via the divided-difference (Daleckii-Krein) formula
    /// in the eigenbasis.
    pub fn unitary_derivative(&self, dt: f64, da: &DMatrix<f64>) -> DMatrix<C64> {
        let n = self.values.len();
        let v = &self.vectors;
        let proj = v.transpose() * da * v;
        let lam = &self.values;
        // F_jk = e^{-i (l_j + l_k) dt / 2} * (-i dt) * sinc((l_j - l_k) dt / 2)
        let kernel = DMatrix::from_fn(n, n, |j, k| {
            let mean = 0.5 * (lam[j] + lam[k]);
            let half = 0.5 * (lam[j] - lam[k]) * dt;
            let sinc = if half.abs() < 1e-8 {
                1.0 - half * half / 6.0
            } else {
                half.sin() / half
            };
            C64::from_polar(1.0, -mean * dt) * C64::new(0.0, -dt * sinc) * proj[(j, k)]
        });
        let vc = v.map(|x| C64::new(x, 0.0));
        &vc * kernel * vc.transpose()
    }
}

pub fn to_complex(a: &DMatrix<f64>) -> DMatrix<C64> {
    a.map(|x| C64::new(x, 0.0))
}

fn one_norm(a: &DMatrix<C64>) -> f64 {
    (0..a.ncols())
        .map(|c| a.column(c).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential of a general complex matrix by the degree-13 Padé
/// approximant with scaling and squaring.
pub fn expm(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension("expm needs a square matrix".into()));
    }
    let norm = one_norm(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * C64::new(0.5f64.powi(squarings), 0.0);
    let id = DMatrix::<C64>::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| C64::new(PADE13[k], 0.0);

    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &id * b(1);
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &id * b(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Numerical("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}
