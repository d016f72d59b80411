// Copyright 2026 The dicke-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! First-order map from control-sample perturbations to final moments.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dynamics::{hamiltonian_matrix, ControlPulse};
use crate::error::Result;
use crate::linalg::SymEig;
use crate::moments::{MomentState, MomentSystem};

/// `d m(T) / d u`, columns ordered `[u_x[0..K], u_z[0..K]]`.
#[derive(Debug, Clone)]
pub struct MomentJacobian {
    pub matrix: DMatrix<C64>,
    pub final_state: MomentState,
}

impl MomentJacobian {
    /// `G * du` as a moment-shaped perturbation.
    pub fn apply(&self, du: &[f64]) -> Vec<C64> {
        let v = DVector::from_iterator(du.len(), du.iter().map(|&x| C64::new(x, 0.0)));
        (&self.matrix * v).iter().copied().collect()
    }
}

/// Exact sensitivity of the truncated moment dynamics.
///
/// Each mode of the moment system evolves independently, so per mode the
/// derivative of every step exponential is taken in closed form in the
/// step's eigenbasis and pulled back through the remaining propagators.
pub fn sensitivity(
    sys: &MomentSystem,
    m0: &MomentState,
    pulse: &ControlPulse,
) -> Result<MomentJacobian> {
    let steps = pulse.len();
    let levels = sys.levels();
    let modes = sys.to_modes(m0)?;
    let dz_diag = DMatrix::from_diagonal(&sys.gen.dz);

    let per_mode: Vec<(DVector<C64>, DMatrix<C64>)> = modes
        .into_par_iter()
        .enumerate()
        .map(|(k, w0)| {
            let p = sys.mode_params(k);
            let mut eigs = Vec::with_capacity(steps);
            let mut states = Vec::with_capacity(steps + 1);
            states.push(w0);
            for (&ux, &uz) in pulse.ux.iter().zip(&pulse.uz) {
                let eig = SymEig::new(&hamiltonian_matrix(&sys.gen, p, ux, uz));
                let next = eig.unitary(pulse.dt) * states.last().unwrap();
                eigs.push(eig);
                states.push(next);
            }
            let dax = &sys.gen.x * p.xi;
            let daz = &dz_diag * p.zeta;
            let mut jac = DMatrix::from_element(levels, 2 * steps, C64::new(0.0, 0.0));
            let mut tail = DMatrix::<C64>::identity(levels, levels);
            for s in (0..steps).rev() {
                let eig = &eigs[s];
                let cx = &tail * (eig.unitary_derivative(pulse.dt, &dax) * &states[s]);
                let cz = &tail * (eig.unitary_derivative(pulse.dt, &daz) * &states[s]);
                jac.set_column(s, &cx);
                jac.set_column(steps + s, &cz);
                tail *= eig.unitary(pulse.dt);
            }
            (states.pop().unwrap(), jac)
        })
        .collect();

    let finals: Vec<DVector<C64>> = per_mode.iter().map(|(w, _)| w.clone()).collect();
    let final_state = sys.from_modes(&finals, m0.t + pulse.horizon());

    let shape = sys.zeros();
    let (nx, nz) = (sys.xi.len(), sys.zeta.len());
    let rows = shape.len();
    let columns: Vec<Vec<C64>> = (0..2 * steps)
        .into_par_iter()
        .map(|c| {
            let mut col = vec![C64::new(0.0, 0.0); rows];
            for (k, (_, jac)) in per_mode.iter().enumerate() {
                let (p, q) = (k / nz, k % nz);
                for i in 0..nx {
                    for j in 0..nz {
                        let coef = sys.xi.to_moment[(i, p)] * sys.zeta.to_moment[(j, q)];
                        if coef == 0.0 {
                            continue;
                        }
                        for a in 0..levels {
                            col[shape.index(a, i, j)] += jac[(a, c)] * coef;
                        }
                    }
                }
            }
            col
        })
        .collect();
    let matrix = DMatrix::from_fn(rows, 2 * steps, |r, c| columns[c][r]);
    Ok(MomentJacobian {
        matrix,
        final_state,
    })
}
