// Copyright 2026 The dicke-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Legendre moment representation of the `(xi, zeta)`-parameterized ensemble.
//!
//! With rescaled parameters `xi* = (xi - 1) / delta_xi` and
//! `zeta* = (zeta - 1) / delta_zeta`, the moments are
//!
//! ```text
//! m[a, i, j](t) = \int\int C_a(t, xi*, zeta*) P_i(xi*) P_j(zeta*) dxi* dzeta*
//! ```
//!
//! The star on `C` denotes the re-parameterized amplitude, not complex
//! conjugation; conjugating would make the moment dynamics antilinear.
//!
//! Substituting the amplitude equation gives a linear system
//! `i dm/dt = L m`, where multiplication by `xi*` (resp. `zeta*`) acts on the
//! moment index through the tridiagonal [`JacobiCoupling`]. Truncating at
//! order `K` drops the couplings to order `K + 1`.
//!
//! Two propagation routes are provided:
//!
//! * [`propagate_moments_dense`] assembles `L` and exponentiates it with Padé
//!   scaling and squaring.
//! * [`MomentSystem`] diagonalizes the truncated couplings once. In that
//!   eigenbasis `L` is block diagonal with one Dicke-sized block per mode,
//!   so each step costs a handful of small symmetric eigendecompositions.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dynamics::{
    hamiltonian_matrix, propagate_final, AmplitudeState, ControlPulse, EnsembleParams, GeneratorSet,
};
use crate::ensemble::ParameterBox;
use crate::error::{Error, Result};
use crate::legendre::{Convention, GaussLegendre, JacobiCoupling, LegendreBasis};
use crate::linalg::{expm, to_complex, SymEig};

/// Moment tensor of shape `levels x (K_xi + 1) x (K_zeta + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    data: Vec<C64>,
    levels: usize,
    k_xi: usize,
    k_zeta: usize,
    pub convention: Convention,
    pub t: f64,
}

impl MomentState {
    pub fn zeros(levels: usize, k_xi: usize, k_zeta: usize, convention: Convention) -> Self {
        Self {
            data: vec![C64::new(0.0, 0.0); levels * (k_xi + 1) * (k_zeta + 1)],
            levels,
            k_xi,
            k_zeta,
            convention,
            t: 0.0,
        }
    }

    /// Moments of the parameter-independent ensemble `C(xi, zeta) = state`.
    pub fn from_constant(
        state: &AmplitudeState,
        k_xi: usize,
        k_zeta: usize,
        convention: Convention,
    ) -> Self {
        let mut m = Self::zeros(state.c.len(), k_xi, k_zeta, convention);
        let unit = convention.unit_moment();
        for a in 0..state.c.len() {
            *m.get_mut(a, 0, 0) = state.c[a] * unit;
        }
        m.t = state.t;
        m
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn order_xi(&self) -> usize {
        self.k_xi
    }

    pub fn order_zeta(&self) -> usize {
        self.k_zeta
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, a: usize, i: usize, j: usize) -> usize {
        (a * (self.k_xi + 1) + i) * (self.k_zeta + 1) + j
    }

    pub fn get(&self, a: usize, i: usize, j: usize) -> C64 {
        self.data[self.index(a, i, j)]
    }

    pub fn get_mut(&mut self, a: usize, i: usize, j: usize) -> &mut C64 {
        let k = self.index(a, i, j);
        &mut self.data[k]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn to_vector(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.data)
    }

    pub fn from_vector(&self, v: &DVector<C64>, t: f64) -> Self {
        Self {
            data: v.iter().copied().collect(),
            t,
            ..self.clone()
        }
    }

    /// Same shape and convention, entries taken from `data`.
    pub fn with_data(&self, data: Vec<C64>, t: f64) -> Result<Self> {
        if data.len() != self.data.len() {
            return Err(Error::Dimension(format!(
                "moment data has {} entries, expected {}",
                data.len(),
                self.data.len()
            )));
        }
        Ok(Self {
            data,
            t,
            ..self.clone()
        })
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `|| self - other ||_F / || other ||_F`.
    pub fn relative_gap(&self, other: &MomentState) -> f64 {
        let diff: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        diff / other.frobenius()
    }
}

/// Amplitudes sampled on a tensor Gauss-Legendre grid in `(xi*, zeta*)`.
#[derive(Debug, Clone)]
pub struct NodeEnsemble {
    pub xi_rule: GaussLegendre,
    pub zeta_rule: GaussLegendre,
    /// Row-major over `(p, q)`: index `p * zeta_rule.len() + q`.
    pub states: Vec<DVector<C64>>,
}

impl NodeEnsemble {
    /// Propagate `psi0` for every quadrature node, mapping `xi* -> 1 + delta_xi xi*`.
    pub fn propagate(
        gen: &GeneratorSet,
        bx: &ParameterBox,
        psi0: &AmplitudeState,
        pulse: &ControlPulse,
        xi_nodes: usize,
        zeta_nodes: usize,
    ) -> Result<Self> {
        let xi_rule = GaussLegendre::new(xi_nodes)?;
        let zeta_rule = GaussLegendre::new(zeta_nodes)?;
        let nz = zeta_rule.len();
        let states = (0..xi_rule.len() * nz)
            .into_par_iter()
            .map(|k| {
                let p = EnsembleParams::new(
                    1.0 + bx.delta_xi * xi_rule.nodes[k / nz],
                    1.0 + bx.delta_zeta * zeta_rule.nodes[k % nz],
                );
                propagate_final(psi0, gen, p, pulse).map(|s| s.c)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            xi_rule,
            zeta_rule,
            states,
        })
    }
}

/// Quadrature approximation of the moment integrals.
pub fn moments_from_ensemble(
    ens: &NodeEnsemble,
    k_xi: usize,
    k_zeta: usize,
    convention: Convention,
) -> Result<MomentState> {
    if ens.xi_rule.len() < k_xi + 1 {
        return Err(Error::TooFewNodes {
            nodes: ens.xi_rule.len(),
            order: k_xi,
        });
    }
    if ens.zeta_rule.len() < k_zeta + 1 {
        return Err(Error::TooFewNodes {
            nodes: ens.zeta_rule.len(),
            order: k_zeta,
        });
    }
    let levels = ens
        .states
        .first()
        .map(|s| s.len())
        .ok_or_else(|| Error::Dimension("empty ensemble".into()))?;
    let bx = LegendreBasis::new(k_xi, convention);
    let bz = LegendreBasis::new(k_zeta, convention);
    let px: Vec<Vec<f64>> = ens
        .xi_rule
        .nodes
        .iter()
        .map(|&x| bx.eval(x))
        .collect::<Result<_>>()?;
    let pz: Vec<Vec<f64>> = ens
        .zeta_rule
        .nodes
        .iter()
        .map(|&z| bz.eval(z))
        .collect::<Result<_>>()?;
    let nz = ens.zeta_rule.len();
    let mut m = MomentState::zeros(levels, k_xi, k_zeta, convention);
    for (k, c) in ens.states.iter().enumerate() {
        let (p, q) = (k / nz, k % nz);
        let w = ens.xi_rule.weights[p] * ens.zeta_rule.weights[q];
        for a in 0..levels {
            let cw = c[a] * w;
            for i in 0..=k_xi {
                for j in 0..=k_zeta {
                    *m.get_mut(a, i, j) += cw * (px[p][i] * pz[q][j]);
                }
            }
        }
    }
    Ok(m)
}

/// Truncated Legendre series evaluated at `(xi*, zeta*)`.
pub fn reconstruct(mom: &MomentState, xi_star: f64, zeta_star: f64) -> Result<DVector<C64>> {
    let px = LegendreBasis::new(mom.k_xi, mom.convention).eval(xi_star)?;
    let pz = LegendreBasis::new(mom.k_zeta, mom.convention).eval(zeta_star)?;
    let conv = mom.convention;
    Ok(DVector::from_fn(mom.levels, |a, _| {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..=mom.k_xi {
            for j in 0..=mom.k_zeta {
                let w = px[i] * pz[j] / (conv.norm_sq(i) * conv.norm_sq(j));
                acc += mom.get(a, i, j) * w;
            }
        }
        acc
    }))
}

/// Dense real operator `L` with `i dm/dt = L m` for fixed controls.
#[derive(Debug, Clone)]
pub struct MomentGenerator {
    pub matrix: DMatrix<f64>,
    pub levels: usize,
    pub k_xi: usize,
    pub k_zeta: usize,
}

impl MomentGenerator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, m: &MomentState) -> MomentState {
        let v = to_complex(&self.matrix) * m.to_vector();
        m.from_vector(&v, m.t)
    }
}

pub fn moment_generator(
    gen: &GeneratorSet,
    bx: &ParameterBox,
    k_xi: usize,
    k_zeta: usize,
    convention: Convention,
    ux: f64,
    uz: f64,
) -> MomentGenerator {
    let levels = gen.dim();
    let (nx, nz) = (k_xi + 1, k_zeta + 1);
    let rx = JacobiCoupling::new(k_xi, convention).r;
    let rz = JacobiCoupling::new(k_zeta, convention).r;
    let nominal = hamiltonian_matrix(gen, EnsembleParams::nominal(), ux, uz);
    let idx = |a: usize, i: usize, j: usize| (a * nx + i) * nz + j;
    let dim = levels * nx * nz;
    let mut l = DMatrix::zeros(dim, dim);
    for a in 0..levels {
        for i in 0..nx {
            for j in 0..nz {
                let row = idx(a, i, j);
                for b in 0..levels {
                    let h = nominal[(a, b)];
                    if h != 0.0 {
                        l[(row, idx(b, i, j))] += h;
                    }
                    let xab = gen.x[(a, b)];
                    if xab != 0.0 {
                        for ip in 0..nx {
                            let r = rx[(i, ip)];
                            if r != 0.0 {
                                l[(row, idx(b, ip, j))] += ux * bx.delta_xi * xab * r;
                            }
                        }
                    }
                }
                let dza = gen.dz[a];
                for jp in 0..nz {
                    let r = rz[(j, jp)];
                    if r != 0.0 {
                        l[(row, idx(a, i, jp))] += uz * bx.delta_zeta * dza * r;
                    }
                }
            }
        }
    }
    MomentGenerator {
        matrix: l,
        levels,
        k_xi,
        k_zeta,
    }
}

/// Moment trajectory via the dense generator and Padé `expm` at every step.
pub fn propagate_moments_dense(
    m0: &MomentState,
    gen: &GeneratorSet,
    bx: &ParameterBox,
    pulse: &ControlPulse,
) -> Result<Vec<MomentState>> {
    let mut traj = Vec::with_capacity(pulse.len() + 1);
    traj.push(m0.clone());
    let mut v = m0.to_vector();
    let mi = C64::new(0.0, -pulse.dt);
    for (k, (&ux, &uz)) in pulse.ux.iter().zip(&pulse.uz).enumerate() {
        let l = moment_generator(gen, bx, m0.k_xi, m0.k_zeta, m0.convention, ux, uz);
        let u = expm(&(to_complex(&l.matrix) * mi))?;
        v = u * v;
        traj.push(m0.from_vector(&v, m0.t + (k + 1) as f64 * pulse.dt));
    }
    Ok(traj)
}

/// Eigenbasis of the truncated coupling on one parameter axis.
#[derive(Debug, Clone)]
pub struct AxisModes {
    /// Eigenvalues of the coupling, ascending. These are the Gauss-Legendre
    /// nodes of order `K + 1`.
    pub values: Vec<f64>,
    /// Columns map mode amplitudes to moments: `m = to_moment * w`.
    pub to_moment: DMatrix<f64>,
    pub to_mode: DMatrix<f64>,
}

impl AxisModes {
    pub fn new(order: usize, convention: Convention) -> Self {
        let size = order + 1;
        let j = JacobiCoupling::new(order, Convention::Orthonormal).r;
        let eig = SymmetricEigen::new(j);
        let mut perm: Vec<usize> = (0..size).collect();
        perm.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = perm.iter().map(|&k| eig.eigenvalues[k]).collect();
        // Fix the sign of each eigenvector so its order-0 entry is positive.
        let q = DMatrix::from_fn(size, size, |r, c| {
            let col = perm[c];
            let sign = if eig.eigenvectors[(0, col)] < 0.0 {
                -1.0
            } else {
                1.0
            };
            sign * eig.eigenvectors[(r, col)]
        });
        let (to_moment, to_mode) = match convention {
            Convention::Orthonormal => (q.clone(), q.transpose()),
            Convention::Unnormalized => {
                let d: Vec<f64> = (0..size).map(|i| convention.norm_sq(i).sqrt()).collect();
                let tm = DMatrix::from_fn(size, size, |r, c| d[r] * q[(r, c)]);
                let tw = DMatrix::from_fn(size, size, |r, c| q[(c, r)] / d[c]);
                (tm, tw)
            }
        };
        Self {
            values,
            to_moment,
            to_mode,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Truncated moment dynamics for fixed generators, box and orders,
/// propagated in the coupling eigenbasis.
#[derive(Debug, Clone)]
pub struct MomentSystem {
    pub gen: GeneratorSet,
    pub bx: ParameterBox,
    pub convention: Convention,
    pub xi: AxisModes,
    pub zeta: AxisModes,
}

impl MomentSystem {
    pub fn new(
        gen: GeneratorSet,
        bx: ParameterBox,
        k_xi: usize,
        k_zeta: usize,
        convention: Convention,
    ) -> Self {
        Self {
            gen,
            bx,
            convention,
            xi: AxisModes::new(k_xi, convention),
            zeta: AxisModes::new(k_zeta, convention),
        }
    }

    pub fn order_xi(&self) -> usize {
        self.xi.len() - 1
    }

    pub fn order_zeta(&self) -> usize {
        self.zeta.len() - 1
    }

    pub fn levels(&self) -> usize {
        self.gen.dim()
    }

    pub fn mode_count(&self) -> usize {
        self.xi.len() * self.zeta.len()
    }

    /// Effective gains of mode `k = p * n_zeta + q`.
    pub fn mode_params(&self, k: usize) -> EnsembleParams {
        let nz = self.zeta.len();
        EnsembleParams::new(
            1.0 + self.bx.delta_xi * self.xi.values[k / nz],
            1.0 + self.bx.delta_zeta * self.zeta.values[k % nz],
        )
    }

    pub fn zeros(&self) -> MomentState {
        MomentState::zeros(
            self.levels(),
            self.order_xi(),
            self.order_zeta(),
            self.convention,
        )
    }

    fn check_shape(&self, m: &MomentState) -> Result<()> {
        if m.levels != self.levels()
            || m.k_xi != self.order_xi()
            || m.k_zeta != self.order_zeta()
            || m.convention != self.convention
        {
            return Err(Error::Dimension(
                "moment state does not match the moment system".into(),
            ));
        }
        Ok(())
    }

    pub fn to_modes(&self, m: &MomentState) -> Result<Vec<DVector<C64>>> {
        self.check_shape(m)?;
        let (nx, nz) = (self.xi.len(), self.zeta.len());
        let levels = self.levels();
        let mut out = vec![DVector::from_element(levels, C64::new(0.0, 0.0)); nx * nz];
        for p in 0..nx {
            for q in 0..nz {
                let w = &mut out[p * nz + q];
                for i in 0..nx {
                    for j in 0..nz {
                        let c = self.xi.to_mode[(p, i)] * self.zeta.to_mode[(q, j)];
                        if c == 0.0 {
                            continue;
                        }
                        for a in 0..levels {
                            w[a] += m.get(a, i, j) * c;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn from_modes(&self, modes: &[DVector<C64>], t: f64) -> MomentState {
        let (nx, nz) = (self.xi.len(), self.zeta.len());
        let mut m = self.zeros();
        m.t = t;
        for p in 0..nx {
            for q in 0..nz {
                let w = &modes[p * nz + q];
                for i in 0..nx {
                    for j in 0..nz {
                        let c = self.xi.to_moment[(i, p)] * self.zeta.to_moment[(j, q)];
                        if c == 0.0 {
                            continue;
                        }
                        for a in 0..self.levels() {
                            *m.get_mut(a, i, j) += w[a] * c;
                        }
                    }
                }
            }
        }
        m
    }

    /// Final moments under `pulse`.
    pub fn propagate_final(&self, m0: &MomentState, pulse: &ControlPulse) -> Result<MomentState> {
        let modes = self.to_modes(m0)?;
        let evolved = modes
            .into_par_iter()
            .enumerate()
            .map(|(k, w)| {
                let p = self.mode_params(k);
                let mut w = w;
                for (&ux, &uz) in pulse.ux.iter().zip(&pulse.uz) {
                    let u =
                        SymEig::new(&hamiltonian_matrix(&self.gen, p, ux, uz)).unitary(pulse.dt);
                    w = u * w;
                }
                w
            })
            .collect::<Vec<_>>();
        Ok(self.from_modes(&evolved, m0.t + pulse.horizon()))
    }

    /// Moment trajectory of `K_t + 1` states.
    pub fn propagate(&self, m0: &MomentState, pulse: &ControlPulse) -> Result<Vec<MomentState>> {
        let modes = self.to_modes(m0)?;
        let per_mode: Vec<Vec<DVector<C64>>> = modes
            .into_par_iter()
            .enumerate()
            .map(|(k, w)| {
                let p = self.mode_params(k);
                let mut traj = Vec::with_capacity(pulse.len() + 1);
                traj.push(w);
                for (&ux, &uz) in pulse.ux.iter().zip(&pulse.uz) {
                    let u =
                        SymEig::new(&hamiltonian_matrix(&self.gen, p, ux, uz)).unitary(pulse.dt);
                    let next = u * traj.last().unwrap();
                    traj.push(next);
                }
                traj
            })
            .collect();
        Ok((0..=pulse.len())
            .map(|step| {
                let snapshot: Vec<DVector<C64>> =
                    per_mode.iter().map(|t| t[step].clone()).collect();
                self.from_modes(&snapshot, m0.t + step as f64 * pulse.dt)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_generators, SpinNetwork};

    fn constant_ensemble(value: DVector<C64>, nx: usize, nz: usize) -> NodeEnsemble {
        NodeEnsemble {
            xi_rule: GaussLegendre::new(nx).unwrap(),
            zeta_rule: GaussLegendre::new(nz).unwrap(),
            states: vec![value; nx * nz],
        }
    }

    #[test]
    fn constant_ensemble_moments() {
        let v = DVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let ens = constant_ensemble(v.clone(), 4, 3);
        let m = moments_from_ensemble(&ens, 3, 2, Convention::Unnormalized).unwrap();
        for a in 0..2 {
            assert!((m.get(a, 0, 0) - v[a] * 4.0).norm() < 1e-14);
            for i in 0..=3 {
                for j in 0..=2 {
                    if i + j > 0 {
                        assert!(m.get(a, i, j).norm() < 1e-14);
                    }
                }
            }
        }
        let back = reconstruct(&m, 0.3, -0.7).unwrap();
        assert!((back - v).norm() < 1e-14);
    }

    #[test]
    fn linear_ensemble_first_moment() {
        let rule = GaussLegendre::new(3).unwrap();
        let states = (0..9)
            .map(|k| DVector::from_vec(vec![C64::new(rule.nodes[k / 3], 0.0)]))
            .collect();
        let ens = NodeEnsemble {
            xi_rule: rule.clone(),
            zeta_rule: rule,
            states,
        };
        let m = moments_from_ensemble(&ens, 2, 2, Convention::Unnormalized).unwrap();
        assert!((m.get(0, 1, 0).re - 4.0 / 3.0).abs() < 1e-14);
        assert!(m.get(0, 0, 0).norm() < 1e-14);
    }

    #[test]
    fn too_few_nodes() {
        let ens = constant_ensemble(DVector::from_vec(vec![C64::new(1.0, 0.0)]), 3, 3);
        assert!(matches!(
            moments_from_ensemble(&ens, 3, 1, Convention::Unnormalized),
            Err(Error::TooFewNodes { nodes: 3, order: 3 })
        ));
    }

    #[test]
    fn polynomial_round_trip() {
        // degree <= K data reconstructs exactly, for both conventions
        let f = |x: f64, z: f64| {
            C64::new(
                0.3 - 1.2 * x + 0.7 * x * x * x - 0.1 * z * z,
                0.5 * x * z - 0.25 * x.powi(4) * z,
            )
        };
        for conv in [Convention::Unnormalized, Convention::Orthonormal] {
            let (kx, kz) = (4, 2);
            let xr = GaussLegendre::new(2 * kx).unwrap();
            let zr = GaussLegendre::new(2 * kz).unwrap();
            let states = (0..xr.len() * zr.len())
                .map(|k| DVector::from_vec(vec![f(xr.nodes[k / zr.len()], zr.nodes[k % zr.len()])]))
                .collect();
            let ens = NodeEnsemble {
                xi_rule: xr,
                zeta_rule: zr,
                states,
            };
            let m = moments_from_ensemble(&ens, kx, kz, conv).unwrap();
            for &(x, z) in &[(0.1, 0.2), (-0.9, 0.95), (1.0, -1.0), (0.0, 0.0)] {
                let c = reconstruct(&m, x, z).unwrap()[0];
                assert!((c - f(x, z)).norm() < 1e-12, "{conv:?} at ({x}, {z})");
            }
        }
    }

    #[test]
    fn reconstruction_error_decreases_with_order() {
        let mut last = f64::INFINITY;
        for k in 2..=10 {
            let xr = GaussLegendre::new(2 * k + 8).unwrap();
            let zr = GaussLegendre::new(1).unwrap();
            let states = xr
                .nodes
                .iter()
                .map(|&x| DVector::from_vec(vec![C64::new(x.exp(), 0.0)]))
                .collect();
            let ens = NodeEnsemble {
                xi_rule: xr,
                zeta_rule: zr,
                states,
            };
            let m = moments_from_ensemble(&ens, k, 0, Convention::Unnormalized).unwrap();
            let err = (0..=200)
                .map(|s| {
                    let x = -1.0 + s as f64 / 100.0;
                    (reconstruct(&m, x, 0.0).unwrap()[0].re - x.exp()).abs()
                })
                .fold(0.0, f64::max);
            assert!(err < last, "order {k}: {err} !< {last}");
            last = err;
        }
        assert!(last < 1e-8);
    }

    fn small_system() -> (SpinNetwork, GeneratorSet) {
        let net = SpinNetwork::new(3, 1.0).unwrap();
        (net, build_generators(&net))
    }

    #[test]
    fn generator_without_uncertainty_is_block_diagonal() {
        let (_, gen) = small_system();
        let bx = ParameterBox::new(0.0, 0.0).unwrap();
        let l = moment_generator(&gen, &bx, 2, 1, Convention::Unnormalized, 1.7, -0.4);
        let a = hamiltonian_matrix(&gen, EnsembleParams::nominal(), 1.7, -0.4);
        for r in 0..l.dim() {
            for c in 0..l.dim() {
                let (ar, ir, jr) = (r / 6, (r / 2) % 3, r % 2);
                let (ac, ic, jc) = (c / 6, (c / 2) % 3, c % 2);
                let expect = if ir == ic && jr == jc {
                    a[(ar, ac)]
                } else {
                    0.0
                };
                assert_eq!(
                    l.matrix[(r, c)],
                    expect,
                    "({ar},{ir},{jr}) <- ({ac},{ic},{jc})"
                );
            }
        }
    }

    #[test]
    fn generator_controls_off_is_drift() {
        let (_, gen) = small_system();
        let bx = ParameterBox::new(0.3, 0.2).unwrap();
        let l = moment_generator(&gen, &bx, 3, 3, Convention::Unnormalized, 0.0, 0.0);
        let nm = 16;
        for r in 0..l.dim() {
            for c in 0..l.dim() {
                let expect = if r == c { gen.d0[r / nm] } else { 0.0 };
                assert_eq!(l.matrix[(r, c)], expect);
            }
        }
    }

    #[test]
    fn generator_dimension_single_axis() {
        let net = SpinNetwork::new(5, 1.0).unwrap();
        let gen = build_generators(&net);
        let bx = ParameterBox::new(0.2, 0.0).unwrap();
        let l = moment_generator(&gen, &bx, 14, 0, Convention::Unnormalized, 3.0, 3.0);
        assert_eq!(l.dim(), 90);
    }

    #[test]
    fn axis_modes_invert() {
        for conv in [Convention::Unnormalized, Convention::Orthonormal] {
            let ax = AxisModes::new(7, conv);
            let id = &ax.to_moment * &ax.to_mode;
            assert!((id - DMatrix::identity(8, 8)).abs().max() < 1e-13);
            let r = JacobiCoupling::new(7, conv).r;
            let diag = &ax.to_mode * r * &ax.to_moment;
            for p in 0..8 {
                assert!((diag[(p, p)] - ax.values[p]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn dense_and_modal_routes_agree() {
        let (net, gen) = small_system();
        let bx = ParameterBox::new(0.2, 0.15).unwrap();
        let pulse = ControlPulse::new(
            (0..20).map(|k| 2.0 + (k as f64).sin()).collect(),
            (0..20)
                .map(|k| -1.0 + 0.5 * (k as f64 * 0.7).cos())
                .collect(),
            0.02,
        )
        .unwrap();
        for conv in [Convention::Unnormalized, Convention::Orthonormal] {
            let m0 = MomentState::from_constant(&AmplitudeState::ground(&net), 4, 3, conv);
            let dense = propagate_moments_dense(&m0, &gen, &bx, &pulse).unwrap();
            let sys = MomentSystem::new(gen.clone(), bx, 4, 3, conv);
            let modal = sys.propagate(&m0, &pulse).unwrap();
            assert_eq!(dense.len(), modal.len());
            for (d, m) in dense.iter().zip(&modal) {
                assert!(m.relative_gap(d) < 1e-11);
                assert!((m.t - d.t).abs() < 1e-12);
            }
            let fin = sys.propagate_final(&m0, &pulse).unwrap();
            assert!(fin.relative_gap(dense.last().unwrap()) < 1e-11);
        }
    }
}
