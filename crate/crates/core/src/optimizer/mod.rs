// Copyright 2026 The dicke-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Robust pulse design on the truncated moment dynamics.
//!
//! The outer loop is a damped Gauss-Newton iteration: linearize the final
//! moments around the current pulse, solve a ridge-regularized QP for the
//! update under the amplitude and slew restrictions, accept the step if the
//! objective decreases, and adapt the damping.

pub mod qp;
pub mod sensitivity;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{build_generators, AmplitudeState, ControlPulse, SpinNetwork};
use crate::ensemble::ParameterBox;
use crate::error::{Error, Result};
use crate::legendre::Convention;
use crate::moments::{MomentState, MomentSystem};
use crate::target::TargetProfile;

pub use qp::{ChannelBounds, KktResidual, LowRankQp, QpSettings, QpSolution};
pub use sensitivity::{sensitivity, MomentJacobian};

/// Slew-rate bound on one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateBound {
    Unbounded,
    /// `|du/dt| <= value`
    Constant(f64),
    /// `|du/dt| <= value / t`; unconstrained at `t = 0`.
    OverTime(f64),
}

impl RateBound {
    /// Largest allowed `du/dt` at time `t`.
    pub fn max_rate(&self, t: f64) -> f64 {
        match *self {
            RateBound::Unbounded => f64::INFINITY,
            RateBound::Constant(v) => v,
            RateBound::OverTime(v) => {
                if t > 0.0 {
                    v / t
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Amplitude and slew restrictions for the x (index 0) and z (index 1) channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalRestrictions {
    pub u_min: [f64; 2],
    pub u_max: [f64; 2],
    pub rate: [RateBound; 2],
}

impl SignalRestrictions {
    pub fn symmetric(u_min: f64, u_max: f64, rate: RateBound) -> Result<Self> {
        let r = Self {
            u_min: [u_min; 2],
            u_max: [u_max; 2],
            rate: [rate; 2],
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        for c in 0..2 {
            if !(self.u_min[c] <= self.u_max[c]) {
                return Err(Error::InvalidArgument(format!(
                    "channel {c}: u_min {} exceeds u_max {}",
                    self.u_min[c], self.u_max[c]
                )));
            }
            match self.rate[c] {
                RateBound::Constant(v) | RateBound::OverTime(v) if !(v >= 0.0 && v.is_finite()) => {
                    return Err(Error::InvalidArgument(format!(
                        "channel {c}: bad rate bound {v}"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Per-step difference bound between samples `k` and `k + 1`, evaluated
    /// at `t_k = k dt`.
    pub fn step_bound(&self, channel: usize, k: usize, dt: f64) -> f64 {
        self.rate[channel].max_rate(k as f64 * dt) * dt
    }

    fn samples(pulse: &ControlPulse, channel: usize) -> &[f64] {
        if channel == 0 {
            &pulse.ux
        } else {
            &pulse.uz
        }
    }

    /// Largest violation of any restriction by `pulse`.
    pub fn violation(&self, pulse: &ControlPulse) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..2 {
            let u = Self::samples(pulse, c);
            for &v in u {
                worst = worst.max(self.u_min[c] - v).max(v - self.u_max[c]);
            }
            for k in 0..u.len().saturating_sub(1) {
                let b = self.step_bound(c, k, pulse.dt);
                worst = worst.max((u[k + 1] - u[k]).abs() - b);
            }
        }
        worst
    }

    /// QP bounds on `du` so that `pulse + du` satisfies the restrictions.
    pub fn step_constraints(&self, pulse: &ControlPulse) -> Vec<ChannelBounds> {
        (0..2)
            .map(|c| {
                let u = Self::samples(pulse, c);
                let n = u.len();
                let mut diff_lower = Vec::with_capacity(n.saturating_sub(1));
                let mut diff_upper = Vec::with_capacity(n.saturating_sub(1));
                for k in 0..n.saturating_sub(1) {
                    let b = self.step_bound(c, k, pulse.dt);
                    let d = u[k + 1] - u[k];
                    diff_lower.push(-b - d);
                    diff_upper.push(b - d);
                }
                ChannelBounds {
                    lower: u.iter().map(|v| self.u_min[c] - v).collect(),
                    upper: u.iter().map(|v| self.u_max[c] - v).collect(),
                    diff_lower,
                    diff_upper,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub max_outer_iters: usize,
    pub objective_tol: f64,
    pub lambda_init: f64,
    /// Damping multiplier after a rejected step.
    pub lambda_up: f64,
    /// Damping divisor after an accepted step.
    pub lambda_down: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub qp: QpSettings,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_outer_iters: 200,
            objective_tol: 1e-8,
            lambda_init: 1.0,
            lambda_up: 10.0,
            lambda_down: 2.0,
            lambda_min: 1e-10,
            lambda_max: 1e12,
            qp: QpSettings::default(),
        }
    }
}

/// Moment indices entering the objective, with their target values.
fn residual_terms(state: &MomentState, target: &TargetProfile) -> Vec<(usize, f64)> {
    let unit = state.convention.unit_moment();
    let mut terms = Vec::new();
    for a in 0..state.levels() {
        if a == target.a_max {
            continue;
        }
        for i in 0..=state.order_xi() {
            for j in 0..=state.order_zeta() {
                let goal = if i == 0 && j == 0 {
                    unit * target.magnitudes[a]
                } else {
                    0.0
                };
                terms.push((state.index(a, i, j), goal));
            }
        }
    }
    terms
}

/// Realified residual `[Re r_0, Im r_0, Re r_1, ...]` over every moment of
/// every level except `a_max`.
pub fn residuals(state: &MomentState, target: &TargetProfile) -> DVector<f64> {
    let terms = residual_terms(state, target);
    let data = state.as_slice();
    let mut r = DVector::zeros(2 * terms.len());
    for (k, &(idx, goal)) in terms.iter().enumerate() {
        r[2 * k] = data[idx].re - goal;
        r[2 * k + 1] = data[idx].im;
    }
    r
}

/// Least-squares objective: squared moduli of the residuals.
pub fn objective(state: &MomentState, target: &TargetProfile) -> f64 {
    residuals(state, target).norm_squared()
}

/// Rows of the moment Jacobian matching [`residuals`], realified.
pub fn residual_jacobian(jac: &MomentJacobian, target: &TargetProfile) -> DMatrix<f64> {
    let terms = residual_terms(&jac.final_state, target);
    let cols = jac.matrix.ncols();
    let mut g = DMatrix::zeros(2 * terms.len(), cols);
    for c in 0..cols {
        for (k, &(idx, _)) in terms.iter().enumerate() {
            let v = jac.matrix[(idx, c)];
            g[(2 * k, c)] = v.re;
            g[(2 * k + 1, c)] = v.im;
        }
    }
    g
}

#[derive(Debug, Clone)]
pub struct QpStep {
    pub du: Vec<f64>,
    pub kkt: KktResidual,
    pub iterations: usize,
}

/// Minimize `||r + G du||^2 + lambda ||du||^2` subject to the restrictions
/// on `pulse + du`.
pub fn qp_step(
    residual: &DVector<f64>,
    g: &DMatrix<f64>,
    pulse: &ControlPulse,
    restrictions: &SignalRestrictions,
    lambda: f64,
    settings: &QpSettings,
) -> Result<QpStep> {
    let qp = LowRankQp {
        factor: g.clone(),
        offset: residual.clone(),
        ridge: lambda,
        channels: restrictions.step_constraints(pulse),
    };
    let sol = qp.solve(settings)?;
    Ok(QpStep {
        du: sol.x.iter().copied().collect(),
        kkt: sol.kkt,
        iterations: sol.iterations,
    })
}

#[derive(Debug, Clone)]
pub struct DesignProblem {
    pub net: SpinNetwork,
    pub bx: ParameterBox,
    pub target: TargetProfile,
    pub restrictions: SignalRestrictions,
    pub settings: SolverSettings,
    pub k_xi: usize,
    pub k_zeta: usize,
    pub convention: Convention,
}

impl DesignProblem {
    pub fn moment_system(&self) -> MomentSystem {
        MomentSystem::new(
            build_generators(&self.net),
            self.bx,
            self.k_xi,
            self.k_zeta,
            self.convention,
        )
    }

    pub fn initial_moments(&self) -> MomentState {
        MomentState::from_constant(
            &AmplitudeState::ground(&self.net),
            self.k_xi,
            self.k_zeta,
            self.convention,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iter: usize,
    pub objective: f64,
    pub lambda: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Accepted step changed the objective by less than the tolerance.
    Converged,
    MaxIterations,
    /// Damping exceeded its ceiling without an accepted step.
    Stalled,
    /// The QP subproblem failed; the best iterate so far is returned.
    QpFailure,
}

#[derive(Debug, Clone)]
pub struct DesignResult {
    pub pulse: ControlPulse,
    pub objective: f64,
    pub history: Vec<HistoryEntry>,
    pub stop: StopReason,
}

impl DesignResult {
    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }
}

fn clamp_to_box(pulse: &mut ControlPulse, r: &SignalRestrictions) {
    for v in pulse.ux.iter_mut() {
        *v = v.clamp(r.u_min[0], r.u_max[0]);
    }
    for v in pulse.uz.iter_mut() {
        *v = v.clamp(r.u_min[1], r.u_max[1]);
    }
}

pub fn design_pulse(problem: &DesignProblem, u_init: &ControlPulse) -> Result<DesignResult> {
    problem.restrictions.validate()?;
    let violation = problem.restrictions.violation(u_init);
    if violation > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "initial pulse violates the signal restrictions by {violation}"
        )));
    }
    let settings = &problem.settings;
    let sys = problem.moment_system();
    let m0 = problem.initial_moments();
    let target = &problem.target;

    let mut pulse = u_init.clone();
    let mut jac = sensitivity(&sys, &m0, &pulse)?;
    let mut r = residuals(&jac.final_state, target);
    let mut value = r.norm_squared();
    let mut g = residual_jacobian(&jac, target);
    let mut lambda = settings.lambda_init;
    let mut history = vec![HistoryEntry {
        iter: 0,
        objective: value,
        lambda,
        accepted: true,
    }];
    let mut stop = StopReason::MaxIterations;

    if value < settings.objective_tol {
        stop = StopReason::Converged;
    }

    for iter in 1..=settings.max_outer_iters {
        if stop == StopReason::Converged {
            break;
        }
        let step = match qp_step(&r, &g, &pulse, &problem.restrictions, lambda, &settings.qp) {
            Ok(s) => s,
            Err(_) => {
                stop = StopReason::QpFailure;
                break;
            }
        };
        let mut trial = pulse.clone();
        let k = trial.len();
        for (s, d) in step.du.iter().enumerate() {
            if s < k {
                trial.ux[s] += d;
            } else {
                trial.uz[s - k] += d;
            }
        }
        clamp_to_box(&mut trial, &problem.restrictions);
        let trial_state = sys.propagate_final(&m0, &trial)?;
        let trial_value = objective(&trial_state, target);
        let accepted = trial_value < value;
        history.push(HistoryEntry {
            iter,
            objective: trial_value,
            lambda,
            accepted,
        });
        if accepted {
            let gain = value - trial_value;
            pulse = trial;
            value = trial_value;
            lambda = (lambda / settings.lambda_down).max(settings.lambda_min);
            if gain < settings.objective_tol || value < settings.objective_tol {
                stop = StopReason::Converged;
                break;
            }
            jac = sensitivity(&sys, &m0, &pulse)?;
            r = residuals(&jac.final_state, target);
            g = residual_jacobian(&jac, target);
        } else {
            lambda *= settings.lambda_up;
            if lambda > settings.lambda_max {
                stop = StopReason::Stalled;
                break;
            }
        }
    }

    Ok(DesignResult {
        pulse,
        objective: value,
        history,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::{build_target, TargetKind};
    use num_complex::Complex64 as C64;

    fn n5() -> SpinNetwork {
        SpinNetwork::new(5, 1.0).unwrap()
    }

    #[test]
    fn objective_zero_at_target() {
        let net = n5();
        for kind in [TargetKind::W, TargetKind::Heds, TargetKind::Ghz] {
            let t = build_target(kind, &net);
            let mut m = MomentState::zeros(6, 3, 2, Convention::Unnormalized);
            for a in 0..6 {
                *m.get_mut(a, 0, 0) = C64::new(4.0 * t.magnitudes[a], 0.0);
            }
            assert_eq!(objective(&m, &t), 0.0);
        }
    }

    #[test]
    fn ground_state_objective_w() {
        let net = n5();
        let t = build_target(TargetKind::W, &net);
        let m = MomentState::from_constant(
            &AmplitudeState::ground(&net),
            14,
            0,
            Convention::Unnormalized,
        );
        assert_eq!(objective(&m, &t), 16.0);
    }

    #[test]
    fn a_max_is_excluded() {
        let net = n5();
        let t = build_target(TargetKind::W, &net);
        let mut m = MomentState::zeros(6, 2, 0, Convention::Unnormalized);
        *m.get_mut(t.a_max, 0, 0) = C64::new(123.0, 4.0);
        *m.get_mut(t.a_max, 2, 0) = C64::new(-7.0, 0.0);
        assert_eq!(objective(&m, &t), 0.0);
        // W occupies only a_max, so every residual is an off-support moment
        assert_eq!(residuals(&m, &t).len(), 2 * 5 * 3);
    }

    #[test]
    fn ghz_targets_minus_s_level() {
        let net = n5();
        let t = build_target(TargetKind::Ghz, &net);
        let mut m = MomentState::zeros(6, 0, 0, Convention::Unnormalized);
        *m.get_mut(5, 0, 0) = C64::new(4.0 / 2f64.sqrt(), 0.0);
        assert!(objective(&m, &t) < 1e-28);
        *m.get_mut(5, 0, 0) = C64::new(0.0, 4.0 / 2f64.sqrt());
        assert!((objective(&m, &t) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn rate_bound_forms() {
        assert_eq!(RateBound::OverTime(1e4).max_rate(0.0), f64::INFINITY);
        assert_eq!(RateBound::OverTime(1e4).max_rate(2.0), 5e3);
        assert_eq!(RateBound::Constant(3.0).max_rate(0.0), 3.0);
        let r = SignalRestrictions::symmetric(0.0, 40.0, RateBound::OverTime(1e4)).unwrap();
        assert_eq!(r.step_bound(0, 0, 0.01), f64::INFINITY);
        assert!((r.step_bound(0, 100, 0.01) - 100.0).abs() < 1e-9);
        assert!(SignalRestrictions::symmetric(1.0, 0.0, RateBound::Unbounded).is_err());
    }

    #[test]
    fn qp_step_respects_box_and_kkt() {
        let pulse = ControlPulse::constant(8, 0.1, 0.5, 39.5).unwrap();
        let r = SignalRestrictions::symmetric(0.0, 40.0, RateBound::Constant(20.0)).unwrap();
        let g = DMatrix::from_fn(6, 16, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let res = DVector::from_fn(6, |i, _| 10.0 * (i as f64 - 2.5));
        let step = qp_step(&res, &g, &pulse, &r, 1e-3, &QpSettings::default()).unwrap();
        assert!(step.kkt.max() <= 1e-8, "{:?}", step.kkt);
        let mut next = pulse.clone();
        for k in 0..8 {
            next.ux[k] += step.du[k];
            next.uz[k] += step.du[8 + k];
        }
        assert!(r.violation(&next) <= 1e-10);
    }

    #[test]
    fn design_rejects_infeasible_start() {
        let net = n5();
        let problem = DesignProblem {
            net,
            bx: ParameterBox::new(0.0, 0.0).unwrap(),
            target: build_target(TargetKind::W, &net),
            restrictions: SignalRestrictions::symmetric(0.0, 40.0, RateBound::Unbounded).unwrap(),
            settings: SolverSettings::default(),
            k_xi: 0,
            k_zeta: 0,
            convention: Convention::Unnormalized,
        };
        let bad = ControlPulse::constant(10, 0.01, 50.0, 3.0).unwrap();
        assert!(design_pulse(&problem, &bad).is_err());
    }

    #[test]
    fn design_nominal_w_small() {
        let net = SpinNetwork::new(2, 1.0).unwrap();
        let problem = DesignProblem {
            net,
            bx: ParameterBox::new(0.0, 0.0).unwrap(),
            target: build_target(TargetKind::W, &net),
            restrictions: SignalRestrictions::symmetric(0.0, 40.0, RateBound::OverTime(1e4))
                .unwrap(),
            settings: SolverSettings {
                max_outer_iters: 60,
                ..Default::default()
            },
            k_xi: 0,
            k_zeta: 0,
            convention: Convention::Unnormalized,
        };
        let init = ControlPulse::constant(100, 0.01, 3.0, 3.0).unwrap();
        let out = design_pulse(&problem, &init).unwrap();
        let accepted: Vec<f64> = out
            .history
            .iter()
            .filter(|h| h.accepted)
            .map(|h| h.objective)
            .collect();
        assert!(accepted.windows(2).all(|w| w[1] <= w[0]));
        assert!(out.objective < 1e-4, "objective {}", out.objective);
        assert!(problem.restrictions.violation(&out.pulse) <= 1e-10);
    }
}
