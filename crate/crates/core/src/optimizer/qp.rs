// Copyright 2026 The dicke-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Convex QP with a ridge-plus-low-rank Hessian and chain constraints.
//!
//! ```text
//! minimize    1/2 ||g + F x||^2 + rho/2 ||x||^2
//! subject to  lo_k  <= x_k             <= hi_k
//!             dlo_k <= x_{k+1} - x_k   <= dhi_k     (within each channel)
//! ```
//!
//! Solved by a Mehrotra predictor-corrector interior-point method. The
//! constraint contribution to the Newton matrix is tridiagonal, so each
//! Newton system `(rho I + T + F^T F) dx = r` is solved with a tridiagonal
//! factorization and the Woodbury identity on the `m x m` capacitance
//! matrix `I + F (rho I + T)^{-1} F^T`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Bounds on one contiguous block ("channel") of the variable vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Bounds on `x_{k+1} - x_k`, length `len - 1`.
    pub diff_lower: Vec<f64>,
    pub diff_upper: Vec<f64>,
}

impl ChannelBounds {
    pub fn unbounded(len: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; len],
            upper: vec![f64::INFINITY; len],
            diff_lower: vec![f64::NEG_INFINITY; len.saturating_sub(1)],
            diff_upper: vec![f64::INFINITY; len.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.upper.len() != n
            || self.diff_lower.len() != n.saturating_sub(1)
            || self.diff_upper.len() != n.saturating_sub(1)
        {
            return Err(Error::Dimension(
                "channel bound arrays have inconsistent lengths".into(),
            ));
        }
        Ok(())
    }

    /// Sample indices at which no feasible chain exists. Interval
    /// reachability is exact for a chain of difference constraints.
    pub fn infeasible_indices(&self) -> Vec<usize> {
        let mut bad = Vec::new();
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..self.len() {
            if k > 0 {
                lo += self.diff_lower[k - 1];
                hi += self.diff_upper[k - 1];
                if self.diff_lower[k - 1] > self.diff_upper[k - 1] {
                    lo = f64::INFINITY;
                }
            }
            lo = lo.max(self.lower[k]);
            hi = hi.min(self.upper[k]);
            if lo.is_nan() || hi.is_nan() || lo > hi {
                bad.push(k);
                lo = self.lower[k];
                hi = self.upper[k];
                if lo > hi {
                    lo = f64::NEG_INFINITY;
                    hi = f64::INFINITY;
                }
            }
        }
        bad
    }
}

#[derive(Debug, Clone)]
pub struct LowRankQp {
    /// `F`, `m x n`.
    pub factor: DMatrix<f64>,
    /// `g`, length `m`.
    pub offset: DVector<f64>,
    /// `rho > 0`.
    pub ridge: f64,
    /// Channel blocks in order; their lengths sum to `n`.
    pub channels: Vec<ChannelBounds>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSettings {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-10,
        }
    }
}

/// Infinity-norm KKT residuals at a returned point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResidual {
    pub stationarity: f64,
    pub primal: f64,
    pub complementarity: f64,
    pub dual: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.complementarity)
            .max(self.dual)
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Multipliers, one per finite one-sided constraint (see [`LowRankQp::constraints`]).
    pub multipliers: Vec<f64>,
    pub kkt: KktResidual,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Row {
    Bound(usize),
    Diff(usize),
}

/// One-sided constraint `sign * row(x) <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    row: Row,
    sign: f64,
    rhs: f64,
}

impl Constraint {
    #[inline]
    fn eval(&self, x: &DVector<f64>) -> f64 {
        self.sign
            * match self.row {
                Row::Bound(k) => x[k],
                Row::Diff(k) => x[k + 1] - x[k],
            }
    }

    #[inline]
    fn scatter(&self, z: f64, out: &mut DVector<f64>) {
        match self.row {
            Row::Bound(k) => out[k] += self.sign * z,
            Row::Diff(k) => {
                out[k + 1] += self.sign * z;
                out[k] -= self.sign * z;
            }
        }
    }
}

/// LDL^T factorization of `diag(base) + sum_k w_k (e_{k+1} - e_k)(e_{k+1} - e_k)^T`
/// with `base > 0`, `w >= 0`.
///
/// Pivots are built as `c_{k+1} = base_{k+1} + w_k c_k / (c_k + w_k)`, which
/// stays positive without cancellation even when the link weights are many
/// orders of magnitude larger than `base`.
struct Tridiagonal {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl Tridiagonal {
    fn factor(base: &[f64], links: &[f64]) -> Result<Self> {
        let n = base.len();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        let mut c = base.first().copied().unwrap_or(0.0);
        for k in 0..n {
            let w = if k + 1 < n { links[k] } else { 0.0 };
            d[k] = c + w;
            if !(c > 0.0) || !d[k].is_finite() {
                return Err(Error::Numerical(
                    "tridiagonal block is not positive definite".into(),
                ));
            }
            if k + 1 < n {
                l[k] = -w / d[k];
                c = base[k + 1] + w * (c / d[k]);
            }
        }
        Ok(Self { d, l })
    }

    fn solve_in_place(&self, v: &[f64]) -> Vec<f64> {
        let mut v = v.to_vec();
        self.solve_slice(&mut v);
        v
    }

    fn solve_slice(&self, v: &mut [f64]) {
        let n = self.d.len();
        for k in 1..n {
            v[k] -= self.l[k - 1] * v[k - 1];
        }
        for k in 0..n {
            v[k] /= self.d[k];
        }
        for k in (0..n.saturating_sub(1)).rev() {
            v[k] -= self.l[k] * v[k + 1];
        }
    }
}

/// Factorization of `B + F^T F` with `B` tridiagonal.
struct NewtonSystem<'a> {
    tri: Tridiagonal,
    base: &'a [f64],
    links: &'a [f64],
    factor: &'a DMatrix<f64>,
    /// `B^{-1} F^T`, `n x m`.
    w: DMatrix<f64>,
    cap: Cholesky<f64, nalgebra::Dyn>,
}

impl<'a> NewtonSystem<'a> {
    fn new(factor: &'a DMatrix<f64>, base: &'a [f64], links: &'a [f64]) -> Result<Self> {
        let tri = Tridiagonal::factor(base, links)?;
        let (m, n) = factor.shape();
        let mut w = factor.transpose();
        for c in 0..m {
            tri.solve_slice(w.column_mut(c).as_mut_slice());
        }
        let mut cap = factor * &w;
        for k in 0..m {
            cap[(k, k)] += 1.0;
        }
        let cap = Cholesky::new(cap)
            .ok_or_else(|| Error::Numerical("capacitance matrix not SPD".into()))?;
        debug_assert_eq!(w.nrows(), n);
        Ok(Self {
            tri,
            base,
            links,
            factor,
            w,
            cap,
        })
    }

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = self.factor.tr_mul(&(self.factor * v));
        for k in 0..v.len() {
            out[k] += self.base[k] * v[k];
        }
        for (k, &w) in self.links.iter().enumerate() {
            let d = w * (v[k + 1] - v[k]);
            out[k + 1] += d;
            out[k] -= d;
        }
        out
    }

    fn solve_once(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let y = DVector::from_vec(self.tri.solve_in_place(rhs.as_slice()));
        if self.w.ncols() == 0 {
            return y;
        }
        let t = self.cap.solve(&(self.factor * &y));
        y - &self.w * t
    }

    /// Woodbury solve followed by iterative refinement against the
    /// assembled operator.
    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.solve_once(rhs);
        for _ in 0..3 {
            let r = rhs - self.apply(&x);
            if r.amax() <= f64::EPSILON * rhs.amax() {
                break;
            }
            x += self.solve_once(&r);
        }
        x
    }
}

impl LowRankQp {
    pub fn dim(&self) -> usize {
        self.factor.ncols()
    }

    fn validate(&self) -> Result<()> {
        if self.offset.len() != self.factor.nrows() {
            return Err(Error::Dimension(
                "offset length must equal factor rows".into(),
            ));
        }
        let total: usize = self.channels.iter().map(|c| c.len()).sum();
        if total != self.dim() {
            return Err(Error::Dimension(format!(
                "channels cover {total} variables, factor has {} columns",
                self.dim()
            )));
        }
        if !(self.ridge > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ridge must be positive, got {}",
                self.ridge
            )));
        }
        for (c, ch) in self.channels.iter().enumerate() {
            ch.validate()?;
            let bad = ch.infeasible_indices();
            if !bad.is_empty() {
                return Err(Error::Infeasible {
                    channel: c,
                    indices: bad,
                });
            }
        }
        Ok(())
    }

    /// Finite one-sided constraints in a fixed order: per channel, bounds
    /// (upper then lower) then differences (upper then lower).
    pub fn constraints(&self) -> Vec<Constraint> {
        let mut out = Vec::new();
        let mut offset = 0;
        for ch in &self.channels {
            for k in 0..ch.len() {
                if ch.upper[k].is_finite() {
                    out.push(Constraint {
                        row: Row::Bound(offset + k),
                        sign: 1.0,
                        rhs: ch.upper[k],
                    });
                }
                if ch.lower[k].is_finite() {
                    out.push(Constraint {
                        row: Row::Bound(offset + k),
                        sign: -1.0,
                        rhs: -ch.lower[k],
                    });
                }
            }
            for k in 0..ch.len().saturating_sub(1) {
                if ch.diff_upper[k].is_finite() {
                    out.push(Constraint {
                        row: Row::Diff(offset + k),
                        sign: 1.0,
                        rhs: ch.diff_upper[k],
                    });
                }
                if ch.diff_lower[k].is_finite() {
                    out.push(Constraint {
                        row: Row::Diff(offset + k),
                        sign: -1.0,
                        rhs: -ch.diff_lower[k],
                    });
                }
            }
            offset += ch.len();
        }
        out
    }

    fn hessian_apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.factor.tr_mul(&(&self.factor * x)) + x * self.ridge
    }

    fn linear_term(&self) -> DVector<f64> {
        self.factor.tr_mul(&self.offset)
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        let r = &self.offset + &self.factor * x;
        0.5 * r.norm_squared() + 0.5 * self.ridge * x.norm_squared()
    }

    /// KKT residuals of `(x, z)` against the true slacks.
    pub fn kkt(&self, x: &DVector<f64>, z: &[f64]) -> KktResidual {
        let cons = self.constraints();
        let mut grad = self.hessian_apply(x) + self.linear_term();
        let mut res = KktResidual::default();
        for (c, &zi) in cons.iter().zip(z) {
            c.scatter(zi, &mut grad);
            let slack = c.rhs - c.eval(x);
            res.primal = res.primal.max(-slack);
            res.complementarity = res.complementarity.max((zi * slack).abs());
            res.dual = res.dual.max(-zi);
        }
        res.stationarity = grad.amax();
        res
    }

    /// Unconstrained minimizer `-F^T (rho I + F F^T)^{-1} g`.
    fn unconstrained(&self) -> Result<DVector<f64>> {
        let m = self.factor.nrows();
        if m == 0 {
            return Ok(DVector::zeros(self.dim()));
        }
        let mut gram = &self.factor * self.factor.transpose();
        for k in 0..m {
            gram[(k, k)] += self.ridge;
        }
        let chol =
            Cholesky::new(gram).ok_or_else(|| Error::Numerical("Gram matrix not SPD".into()))?;
        Ok(-self.factor.tr_mul(&chol.solve(&self.offset)))
    }

    pub fn solve(&self, settings: &QpSettings) -> Result<QpSolution> {
        self.validate()?;
        let cons = self.constraints();
        let n = self.dim();

        let free = self.unconstrained()?;
        if cons.iter().all(|c| c.eval(&free) <= c.rhs) {
            let z = vec![0.0; cons.len()];
            let kkt = self.kkt(&free, &z);
            return Ok(QpSolution {
                x: free,
                multipliers: z,
                kkt,
                iterations: 0,
            });
        }

        let mc = cons.len();
        let q = self.linear_term();
        let mut x = DVector::zeros(n);
        let mut s: Vec<f64> = cons.iter().map(|c| (c.rhs - c.eval(&x)).max(1.0)).collect();
        let mut z = vec![1.0; mc];
        let mut iterations = 0;
        let mut best: Option<(f64, DVector<f64>, Vec<f64>)> = None;

        let a_apply = |v: &DVector<f64>| -> Vec<f64> { cons.iter().map(|c| c.eval(v)).collect() };
        let at_apply = |w: &[f64]| -> DVector<f64> {
            let mut out = DVector::zeros(n);
            for (c, &wi) in cons.iter().zip(w) {
                c.scatter(wi, &mut out);
            }
            out
        };

        for it in 0..settings.max_iters {
            iterations = it + 1;
            let ax = a_apply(&x);
            let rd = self.hessian_apply(&x) + &q + at_apply(&z);
            let rp: Vec<f64> = (0..mc).map(|i| ax[i] + s[i] - cons[i].rhs).collect();
            let mu = s.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() / mc as f64;
            let rp_norm = rp.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let true_kkt = self.kkt(&x, &z).max();
            if !true_kkt.is_finite() || !mu.is_finite() {
                break;
            }
            if best.as_ref().is_none_or(|b| true_kkt < b.0) {
                best = Some((true_kkt, x.clone(), z.clone()));
            }
            if true_kkt <= settings.tol
                || (rd.amax() <= settings.tol
                    && rp_norm <= settings.tol
                    && mu <= settings.tol * 1e-2)
            {
                break;
            }

            let mut base = vec![self.ridge; n];
            let mut links = vec![0.0; n.saturating_sub(1)];
            for (i, c) in cons.iter().enumerate() {
                let d = z[i] / s[i];
                match c.row {
                    Row::Bound(k) => base[k] += d,
                    Row::Diff(k) => links[k] += d,
                }
            }
            let sys = NewtonSystem::new(&self.factor, &base, &links)?;

            let direction = |rc: &[f64]| -> (DVector<f64>, Vec<f64>, Vec<f64>) {
                let tmp: Vec<f64> = (0..mc).map(|i| (-rc[i] + z[i] * rp[i]) / s[i]).collect();
                let rhs = -&rd - at_apply(&tmp);
                let dx = sys.solve(&rhs);
                let adx = a_apply(&dx);
                let ds: Vec<f64> = (0..mc).map(|i| -rp[i] - adx[i]).collect();
                let dz: Vec<f64> = (0..mc).map(|i| (-rc[i] - z[i] * ds[i]) / s[i]).collect();
                (dx, ds, dz)
            };
            let max_step = |ds: &[f64], dz: &[f64]| -> f64 {
                let mut alpha: f64 = 1.0;
                for i in 0..mc {
                    if ds[i] < 0.0 {
                        alpha = alpha.min(-s[i] / ds[i]);
                    }
                    if dz[i] < 0.0 {
                        alpha = alpha.min(-z[i] / dz[i]);
                    }
                }
                alpha
            };

            let rc_aff: Vec<f64> = (0..mc).map(|i| s[i] * z[i]).collect();
            let (_, ds_a, dz_a) = direction(&rc_aff);
            let alpha_aff = max_step(&ds_a, &dz_a);
            let mu_aff = (0..mc)
                .map(|i| (s[i] + alpha_aff * ds_a[i]) * (z[i] + alpha_aff * dz_a[i]))
                .sum::<f64>()
                / mc as f64;
            let sigma = (mu_aff / mu).powi(3);

            let rc: Vec<f64> = (0..mc)
                .map(|i| s[i] * z[i] + ds_a[i] * dz_a[i] - sigma * mu)
                .collect();
            let (dx, ds, dz) = direction(&rc);
            let alpha = (0.99 * max_step(&ds, &dz)).min(1.0);
            x += &dx * alpha;
            for i in 0..mc {
                s[i] = (s[i] + alpha * ds[i]).max(f64::MIN_POSITIVE);
                z[i] = (z[i] + alpha * dz[i]).max(f64::MIN_POSITIVE);
            }
        }

        let kkt_last = self.kkt(&x, &z);
        if let Some((value, bx, bz)) = best {
            if !(kkt_last.max() <= value) {
                x = bx;
                z = bz;
            }
        }
        let kkt = self.kkt(&x, &z);
        Ok(QpSolution {
            x,
            multipliers: z,
            kkt,
            iterations,
        })
    }
}
