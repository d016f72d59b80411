// Copyright 2026 The dicke-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Flat `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Keys are the field names of [`RunConfig`]. Only `n_particles` and
//! `target_kind` are required. When the moment orders are omitted they
//! default to 14 on the active axis if only one gain is uncertain and to 7
//! per axis if both are; an axis with zero spread is always order 0.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::dynamics::{ControlPulse, SpinNetwork};
use crate::ensemble::ParameterBox;
use crate::error::{Error, Result};
use crate::legendre::Convention;
use crate::optimizer::{DesignProblem, QpSettings, RateBound, SignalRestrictions, SolverSettings};
use crate::target::{build_target, TargetKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMode {
    /// `|du/dt| <= rate_value / t`, unconstrained on the first step.
    LiteralOverT,
    /// `|du/dt| <= rate_value`.
    Constant,
}

impl RateMode {
    fn as_str(self) -> &'static str {
        match self {
            RateMode::LiteralOverT => "literal_over_t",
            RateMode::Constant => "constant",
        }
    }
}

impl FromStr for RateMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "literal_over_t" => Ok(RateMode::LiteralOverT),
            "constant" => Ok(RateMode::Constant),
            other => Err(format!(
                "expected literal_over_t or constant, got {other:?}"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_particles: usize,
    pub chi: f64,
    pub target_kind: TargetKind,
    pub delta_xi: f64,
    pub delta_zeta: f64,
    pub horizon: f64,
    pub dt: f64,
    pub moment_order_xi: usize,
    pub moment_order_zeta: usize,
    pub moment_convention: Convention,
    pub u_init_x: f64,
    pub u_init_z: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub rate_mode: RateMode,
    pub rate_value: f64,
    pub eval_grid_nx: usize,
    pub eval_grid_nz: usize,
    pub max_outer_iters: usize,
    pub objective_tol: f64,
    pub lambda_init: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub qp_max_iters: usize,
    pub output_dir: PathBuf,
}

const KEYS: &[&str] = &[
    "n_particles",
    "chi",
    "target_kind",
    "delta_xi",
    "delta_zeta",
    "horizon",
    "dt",
    "moment_order_xi",
    "moment_order_zeta",
    "moment_convention",
    "u_init_x",
    "u_init_z",
    "u_min",
    "u_max",
    "rate_mode",
    "rate_value",
    "eval_grid_nx",
    "eval_grid_nz",
    "max_outer_iters",
    "objective_tol",
    "lambda_init",
    "lambda_up",
    "lambda_down",
    "qp_max_iters",
    "output_dir",
];

struct Entries {
    map: BTreeMap<&'static str, (usize, String)>,
}

impl Entries {
    fn take<T: FromStr>(&self, key: &'static str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(default),
            Some((line, raw)) => parse_value(key, *line, raw),
        }
    }

    fn required<T: FromStr>(&self, key: &'static str, last_line: usize) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.map.get(key) {
            None => Err(Error::Config {
                line: last_line,
                msg: format!("missing required key `{key}`"),
            }),
            Some((line, raw)) => parse_value(key, *line, raw),
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.map.get(key).map(|e| e.0).unwrap_or(0)
    }
}

fn parse_value<T: FromStr>(key: &str, line: usize, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    if raw.is_empty() {
        return Err(Error::Config {
            line,
            msg: format!("key `{key}` has an empty value"),
        });
    }
    raw.parse::<T>().map_err(|e| Error::Config {
        line,
        msg: format!("bad value {raw:?} for `{key}`: {e}"),
    })
}

fn parse_convention(s: &str) -> std::result::Result<Convention, String> {
    match s {
        "unnormalized" => Ok(Convention::Unnormalized),
        "orthonormal" => Ok(Convention::Orthonormal),
        other => Err(format!(
            "expected unnormalized or orthonormal, got {other:?}"
        )),
    }
}

fn convention_name(c: Convention) -> &'static str {
    match c {
        Convention::Unnormalized => "unnormalized",
        Convention::Orthonormal => "orthonormal",
    }
}

struct ConventionValue(Convention);

impl FromStr for ConventionValue {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        parse_convention(s).map(ConventionValue)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut last_line = 0;
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            last_line = line;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                msg: format!("expected `key = value`, got {content:?}"),
            })?;
            let key = key.trim();
            let Some(&known) = KEYS.iter().find(|k| **k == key) else {
                return Err(Error::Config {
                    line,
                    msg: format!("unknown key `{key}`"),
                });
            };
            if let Some((first, _)) = map.insert(known, (line, value.trim().to_string())) {
                return Err(Error::Config {
                    line,
                    msg: format!("duplicate key `{key}` (first set on line {first})"),
                });
            }
        }
        let e = Entries { map };

        let delta_xi = e.take("delta_xi", 0.0)?;
        let delta_zeta = e.take("delta_zeta", 0.0)?;
        let both = delta_xi > 0.0 && delta_zeta > 0.0;
        let default_order = if both { 7 } else { 14 };
        let defaults = SolverSettings::default();

        let cfg = RunConfig {
            n_particles: e.required("n_particles", last_line)?,
            chi: e.take("chi", 1.0)?,
            target_kind: e.required("target_kind", last_line)?,
            delta_xi,
            delta_zeta,
            horizon: e.take("horizon", 9.0)?,
            dt: e.take("dt", 0.01)?,
            moment_order_xi: e.take(
                "moment_order_xi",
                if delta_xi > 0.0 { default_order } else { 0 },
            )?,
            moment_order_zeta: e.take(
                "moment_order_zeta",
                if delta_zeta > 0.0 { default_order } else { 0 },
            )?,
            moment_convention: e
                .take(
                    "moment_convention",
                    ConventionValue(Convention::Unnormalized),
                )?
                .0,
            u_init_x: e.take("u_init_x", 3.0)?,
            u_init_z: e.take("u_init_z", 3.0)?,
            u_min: e.take("u_min", 0.0)?,
            u_max: e.take("u_max", 40.0)?,
            rate_mode: e.take("rate_mode", RateMode::LiteralOverT)?,
            rate_value: e.take("rate_value", 1e4)?,
            eval_grid_nx: e.take("eval_grid_nx", 21)?,
            eval_grid_nz: e.take("eval_grid_nz", 21)?,
            max_outer_iters: e.take("max_outer_iters", defaults.max_outer_iters)?,
            objective_tol: e.take("objective_tol", defaults.objective_tol)?,
            lambda_init: e.take("lambda_init", defaults.lambda_init)?,
            lambda_up: e.take("lambda_up", defaults.lambda_up)?,
            lambda_down: e.take("lambda_down", defaults.lambda_down)?,
            qp_max_iters: e.take("qp_max_iters", defaults.qp.max_iters)?,
            output_dir: e.take("output_dir", PathBuf::from("out"))?,
        };
        cfg.validate_with(&e)?;
        Ok(cfg)
    }

    /// Checks cross-field consistency; errors cite the line of the first
    /// offending key (line 0 when the offending value is a default).
    fn validate_with(&self, e: &Entries) -> Result<()> {
        let fail = |key: &str, msg: String| {
            Err(Error::Config {
                line: e.line_of(key),
                msg,
            })
        };
        if self.n_particles < 2 {
            return fail(
                "n_particles",
                format!("n_particles must be at least 2, got {}", self.n_particles),
            );
        }
        if !(self.chi.is_finite()) {
            return fail("chi", "chi must be finite".into());
        }
        for (key, v) in [("delta_xi", self.delta_xi), ("delta_zeta", self.delta_zeta)] {
            if !(0.0..1.0).contains(&v) {
                return fail(key, format!("{key} must lie in [0, 1), got {v}"));
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail("dt", format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return fail(
                "horizon",
                format!("horizon must be positive, got {}", self.horizon),
            );
        }
        let ratio = self.horizon / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return fail(
                "dt",
                format!(
                    "dt = {} does not divide horizon = {}",
                    self.dt, self.horizon
                ),
            );
        }
        if !(self.u_min <= self.u_max) {
            return fail(
                "u_min",
                format!("u_min = {} exceeds u_max = {}", self.u_min, self.u_max),
            );
        }
        for (key, v) in [("u_init_x", self.u_init_x), ("u_init_z", self.u_init_z)] {
            if !(self.u_min <= v && v <= self.u_max) {
                return fail(
                    key,
                    format!(
                        "{key} = {v} lies outside [u_min, u_max] = [{}, {}]",
                        self.u_min, self.u_max
                    ),
                );
            }
        }
        if !(self.rate_value >= 0.0 && self.rate_value.is_finite()) {
            return fail(
                "rate_value",
                format!("rate_value must be non-negative, got {}", self.rate_value),
            );
        }
        if self.eval_grid_nx == 0 || self.eval_grid_nz == 0 {
            return fail(
                "eval_grid_nx",
                "evaluation grid needs at least one node per axis".into(),
            );
        }
        if !(self.objective_tol >= 0.0) {
            return fail("objective_tol", "objective_tol must be non-negative".into());
        }
        if !(self.lambda_init > 0.0) {
            return fail("lambda_init", "lambda_init must be positive".into());
        }
        if !(self.lambda_up > 1.0) {
            return fail("lambda_up", "lambda_up must exceed 1".into());
        }
        if !(self.lambda_down > 1.0) {
            return fail("lambda_down", "lambda_down must exceed 1".into());
        }
        Ok(())
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Serializes every field; floats use the shortest round-trip form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("n_particles", self.n_particles.to_string());
        put("chi", format!("{:?}", self.chi));
        put("target_kind", self.target_kind.to_string());
        put("delta_xi", format!("{:?}", self.delta_xi));
        put("delta_zeta", format!("{:?}", self.delta_zeta));
        put("horizon", format!("{:?}", self.horizon));
        put("dt", format!("{:?}", self.dt));
        put("moment_order_xi", self.moment_order_xi.to_string());
        put("moment_order_zeta", self.moment_order_zeta.to_string());
        put(
            "moment_convention",
            convention_name(self.moment_convention).into(),
        );
        put("u_init_x", format!("{:?}", self.u_init_x));
        put("u_init_z", format!("{:?}", self.u_init_z));
        put("u_min", format!("{:?}", self.u_min));
        put("u_max", format!("{:?}", self.u_max));
        put("rate_mode", self.rate_mode.as_str().into());
        put("rate_value", format!("{:?}", self.rate_value));
        put("eval_grid_nx", self.eval_grid_nx.to_string());
        put("eval_grid_nz", self.eval_grid_nz.to_string());
        put("max_outer_iters", self.max_outer_iters.to_string());
        put("objective_tol", format!("{:?}", self.objective_tol));
        put("lambda_init", format!("{:?}", self.lambda_init));
        put("lambda_up", format!("{:?}", self.lambda_up));
        put("lambda_down", format!("{:?}", self.lambda_down));
        put("qp_max_iters", self.qp_max_iters.to_string());
        put("output_dir", self.output_dir.display().to_string());
        s
    }

    /// Number of piecewise-constant control intervals.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn network(&self) -> Result<SpinNetwork> {
        SpinNetwork::new(self.n_particles, self.chi)
    }

    pub fn parameter_box(&self) -> Result<ParameterBox> {
        ParameterBox::new(self.delta_xi, self.delta_zeta)
    }

    pub fn rate_bound(&self) -> RateBound {
        match self.rate_mode {
            RateMode::LiteralOverT => RateBound::OverTime(self.rate_value),
            RateMode::Constant => RateBound::Constant(self.rate_value),
        }
    }

    pub fn restrictions(&self) -> Result<SignalRestrictions> {
        SignalRestrictions::symmetric(self.u_min, self.u_max, self.rate_bound())
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            max_outer_iters: self.max_outer_iters,
            objective_tol: self.objective_tol,
            lambda_init: self.lambda_init,
            lambda_up: self.lambda_up,
            lambda_down: self.lambda_down,
            qp: QpSettings {
                max_iters: self.qp_max_iters,
                ..QpSettings::default()
            },
            ..SolverSettings::default()
        }
    }

    pub fn initial_pulse(&self) -> Result<ControlPulse> {
        ControlPulse::constant(self.steps(), self.dt, self.u_init_x, self.u_init_z)
    }

    pub fn design_problem(&self) -> Result<DesignProblem> {
        let net = self.network()?;
        let bx = self.parameter_box()?;
        let (k_xi, k_zeta) = bx.effective_orders(self.moment_order_xi, self.moment_order_zeta);
        Ok(DesignProblem {
            target: build_target(self.target_kind, &net),
            net,
            bx,
            restrictions: self.restrictions()?,
            settings: self.solver_settings(),
            k_xi,
            k_zeta,
            convention: self.moment_convention,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const W_SINGLE: &str = "\
# single-parameter W design
n_particles = 5
target_kind = W
delta_xi = 0.2
delta_zeta = 0
horizon = 9
dt = 0.01
u_init_x = 3
u_init_z = 3
";

    fn line_of(err: Error) -> (usize, String) {
        match err {
            Error::Config { line, msg } => (line, msg),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn defaults_are_filled() {
        let c = RunConfig::parse("n_particles = 5\ntarget_kind = GHZ\n").unwrap();
        assert_eq!(c.horizon, 9.0);
        assert_eq!(c.dt, 0.01);
        assert_eq!(c.u_max, 40.0);
        assert_eq!(c.u_min, 0.0);
        assert_eq!(c.chi, 1.0);
        assert_eq!(c.rate_mode, RateMode::LiteralOverT);
        assert_eq!(c.rate_value, 1e4);
        assert_eq!((c.eval_grid_nx, c.eval_grid_nz), (21, 21));
        assert_eq!(c.steps(), 900);
        assert_eq!((c.moment_order_xi, c.moment_order_zeta), (0, 0));
    }

    #[test]
    fn order_defaults_follow_active_axes() {
        let c = RunConfig::parse(W_SINGLE).unwrap();
        assert_eq!((c.moment_order_xi, c.moment_order_zeta), (14, 0));
        let c = RunConfig::parse("n_particles=5\ntarget_kind=W\ndelta_xi=0.1\ndelta_zeta=0.1\n")
            .unwrap();
        assert_eq!((c.moment_order_xi, c.moment_order_zeta), (7, 7));
    }

    #[test]
    fn round_trip_is_identical() {
        let c = RunConfig::parse(W_SINGLE).unwrap();
        let text = c.to_text();
        let again = RunConfig::parse(&text).unwrap();
        assert_eq!(c, again);
        assert_eq!(text, again.to_text());
    }

    #[test]
    fn empty_target_kind_names_the_key() {
        let (line, msg) =
            line_of(RunConfig::parse("n_particles = 5\ntarget_kind =\n").unwrap_err());
        assert_eq!(line, 2);
        assert!(msg.contains("target_kind"), "{msg}");
    }

    #[test]
    fn missing_required_keys() {
        let (_, msg) = line_of(RunConfig::parse("target_kind = W\n").unwrap_err());
        assert!(msg.contains("n_particles"));
        let (_, msg) = line_of(RunConfig::parse("n_particles = 4\n").unwrap_err());
        assert!(msg.contains("target_kind"));
    }

    #[test]
    fn unknown_key_is_line_anchored() {
        let (line, msg) = line_of(RunConfig::parse("n_particles = 5\n\nfoo = 1\n").unwrap_err());
        assert_eq!(line, 3);
        assert!(msg.contains("foo"));
    }

    #[test]
    fn dt_must_divide_horizon() {
        let (line, msg) =
            line_of(RunConfig::parse("n_particles=5\ntarget_kind=W\ndt = 0.007\n").unwrap_err());
        assert_eq!(line, 3);
        assert!(msg.contains("divide"), "{msg}");
    }

    #[test]
    fn inconsistent_bounds() {
        assert!(RunConfig::parse("n_particles=5\ntarget_kind=W\nu_min=5\nu_max=1\n").is_err());
        let (line, _) =
            line_of(RunConfig::parse("n_particles=5\ntarget_kind=W\nu_init_x=41\n").unwrap_err());
        assert_eq!(line, 3);
    }

    #[test]
    fn duplicate_and_malformed_lines() {
        assert!(RunConfig::parse("n_particles=5\nn_particles=6\ntarget_kind=W\n").is_err());
        assert!(RunConfig::parse("n_particles 5\n").is_err());
        assert!(RunConfig::parse("n_particles=five\ntarget_kind=W\n").is_err());
        assert!(RunConfig::parse("n_particles=5\ntarget_kind=Q\n").is_err());
    }

    #[test]
    fn design_problem_collapses_flat_axes() {
        let mut c = RunConfig::parse(W_SINGLE).unwrap();
        c.moment_order_zeta = 5;
        let p = c.design_problem().unwrap();
        assert_eq!((p.k_xi, p.k_zeta), (14, 0));
    }
}
