//! Experiment configuration: a JSON document naming the problem, the starting
//! field, the solver and where to write results.
//!
//! ```json
//! {
//!   "problem": { "plaplace": { "shape": "lshape", "h": 0.025, "radius": { "fixed": 0.2 }, "p": 3 } },
//!   "initial": "ex1",
//!   "solver": { "method": "ipm", "iters": 30 },
//!   "output": { "dir": "out/ex1", "snapshot_every": 10 }
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eigen::{BalanceSettings, EigenSettings, GeometricSettings, SolverTag};
use crate::error::{Error, Result};
use crate::grid::{mean_value_constant, Expr, Shape};
use crate::inner::NewtonSettings;

/// Exponent of the consistency rule `r^{1.6} = h`.
pub const CONSISTENCY_EXPONENT: f64 = 1.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub initial: Option<InitialConfig>,
    pub solver: SolverConfig,
    #[serde(default)]
    pub newton: NewtonSettings,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemConfig {
    /// Rows of a symmetric positive definite matrix.
    Spd(Vec<Vec<f64>>),
    Plaplace(GridProblem),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridProblem {
    pub shape: Shape,
    #[serde(default = "default_side")]
    pub side: f64,
    pub h: f64,
    pub radius: RadiusRule,
    pub p: f64,
    /// Replaces the default mean-value constant `D_{2,p}`.
    #[serde(default)]
    pub mean_value_constant: Option<f64>,
    /// Relative Jacobian regularization.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_side() -> f64 {
    2.0
}

fn default_epsilon() -> f64 {
    crate::plaplace::DEFAULT_EPSILON
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusRule {
    Fixed(f64),
    /// `r = h^e`.
    HPow(f64),
    /// `r = h^{1/1.6}`.
    Consistency,
}

impl RadiusRule {
    pub fn resolve(self, h: f64) -> f64 {
        match self {
            RadiusRule::Fixed(r) => r,
            RadiusRule::HPow(e) => h.powf(e),
            RadiusRule::Consistency => h.powf(1.0 / CONSISTENCY_EXPONENT),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialConfig {
    Ex1,
    Ex2,
    /// Formula in `x1`, `x2`.
    Expression(String),
    /// Grid CSV as written by the runner, relative to the config file.
    File(PathBuf),
    /// Explicit start vector for matrix problems.
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub method: SolverTag,
    pub iters: usize,
    /// `τ̃` of the proximal method; the proximal step uses `τ = τ̃^{p-1}`.
    #[serde(default)]
    pub tau_tilde: Option<f64>,
    #[serde(default)]
    pub residual_tol: Option<f64>,
    #[serde(default = "default_converged_tol")]
    pub converged_tol: f64,
    #[serde(default)]
    pub balance: BalanceSettings,
    #[serde(default)]
    pub geometric: GeometricSettings,
}

fn default_converged_tol() -> f64 {
    EigenSettings::default().converged_tol
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Write `<solver>_iter<k>.csv` for every `k` divisible by this (0 disables snapshots).
    #[serde(default)]
    pub snapshot_every: usize,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir(), snapshot_every: 0 }
    }
}

/// Grid parameters after applying the radius rule and the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedGrid {
    pub shape: Shape,
    pub side: f64,
    pub h: f64,
    pub r: f64,
    pub p: f64,
    pub q: f64,
    pub mean_value_constant: f64,
    pub epsilon: f64,
}

/// Failed semantic check, located by the JSON key it concerns.
struct Issue {
    key: &'static str,
    message: String,
}

fn issue(key: &'static str, message: impl Into<String>) -> Issue {
    Issue { key, message: message.into() }
}

impl ExperimentConfig {
    /// Parses and validates a config file; a `run.json` written by the runner is accepted too.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: cannot read: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        if let Some(InitialConfig::File(f)) = &mut cfg.initial {
            if f.is_relative() {
                if let Some(dir) = path.parent() {
                    *f = dir.join(&*f);
                }
            }
        }
        Ok(cfg)
    }

    /// Parses and validates `text`; `origin` prefixes diagnostics as `origin:line:column`.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let syntax = |e: serde_json::Error| Error::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column()));
        let value: serde_json::Value = serde_json::from_str(text).map_err(syntax)?;
        let cfg: Self = match value.get("config") {
            Some(inner) if value.get("resolved").is_some() => {
                serde_json::from_value(inner.clone()).map_err(|e| Error::Config(format!("{origin}: {e}")))?
            }
            _ => serde_json::from_str(text).map_err(syntax)?,
        };
        cfg.check().map_err(|i| {
            let line = locate(text, i.key).map(|l| format!("{l}:")).unwrap_or_default();
            Error::Config(format!("{origin}:{line} {}: {}", i.key, i.message))
        })?;
        Ok(cfg)
    }

    fn check(&self) -> std::result::Result<(), Issue> {
        let s = &self.solver;
        if s.iters == 0 {
            return Err(issue("iters", "at least one iteration is required"));
        }
        if s.method == SolverTag::Ppm {
            match s.tau_tilde {
                Some(t) if t > 0.0 && t.is_finite() => {}
                Some(t) => return Err(issue("tau_tilde", format!("step size must be positive, got {t}"))),
                None => return Err(issue("method", "the proximal method needs tau_tilde")),
            }
        }
        if let Some(t) = s.residual_tol {
            if !(t > 0.0) {
                return Err(issue("residual_tol", format!("must be positive, got {t}")));
            }
        }
        if !(s.balance.tol > 0.0) || s.balance.max_root_iter == 0 {
            return Err(issue("balance", "balance settings need tol > 0 and max_root_iter >= 1"));
        }
        let g = &s.geometric;
        if !(g.tau0 > 0.0) || !(g.step_growth >= 1.0) || !(g.newton_tol > 0.0) {
            return Err(issue("geometric", "geometric settings need tau0 > 0, step_growth >= 1 and newton_tol > 0"));
        }
        self.newton.validate().map_err(|e| issue("newton", e.to_string()))?;
        match &self.problem {
            ProblemConfig::Spd(rows) => {
                let n = rows.len();
                if n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err(issue("spd", "matrix must be square and non-empty"));
                }
                if s.method == SolverTag::Balanced {
                    return Err(issue("method", "the balanced iteration is defined on grid problems only"));
                }
                match &self.initial {
                    Some(InitialConfig::Vector(v)) if v.len() == n => {}
                    Some(InitialConfig::Vector(v)) => {
                        return Err(issue("vector", format!("start vector has length {}, matrix has {n} rows", v.len())))
                    }
                    Some(_) => return Err(issue("initial", "matrix problems take a start vector")),
                    None => {}
                }
            }
            ProblemConfig::Plaplace(g) => {
                if !(g.p > 1.0) || !g.p.is_finite() {
                    return Err(issue("p", format!("p must be a finite number above 1, got {}", g.p)));
                }
                if !(g.h > 0.0) || !(g.side > 0.0) {
                    return Err(issue("h", "h and side must be positive"));
                }
                let r = g.radius.resolve(g.h);
                if !(r >= g.h * (1.0 - 1e-12)) {
                    return Err(issue("radius", format!("resolved radius {r} is smaller than h = {}", g.h)));
                }
                if let Some(d) = g.mean_value_constant {
                    if !(d > 0.0) {
                        return Err(issue("mean_value_constant", format!("must be positive, got {d}")));
                    }
                }
                if !(g.epsilon >= 0.0) {
                    return Err(issue("epsilon", format!("must be nonnegative, got {}", g.epsilon)));
                }
                match &self.initial {
                    Some(InitialConfig::Vector(_)) => {
                        return Err(issue("vector", "grid problems take ex1, ex2, an expression or a file"))
                    }
                    Some(InitialConfig::Expression(e)) => {
                        Expr::parse(e).map_err(|err| issue("expression", err.to_string()))?;
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Solver settings with the Newton options and snapshot interval folded in.
    pub fn eigen_settings(&self) -> EigenSettings {
        let s = &self.solver;
        EigenSettings {
            iters: s.iters,
            residual_tol: s.residual_tol,
            converged_tol: s.converged_tol,
            newton: self.newton.clone(),
            balance: s.balance,
            geometric: s.geometric,
            snapshot_every: self.output.snapshot_every,
        }
    }

    pub fn resolved_grid(&self) -> Option<ResolvedGrid> {
        match &self.problem {
            ProblemConfig::Plaplace(g) => Some(ResolvedGrid {
                shape: g.shape,
                side: g.side,
                h: g.h,
                r: g.radius.resolve(g.h),
                p: g.p,
                q: g.p / (g.p - 1.0),
                mean_value_constant: g.mean_value_constant.unwrap_or_else(|| mean_value_constant(g.p)),
                epsilon: g.epsilon,
            }),
            ProblemConfig::Spd(_) => None,
        }
    }

    /// Homogeneity exponent of the configured problem.
    pub fn p(&self) -> f64 {
        match &self.problem {
            ProblemConfig::Plaplace(g) => g.p,
            ProblemConfig::Spd(_) => 2.0,
        }
    }
}

/// 1-based line of the first occurrence of `"key"`.
fn locate(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}
