//! Iterative eigensolvers: inverse power method, proximal power method,
//! balanced inverse iteration and the geometric descent scheme.

mod balanced;
mod geometric;
mod ipm;
mod ppm;

pub use balanced::{operator_partial_quotients, partial_rayleigh_quotients, run_balanced_ipm};
pub use geometric::{geometric_target, run_geometric};
pub use ipm::run_ipm;
pub use ppm::{recovered_eigenvalue, run_ppm};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::FunctionalPair;
use crate::inner::NewtonSettings;
use crate::metrics::{self, IterationRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverTag {
    Ipm,
    Ppm,
    Balanced,
    Geometric,
}

impl SolverTag {
    pub fn name(self) -> &'static str {
        match self {
            SolverTag::Ipm => "ipm",
            SolverTag::Ppm => "ppm",
            SolverTag::Balanced => "balanced",
            SolverTag::Geometric => "geometric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIter,
    ResidualTol,
    Stalled,
}

/// Solver-specific quantities of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StepDetail {
    Ipm {
        /// `|u^{k+1/2}|_H^{1-p}`.
        lambda_inverse: f64,
    },
    Ppm {
        lambda_tau: f64,
        recovered_lambda: f64,
        /// Dual quotient of the step viewed as an inverse iteration; always below 1.
        dual_rq_tau: f64,
    },
    Balanced {
        s: f64,
        phi: f64,
        /// Set when no bracket was found and `s = 1` was used.
        flagged: bool,
    },
    Geometric {
        tau: f64,
        /// `F` at the accepted new iterate.
        target: f64,
        halvings: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub k: usize,
    /// Whether every inner solve of the step reached its tolerance.
    pub inner_converged: bool,
    /// Largest final inner residual of the step.
    pub inner_residual: f64,
    pub detail: StepDetail,
}

/// How the balanced iteration measures the two signed parts of an iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartialQuotient {
    /// `J(u±) / H(u±)` on the clipped fields.
    #[default]
    Clipped,
    /// `±⟨∂J(u), u±⟩ / (p H(u±))`, balanced exactly at eigenvectors.
    Operator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BalanceSettings {
    /// Required `|φ(s)|`.
    pub tol: f64,
    /// Bracket expansion searches `s ∈ {2^-m, ..., 2^m}` up to this `m`.
    pub max_expansions: usize,
    pub max_root_iter: usize,
    pub quotient: PartialQuotient,
}

impl Default for BalanceSettings {
    fn default() -> Self {
        Self { tol: 1e-6, max_expansions: 30, max_root_iter: 100, quotient: PartialQuotient::Clipped }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometricSettings {
    pub tau0: f64,
    pub max_halvings: usize,
    /// Required decrease of `F` for a step to be accepted.
    pub min_decrease: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub minres_tol: f64,
    /// Factor applied to the accepted step size before the next line search (1 keeps it).
    pub step_growth: f64,
    /// Let an unconverged Newton iterate compete in the line search.
    pub accept_unconverged: bool,
}

impl Default for GeometricSettings {
    fn default() -> Self {
        Self { tau0: 1.0, max_halvings: 40, min_decrease: 1e-14, newton_tol: 1e-10, newton_max_iter: 50, minres_tol: 1e-12, step_growth: 1.0, accept_unconverged: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EigenSettings {
    pub iters: usize,
    /// Optional early stop once the eigen-residual drops below this value.
    pub residual_tol: Option<f64>,
    /// Final eigen-residual below which a trace counts as converged.
    pub converged_tol: f64,
    pub newton: NewtonSettings,
    pub balance: BalanceSettings,
    pub geometric: GeometricSettings,
    /// Keep a copy of every iterate whose index is a multiple of this (0 keeps none).
    pub snapshot_every: usize,
}

impl Default for EigenSettings {
    fn default() -> Self {
        Self {
            iters: 30,
            residual_tol: None,
            converged_tol: 1e-6,
            newton: NewtonSettings::default(),
            balance: BalanceSettings::default(),
            geometric: GeometricSettings::default(),
            snapshot_every: 0,
        }
    }
}

impl EigenSettings {
    pub fn with_iters(iters: usize) -> Self {
        Self { iters, ..Self::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenTrace {
    pub records: Vec<IterationRecord>,
    pub steps: Vec<StepDiagnostics>,
    /// Last iterate, normalized to `|u|_H = 1`.
    pub final_u: Vec<f64>,
    pub final_lambda: f64,
    pub final_residual: f64,
    pub solver: SolverTag,
    pub converged: bool,
    pub stop_reason: StopReason,
    /// `(k, u^k)` for the iterates selected by `snapshot_every`.
    #[serde(skip)]
    pub snapshots: Vec<(usize, Vec<f64>)>,
}

pub(crate) fn normalized<P: FunctionalPair + ?Sized>(pair: &P, u: &[f64]) -> Result<Vec<f64>> {
    let mut v = u.to_vec();
    pair.constrain(&mut v);
    let n = pair.norm(&v);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Domain(format!("cannot normalize a vector of norm {n}")));
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(v)
}

/// Primal-side diagnostics shared by every solver, with `ζ = ∂J(u)` and `v = u`.
pub(crate) struct PrimalMetrics {
    pub rq: f64,
    pub cosim: f64,
    pub gap: f64,
    pub residual: f64,
}

pub(crate) fn primal_metrics<P: FunctionalPair + ?Sized>(pair: &P, u: &[f64]) -> Result<PrimalMetrics> {
    let zeta = pair.subgradient(u);
    Ok(PrimalMetrics {
        rq: metrics::rayleigh_quotient(pair, u)?,
        cosim: metrics::cosine_similarity(pair, u, &zeta)?,
        gap: metrics::duality_gap(pair, u, &zeta, u)?,
        residual: metrics::eigen_residual(pair, u)?,
    })
}

pub(crate) struct TraceBuilder {
    start: Instant,
    solver: SolverTag,
    records: Vec<IterationRecord>,
    steps: Vec<StepDiagnostics>,
    snapshot_every: usize,
    snapshots: Vec<(usize, Vec<f64>)>,
}

impl TraceBuilder {
    pub fn new(solver: SolverTag, snapshot_every: usize) -> Self {
        Self { start: Instant::now(), solver, records: Vec::new(), steps: Vec::new(), snapshot_every, snapshots: Vec::new() }
    }

    pub fn record(&mut self, k: usize, u: &[f64], m: &PrimalMetrics, dual_rq: Option<f64>, inner_iters: usize) {
        if self.snapshot_every > 0 && k % self.snapshot_every == 0 {
            self.snapshots.push((k, u.to_vec()));
        }
        self.records.push(IterationRecord {
            k,
            rq: m.rq,
            dual_rq,
            cosim: m.cosim,
            gap: m.gap,
            residual: m.residual,
            inner_iters,
            wall_time: self.start.elapsed().as_secs_f64(),
        });
    }

    pub fn step(&mut self, step: StepDiagnostics) {
        if !step.inner_converged {
            log::warn!("{} step {}: inner solve stopped at residual {:e}", self.solver.name(), step.k, step.inner_residual);
        }
        self.steps.push(step);
    }

    pub fn finish<P: FunctionalPair + ?Sized>(
        self,
        pair: &P,
        final_u: Vec<f64>,
        stop_reason: StopReason,
        settings: &EigenSettings,
    ) -> Result<EigenTrace> {
        let final_lambda = metrics::rayleigh_quotient(pair, &final_u)?;
        let final_residual = metrics::eigen_residual(pair, &final_u)?;
        Ok(EigenTrace {
            records: self.records,
            steps: self.steps,
            final_u,
            final_lambda,
            final_residual,
            solver: self.solver,
            converged: stop_reason == StopReason::ResidualTol || final_residual <= settings.converged_tol,
            stop_reason,
            snapshots: self.snapshots,
        })
    }
}

pub(crate) fn reached_tol(settings: &EigenSettings, residual: f64) -> bool {
    settings.residual_tol.is_some_and(|t| residual <= t)
}

pub(crate) fn positive_part(u: &[f64]) -> Vec<f64> {
    u.iter().map(|&x| x.max(0.0)).collect()
}

pub(crate) fn negative_part(u: &[f64]) -> Vec<f64> {
    u.iter().map(|&x| (-x).max(0.0)).collect()
}
