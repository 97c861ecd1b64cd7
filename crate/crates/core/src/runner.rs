//! Builds the configured problem, runs the solver and writes the run directory:
//! `metrics.csv`, `final.csv`, `<solver>_iter<k>.csv` snapshots and `run.json`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, InitialConfig, ProblemConfig};
use crate::eigen::{run_balanced_ipm, run_geometric, run_ipm, run_ppm, EigenTrace, SolverTag, StepDetail, StopReason};
use crate::error::{Error, Result};
use crate::grid::{eval_initial_guess, Expr, GridDomain, GridFunction, InitialGuess, Stencil};
use crate::metrics::records_to_csv;
use crate::plaplace::PLaplaceInstance;
use crate::spd::SpdInstance;

pub enum Problem {
    Spd(SpdInstance),
    Grid(PLaplaceInstance),
}

/// A validated config with its instance and starting vector.
pub struct Prepared {
    pub config: ExperimentConfig,
    pub problem: Problem,
    pub u0: Vec<f64>,
}

impl Prepared {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let (problem, u0) = match &config.problem {
            ProblemConfig::Spd(rows) => {
                let inst = SpdInstance::from_rows(rows)?;
                let u0 = match &config.initial {
                    Some(InitialConfig::Vector(v)) => v.clone(),
                    _ => vec![1.0; rows.len()],
                };
                (Problem::Spd(inst), u0)
            }
            ProblemConfig::Plaplace(g) => {
                let resolved = config.resolved_grid().expect("grid problem");
                let domain = Arc::new(GridDomain::new(g.shape, g.side, g.h)?);
                let stencil = Stencil::new(g.h, resolved.r, g.p, g.mean_value_constant)?;
                let inst = PLaplaceInstance::new(domain.clone(), stencil, g.p, g.epsilon)?;
                let u0 = match config.initial.clone().unwrap_or(InitialConfig::Ex1) {
                    InitialConfig::Ex1 => eval_initial_guess(&InitialGuess::Ex1, domain).values,
                    InitialConfig::Ex2 => eval_initial_guess(&InitialGuess::Ex2, domain).values,
                    InitialConfig::Expression(s) => {
                        eval_initial_guess(&InitialGuess::Expression(Expr::parse(&s)?), domain).values
                    }
                    InitialConfig::File(path) => GridFunction::read_csv(domain, &path)
                        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
                        .values,
                    InitialConfig::Vector(_) => unreachable!("rejected by validation"),
                };
                (Problem::Grid(inst), u0)
            }
        };
        Ok(Self { config, problem, u0 })
    }

    /// Every derived parameter of the run, as echoed by `describe` and `run.json`.
    pub fn resolved(&self) -> Value {
        let cfg = &self.config;
        let settings = cfg.eigen_settings();
        let tau = cfg.solver.tau_tilde.filter(|_| cfg.solver.method == SolverTag::Ppm).map(|t| t.powf(cfg.p() - 1.0));
        let problem = match &self.problem {
            Problem::Spd(a) => json!({
                "kind": "spd",
                "dim": a.matrix().nrows(),
                "p": 2.0,
                "q": 2.0,
                "eigenvalues": a.eigenvalues(),
            }),
            Problem::Grid(inst) => {
                let d = &inst.domain;
                json!({
                    "kind": "plaplace",
                    "grid": cfg.resolved_grid(),
                    "nx": d.nx,
                    "ny": d.ny,
                    "unknowns": d.interior_count(),
                    "stencil_size": inst.stencil.len(),
                    "stencil_weight": inst.stencil.weight,
                })
            }
        };
        json!({
            "problem": problem,
            "solver": cfg.solver.method,
            "tau": tau,
            "settings": settings,
            "threads": rayon::current_num_threads(),
        })
    }

    pub fn solve(&self) -> Result<EigenTrace> {
        let s = self.config.eigen_settings();
        let method = self.config.solver.method;
        let tau_tilde = self.config.solver.tau_tilde.unwrap_or(0.0);
        match (&self.problem, method) {
            (Problem::Spd(a), SolverTag::Ipm) => run_ipm(a, &self.u0, &s),
            (Problem::Spd(a), SolverTag::Ppm) => run_ppm(a, &self.u0, tau_tilde, &s),
            (Problem::Spd(a), SolverTag::Geometric) => run_geometric(a, &self.u0, &s),
            (Problem::Spd(_), SolverTag::Balanced) => {
                Err(Error::Config("the balanced iteration is defined on grid problems only".into()))
            }
            (Problem::Grid(g), SolverTag::Ipm) => run_ipm(g, &self.u0, &s),
            (Problem::Grid(g), SolverTag::Ppm) => run_ppm(g, &self.u0, tau_tilde, &s),
            (Problem::Grid(g), SolverTag::Geometric) => run_geometric(g, &self.u0, &s),
            (Problem::Grid(g), SolverTag::Balanced) => run_balanced_ipm(g, &self.u0, &s),
        }
    }

    fn field_csv(&self, u: &[f64]) -> Result<String> {
        Ok(match &self.problem {
            Problem::Grid(g) => GridFunction::new(g.domain.clone(), u.to_vec())?.to_csv(),
            Problem::Spd(_) => u.iter().map(|x| format!("{x:e}\n")).collect(),
        })
    }
}

/// Outcome of a run as recorded in `run.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub solver: SolverTag,
    pub iterations: usize,
    pub final_lambda: f64,
    pub final_residual: f64,
    pub converged: bool,
    pub stop_reason: StopReason,
    /// Steps whose inner solve missed its tolerance.
    pub unconverged_inner_steps: usize,
    /// Balanced steps that fell back to `s = 1`.
    pub flagged_steps: usize,
    pub out_dir: PathBuf,
}

/// JSON echo of the config and its resolved parameters, without running anything.
pub fn describe(config: &ExperimentConfig) -> Result<Value> {
    let prepared = Prepared::new(config.clone())?;
    Ok(json!({ "config": config, "resolved": prepared.resolved() }))
}

/// Runs `config` and writes its output into `out_dir` (created if missing).
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    let prepared = Prepared::new(config.clone())?;
    let trace = prepared.solve()?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("metrics.csv"), records_to_csv(&trace.records))?;
    fs::write(out_dir.join("final.csv"), prepared.field_csv(&trace.final_u)?)?;
    for (k, u) in &trace.snapshots {
        let name = format!("{}_iter{k}.csv", trace.solver.name());
        fs::write(out_dir.join(name), prepared.field_csv(u)?)?;
    }
    let summary = RunSummary {
        solver: trace.solver,
        iterations: trace.records.len(),
        final_lambda: trace.final_lambda,
        final_residual: trace.final_residual,
        converged: trace.converged,
        stop_reason: trace.stop_reason,
        unconverged_inner_steps: trace.steps.iter().filter(|s| !s.inner_converged).count(),
        flagged_steps: trace
            .steps
            .iter()
            .filter(|s| matches!(s.detail, StepDetail::Balanced { flagged: true, .. }))
            .count(),
        out_dir: out_dir.to_path_buf(),
    };
    let mut echoed = config.clone();
    echoed.output.dir = out_dir.to_path_buf();
    let record = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": echoed,
        "resolved": prepared.resolved(),
        "summary": summary,
        "steps": trace.steps,
    });
    fs::write(out_dir.join("run.json"), serde_json::to_string_pretty(&record)?)?;
    log::info!(
        "{}: {} iterations, lambda = {:.12e}, residual = {:e}, stop = {:?}",
        summary.solver.name(),
        summary.iterations,
        summary.final_lambda,
        summary.final_residual,
        summary.stop_reason
    );
    Ok(summary)
}
