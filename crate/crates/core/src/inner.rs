//! Newton solvers for the two nonlinear subproblems on the grid:
//! the p-Poisson problem `-Δ_p^h u = ζ` and the proximal step
//! `|v - u_ref|^{p-2}(v - u_ref) - τ Δ_p^h v = 0`.
//!
//! Each Newton step solves the Jacobian system with Jacobi-preconditioned CG and
//! is accepted only if it lowers the residual max-norm; rejected steps are halved.

use serde::{Deserialize, Serialize};

use crate::functional::FunctionalPair;
use crate::linalg::{pcg, CsrMatrix};
use crate::plaplace::PLaplaceInstance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonSettings {
    /// Absolute tolerance on the residual max-norm.
    pub tol_abs: f64,
    pub max_iter: usize,
    /// Relative tolerance of the inner CG solves.
    pub cg_tol: f64,
    /// CG iteration cap; `None` means ten times the number of unknowns.
    pub cg_max_iter: Option<usize>,
    /// Step reduction factor of the backtracking guard.
    pub damping: f64,
    pub max_halvings: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { tol_abs: 1e-12, max_iter: 500, cg_tol: 1e-10, cg_max_iter: None, damping: 0.5, max_halvings: 30 }
    }
}

impl NewtonSettings {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.tol_abs > 0.0) || self.max_iter == 0 {
            return Err(crate::Error::Config("newton settings need tol_abs > 0 and max_iter >= 1".into()));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(crate::Error::Config(format!("damping must lie in (0, 1), got {}", self.damping)));
        }
        if !(self.cg_tol > 0.0) {
            return Err(crate::Error::Config("cg_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Max-norm of the residual over the unknowns.
    pub final_residual: f64,
    pub converged: bool,
    pub cg_iterations_total: usize,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton on a residual defined over full-length grid fields.
fn damped_newton(
    inst: &PLaplaceInstance,
    start: Vec<f64>,
    residual: impl Fn(&[f64]) -> Vec<f64>,
    jacobian: impl Fn(&[f64]) -> CsrMatrix,
    settings: &NewtonSettings,
) -> (Vec<f64>, SolveReport) {
    let domain = &inst.domain;
    let cg_cap = settings.cg_max_iter.unwrap_or(10 * domain.interior_count().max(1));
    let mut u = start;
    domain.apply_dirichlet(&mut u);
    let mut res = residual(&u);
    let mut res_norm = max_norm(&res);
    let mut report = SolveReport { iterations: 0, final_residual: res_norm, converged: res_norm <= settings.tol_abs, cg_iterations_total: 0 };
    while !report.converged && report.iterations < settings.max_iter {
        let jac = jacobian(&u);
        let rhs: Vec<f64> = domain.gather(&res).iter().map(|r| -r).collect();
        let lin = pcg(|x| jac.matvec(x), &jac.diagonal(), &rhs, None, settings.cg_tol, cg_cap);
        report.cg_iterations_total += lin.iterations;
        let step = domain.scatter(&lin.x);
        report.iterations += 1;

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=settings.max_halvings {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(u, s)| u + scale * s).collect();
            let trial_res = residual(&trial);
            let trial_norm = max_norm(&trial_res);
            if trial_norm < res_norm {
                accepted = Some((trial, trial_res, trial_norm));
                break;
            }
            scale *= settings.damping;
        }
        match accepted {
            Some((trial, trial_res, trial_norm)) => {
                u = trial;
                res = trial_res;
                res_norm = trial_norm;
                report.final_residual = res_norm;
                report.converged = res_norm <= settings.tol_abs;
            }
            None => {
                log::debug!("newton stalled at residual {res_norm:e} after {} iterations", report.iterations);
                break;
            }
        }
    }
    if !report.converged {
        log::warn!(
            "newton did not reach {:e} (residual {:e}, {} iterations)",
            settings.tol_abs,
            report.final_residual,
            report.iterations
        );
    }
    (u, report)
}

/// Rescales a starting guess along its ray to the minimizer of
/// `t ↦ J(t v) - <ζ, t v>`, i.e. `t^{p-1} <-Δ_p v, v> = <ζ, v>`.
fn ray_scaled(inst: &PLaplaceInstance, zeta: &[f64], v: &[f64]) -> Option<Vec<f64>> {
    let pj = inst.p * inst.dirichlet_energy(v);
    let zv = inst.pairing(zeta, v);
    if pj > 0.0 && zv > 0.0 {
        let t = (zv / pj).powf(1.0 / (inst.p - 1.0));
        Some(v.iter().map(|x| x * t).collect())
    } else {
        None
    }
}

/// Solves `-Δ_p^h u = ζ` on the unknowns of `inst`, warm-started from `u_init`.
///
/// If the start is not already a solution it is first moved along its ray
/// to the energy-optimal scaling (a zero start is replaced by `∂H*(ζ)` first).
/// On non-convergence the best iterate is returned with `converged = false`.
pub fn solve_p_poisson(
    inst: &PLaplaceInstance,
    zeta: &[f64],
    u_init: &[f64],
    settings: &NewtonSettings,
) -> (Vec<f64>, SolveReport) {
    let mut zeta = zeta.to_vec();
    inst.domain.apply_dirichlet(&mut zeta);
    let residual = |u: &[f64]| {
        let mut r = inst.apply_plaplacian(u);
        r.iter_mut().zip(&zeta).for_each(|(r, z)| *r = -*r - z);
        r
    };
    let mut start = u_init.to_vec();
    inst.domain.apply_dirichlet(&mut start);
    if max_norm(&residual(&start)) > settings.tol_abs {
        let base = if max_norm(&start) == 0.0 { inst.inverse_duality_map(&zeta) } else { start.clone() };
        if let Some(scaled) = ray_scaled(inst, &zeta, &base) {
            if max_norm(&start) == 0.0 || max_norm(&residual(&scaled)) < max_norm(&residual(&start)) {
                start = scaled;
            }
        }
    }
    damped_newton(inst, start, residual, |u| inst.jacobian(u), settings)
}

/// Proximal step `argmin_v H(v - u_ref) + τ J(v)` via its optimality condition,
/// warm-started from `u_ref`.
pub fn solve_prox(inst: &PLaplaceInstance, u_ref: &[f64], tau: f64, settings: &NewtonSettings) -> (Vec<f64>, SolveReport) {
    assert!(tau > 0.0, "proximal step needs tau > 0");
    let p = inst.p;
    let mut anchor = u_ref.to_vec();
    inst.domain.apply_dirichlet(&mut anchor);
    let anchor_scale = max_norm(&anchor);
    let residual = |v: &[f64]| {
        let lap = inst.apply_plaplacian(v);
        let diff: Vec<f64> = v.iter().zip(&anchor).map(|(v, a)| v - a).collect();
        let dm = inst.duality_map(&diff);
        let mut r: Vec<f64> = dm.iter().zip(&lap).map(|(d, l)| d - tau * l).collect();
        inst.domain.apply_dirichlet(&mut r);
        r
    };
    let jacobian = |v: &[f64]| {
        let mut jac = inst.jacobian(v);
        let eps = inst.epsilon * if anchor_scale > 0.0 { anchor_scale } else { 1.0 };
        jac.values.iter_mut().for_each(|x| *x *= tau);
        for (s, &k) in inst.domain.interior_nodes().iter().enumerate() {
            let w = v[k] - anchor[k];
            let slope = if p == 2.0 { 1.0 } else { (w * w + eps * eps).powf(0.5 * (p - 2.0)) };
            let pos = jac.row_ptr[s] + jac.col_idx[jac.row_ptr[s]..jac.row_ptr[s + 1]].iter().position(|&c| c == s).unwrap();
            jac.values[pos] += (p - 1.0) * slope;
        }
        jac
    };
    damped_newton(inst, anchor.clone(), residual, jacobian, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridDomain, Shape};
    use nalgebra::DVector;
    use std::sync::Arc;

    fn instance(h: f64, r: f64, p: f64) -> PLaplaceInstance {
        let d = Arc::new(GridDomain::new(Shape::Square, 2.0, h).unwrap());
        PLaplaceInstance::with_radius(d, r, p).unwrap()
    }

    fn bump(inst: &PLaplaceInstance) -> Vec<f64> {
        let d = &inst.domain;
        let mut u: Vec<f64> = (0..d.len())
            .map(|k| {
                let (x, y) = d.coords_of(k);
                (1.0 - x * x) * (1.0 - y * y) * (1.0 + 0.3 * x)
            })
            .collect();
        d.apply_dirichlet(&mut u);
        u
    }

    #[test]
    fn zero_rhs_zero_start_is_immediate() {
        let inst = instance(0.1, 0.2, 3.0);
        let z = vec![0.0; inst.domain.len()];
        let (u, rep) = solve_p_poisson(&inst, &z, &z, &NewtonSettings::default());
        assert_eq!(rep.iterations, 0);
        assert!(rep.converged);
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn p2_matches_dense_solve() {
        let inst = instance(0.1, 0.2, 2.0);
        let d = inst.domain.clone();
        let zeta = bump(&inst);
        let (u, rep) = solve_p_poisson(&inst, &zeta, &vec![0.0; d.len()], &NewtonSettings::default());
        assert!(rep.converged);
        let a = inst.jacobian(&u).to_dense();
        let exact = a.lu().solve(&DVector::from_vec(d.gather(&zeta))).unwrap();
        let got = d.gather(&u);
        for (x, y) in got.iter().zip(exact.iter()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn p3_reaches_absolute_tolerance_and_ignores_start() {
        let inst = instance(0.1, 0.3, 3.0);
        let zeta = inst.duality_map(&bump(&inst));
        let settings = NewtonSettings::default();
        let (a, ra) = solve_p_poisson(&inst, &zeta, &bump(&inst), &settings);
        let other: Vec<f64> = bump(&inst).iter().map(|v| -0.2 * v).collect();
        let (b, rb) = solve_p_poisson(&inst, &zeta, &other, &settings);
        assert!(ra.converged && rb.converged);
        assert!(ra.final_residual <= 1e-12);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-8));
    }

    #[test]
    fn prox_p2_matches_dense_solve() {
        let inst = instance(0.1, 0.2, 2.0);
        let d = inst.domain.clone();
        let u_ref = bump(&inst);
        let tau = 0.05;
        let (v, rep) = solve_prox(&inst, &u_ref, tau, &NewtonSettings::default());
        assert!(rep.converged);
        let n = d.interior_count();
        let a = inst.jacobian(&u_ref).to_dense() * tau + nalgebra::DMatrix::identity(n, n);
        let exact = a.lu().solve(&DVector::from_vec(d.gather(&u_ref))).unwrap();
        for (x, y) in d.gather(&v).iter().zip(exact.iter()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn prox_of_zero_is_zero_and_small_tau_stays_close() {
        let inst = instance(0.1, 0.2, 3.0);
        let z = vec![0.0; inst.domain.len()];
        let (v, _) = solve_prox(&inst, &z, 0.1, &NewtonSettings::default());
        assert!(v.iter().all(|&x| x == 0.0));
        let u_ref = bump(&inst);
        let mut last = f64::INFINITY;
        for tau in [1e-1, 1e-2, 1e-3] {
            let (v, rep) = solve_prox(&inst, &u_ref, tau, &NewtonSettings::default());
            assert!(rep.converged, "tau {tau}: {rep:?}");
            let dist = max_norm(&v.iter().zip(&u_ref).map(|(a, b)| a - b).collect::<Vec<_>>());
            assert!(dist < last);
            last = dist;
        }
    }
}
