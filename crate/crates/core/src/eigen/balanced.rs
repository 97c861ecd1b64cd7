use crate::error::{Error, Result};
use crate::functional::FunctionalPair;
use crate::plaplace::PLaplaceInstance;
use crate::roots::ridders;

use super::{
    negative_part, PartialQuotient, normalized, positive_part, primal_metrics, reached_tol, EigenSettings, EigenTrace, SolverTag,
    StepDetail, StepDiagnostics, StopReason, TraceBuilder,
};

/// `(R(u⁺), R(u⁻))` on the clipped fields; `None` for a part that vanishes.
pub fn partial_rayleigh_quotients(inst: &PLaplaceInstance, u: &[f64]) -> (Option<f64>, Option<f64>) {
    let rq = |w: Vec<f64>| {
        let h = inst.h_energy(&w);
        (h > 0.0).then(|| inst.energy(&w) / h)
    };
    (rq(positive_part(u)), rq(negative_part(u)))
}

/// `(⟨∂J(u), u⁺⟩ / pH(u⁺), -⟨∂J(u), u⁻⟩ / pH(u⁻))`; both equal `λ` at an eigenvector.
pub fn operator_partial_quotients(inst: &PLaplaceInstance, u: &[f64]) -> (Option<f64>, Option<f64>) {
    let g = inst.subgradient(u);
    let rq = |w: Vec<f64>, sign: f64| {
        let h = inst.h_energy(&w);
        (h > 0.0).then(|| sign * inst.pairing(&g, &w) / (inst.p * h))
    };
    (rq(positive_part(u), 1.0), rq(negative_part(u), -1.0))
}

/// `R(w⁺) - R(w⁻)`, with `±∞` when the negative or positive part vanishes.
fn balance(inst: &PLaplaceInstance, w: &[f64], quotient: PartialQuotient) -> f64 {
    let parts = match quotient {
        PartialQuotient::Clipped => partial_rayleigh_quotients(inst, w),
        PartialQuotient::Operator => operator_partial_quotients(inst, w),
    };
    match parts {
        (Some(a), Some(b)) => a - b,
        (None, Some(_)) => f64::INFINITY,
        (Some(_), None) => f64::NEG_INFINITY,
        (None, None) => f64::NAN,
    }
}

/// Balanced inverse iteration on the grid: each step solves
/// `-Δ_p^h w = s ζ⁺ - ζ⁻` with `ζ = ∂H(u^k)` and `s > 0` chosen so that
/// `R(w⁺) = R(w⁻)`, then normalizes `w`.
///
/// The balancing parameter is bracketed over `s ∈ {2^-m, ..., 2^m}` and
/// refined by Ridders' method. Without a bracket the step uses `s = 1` and is
/// flagged. The run stops as stalled if an iterate loses its sign change.
pub fn run_balanced_ipm(inst: &PLaplaceInstance, u0: &[f64], settings: &EigenSettings) -> Result<EigenTrace> {
    let bs = settings.balance;
    let mut u = normalized(inst, u0)?;
    if !(u.iter().any(|&x| x > 0.0) && u.iter().any(|&x| x < 0.0)) {
        return Err(Error::Domain("balanced iteration needs a sign-changing start".into()));
    }
    let mut trace = TraceBuilder::new(SolverTag::Balanced, settings.snapshot_every);
    for k in 0..settings.iters {
        let m = primal_metrics(inst, &u)?;
        if reached_tol(settings, m.residual) {
            trace.record(k, &u, &m, None, 0);
            return trace.finish(inst, u, StopReason::ResidualTol, settings);
        }
        let zeta = inst.duality_map(&u);
        let (zp, zm) = (positive_part(&zeta), negative_part(&zeta));
        let mut newton_iters = 0;
        let mut worst_residual: f64 = 0.0;
        let mut all_converged = true;
        let mut warm = u.clone();
        let mut solve = |s: f64| {
            let rhs: Vec<f64> = zp.iter().zip(&zm).map(|(a, b)| s * a - b).collect();
            let (w, rep) = inst.inverse_subgradient(&rhs, &warm, &settings.newton);
            newton_iters += rep.iterations;
            worst_residual = worst_residual.max(rep.final_residual);
            all_converged &= rep.converged;
            warm.clone_from(&w);
            let phi = balance(inst, &w, bs.quotient);
            (w, phi)
        };

        let (w1, phi1) = solve(1.0);
        let mut chosen = (1.0, phi1, w1);
        let mut flagged = false;
        if !(phi1.abs() <= bs.tol) {
            // φ decreases in s: a larger positive source widens the positive part
            let grow = phi1 > 0.0;
            let mut bracket = None;
            let (mut s_prev, mut phi_prev) = (1.0, phi1);
            for _ in 0..bs.max_expansions {
                let s = if grow { s_prev * 2.0 } else { s_prev * 0.5 };
                let (w, phi) = solve(s);
                if phi.abs() <= bs.tol {
                    chosen = (s, phi, w);
                    break;
                }
                if (phi > 0.0) != grow || phi == 0.0 {
                    bracket = Some(if grow { (s_prev, s, phi_prev, phi) } else { (s, s_prev, phi, phi_prev) });
                    break;
                }
                (s_prev, phi_prev) = (s, phi);
            }
            match bracket {
                Some((a, b, fa, fb)) => {
                    let root = ridders(|s| solve(s).1, a, b, fa, fb, bs.tol, 1e-15 * b, bs.max_root_iter)?;
                    let (w, phi) = solve(root.x);
                    chosen = (root.x, phi, w);
                }
                None if chosen.0 == 1.0 => {
                    flagged = true;
                    log::warn!("balanced step {k}: no sign change of the balance function found, using s = 1");
                    let (w, phi) = solve(1.0);
                    chosen = (1.0, phi, w);
                }
                None => {}
            }
        }
        let (s, phi, w) = chosen;
        trace.record(k, &u, &m, None, newton_iters);
        trace.step(StepDiagnostics {
            k,
            inner_converged: all_converged,
            inner_residual: worst_residual,
            detail: StepDetail::Balanced { s, phi, flagged },
        });
        if !phi.is_finite() {
            log::warn!("balanced step {k}: iterate lost its sign change");
            return trace.finish(inst, u, StopReason::Stalled, settings);
        }
        u = normalized(inst, &w)?;
    }
    trace.finish(inst, u, StopReason::MaxIter, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridDomain, Shape};
    use std::sync::Arc;

    fn instance(p: f64) -> PLaplaceInstance {
        let d = Arc::new(GridDomain::new(Shape::Square, 2.0, 0.1).unwrap());
        PLaplaceInstance::with_radius(d, 0.2, p).unwrap()
    }

    #[test]
    fn odd_start_is_balanced_at_one() {
        let inst = instance(2.0);
        let d = inst.domain.clone();
        let u: Vec<f64> = (0..d.len())
            .map(|k| {
                let (x, y) = d.coords_of(k);
                x * (1.0 - x * x) * (1.0 - y * y)
            })
            .collect();
        let t = run_balanced_ipm(&inst, &u, &EigenSettings::with_iters(3)).unwrap();
        for s in &t.steps {
            match s.detail {
                StepDetail::Balanced { s, phi, flagged } => {
                    assert_eq!(s, 1.0);
                    assert!(phi.abs() <= 1e-6 && !flagged);
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn skewed_start_gets_balanced() {
        let inst = instance(3.0);
        let d = inst.domain.clone();
        let u: Vec<f64> = (0..d.len())
            .map(|k| {
                let (x, y) = d.coords_of(k);
                (x - 0.4) * (1.0 - x * x) * (1.0 - y * y)
            })
            .collect();
        let t = run_balanced_ipm(&inst, &u, &EigenSettings::with_iters(4)).unwrap();
        let (a, b) = partial_rayleigh_quotients(&inst, &t.final_u);
        let (a, b) = (a.unwrap(), b.unwrap());
        assert!((a - b).abs() <= 1e-6 * t.final_lambda, "{a} vs {b}");
        assert!(matches!(t.steps[0].detail, StepDetail::Balanced { s, .. } if s != 1.0));
    }

    #[test]
    fn operator_quotients_agree_at_eigenvector() {
        let inst = instance(2.0);
        let d = inst.domain.clone();
        let u0: Vec<f64> = (0..d.len())
            .map(|k| {
                let (x, y) = d.coords_of(k);
                x * (1.0 - x * x) * (1.0 - y * y)
            })
            .collect();
        let mut settings = EigenSettings::with_iters(200);
        settings.residual_tol = Some(1e-6);
        settings.balance.quotient = PartialQuotient::Operator;
        let t = run_balanced_ipm(&inst, &u0, &settings).unwrap();
        assert_eq!(t.stop_reason, StopReason::ResidualTol, "{} {}", t.final_residual, t.records.len());
        let (a, b) = operator_partial_quotients(&inst, &t.final_u);
        assert!((a.unwrap() - t.final_lambda).abs() < 1e-5 * t.final_lambda);
        assert!((b.unwrap() - t.final_lambda).abs() < 1e-5 * t.final_lambda);
    }

    #[test]
    fn one_signed_start_is_rejected() {
        let inst = instance(2.0);
        let d = inst.domain.clone();
        let u: Vec<f64> = (0..d.len()).map(|k| if d.is_interior(k) { 1.0 } else { 0.0 }).collect();
        assert!(run_balanced_ipm(&inst, &u, &EigenSettings::default()).is_err());
    }
}
