use crate::error::{Error, Result};
use crate::functional::{fenchel_conjugate_value, FunctionalPair};
use crate::metrics;

use super::{normalized, primal_metrics, reached_tol, EigenSettings, EigenTrace, SolverTag, StepDetail, StepDiagnostics, StopReason, TraceBuilder};

/// Eigenvalue of `J` recovered from the eigenvalue `λ_τ` of the proximal map:
/// `λ = (λ_τ / τ) (1 - λ_τ^{1-q})^{p-1}`.
pub fn recovered_eigenvalue(lambda_tau: f64, tau: f64, p: f64) -> f64 {
    let q = p / (p - 1.0);
    lambda_tau / tau * (1.0 - lambda_tau.powf(1.0 - q)).powf(p - 1.0)
}

/// Proximal power method: `u^{k+1/2} = argmin_v H(v - u^k) + τ J(v)` with
/// `τ = τ̃^{p-1}`, followed by normalization.
///
/// The `dual_rq` column holds `R*(η^k)` for `η^k = ∂H(u^k - u^{k+1/2}) / τ ∈ ∂J(u^{k+1/2})`.
pub fn run_ppm<P: FunctionalPair + ?Sized>(
    pair: &P,
    u0: &[f64],
    tau_tilde: f64,
    settings: &EigenSettings,
) -> Result<EigenTrace> {
    if !(tau_tilde > 0.0) {
        return Err(Error::Config(format!("step size must be positive, got {tau_tilde}")));
    }
    let p = pair.p();
    let q = pair.q();
    let tau = tau_tilde.powf(p - 1.0);
    let mut trace = TraceBuilder::new(SolverTag::Ppm, settings.snapshot_every);
    let mut u = normalized(pair, u0)?;
    for k in 0..settings.iters {
        let m = primal_metrics(pair, &u)?;
        if reached_tol(settings, m.residual) {
            trace.record(k, &u, &m, None, 0);
            return trace.finish(pair, u, StopReason::ResidualTol, settings);
        }
        let (half, report) = pair.prox(&u, tau, &settings.newton);
        let diff: Vec<f64> = half.iter().zip(&u).map(|(v, u)| v - u).collect();
        let j_tau = pair.h_energy(&diff) / tau + pair.energy(&half);
        let lambda_tau = pair.energy(&u) / j_tau;
        let eta: Vec<f64> = pair.duality_map(&diff).iter().map(|x| -x / tau).collect();
        let (dual_rq, dual_rq_tau) = if eta.iter().all(|&x| x == 0.0) {
            (None, 0.0)
        } else {
            let j_star = fenchel_conjugate_value(pair, &eta, &half);
            let h_star = pair.h_dual_energy(&eta);
            (Some(metrics::dual_rayleigh_quotient(pair, &eta, &half)?), j_star / (tau.powf(q - 1.0) * h_star + j_star))
        };
        trace.record(k, &u, &m, dual_rq, report.iterations);
        trace.step(StepDiagnostics {
            k,
            inner_converged: report.converged,
            inner_residual: report.final_residual,
            detail: StepDetail::Ppm { lambda_tau, recovered_lambda: recovered_eigenvalue(lambda_tau, tau, p), dual_rq_tau },
        });
        u = normalized(pair, &half)?;
    }
    trace.finish(pair, u, StopReason::MaxIter, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::SpdInstance;

    fn last_recovered(t: &EigenTrace) -> f64 {
        match t.steps.last().unwrap().detail {
            StepDetail::Ppm { recovered_lambda, .. } => recovered_lambda,
            _ => unreachable!(),
        }
    }

    #[test]
    fn recovers_smallest_eigenvalue_of_diagonal_matrix() {
        let a = SpdInstance::diagonal(&[2.0, 5.0]).unwrap();
        let t = run_ppm(&a, &[1.0, 1.0], 0.1, &EigenSettings::with_iters(400)).unwrap();
        assert!((t.final_u[0].abs() - 1.0).abs() < 1e-8);
        assert!((last_recovered(&t) - 2.0).abs() < 1e-8);
        for s in &t.steps {
            match s.detail {
                StepDetail::Ppm { dual_rq_tau, .. } => assert!(dual_rq_tau < 1.0),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn eigenvector_is_a_scaled_fixed_point() {
        let a = SpdInstance::diagonal(&[2.0, 5.0, 7.0]).unwrap();
        let t = run_ppm(&a, &[0.0, 3.0, 0.0], 0.3, &EigenSettings::with_iters(5)).unwrap();
        assert!((t.final_u[1] - 1.0).abs() < 1e-14);
        assert!((last_recovered(&t) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn recovery_formula_inverts_the_prox_eigenvalue() {
        // for p = 2 the proximal eigenvalue of A-eigenvalue λ is 1 + τλ
        for (lambda, tau) in [(2.0, 0.1), (7.5, 0.01), (0.3, 2.0)] {
            assert!((recovered_eigenvalue(1.0 + tau * lambda, tau, 2.0) - lambda).abs() < 1e-12 * lambda.max(1.0) * 10.0);
        }
    }

    #[test]
    fn rejects_nonpositive_step() {
        let a = SpdInstance::diagonal(&[2.0, 5.0]).unwrap();
        assert!(run_ppm(&a, &[1.0, 0.0], 0.0, &EigenSettings::default()).is_err());
    }
}
