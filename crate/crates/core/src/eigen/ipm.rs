use crate::error::Result;
use crate::functional::FunctionalPair;
use crate::metrics;

use super::{normalized, primal_metrics, reached_tol, EigenSettings, EigenTrace, SolverTag, StepDetail, StepDiagnostics, StopReason, TraceBuilder};

/// Inverse power method: `ζ^k = ∂H(u^k)`, `u^{k+1/2} = ∂J*(ζ^k)`, `u^{k+1} = u^{k+1/2} / |u^{k+1/2}|_H`.
///
/// Record `k` holds the metrics of `u^k` and the dual quotient `R*(ζ^k)`
/// evaluated with `u^{k+1/2}`. The inner solve is warm-started from `u^k`.
pub fn run_ipm<P: FunctionalPair + ?Sized>(pair: &P, u0: &[f64], settings: &EigenSettings) -> Result<EigenTrace> {
    let mut trace = TraceBuilder::new(SolverTag::Ipm, settings.snapshot_every);
    let mut u = normalized(pair, u0)?;
    let p = pair.p();
    for k in 0..settings.iters {
        let m = primal_metrics(pair, &u)?;
        if reached_tol(settings, m.residual) {
            trace.record(k, &u, &m, None, 0);
            return trace.finish(pair, u, StopReason::ResidualTol, settings);
        }
        let zeta = pair.duality_map(&u);
        let (half, report) = pair.inverse_subgradient(&zeta, &u, &settings.newton);
        let dual_rq = metrics::dual_rayleigh_quotient(pair, &zeta, &half)?;
        trace.record(k, &u, &m, Some(dual_rq), report.iterations);
        let norm = pair.norm(&half);
        trace.step(StepDiagnostics {
            k,
            inner_converged: report.converged,
            inner_residual: report.final_residual,
            detail: StepDetail::Ipm { lambda_inverse: norm.powf(1.0 - p) },
        });
        u = normalized(pair, &half)?;
    }
    trace.finish(pair, u, StopReason::MaxIter, settings)
}
