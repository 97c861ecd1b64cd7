use crate::error::Result;
use crate::functional::{FunctionalPair, SmoothPair};
use crate::linalg::minres;

use super::{normalized, primal_metrics, reached_tol, EigenSettings, EigenTrace, GeometricSettings, SolverTag, StepDetail, StepDiagnostics, StopReason, TraceBuilder};

/// `F(u) = 1 - p J(u) / (|u|_H |∂J(u)|_{H*})`, zero exactly at eigenvectors.
pub fn geometric_target<P: FunctionalPair + ?Sized>(pair: &P, u: &[f64]) -> f64 {
    let zeta = pair.subgradient(u);
    1.0 - pair.p() * pair.energy(u) / (pair.norm(u) * pair.dual_norm(&zeta))
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Data of the semi-implicit update that only depends on `u^k`.
struct Frozen<'a> {
    u: &'a [f64],
    /// `|u|_H |ζ|_{H*}`.
    scale: f64,
    /// `cosim · (G_H |ζ|_{H*} + ∂²J(u) G_{H*} |u|_H) / scale`.
    explicit: Vec<f64>,
}

impl<'a> Frozen<'a> {
    fn new<P: SmoothPair + ?Sized>(pair: &P, u: &'a [f64]) -> Self {
        let p = pair.p();
        let q = pair.q();
        let zeta = pair.subgradient(u);
        let (nu, nz) = (pair.norm(u), pair.dual_norm(&zeta));
        let scale = nu * nz;
        let cosim = p * pair.energy(u) / scale;
        let g_h: Vec<f64> = pair.duality_map(u).iter().map(|x| x * nu.powf(1.0 - p)).collect();
        let g_hs: Vec<f64> = pair.inverse_duality_map(&zeta).iter().map(|x| x * nz.powf(1.0 - q)).collect();
        let curv = pair.hessian_apply(u, &g_hs);
        let mut explicit: Vec<f64> = g_h.iter().zip(&curv).map(|(a, b)| cosim * (a * nz + b * nu) / scale).collect();
        pair.constrain(&mut explicit);
        Self { u, scale, explicit }
    }

    /// `[p ∂J(v) - cosim B] / scale`.
    fn rhs<P: SmoothPair + ?Sized>(&self, pair: &P, v: &[f64]) -> Vec<f64> {
        let p = pair.p();
        let mut r: Vec<f64> = pair.subgradient(v).iter().zip(&self.explicit).map(|(g, e)| p * g / self.scale - e).collect();
        pair.constrain(&mut r);
        r
    }

    fn residual<P: SmoothPair + ?Sized>(&self, pair: &P, v: &[f64], tau: f64) -> Vec<f64> {
        let w: Vec<f64> = v.iter().zip(self.u).map(|(v, u)| (v - u) / tau).collect();
        let mut r: Vec<f64> = pair.duality_map(&w).iter().zip(self.rhs(pair, v)).map(|(a, b)| a - b).collect();
        pair.constrain(&mut r);
        r
    }
}

struct StepOutcome {
    /// Best iterate, unless the residual became non-finite.
    v: Option<Vec<f64>>,
    converged: bool,
    residual: f64,
    iterations: usize,
}

/// Damped Newton iteration for the update at step size `tau`, started from the explicit step.
fn implicit_step<P: SmoothPair + ?Sized>(pair: &P, fr: &Frozen, tau: f64, gs: &GeometricSettings) -> StepOutcome {
    let p = pair.p();
    let mut v: Vec<f64> = pair.inverse_duality_map(&fr.rhs(pair, fr.u)).iter().zip(fr.u).map(|(d, u)| u + tau * d).collect();
    pair.constrain(&mut v);
    let mut r = fr.residual(pair, &v, tau);
    let mut rn = max_norm(&r);
    let cap = 10 * pair.dim();
    let mut iterations = 0;
    while rn.is_finite() && rn > gs.newton_tol && iterations < gs.newton_max_iter {
        iterations += 1;
        let w: Vec<f64> = v.iter().zip(fr.u).map(|(v, u)| (v - u) / tau).collect();
        let diag = pair.duality_map_derivative(&w, &vec![1.0; w.len()]);
        let hess = pair.hessian_operator(&v);
        let op = |x: &[f64]| {
            let b = hess(x);
            let mut y: Vec<f64> = diag.iter().zip(x).zip(&b).map(|((d, x), b)| d * x / tau - p * b / fr.scale).collect();
            pair.constrain(&mut y);
            y
        };
        let minus_r: Vec<f64> = r.iter().map(|x| -x).collect();
        let lin = minres(op, &minus_r, gs.minres_tol, cap);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=30 {
            let trial: Vec<f64> = v.iter().zip(&lin.x).map(|(v, d)| v + step * d).collect();
            let tr = fr.residual(pair, &trial, tau);
            let tn = max_norm(&tr);
            if tn < rn {
                (v, r, rn) = (trial, tr, tn);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    StepOutcome { v: rn.is_finite().then_some(v), converged: rn <= gs.newton_tol, residual: rn, iterations }
}

/// Descent on `F(u) = 1 - cosim(u, ∂J(u))` by a semi-implicit gradient flow:
///
/// `∂H((u^{k+1} - u^k)/τ) = [p ∂J(u^{k+1}) - cosim^k (G_H |ζ^k|_{H*} + ∂²J(u^k) G_{H*} |u^k|_H)] / (|u^k|_H |ζ^k|_{H*})`
///
/// with `G_H`, `G_{H*}` the gradients of the two norms. The step size starts at
/// the last accepted value and is halved until `F` decreases after normalization;
/// when no step size works the run stops as stalled.
pub fn run_geometric<P: SmoothPair + ?Sized>(pair: &P, u0: &[f64], settings: &EigenSettings) -> Result<EigenTrace> {
    let gs = settings.geometric;
    let mut trace = TraceBuilder::new(SolverTag::Geometric, settings.snapshot_every);
    let mut u = normalized(pair, u0)?;
    let mut tau = gs.tau0;
    for k in 0..settings.iters {
        let m = primal_metrics(pair, &u)?;
        if reached_tol(settings, m.residual) {
            trace.record(k, &u, &m, None, 0);
            return trace.finish(pair, u, StopReason::ResidualTol, settings);
        }
        let f_u = geometric_target(pair, &u);
        let fr = Frozen::new(pair, &u);
        let mut newton_iters = 0;
        let mut accepted = None;
        for halvings in 0..=gs.max_halvings {
            let out = implicit_step(pair, &fr, tau, &gs);
            newton_iters += out.iterations;
            let usable = out.converged || gs.accept_unconverged;
            if let Some(v) = out.v.as_ref().filter(|_| usable) {
                if let Ok(vn) = normalized(pair, v) {
                    let f_v = geometric_target(pair, &vn);
                    if f_v < f_u - gs.min_decrease {
                        accepted = Some((vn, f_v, halvings, out));
                        break;
                    }
                }
            }
            if halvings < gs.max_halvings {
                tau *= 0.5;
            }
        }
        trace.record(k, &u, &m, None, newton_iters);
        match accepted {
            Some((vn, f_v, halvings, out)) => {
                trace.step(StepDiagnostics {
                    k,
                    inner_converged: out.converged,
                    inner_residual: out.residual,
                    detail: StepDetail::Geometric { tau, target: f_v, halvings },
                });
                u = vn;
                tau = (tau * gs.step_growth).min(gs.tau0);
            }
            None => {
                log::info!("geometric step {k}: line search exhausted at tau {tau:e}, F = {f_u:e}");
                return trace.finish(pair, u, StopReason::Stalled, settings);
            }
        }
    }
    trace.finish(pair, u, StopReason::MaxIter, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::SpdInstance;

    #[test]
    fn eigenvector_is_stationary() {
        let a = SpdInstance::diagonal(&[2.0, 5.0, 7.0]).unwrap();
        let u0 = [0.0, 1.0, 0.0];
        assert!(geometric_target(&a, &u0).abs() < 1e-15);
        let t = run_geometric(&a, &u0, &EigenSettings::with_iters(5)).unwrap();
        assert_eq!(t.stop_reason, StopReason::Stalled);
        assert_eq!(t.final_u, u0.to_vec());
    }

    #[test]
    fn target_decreases_on_spd() {
        let a = SpdInstance::diagonal(&[1.0, 3.0, 4.0]).unwrap();
        let t = run_geometric(&a, &[1.0, 0.4, -0.3], &EigenSettings::with_iters(40)).unwrap();
        let cos: Vec<f64> = t.records.iter().map(|r| r.cosim).collect();
        assert!(cos.windows(2).all(|w| w[1] >= w[0]));
        assert!(1.0 - cos.last().unwrap() < 0.1 * (1.0 - cos[0]), "{cos:?}");
    }
}
