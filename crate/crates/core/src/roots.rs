//! Bracketing scalar root finding (Ridders' method).
//!
//! Endpoint values may be infinite as long as their signs differ; whenever a
//! needed value is not finite the step degrades to plain bisection.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult {
    pub x: f64,
    pub fx: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn opposite(a: f64, b: f64) -> bool {
    (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)
}

/// Finds `x` in `[a, b]` with `|f(x)| <= ftol`, given `fa = f(a)` and `fb = f(b)` of opposite sign.
///
/// Stops early (unconverged) once the bracket is narrower than `xtol` or after
/// `max_iter` outer steps; the best point seen is returned.
#[allow(clippy::too_many_arguments)]
pub fn ridders(
    mut f: impl FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    ftol: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<RootResult> {
    if fa == 0.0 {
        return Ok(RootResult { x: a, fx: fa, evaluations: 0, converged: true });
    }
    if fb == 0.0 {
        return Ok(RootResult { x: b, fx: fb, evaluations: 0, converged: true });
    }
    if !opposite(fa, fb) {
        return Err(Error::Domain(format!("no sign change on [{a}, {b}]: f = {fa}, {fb}")));
    }
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    let mut evaluations = 0;
    let note = |x: f64, fx: f64, best: &mut (f64, f64)| {
        if fx.abs() < best.1.abs() {
            *best = (x, fx);
        }
    };
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        let fm = f(m);
        evaluations += 1;
        note(m, fm, &mut best);
        if fm.abs() <= ftol {
            return Ok(RootResult { x: m, fx: fm, evaluations, converged: true });
        }
        let disc = fm * fm - fa * fb;
        if fa.is_finite() && fb.is_finite() && fm.is_finite() && disc > 0.0 {
            let step = (m - a) * (fa - fb).signum() * fm / disc.sqrt();
            let x = m + step;
            let fx = f(x);
            evaluations += 1;
            note(x, fx, &mut best);
            if fx.abs() <= ftol {
                return Ok(RootResult { x, fx, evaluations, converged: true });
            }
            if opposite(fm, fx) {
                if m < x {
                    (a, fa, b, fb) = (m, fm, x, fx);
                } else {
                    (a, fa, b, fb) = (x, fx, m, fm);
                }
            } else if opposite(fa, fx) {
                (b, fb) = (x, fx);
            } else {
                (a, fa) = (x, fx);
            }
        } else if opposite(fa, fm) {
            (b, fb) = (m, fm);
        } else {
            (a, fa) = (m, fm);
        }
        if (b - a).abs() <= xtol {
            break;
        }
    }
    Ok(RootResult { x: best.0, fx: best.1, evaluations, converged: best.1.abs() <= ftol })
}
