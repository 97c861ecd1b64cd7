use std::sync::Arc;

use crate::grid::{Expr, GridDomain, GridFunction};

/// Built-in and user-supplied starting fields.
#[derive(Debug, Clone)]
pub enum InitialGuess {
    /// Four-lobe sign-changing field used for the ground-state runs.
    Ex1,
    /// Radial bump with a sign change on the circle of radius 1/4.
    Ex2,
    Expression(Expr),
}

pub fn ex1(x1: f64, x2: f64) -> f64 {
    -(1.0 - 2.0 * (x1 + 0.5).abs()) * (1.0 - 2.0 * (x2 + 0.5).abs()) * (1.0 - x1.abs()) * (1.0 - x2.abs())
}

pub fn ex2(x1: f64, x2: f64) -> f64 {
    100.0 * (x1 + 1.0) * (x2 + 1.0) * (x1 - 1.0) * (x2 - 1.0) * (0.0625 - x1 * x1 - x2 * x2)
}

/// Samples the guess on the interior nodes; no normalization is applied.
pub fn eval_initial_guess(guess: &InitialGuess, domain: Arc<GridDomain>) -> GridFunction {
    match guess {
        InitialGuess::Ex1 => GridFunction::from_fn(domain, ex1),
        InitialGuess::Ex2 => GridFunction::from_fn(domain, ex2),
        InitialGuess::Expression(e) => GridFunction::from_fn(domain, |x, y| e.eval(x, y)),
    }
}
