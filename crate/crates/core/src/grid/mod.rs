//! Uniform 2-D lattices, mean-value stencils, nodal fields and starting guesses.

mod domain;
mod expr;
mod function;
mod initial;
mod stencil;

pub use domain::{GridDomain, Shape};
pub use expr::Expr;
pub use function::GridFunction;
pub use initial::{eval_initial_guess, ex1, ex2, InitialGuess};
pub use stencil::{build_stencil, mean_value_constant, Stencil};

use crate::error::Result;

/// Builds the lattice for `shape`; see [`GridDomain::new`].
pub fn build_domain(shape: Shape, side: f64, h: f64) -> Result<GridDomain> {
    GridDomain::new(shape, side, h)
}
