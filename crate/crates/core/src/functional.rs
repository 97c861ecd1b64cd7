//! Convex functional pairs `(J, H)` and the duality operations shared by every solver.
//!
//! Primal and dual vectors are both stored as plain `f64` slices in the
//! representation induced by [`FunctionalPair::pairing`]: a dual vector `zeta`
//! acts on a primal `u` through `pairing(zeta, u)`. For grid instances the
//! pairing carries the cell volume, so the nodal values of `subgradient(u)`
//! are exactly those of `-Δ_p^h u`.

use crate::error::{Error, Result};
use crate::inner::{NewtonSettings, SolveReport};

/// Hölder conjugate `p / (p - 1)`.
pub fn dual_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

/// A pair of absolutely p-homogeneous convex functionals `J` (energy) and
/// `H = |.|_H^p / p` (normalization), together with the maps the eigen solvers need.
///
/// Implementations must be usable from several threads at once; all results
/// are returned as fresh vectors.
pub trait FunctionalPair: Sync {
    /// Homogeneity exponent, `p > 1`.
    fn p(&self) -> f64;

    fn q(&self) -> f64 {
        dual_exponent(self.p())
    }

    /// Length of primal and dual vectors.
    fn dim(&self) -> usize;

    /// `J(u)`.
    fn energy(&self, u: &[f64]) -> f64;

    /// The (single-valued) subgradient `∂J(u)`.
    fn subgradient(&self, u: &[f64]) -> Vec<f64>;

    /// Solves `zeta ∈ ∂J(v)` for `v`, i.e. evaluates `∂J*(zeta)`, starting from `guess`.
    fn inverse_subgradient(
        &self,
        zeta: &[f64],
        guess: &[f64],
        settings: &NewtonSettings,
    ) -> (Vec<f64>, SolveReport);

    /// Proximal map `argmin_v H(v - u_ref) + tau J(v)`.
    fn prox(&self, u_ref: &[f64], tau: f64, settings: &NewtonSettings) -> (Vec<f64>, SolveReport);

    /// Duality map `∂H(u)`.
    fn duality_map(&self, u: &[f64]) -> Vec<f64>;

    /// Inverse duality map `∂H*(zeta)`.
    fn inverse_duality_map(&self, zeta: &[f64]) -> Vec<f64>;

    /// `|u|_H`.
    fn norm(&self, u: &[f64]) -> f64;

    /// `|zeta|_{H*}`.
    fn dual_norm(&self, zeta: &[f64]) -> f64;

    /// `<zeta, u>`.
    fn pairing(&self, zeta: &[f64], u: &[f64]) -> f64;

    /// `H(u) = |u|_H^p / p`.
    fn h_energy(&self, u: &[f64]) -> f64 {
        self.norm(u).powf(self.p()) / self.p()
    }

    /// `H*(zeta) = |zeta|_{H*}^q / q`.
    fn h_dual_energy(&self, zeta: &[f64]) -> f64 {
        self.dual_norm(zeta).powf(self.q()) / self.q()
    }

    /// Zeroes every constrained entry (boundary nodes for grid instances).
    fn constrain(&self, _v: &mut [f64]) {}

    /// Whether `J` is absolutely p-homogeneous. Every shipped instance is.
    fn is_homogeneous(&self) -> bool {
        true
    }
}

/// Second-order information needed by the geometric descent scheme.
pub trait SmoothPair: FunctionalPair {
    /// Hessian of `J` at `u` applied to `x`, in pairing representation.
    fn hessian_apply(&self, u: &[f64], x: &[f64]) -> Vec<f64>;

    /// Derivative of the duality map at `w` applied to `x`.
    fn duality_map_derivative(&self, w: &[f64], x: &[f64]) -> Vec<f64>;

    /// Hessian of `J` at `u` as a reusable linear operator; worth overriding
    /// when assembling once is cheaper than repeated [`SmoothPair::hessian_apply`] calls.
    fn hessian_operator<'a>(&'a self, u: &[f64]) -> Box<dyn Fn(&[f64]) -> Vec<f64> + 'a> {
        let u = u.to_vec();
        Box::new(move |x| self.hessian_apply(&u, x))
    }
}

/// Evaluates `J*(zeta)` through a subgradient pair `zeta ∈ ∂J(v)` using the
/// Fenchel–Young identity `J*(zeta) = <zeta, v> - J(v)`.
pub fn fenchel_conjugate_value<P: FunctionalPair + ?Sized>(pair: &P, zeta: &[f64], v: &[f64]) -> f64 {
    let dual = pair.pairing(zeta, v);
    let value = dual - pair.energy(v);
    if pair.is_homogeneous() {
        // Euler identity on J*: J*(zeta) = <zeta, v> / q.
        debug_assert!(
            (value - dual / pair.q()).abs() <= 1e-8 * value.abs().max(dual.abs()).max(1e-300) + 1e-12,
            "Fenchel–Young and Euler evaluations of J* disagree: {value} vs {}",
            dual / pair.q()
        );
    }
    value
}

/// Outcome of [`check_growth_constant`].
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    /// Smallest `J(u) / H(u)` over the samples.
    pub worst_ratio: f64,
    /// Index of the sample attaining `worst_ratio`.
    pub worst_index: usize,
    /// Samples with `H(u) > J(u) / lambda_star * (1 + 1e-6)`.
    pub violations: Vec<usize>,
}

impl GrowthReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the coercivity bound `H(u) <= J(u) / lambda_star` on a set of samples.
///
/// Zero samples (where `H(u) = 0`) are skipped.
pub fn check_growth_constant<P: FunctionalPair + ?Sized>(
    pair: &P,
    samples: &[Vec<f64>],
    lambda_star: f64,
) -> Result<GrowthReport> {
    if !(lambda_star > 0.0) {
        return Err(Error::Config(format!("growth constant must be positive, got {lambda_star}")));
    }
    let mut report = GrowthReport {
        worst_ratio: f64::INFINITY,
        worst_index: 0,
        violations: Vec::new(),
    };
    for (i, u) in samples.iter().enumerate() {
        let h = pair.h_energy(u);
        if h == 0.0 {
            continue;
        }
        let j = pair.energy(u);
        let ratio = j / h;
        if ratio < report.worst_ratio {
            report.worst_ratio = ratio;
            report.worst_index = i;
        }
        if h > j / lambda_star * (1.0 + 1e-6) {
            report.violations.push(i);
        }
    }
    Ok(report)
}

/// Euclidean dot product with a fixed left-to-right summation order.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `|x|^{p-2} x`, defined as 0 at the origin for every `p > 1`.
#[inline]
pub(crate) fn signed_pow(x: f64, exponent_minus_one: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(exponent_minus_one)
    }
}
