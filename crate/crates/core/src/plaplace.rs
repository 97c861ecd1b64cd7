//! Mean-value discretization of the p-Laplacian on a [`GridDomain`]:
//!
//! `Δ_p^h u(x) = C_h Σ_{y ∈ B_r(x)} |u(y) - u(x)|^{p-2} (u(y) - u(x))`
//!
//! with reads outside the unknowns returning 0. The discrete energy
//! `J_h(u) = C_h h^2 / (2p) Σ_x Σ_{y ∈ B_r(x)} |u(y) - u(x)|^p` (sum over every lattice
//! point, zero extension) has `-Δ_p^h` as its exact gradient in the pairing
//! `<ζ, u> = h^2 Σ ζ u`, so `p J_h(u) = <-Δ_p^h u, u>` holds to rounding.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functional::{signed_pow, FunctionalPair, SmoothPair};
use crate::grid::{GridDomain, Stencil};
use crate::inner::{self, NewtonSettings, SolveReport};
use crate::linalg::CsrMatrix;

const OUTSIDE: u32 = u32::MAX;

/// Default Jacobian regularization relative to the field's max-norm.
pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct PLaplaceInstance {
    pub domain: Arc<GridDomain>,
    pub stencil: Stencil,
    pub p: f64,
    /// Relative regularization of the Jacobian kernel, scaled by the field's max-norm.
    pub epsilon: f64,
    /// Per interior slot, `stencil.len()` neighbour node indices (`OUTSIDE` unless the neighbour is an unknown).
    neighbor_nodes: Vec<u32>,
    /// Same layout, neighbour interior slots.
    neighbor_slots: Vec<u32>,
}

#[inline]
fn kernel(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t
    } else if p == 3.0 {
        t * t.abs()
    } else {
        signed_pow(t, p - 1.0)
    }
}

#[inline]
fn abs_pow(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t * t
    } else if p == 3.0 {
        t * t * t.abs()
    } else {
        t.abs().powf(p)
    }
}

/// `(t^2 + eps^2)^{(p-2)/2}`; exactly 1 for `p = 2`.
#[inline]
fn kernel_slope(t: f64, p: f64, eps: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else if p == 3.0 && eps == 0.0 {
        t.abs()
    } else {
        (t * t + eps * eps).powf(0.5 * (p - 2.0))
    }
}

impl PLaplaceInstance {
    pub fn new(domain: Arc<GridDomain>, stencil: Stencil, p: f64, epsilon: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Config(format!("p must be a finite number above 1, got {p}")));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon must be nonnegative, got {epsilon}")));
        }
        let (nx, ny) = (domain.nx as i64, domain.ny as i64);
        let m = stencil.len();
        let mut neighbor_nodes = Vec::with_capacity(domain.interior_count() * m);
        let mut neighbor_slots = Vec::with_capacity(domain.interior_count() * m);
        for &k in domain.interior_nodes() {
            let (i, j) = ((k % domain.nx) as i64, (k / domain.nx) as i64);
            for &(dy, dx) in &stencil.offsets {
                let (a, b) = (i + dx as i64, j + dy as i64);
                if a < 0 || b < 0 || a >= nx || b >= ny {
                    neighbor_nodes.push(OUTSIDE);
                    neighbor_slots.push(OUTSIDE);
                } else {
                    let node = (b * nx + a) as usize;
                    match domain.interior_slot(node) {
                        Some(slot) => {
                            neighbor_nodes.push(node as u32);
                            neighbor_slots.push(slot as u32);
                        }
                        None => {
                            neighbor_nodes.push(OUTSIDE);
                            neighbor_slots.push(OUTSIDE);
                        }
                    }
                }
            }
        }
        Ok(Self { domain, stencil, p, epsilon, neighbor_nodes, neighbor_slots })
    }

    /// Domain, stencil with default constant, and the default regularization.
    pub fn with_radius(domain: Arc<GridDomain>, r: f64, p: f64) -> Result<Self> {
        let stencil = Stencil::new(domain.h, r, p, None)?;
        Self::new(domain, stencil, p, DEFAULT_EPSILON)
    }

    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn weight(&self) -> f64 {
        self.stencil.weight
    }

    fn neighbors(&self, slot: usize) -> impl Iterator<Item = (u32, u32)> + '_ {
        let m = self.stencil.len();
        self.neighbor_nodes[slot * m..(slot + 1) * m]
            .iter()
            .copied()
            .zip(self.neighbor_slots[slot * m..(slot + 1) * m].iter().copied())
    }

    #[inline]
    fn read(u: &[f64], node: u32) -> f64 {
        if node == OUTSIDE {
            0.0
        } else {
            u[node as usize]
        }
    }

    /// Per-slot map over interior nodes, scattered into a full-length field.
    fn map_interior(&self, f: impl Fn(usize, usize) -> f64 + Sync) -> Vec<f64> {
        let nodes = self.domain.interior_nodes();
        let vals: Vec<f64> = (0..nodes.len()).into_par_iter().with_min_len(64).map(|s| f(s, nodes[s])).collect();
        self.domain.scatter(&vals)
    }

    /// `Δ_p^h u` at interior nodes, 0 elsewhere.
    pub fn apply_plaplacian(&self, u: &[f64]) -> Vec<f64> {
        let (p, c) = (self.p, self.stencil.weight);
        self.map_interior(|s, k| {
            let ux = u[k];
            c * self.neighbors(s).map(|(n, _)| kernel(Self::read(u, n) - ux, p)).sum::<f64>()
        })
    }

    /// Discrete p-Dirichlet energy `J_h(u)`.
    pub fn dirichlet_energy(&self, u: &[f64]) -> f64 {
        let p = self.p;
        let nodes = self.domain.interior_nodes();
        let per_node: Vec<f64> = (0..nodes.len())
            .into_par_iter()
            .with_min_len(64)
            .map(|s| {
                let ux = u[nodes[s]];
                self.neighbors(s)
                    .map(|(n, slot)| {
                        if slot == OUTSIDE {
                            // interior-exterior pairs are visited once from each side
                            2.0 * abs_pow(ux, p)
                        } else {
                            abs_pow(u[n as usize] - ux, p)
                        }
                    })
                    .sum()
            })
            .collect();
        let total: f64 = per_node.iter().sum();
        self.stencil.weight * self.domain.cell_volume() / (2.0 * p) * total
    }

    fn regularization(&self, u: &[f64]) -> f64 {
        let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.epsilon * if scale > 0.0 { scale } else { 1.0 }
    }

    /// Jacobian of `-Δ_p^h` over the interior unknowns (slot order), with the
    /// kernel slope regularized as `(t^2 + ε^2)^{(p-2)/2}`.
    pub fn jacobian(&self, u: &[f64]) -> CsrMatrix {
        let eps = self.regularization(u);
        self.jacobian_with(u, eps)
    }

    pub fn jacobian_with(&self, u: &[f64], eps: f64) -> CsrMatrix {
        let (p, c) = (self.p, self.stencil.weight * (self.p - 1.0));
        let nodes = self.domain.interior_nodes();
        let rows: Vec<Vec<(usize, f64)>> = (0..nodes.len())
            .into_par_iter()
            .with_min_len(64)
            .map(|s| {
                let ux = u[nodes[s]];
                let mut row = Vec::with_capacity(self.stencil.len() + 1);
                let mut diag = 0.0;
                for (n, slot) in self.neighbors(s) {
                    let w = c * kernel_slope(Self::read(u, n) - ux, p, eps);
                    diag += w;
                    if slot != OUTSIDE {
                        row.push((slot as usize, -w));
                    }
                }
                row.push((s, diag));
                row
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    /// Matrix-free Jacobian of `-Δ_p^h` at `u` applied to the full-length field `x`.
    pub fn jacobian_apply(&self, u: &[f64], x: &[f64]) -> Vec<f64> {
        let eps = self.regularization(u);
        let (p, c) = (self.p, self.stencil.weight * (self.p - 1.0));
        self.map_interior(|s, k| {
            let (ux, xx) = (u[k], x[k]);
            c * self
                .neighbors(s)
                .map(|(n, slot)| {
                    let w = kernel_slope(Self::read(u, n) - ux, p, eps);
                    let xy = if slot == OUTSIDE { 0.0 } else { x[n as usize] };
                    w * (xx - xy)
                })
                .sum::<f64>()
        })
    }

    /// `(h^2 Σ |u|^p)^{1/p}`.
    pub fn lp_norm(&self, u: &[f64]) -> f64 {
        weighted_power_sum(u, self.p, self.domain.cell_volume()).powf(1.0 / self.p)
    }

    /// `(h^2 Σ |ζ|^q)^{1/q}`.
    pub fn lq_dual_norm(&self, zeta: &[f64]) -> f64 {
        let q = self.q();
        weighted_power_sum(zeta, q, self.domain.cell_volume()).powf(1.0 / q)
    }

    /// Nodewise `|u|^{p-2} u`.
    pub fn duality_map(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&v| kernel(v, self.p)).collect()
    }
}

fn weighted_power_sum(v: &[f64], e: f64, w: f64) -> f64 {
    w * v.iter().map(|&x| abs_pow(x, e)).sum::<f64>()
}

impl FunctionalPair for PLaplaceInstance {
    fn p(&self) -> f64 {
        self.p
    }

    fn dim(&self) -> usize {
        self.domain.len()
    }

    fn energy(&self, u: &[f64]) -> f64 {
        self.dirichlet_energy(u)
    }

    fn subgradient(&self, u: &[f64]) -> Vec<f64> {
        let mut lap = self.apply_plaplacian(u);
        lap.iter_mut().for_each(|v| *v = -*v);
        lap
    }

    fn inverse_subgradient(&self, zeta: &[f64], guess: &[f64], settings: &NewtonSettings) -> (Vec<f64>, SolveReport) {
        inner::solve_p_poisson(self, zeta, guess, settings)
    }

    fn prox(&self, u_ref: &[f64], tau: f64, settings: &NewtonSettings) -> (Vec<f64>, SolveReport) {
        inner::solve_prox(self, u_ref, tau, settings)
    }

    fn duality_map(&self, u: &[f64]) -> Vec<f64> {
        PLaplaceInstance::duality_map(self, u)
    }

    fn inverse_duality_map(&self, zeta: &[f64]) -> Vec<f64> {
        let q = self.q();
        zeta.iter().map(|&v| kernel(v, q)).collect()
    }

    fn norm(&self, u: &[f64]) -> f64 {
        self.lp_norm(u)
    }

    fn dual_norm(&self, zeta: &[f64]) -> f64 {
        self.lq_dual_norm(zeta)
    }

    fn pairing(&self, zeta: &[f64], u: &[f64]) -> f64 {
        self.domain.cell_volume() * zeta.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
    }

    fn h_energy(&self, u: &[f64]) -> f64 {
        weighted_power_sum(u, self.p, self.domain.cell_volume()) / self.p
    }

    fn h_dual_energy(&self, zeta: &[f64]) -> f64 {
        let q = self.q();
        weighted_power_sum(zeta, q, self.domain.cell_volume()) / q
    }

    fn constrain(&self, v: &mut [f64]) {
        self.domain.apply_dirichlet(v);
    }
}

impl SmoothPair for PLaplaceInstance {
    fn hessian_apply(&self, u: &[f64], x: &[f64]) -> Vec<f64> {
        self.jacobian_apply(u, x)
    }

    fn hessian_operator<'a>(&'a self, u: &[f64]) -> Box<dyn Fn(&[f64]) -> Vec<f64> + 'a> {
        let jac = self.jacobian(u);
        Box::new(move |x| self.domain.scatter(&jac.matvec(&self.domain.gather(x))))
    }

    fn duality_map_derivative(&self, w: &[f64], x: &[f64]) -> Vec<f64> {
        let eps = self.regularization(w);
        let p = self.p;
        let mut out: Vec<f64> = w.iter().zip(x).map(|(&w, &x)| (p - 1.0) * kernel_slope(w, p, eps) * x).collect();
        self.domain.apply_dirichlet(&mut out);
        out
    }
}
