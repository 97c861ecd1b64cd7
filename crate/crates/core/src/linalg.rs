//! Sparse symmetric matrices and Krylov solvers.
//!
//! Row-parallel kernels write disjoint outputs; every reduction runs
//! sequentially so results do not depend on the thread count.

use rayon::prelude::*;

use crate::functional::dot;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from per-row `(column, value)` lists, sorting each row by column.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().with_min_len(256).for_each(|(i, yi)| {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        });
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }
}

/// Result of a Krylov solve.
#[derive(Debug, Clone)]
pub struct KrylovResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final residual norm relative to `|b|`.
    pub relative_residual: f64,
    pub converged: bool,
}

fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}

/// Jacobi-preconditioned conjugate gradient for `A x = b` with `A` symmetric positive (semi)definite.
///
/// `apply` computes `A x`; zero diagonal entries are left unpreconditioned.
pub fn pcg(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    diagonal: &[f64],
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> KrylovResult {
    let n = b.len();
    let b_norm = norm2(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if b_norm == 0.0 {
        return KrylovResult { x: vec![0.0; n], iterations: 0, relative_residual: 0.0, converged: true };
    }
    let inv_diag: Vec<f64> = diagonal.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = norm2(&r) / b_norm;
    let mut it = 0;
    while rel > tol && it < max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        it += 1;
        rel = norm2(&r) / b_norm;
        if rel <= tol {
            break;
        }
        z.iter_mut().zip(&r).zip(&inv_diag).for_each(|((z, r), d)| *z = r * d);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
    }
    KrylovResult { x, iterations: it, relative_residual: rel, converged: rel <= tol }
}

/// MINRES for symmetric, possibly indefinite, systems `A x = b` (zero initial guess).
pub fn minres(apply: impl Fn(&[f64]) -> Vec<f64>, b: &[f64], tol: f64, max_iter: usize) -> KrylovResult {
    let n = b.len();
    let mut x = vec![0.0; n];
    let beta1 = norm2(b);
    if beta1 == 0.0 {
        return KrylovResult { x, iterations: 0, relative_residual: 0.0, converged: true };
    }
    let mut v_prev = vec![0.0; n];
    let mut v: Vec<f64> = b.iter().map(|b| b / beta1).collect();
    let mut w_prev2 = vec![0.0; n];
    let mut w_prev = vec![0.0; n];
    let (mut beta, mut eta) = (beta1, beta1);
    let (mut c_prev, mut c, mut s_prev, mut s) = (1.0, 1.0, 0.0, 0.0);
    let mut it = 0;
    let mut rel = 1.0;
    while it < max_iter {
        let mut z = apply(&v);
        let alpha = dot(&v, &z);
        z.iter_mut().zip(&v).zip(&v_prev).for_each(|((z, v), vp)| *z -= alpha * v + beta * vp);
        let beta_new = norm2(&z);
        let delta = c * alpha - c_prev * s * beta;
        let rho1 = delta.hypot(beta_new);
        let rho2 = s * alpha + c_prev * c * beta;
        let rho3 = s_prev * beta;
        if rho1 == 0.0 {
            break;
        }
        let c_new = delta / rho1;
        let s_new = beta_new / rho1;
        let w: Vec<f64> = v
            .iter()
            .zip(&w_prev2)
            .zip(&w_prev)
            .map(|((v, w2), w1)| (v - rho3 * w2 - rho2 * w1) / rho1)
            .collect();
        axpy(&mut x, c_new * eta, &w);
        eta *= -s_new;
        it += 1;
        rel = eta.abs() / beta1;
        if rel <= tol || beta_new == 0.0 {
            break;
        }
        w_prev2 = std::mem::replace(&mut w_prev, w);
        v_prev = std::mem::replace(&mut v, z.iter().map(|z| z / beta_new).collect());
        beta = beta_new;
        c_prev = c;
        c = c_new;
        s_prev = s;
        s = s_new;
    }
    KrylovResult { x, iterations: it, relative_residual: rel, converged: rel <= tol }
}
