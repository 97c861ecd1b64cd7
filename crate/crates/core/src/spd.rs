//! Linear eigenproblem `A u = λ u` for a small dense SPD matrix, written as the
//! pair `J(u) = <Au, u>/2`, `H(u) = |u|^2/2` with `p = 2`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::functional::{dot, FunctionalPair, SmoothPair};
use crate::inner::{NewtonSettings, SolveReport};

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 64;

#[derive(Debug, Clone)]
pub struct SpdInstance {
    matrix: DMatrix<f64>,
    cholesky: Cholesky<f64, Dyn>,
    eigenvalues: Vec<f64>,
}

impl SpdInstance {
    /// Validates symmetry and positive definiteness of `matrix`.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || n != matrix.ncols() {
            return Err(Error::Instance(format!("matrix must be square and non-empty, got {}x{}", n, matrix.ncols())));
        }
        if n > MAX_DIM {
            return Err(Error::Instance(format!("dimension {n} exceeds the supported maximum {MAX_DIM}")));
        }
        let scale = matrix.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Instance(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        let mut eigenvalues: Vec<f64> = SymmetricEigen::new(matrix.clone()).eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        if eigenvalues[0] <= 0.0 {
            return Err(Error::Instance(format!("matrix is not positive definite (smallest eigenvalue {})", eigenvalues[0])));
        }
        let cholesky = Cholesky::new(matrix.clone())
            .ok_or_else(|| Error::Instance("Cholesky factorization failed".into()))?;
        Ok(Self { matrix, cholesky, eigenvalues })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Instance("matrix rows must all have length equal to the row count".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Eigenvalues of the matrix in ascending order, from the construction-time check.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(u)).iter().copied().collect()
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.cholesky.solve(&DVector::from_column_slice(rhs)).iter().copied().collect()
    }

    fn direct_report(&self, residual: f64) -> SolveReport {
        SolveReport { iterations: 1, final_residual: residual, converged: true, cg_iterations_total: 0 }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl FunctionalPair for SpdInstance {
    fn p(&self) -> f64 {
        2.0
    }

    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn energy(&self, u: &[f64]) -> f64 {
        0.5 * dot(&self.apply(u), u)
    }

    fn subgradient(&self, u: &[f64]) -> Vec<f64> {
        self.apply(u)
    }

    fn inverse_subgradient(&self, zeta: &[f64], _guess: &[f64], _settings: &NewtonSettings) -> (Vec<f64>, SolveReport) {
        let v = self.solve(zeta);
        let residual = max_abs_diff(&self.apply(&v), zeta);
        (v, self.direct_report(residual))
    }

    fn prox(&self, u_ref: &[f64], tau: f64, _settings: &NewtonSettings) -> (Vec<f64>, SolveReport) {
        let n = self.dim();
        let shifted = DMatrix::identity(n, n) + &self.matrix * tau;
        let v: Vec<f64> = shifted
            .cholesky()
            .expect("I + tau A is SPD for tau > 0")
            .solve(&DVector::from_column_slice(u_ref))
            .iter()
            .copied()
            .collect();
        let av = self.apply(&v);
        let residual = v.iter().zip(u_ref).zip(&av).map(|((v, u), a)| (v - u + tau * a).abs()).fold(0.0, f64::max);
        (v, self.direct_report(residual))
    }

    fn duality_map(&self, u: &[f64]) -> Vec<f64> {
        u.to_vec()
    }

    fn inverse_duality_map(&self, zeta: &[f64]) -> Vec<f64> {
        zeta.to_vec()
    }

    fn norm(&self, u: &[f64]) -> f64 {
        dot(u, u).sqrt()
    }

    fn dual_norm(&self, zeta: &[f64]) -> f64 {
        dot(zeta, zeta).sqrt()
    }

    fn pairing(&self, zeta: &[f64], u: &[f64]) -> f64 {
        dot(zeta, u)
    }
}

impl SmoothPair for SpdInstance {
    fn hessian_apply(&self, _u: &[f64], x: &[f64]) -> Vec<f64> {
        self.apply(x)
    }

    fn duality_map_derivative(&self, _w: &[f64], x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::fenchel_conjugate_value;

    #[test]
    fn rejects_non_symmetric_and_indefinite() {
        assert!(SpdInstance::from_rows(&[vec![2.0, 1.0], vec![0.0, 2.0]]).is_err());
        assert!(SpdInstance::diagonal(&[1.0, -1.0]).is_err());
        assert!(SpdInstance::diagonal(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn inverse_subgradient_inverts_the_matrix() {
        let a = SpdInstance::from_rows(&[vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 0.5], vec![0.0, 0.5, 2.0]]).unwrap();
        let zeta = [1.0, -2.0, 0.5];
        let (v, report) = a.inverse_subgradient(&zeta, &[0.0; 3], &NewtonSettings::default());
        assert!(report.converged);
        let back = a.apply(&v);
        for (x, y) in back.iter().zip(&zeta) {
            assert!((x - y).abs() <= 1e-10 * y.abs().max(1.0));
        }
    }

    #[test]
    fn conjugate_of_diagonal_example() {
        let a = SpdInstance::diagonal(&[2.0, 5.0]).unwrap();
        assert_eq!(fenchel_conjugate_value(&a, &[2.0, 0.0], &[1.0, 0.0]), 1.0);
        assert_eq!(fenchel_conjugate_value(&a, &[0.0, 0.0], &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn prox_solves_shifted_system() {
        let a = SpdInstance::diagonal(&[2.0, 5.0]).unwrap();
        let (v, _) = a.prox(&[1.0, 1.0], 0.1, &NewtonSettings::default());
        assert!((v[0] - 1.0 / 1.2).abs() < 1e-14);
        assert!((v[1] - 1.0 / 1.5).abs() < 1e-14);
    }
}
