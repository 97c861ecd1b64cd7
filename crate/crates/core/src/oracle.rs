//! Dense reference computations used to check the iterative solvers:
//! symmetric eigendecompositions, a symmetry-reduced ground-state solve for
//! square grids, and random SPD test matrices.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Shape;
use crate::plaplace::PLaplaceInstance;

/// Eigenvalues (ascending) and matching unit eigenvectors of a symmetric matrix.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    (values, vectors)
}

/// Smallest eigenvalue of the assembled `p = 2` operator, from a full dense eigendecomposition.
pub fn dense_ground_state(inst: &PLaplaceInstance) -> Result<f64> {
    if inst.p != 2.0 {
        return Err(Error::Config("the dense operator oracle needs p = 2".into()));
    }
    let a = inst.jacobian(&vec![0.0; inst.domain.len()]).to_dense();
    Ok(symmetric_eigen(&a).0[0])
}

/// Smallest eigenvalue of the `p = 2` operator on a square grid, computed in the
/// subspace of fields invariant under the eight symmetries of the square.
///
/// The operator commutes with those symmetries and its ground state is simple
/// and positive, hence invariant; the reduced problem therefore has the same
/// smallest eigenvalue at roughly an eighth of the size.
pub fn symmetric_ground_state(inst: &PLaplaceInstance) -> Result<f64> {
    let d = &inst.domain;
    if inst.p != 2.0 || d.shape != Shape::Square || d.nx != d.ny {
        return Err(Error::Config("the symmetry-reduced oracle needs p = 2 on a square grid".into()));
    }
    let n = d.nx;
    let canonical = |i: usize, j: usize| {
        let (a, b) = (i.min(n - 1 - i), j.min(n - 1 - j));
        (a.min(b), a.max(b))
    };
    let mut orbit_of = HashMap::new();
    let mut orbit_size: Vec<usize> = Vec::new();
    let mut slot_orbit = Vec::with_capacity(d.interior_count());
    for &k in d.interior_nodes() {
        let key = canonical(k % n, k / n);
        let next = orbit_of.len();
        let o = *orbit_of.entry(key).or_insert(next);
        if o == orbit_size.len() {
            orbit_size.push(0);
        }
        orbit_size[o] += 1;
        slot_orbit.push(o);
    }
    let m = orbit_size.len();
    let jac = inst.jacobian(&vec![0.0; d.len()]);
    let mut b = DMatrix::zeros(m, m);
    for s in 0..jac.n {
        for (c, v) in jac.row(s) {
            b[(slot_orbit[s], slot_orbit[c])] += v;
        }
    }
    for a in 0..m {
        for c in 0..m {
            b[(a, c)] /= (orbit_size[a] as f64 * orbit_size[c] as f64).sqrt();
        }
    }
    Ok(symmetric_eigen(&b).0[0])
}

/// Random SPD matrix `Q diag(λ) Qᵀ` with `Q` from a QR factorization of a Gaussian-like matrix.
///
/// The spectrum is `1`, `cond`, and `n - 2` values drawn log-uniformly from `[min_gap, cond]`,
/// so the smallest eigenvalue is 1 and is separated from the rest by the factor `min_gap`.
pub fn random_spd(n: usize, cond: f64, min_gap: f64, rng: &mut ChaCha8Rng) -> (DMatrix<f64>, Vec<f64>) {
    assert!(n >= 2 && cond > min_gap && min_gap > 1.0);
    let mut spectrum = vec![1.0, cond];
    let (lo, hi) = (min_gap.ln(), cond.ln());
    for _ in 2..n {
        spectrum.push((lo + (hi - lo) * rng.random::<f64>()).exp());
    }
    let g = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let q = g.qr().q();
    let a = &q * DMatrix::from_diagonal(&DVector::from_vec(spectrum.clone())) * q.transpose();
    let sym = (&a + a.transpose()) * 0.5;
    spectrum.sort_by(f64::total_cmp);
    (sym, spectrum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDomain;
    use rand::SeedableRng;
    use std::sync::Arc;

    #[test]
    fn symmetry_reduction_matches_full_problem() {
        let d = Arc::new(GridDomain::new(Shape::Square, 2.0, 0.1).unwrap());
        let inst = PLaplaceInstance::with_radius(d, 0.25, 2.0).unwrap();
        let full = dense_ground_state(&inst).unwrap();
        let reduced = symmetric_ground_state(&inst).unwrap();
        assert!((full - reduced).abs() < 1e-10 * full, "{full} vs {reduced}");
    }

    #[test]
    fn random_spd_has_requested_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (a, spec) = random_spd(8, 1e4, 1.5, &mut rng);
        let (vals, _) = symmetric_eigen(&a);
        for (x, y) in vals.iter().zip(&spec) {
            assert!((x - y).abs() < 1e-9 * y);
        }
        assert_eq!(spec[0], 1.0);
        assert!(spec[1] >= 1.5);
    }

    #[test]
    fn eigen_sorted_and_orthonormal() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let (vals, vecs) = symmetric_eigen(&a);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        assert!((vals[0] - (2.0 - 2f64.sqrt())).abs() < 1e-12);
        assert!((vecs[0].norm() - 1.0).abs() < 1e-12);
    }
}
