use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Domain shapes. Both are centred at the origin: the square is
/// `(-s/2, s/2)^2` and the L-shape removes the closed upper-right quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Square,
    Lshape,
}

/// Uniform node lattice with a mask of unknowns. Every non-interior node
/// carries the value 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: (f64, f64),
    pub side: f64,
    pub shape: Shape,
    interior: Vec<bool>,
    interior_nodes: Vec<usize>,
    /// node index -> position in `interior_nodes`, `usize::MAX` for boundary nodes
    interior_slot: Vec<usize>,
}

impl GridDomain {
    /// Builds the lattice for `shape` with side length `side` and spacing `h`.
    pub fn new(shape: Shape, side: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !(side > 0.0) {
            return Err(Error::Config(format!("side ({side}) and h ({h}) must be positive")));
        }
        let cells = side / h;
        let n = cells.round();
        if (cells - n).abs() > 1e-9 * cells.max(1.0) || n < 2.0 {
            return Err(Error::Config(format!("side {side} is not an integral multiple of h = {h}")));
        }
        let cells = n as usize;
        let nx = cells + 1;
        let ny = cells + 1;
        let origin = (-side / 2.0, -side / 2.0);
        let tol = 1e-9 * h;
        let mut interior = vec![false; nx * ny];
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let x = origin.0 + i as f64 * h;
                let y = origin.1 + j as f64 * h;
                let notch = shape == Shape::Lshape && x > -tol && y > -tol;
                interior[j * nx + i] = !notch;
            }
        }
        let interior_nodes: Vec<usize> = (0..nx * ny).filter(|&k| interior[k]).collect();
        let mut interior_slot = vec![usize::MAX; nx * ny];
        for (slot, &k) in interior_nodes.iter().enumerate() {
            interior_slot[k] = slot;
        }
        Ok(Self { nx, ny, h, origin, side, shape, interior, interior_nodes, interior_slot })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Coordinates of node `(i, j)` (column, row).
    #[inline]
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (self.origin.0 + i as f64 * self.h, self.origin.1 + j as f64 * self.h)
    }

    pub fn coords_of(&self, k: usize) -> (f64, f64) {
        self.coords(k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn is_interior(&self, k: usize) -> bool {
        self.interior[k]
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior
    }

    /// Node indices of the unknowns, in row-major order.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    pub fn interior_count(&self) -> usize {
        self.interior_nodes.len()
    }

    /// Position of node `k` among the unknowns.
    #[inline]
    pub fn interior_slot(&self, k: usize) -> Option<usize> {
        let s = self.interior_slot[k];
        (s != usize::MAX).then_some(s)
    }

    /// Cell volume `h^2` used as the quadrature weight of every pairing.
    pub fn cell_volume(&self) -> f64 {
        self.h * self.h
    }

    pub fn gather(&self, full: &[f64]) -> Vec<f64> {
        self.interior_nodes.iter().map(|&k| full[k]).collect()
    }

    pub fn scatter(&self, interior: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.len()];
        for (&k, &v) in self.interior_nodes.iter().zip(interior) {
            full[k] = v;
        }
        full
    }

    /// Sets every non-interior entry to zero.
    pub fn apply_dirichlet(&self, values: &mut [f64]) {
        for (v, &inside) in values.iter_mut().zip(&self.interior) {
            if !inside {
                *v = 0.0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_node_counts() {
        let d = GridDomain::new(Shape::Square, 2.0, 0.02).unwrap();
        assert_eq!((d.nx, d.ny), (101, 101));
        assert_eq!(d.interior_count(), 99 * 99);
        assert!((d.h * (d.nx - 1) as f64 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lshape_matches_enumeration() {
        let h = 0.025;
        let d = GridDomain::new(Shape::Lshape, 2.0, h).unwrap();
        assert_eq!((d.nx, d.ny), (81, 81));
        // strictly inside (-1,1)^2 and not in [0,1)x[0,1), enumerated on integer lattice coordinates
        let mut expected = 0;
        for j in -40i32..=40 {
            for i in -40i32..=40 {
                let inside_square = i.abs() < 40 && j.abs() < 40;
                let in_notch = i >= 0 && j >= 0;
                if inside_square && !in_notch {
                    expected += 1;
                }
            }
        }
        assert_eq!(d.interior_count(), expected);
        assert_eq!(expected, 79 * 79 - 40 * 40);
    }

    #[test]
    fn non_integral_spacing_is_rejected() {
        assert!(matches!(GridDomain::new(Shape::Square, 2.0, 0.3), Err(Error::Config(_))));
    }

    #[test]
    fn interior_nodes_lie_strictly_inside() {
        let d = GridDomain::new(Shape::Lshape, 2.0, 0.1).unwrap();
        for &k in d.interior_nodes() {
            let (x, y) = d.coords_of(k);
            assert!(x.abs() < 1.0 && y.abs() < 1.0);
            assert!(!(x >= -1e-12 && y >= -1e-12));
        }
    }
}
