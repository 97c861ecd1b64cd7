use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::GridDomain;

/// Lattice ball `B_r` used by the mean-value p-Laplacian, with its prefactor
/// `C_h = h^2 / (D_{2,p} π r^{p+2})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    /// Integer offsets `(dy, dx)` with `0 < h |(dx, dy)| <= r`, sorted.
    pub offsets: Vec<(i32, i32)>,
    pub radius: f64,
    pub weight: f64,
    /// The dimensional constant `D_{2,p}` that entered `weight`.
    pub mean_value_constant: f64,
}

impl Stencil {
    /// Builds the stencil for spacing `h`, radius `r` and exponent `p`.
    /// `constant` overrides the default [`mean_value_constant`].
    pub fn new(h: f64, r: f64, p: f64, constant: Option<f64>) -> Result<Self> {
        if !(r >= h * (1.0 - 1e-12)) {
            return Err(Error::Config(format!("mean value radius {r} is smaller than the spacing {h}")));
        }
        if !(p > 1.0) {
            return Err(Error::Config(format!("p must exceed 1, got {p}")));
        }
        let d = constant.unwrap_or_else(|| mean_value_constant(p));
        if !(d > 0.0) {
            return Err(Error::Config(format!("mean value constant must be positive, got {d}")));
        }
        let reach = r / h;
        let limit = reach * reach * (1.0 + 1e-12);
        let m = reach.floor() as i32 + 1;
        let mut offsets = Vec::new();
        for dy in -m..=m {
            for dx in -m..=m {
                let n2 = (dx * dx + dy * dy) as f64;
                if n2 > 0.0 && n2 <= limit {
                    offsets.push((dy, dx));
                }
            }
        }
        let weight = h * h / (d * PI * r.powf(p + 2.0));
        Ok(Self { offsets, radius: r, weight, mean_value_constant: d })
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Largest |offset| component.
    pub fn reach(&self) -> i32 {
        self.offsets.iter().map(|&(dy, dx)| dy.abs().max(dx.abs())).max().unwrap_or(0)
    }
}

/// Stencil for `domain` with the default mean-value constant.
pub fn build_stencil(domain: &GridDomain, r: f64, p: f64) -> Result<Stencil> {
    Stencil::new(domain.h, r, p, None)
}

/// `D_{2,p} = 1/(2+p) · (1/2π) ∫_0^{2π} |cos θ|^p dθ`, the normalization that makes
/// `(1/(D r^p)) ⨍_{B_r} |u(x+y)-u(x)|^{p-2}(u(x+y)-u(x)) dy → Δ_p u(x)` in two dimensions.
///
/// Evaluated by adaptive Simpson quadrature on a quarter period.
pub fn mean_value_constant(p: f64) -> f64 {
    let f = |t: f64| t.cos().max(0.0).powf(p);
    let quarter = adaptive_simpson(&f, 0.0, PI / 2.0, 1e-15, 50);
    (2.0 / PI) * quarter / (2.0 + p)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_stencils() {
        assert_eq!(Stencil::new(1.0, 1.0, 2.0, None).unwrap().len(), 4);
        assert_eq!(Stencil::new(1.0, 1.5, 2.0, None).unwrap().len(), 8);
        assert!(Stencil::new(1.0, 0.5, 2.0, None).is_err());
    }

    #[test]
    fn offsets_match_disk_enumeration() {
        let h: f64 = 0.02;
        let r = h.sqrt();
        let s = Stencil::new(h, r, 3.0, None).unwrap();
        // count lattice points in the disk of radius r/h by scanning a generous box
        let reach = r / h;
        let mut count = 0;
        for a in -20i64..=20 {
            for b in -20i64..=20 {
                let len = ((a * a + b * b) as f64).sqrt() * h;
                if (a, b) != (0, 0) && len <= r + 1e-12 {
                    count += 1;
                }
            }
        }
        assert!(reach < 20.0);
        assert_eq!(s.len(), count);
    }

    #[test]
    fn offsets_are_symmetric_without_center() {
        let s = Stencil::new(0.05, 0.2, 3.0, None).unwrap();
        for &(dy, dx) in &s.offsets {
            assert_ne!((dy, dx), (0, 0));
            assert!(s.offsets.contains(&(-dy, -dx)));
        }
    }

    #[test]
    fn constant_matches_closed_forms() {
        // (1/2π)∫|cos|^2 = 1/2, (1/2π)∫|cos|^4 = 3/8
        assert!((mean_value_constant(2.0) - 1.0 / 8.0).abs() < 1e-13);
        assert!((mean_value_constant(4.0) - 3.0 / 48.0).abs() < 1e-13);
        // (1/2π)∫|cos|^3 = 4/(3π)
        assert!((mean_value_constant(3.0) - 4.0 / (3.0 * PI) / 5.0).abs() < 1e-12);
    }
}
