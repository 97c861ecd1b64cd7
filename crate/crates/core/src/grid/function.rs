use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::GridDomain;

/// Nodal values on a [`GridDomain`], row-major with row 0 at the smallest `y`.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub values: Vec<f64>,
    pub domain: Arc<GridDomain>,
}

impl GridFunction {
    /// Wraps `values`, zeroing every non-interior node.
    pub fn new(domain: Arc<GridDomain>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::Config(format!(
                "grid function has {} values but the domain has {} nodes",
                values.len(),
                domain.len()
            )));
        }
        domain.apply_dirichlet(&mut values);
        Ok(Self { values, domain })
    }

    pub fn zeros(domain: Arc<GridDomain>) -> Self {
        let values = vec![0.0; domain.len()];
        Self { values, domain }
    }

    /// Samples `f(x1, x2)` at every interior node.
    pub fn from_fn(domain: Arc<GridDomain>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; domain.len()];
        for &k in domain.interior_nodes() {
            let (x, y) = domain.coords_of(k);
            values[k] = f(x, y);
        }
        Self { values, domain }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.domain.index(i, j)]
    }

    /// Plain-text matrix: `ny` lines of `nx` comma-separated values, boundary zeros included.
    pub fn to_csv(&self) -> String {
        let d = &self.domain;
        let mut out = String::with_capacity(d.len() * 24);
        for j in 0..d.ny {
            for i in 0..d.nx {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{:e}", self.at(i, j)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn from_csv(domain: Arc<GridDomain>, text: &str) -> Result<Self> {
        let mut values = Vec::with_capacity(domain.len());
        let mut rows = 0;
        for (line_no, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            rows += 1;
            let before = values.len();
            for field in line.split(',') {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("line {}: cannot parse '{}' as a number", line_no + 1, field.trim())))?;
                values.push(v);
            }
            if values.len() - before != domain.nx {
                return Err(Error::Config(format!(
                    "line {}: expected {} columns, found {}",
                    line_no + 1,
                    domain.nx,
                    values.len() - before
                )));
            }
        }
        if rows != domain.ny {
            return Err(Error::Config(format!("expected {} rows, found {rows}", domain.ny)));
        }
        Self::new(domain, values)
    }

    pub fn read_csv(domain: Arc<GridDomain>, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_csv(domain, &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Shape;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip(seed in proptest::collection::vec(-1e3f64..1e3, 11 * 11)) {
            let d = Arc::new(GridDomain::new(Shape::Lshape, 2.0, 0.2).unwrap());
            let f = GridFunction::new(d.clone(), seed).unwrap();
            let g = GridFunction::from_csv(d, &f.to_csv()).unwrap();
            prop_assert_eq!(f.values, g.values);
        }
    }

    #[test]
    fn csv_has_boundary_zeros_and_orientation() {
        let d = Arc::new(GridDomain::new(Shape::Square, 2.0, 0.5).unwrap());
        let f = GridFunction::from_fn(d, |_, y| y);
        let csv = f.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].split(',').all(|v| v.parse::<f64>().unwrap() == 0.0));
        // row 1 is y = -0.5
        assert_eq!(lines[1].split(',').nth(2).unwrap().parse::<f64>().unwrap(), -0.5);
    }

    #[test]
    fn csv_shape_errors() {
        let d = Arc::new(GridDomain::new(Shape::Square, 2.0, 1.0).unwrap());
        assert!(GridFunction::from_csv(d.clone(), "0,0,0\n0,0,0\n").is_err());
        assert!(GridFunction::from_csv(d, "0,0\n0,0\n0,0\n").is_err());
    }
}
