//! Scalar diagnostics of primal and dual iterates and per-iteration records.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{fenchel_conjugate_value, FunctionalPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub rq: f64,
    /// Missing when the solver has no subgradient pair for the dual iterate.
    pub dual_rq: Option<f64>,
    pub cosim: f64,
    pub gap: f64,
    pub residual: f64,
    pub inner_iters: usize,
    /// Seconds since the solver started.
    pub wall_time: f64,
}

pub const CSV_HEADER: &str = "iter,rq,dual_rq,cosim,gap,residual,inner_iters,wall_time";

impl IterationRecord {
    pub fn csv_row(&self) -> String {
        let dual = self.dual_rq.map_or_else(String::new, |v| format!("{v:e}"));
        format!(
            "{},{:e},{},{:e},{:e},{:e},{},{:e}",
            self.k, self.rq, dual, self.cosim, self.gap, self.residual, self.inner_iters, self.wall_time
        )
    }
}

pub fn records_to_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

fn nonzero(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|&x| x == 0.0) {
        Err(Error::Domain(format!("{what} is zero")))
    } else {
        Ok(())
    }
}

/// `R(u) = J(u) / H(u)`.
pub fn rayleigh_quotient<P: FunctionalPair + ?Sized>(pair: &P, u: &[f64]) -> Result<f64> {
    nonzero(u, "primal vector")?;
    Ok(pair.energy(u) / pair.h_energy(u))
}

/// `R(u)` through the Euler identity, `<∂J(u), u> / (p H(u))`.
pub fn rayleigh_quotient_euler<P: FunctionalPair + ?Sized>(pair: &P, u: &[f64]) -> Result<f64> {
    nonzero(u, "primal vector")?;
    Ok(pair.pairing(&pair.subgradient(u), u) / (pair.p() * pair.h_energy(u)))
}

/// `R*(ζ) = J*(ζ) / H*(ζ)` with `J*` evaluated through `v ∈ ∂J*(ζ)`.
pub fn dual_rayleigh_quotient<P: FunctionalPair + ?Sized>(pair: &P, zeta: &[f64], v: &[f64]) -> Result<f64> {
    nonzero(zeta, "dual vector")?;
    Ok(fenchel_conjugate_value(pair, zeta, v) / pair.h_dual_energy(zeta))
}

/// `<ζ, u> / (|u|_H |ζ|_{H*})`.
pub fn cosine_similarity<P: FunctionalPair + ?Sized>(pair: &P, u: &[f64], zeta: &[f64]) -> Result<f64> {
    nonzero(u, "primal vector")?;
    nonzero(zeta, "dual vector")?;
    Ok(pair.pairing(zeta, u) / (pair.norm(u) * pair.dual_norm(zeta)))
}

/// `g(u, ζ) = R(u)^{-1/p} - sign(J*(ζ)) |R*(ζ)|^{1/q}` with `v ∈ ∂J*(ζ)`.
pub fn duality_gap<P: FunctionalPair + ?Sized>(pair: &P, u: &[f64], zeta: &[f64], v: &[f64]) -> Result<f64> {
    let r = rayleigh_quotient(pair, u)?;
    nonzero(zeta, "dual vector")?;
    let j_star = fenchel_conjugate_value(pair, zeta, v);
    let r_star = j_star / pair.h_dual_energy(zeta);
    let sign = if j_star > 0.0 {
        1.0
    } else if j_star < 0.0 {
        -1.0
    } else {
        0.0
    };
    Ok(r.powf(-1.0 / pair.p()) - sign * r_star.abs().powf(1.0 / pair.q()))
}

/// `(1 - cosim(u, ζ)) R(u)^{-1/p}`, the gap for `ζ ∈ ∂J(u)` with homogeneous `J`.
pub fn duality_gap_from_cosim<P: FunctionalPair + ?Sized>(pair: &P, u: &[f64], zeta: &[f64]) -> Result<f64> {
    let c = cosine_similarity(pair, u, zeta)?;
    Ok((1.0 - c) * rayleigh_quotient(pair, u)?.powf(-1.0 / pair.p()))
}

/// Unweighted Euclidean distance between `∂J(u)` and `∂H(u)`, each scaled to unit dual norm.
pub fn eigen_residual<P: FunctionalPair + ?Sized>(pair: &P, u: &[f64]) -> Result<f64> {
    nonzero(u, "primal vector")?;
    let a = pair.subgradient(u);
    let b = pair.duality_map(u);
    let (na, nb) = (pair.dual_norm(&a), pair.dual_norm(&b));
    if na == 0.0 {
        return Err(Error::Domain("operator output is zero".into()));
    }
    Ok(a.iter().zip(&b).map(|(x, y)| (x / na - y / nb).powi(2)).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::FunctionalPair;
    use crate::inner::NewtonSettings;
    use crate::spd::SpdInstance;

    fn diag25() -> SpdInstance {
        SpdInstance::diagonal(&[2.0, 5.0]).unwrap()
    }

    #[test]
    fn rayleigh_quotient_values() {
        let a = diag25();
        assert_eq!(rayleigh_quotient(&a, &[1.0, 0.0]).unwrap(), 2.0);
        assert!((rayleigh_quotient(&a, &[1.0, 1.0]).unwrap() - 3.5).abs() < 1e-15);
        assert!(rayleigh_quotient(&a, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn dual_quotient_at_eigenpair() {
        let a = diag25();
        let r = dual_rayleigh_quotient(&a, &[2.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
        assert!(dual_rayleigh_quotient(&a, &[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn cosine_values() {
        let a = diag25();
        assert!((cosine_similarity(&a, &[0.3, -0.4], &[0.3, -0.4]).unwrap() - 1.0).abs() < 1e-15);
        assert!((cosine_similarity(&a, &[1.0, 0.0], &[2.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&a, &[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(cosine_similarity(&a, &[1.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn gap_zero_at_eigenpair_and_routes_agree_elsewhere() {
        let a = diag25();
        assert!(duality_gap(&a, &[1.0, 0.0], &[2.0, 0.0], &[1.0, 0.0]).unwrap().abs() < 1e-12);
        let s = 0.5f64.sqrt();
        let u = [s, s];
        let zeta = a.subgradient(&u);
        let (v, _) = a.inverse_subgradient(&zeta, &u, &NewtonSettings::default());
        let g = duality_gap(&a, &u, &zeta, &v).unwrap();
        let g2 = duality_gap_from_cosim(&a, &u, &zeta).unwrap();
        assert!(g > 0.0);
        assert!((g - g2).abs() <= 1e-8 * g2.abs());
    }

    #[test]
    fn residual_vanishes_only_at_eigenvectors() {
        let a = diag25();
        assert!(eigen_residual(&a, &[0.0, -3.0]).unwrap() < 1e-15);
        assert!(eigen_residual(&a, &[1.0, 1.0]).unwrap() > 0.1);
    }

    #[test]
    fn csv_layout() {
        let r = IterationRecord { k: 3, rq: 2.0, dual_rq: None, cosim: 1.0, gap: 0.0, residual: 1e-3, inner_iters: 7, wall_time: 0.5 };
        let csv = records_to_csv(&[r.clone(), IterationRecord { dual_rq: Some(0.25), ..r }]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "3,2e0,,1e0,0e0,1e-3,7,5e-1");
        assert_eq!(lines[2].split(',').nth(2), Some("2.5e-1"));
    }
}
