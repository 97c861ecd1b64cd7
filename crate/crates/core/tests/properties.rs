use std::sync::Arc;

use proptest::prelude::*;

use nonlin_eig::functional::{fenchel_conjugate_value, FunctionalPair};
use nonlin_eig::grid::{GridDomain, Shape};
use nonlin_eig::metrics::{cosine_similarity, duality_gap, duality_gap_from_cosim, rayleigh_quotient};
use nonlin_eig::plaplace::PLaplaceInstance;
use nonlin_eig::spd::SpdInstance;

const H: f64 = 0.2;

fn instance(p: f64) -> PLaplaceInstance {
    let d = Arc::new(GridDomain::new(Shape::Lshape, 2.0, H).unwrap());
    PLaplaceInstance::with_radius(d, 0.45, p).unwrap()
}

/// Interior values of an 11x11 L-shape grid, boundary left at zero.
fn field(inst: &PLaplaceInstance, values: &[f64]) -> Vec<f64> {
    let mut u = vec![0.0; inst.domain.len()];
    for (&k, v) in inst.domain.interior_nodes().iter().zip(values) {
        u[k] = *v;
    }
    u
}

fn nonzero_values() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0f64..10.0, 80).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euler_identity(p in 1.1f64..6.0, v in nonzero_values()) {
        let inst = instance(p);
        let u = field(&inst, &v);
        prop_assert!(rel(inst.pairing(&inst.subgradient(&u), &u), p * inst.energy(&u)) <= 1e-10);
        prop_assert!(rel(inst.pairing(&inst.duality_map(&u), &u), p * inst.h_energy(&u)) <= 1e-10);
    }

    #[test]
    fn energy_is_p_homogeneous(p in 1.1f64..6.0, t in -5.0f64..5.0, v in nonzero_values()) {
        prop_assume!(t.abs() > 1e-3);
        let inst = instance(p);
        let u = field(&inst, &v);
        let tu: Vec<f64> = u.iter().map(|x| t * x).collect();
        prop_assert!(rel(inst.energy(&tu), t.abs().powf(p) * inst.energy(&u)) <= 1e-11);
    }

    #[test]
    fn duality_map_round_trip(p in 1.1f64..6.0, v in nonzero_values()) {
        let inst = instance(p);
        let u = field(&inst, &v);
        let back = inst.inverse_duality_map(&inst.duality_map(&u));
        for (a, b) in back.iter().zip(&u) {
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
        prop_assert!(rel(inst.dual_norm(&inst.duality_map(&u)), inst.norm(&u).powf(p - 1.0)) <= 1e-10);
    }

    #[test]
    fn fenchel_young(p in 1.1f64..6.0, a in nonzero_values(), b in nonzero_values()) {
        let inst = instance(p);
        let (u, w) = (field(&inst, &a), field(&inst, &b));
        let zeta = inst.subgradient(&w);
        let j_star = fenchel_conjugate_value(&inst, &zeta, &w);
        let scale = inst.energy(&u) + j_star.abs();
        prop_assert!(inst.energy(&u) + j_star - inst.pairing(&zeta, &u) >= -1e-10 * scale);
    }

    #[test]
    fn cosine_and_gap(p in 1.1f64..6.0, v in nonzero_values()) {
        let inst = instance(p);
        let u = field(&inst, &v);
        let zeta = inst.subgradient(&u);
        let c = cosine_similarity(&inst, &u, &zeta).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&c));
        let g = duality_gap(&inst, &u, &zeta, &u).unwrap();
        let g2 = duality_gap_from_cosim(&inst, &u, &zeta).unwrap();
        prop_assert!(g >= -1e-10);
        prop_assert!((g - g2).abs() <= 1e-8 * g2.abs().max(1e-6));
    }

    #[test]
    fn jacobian_is_symmetric(p in 1.1f64..6.0, v in nonzero_values()) {
        let inst = instance(p);
        let u = field(&inst, &v);
        let j = inst.jacobian(&u);
        prop_assert!(j.asymmetry() <= 1e-12 * j.diagonal().iter().fold(1.0f64, |m, x| m.max(x.abs())));
    }

    #[test]
    fn spd_quotient_bounded_by_spectrum(d in proptest::collection::vec(0.5f64..50.0, 4), v in proptest::collection::vec(-1.0f64..1.0, 4)) {
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
        let a = SpdInstance::diagonal(&d).unwrap();
        let r = rayleigh_quotient(&a, &v).unwrap();
        let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = d.iter().cloned().fold(0.0, f64::max);
        prop_assert!(r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12));
    }
}
