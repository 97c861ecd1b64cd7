//! Invariant and acceptance checks shared by the `validate` command and the
//! acceptance test target.
//!
//! Every check returns named parts with a pass flag and a short measurement, so
//! a caller can print a table and decide what counts as failure.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigen::{
    geometric_target, partial_rayleigh_quotients, run_balanced_ipm, run_geometric, run_ipm, run_ppm, EigenSettings,
    EigenTrace, PartialQuotient, StepDetail,
};
use crate::error::Result;
use crate::functional::{check_growth_constant, fenchel_conjugate_value, FunctionalPair};
use crate::grid::{eval_initial_guess, GridDomain, InitialGuess, Shape};
use crate::metrics;
use crate::oracle::{dense_ground_state, random_spd, symmetric_eigen, symmetric_ground_state};
use crate::plaplace::PLaplaceInstance;
use crate::spd::SpdInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Quick,
    Full,
}

/// One pass/fail measurement.
#[derive(Debug, Clone)]
pub struct Part {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Part {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// A named group of parts.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub parts: Vec<Part>,
    pub seconds: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.parts.iter().all(|p| p.passed)
    }

    fn timed(name: impl Into<String>, f: impl FnOnce() -> Result<Vec<Part>>) -> Self {
        let start = Instant::now();
        let parts = f().unwrap_or_else(|e| vec![Part::new("evaluation", false, e.to_string())]);
        Self { name: name.into(), parts, seconds: start.elapsed().as_secs_f64() }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        writeln!(f, "{verdict}  {}  ({:.1} s)", self.name, self.seconds)?;
        for p in &self.parts {
            writeln!(f, "    [{}] {}: {}", if p.passed { "ok" } else { "FAIL" }, p.name, p.detail)?;
        }
        Ok(())
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform values in `[-1, 1]` on the interior nodes, zero elsewhere.
pub fn random_field(inst: &PLaplaceInstance, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = &inst.domain;
    let mut u = vec![0.0; d.len()];
    for &k in d.interior_nodes() {
        u[k] = rng.random_range(-1.0..1.0);
    }
    u
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn grid_instance(shape: Shape, h: f64, r: f64, p: f64) -> Result<PLaplaceInstance> {
    let d = Arc::new(GridDomain::new(shape, 2.0, h)?);
    PLaplaceInstance::with_radius(d, r, p)
}

pub fn initial_field(inst: &PLaplaceInstance, guess: InitialGuess) -> Vec<f64> {
    eval_initial_guess(&guess, inst.domain.clone()).values
}

fn worst(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// invariants of a functional pair

/// `1/p + 1/q = 1`.
pub fn check_exponents<P: FunctionalPair + ?Sized>(pair: &P) -> Part {
    let e = (1.0 / pair.p() + 1.0 / pair.q() - 1.0).abs();
    Part::new("conjugate exponents", e <= 4.0 * f64::EPSILON, format!("|1/p + 1/q - 1| = {e:.1e}"))
}

/// Euler identities `p J(u) = <∂J(u), u>` and `p H(u) = <∂H(u), u>`, relative 1e-10.
pub fn check_euler_identity<P: FunctionalPair + ?Sized>(pair: &P, samples: &[Vec<f64>]) -> Part {
    let p = pair.p();
    let mut e_j: f64 = 0.0;
    let mut e_h: f64 = 0.0;
    for u in samples {
        e_j = e_j.max(rel_err(pair.pairing(&pair.subgradient(u), u), p * pair.energy(u)));
        e_h = e_h.max(rel_err(pair.pairing(&pair.duality_map(u), u), p * pair.h_energy(u)));
    }
    Part::new(
        "Euler identity",
        e_j <= 1e-10 && e_h <= 1e-10,
        format!("worst relative error {e_j:.1e} for J, {e_h:.1e} for H"),
    )
}

/// `|∂H(u)|_{H*} = |u|_H^{p-1}`, relative 1e-10.
pub fn check_norm_link<P: FunctionalPair + ?Sized>(pair: &P, samples: &[Vec<f64>]) -> Part {
    let e = worst(samples.iter().map(|u| rel_err(pair.dual_norm(&pair.duality_map(u)), pair.norm(u).powf(pair.p() - 1.0))));
    Part::new("norm link", e <= 1e-10, format!("worst relative error {e:.1e}"))
}

/// `J(t u) = |t|^p J(u)` for a few `t`.
pub fn check_homogeneity<P: FunctionalPair + ?Sized>(pair: &P, samples: &[Vec<f64>]) -> Part {
    let mut e: f64 = 0.0;
    for u in samples {
        for t in [-2.5, -0.3, 0.7, 4.0] {
            let tu: Vec<f64> = u.iter().map(|x| t * x).collect();
            e = e.max(rel_err(pair.energy(&tu), f64::abs(t).powf(pair.p()) * pair.energy(u)));
        }
    }
    Part::new("homogeneity", e <= 1e-12, format!("worst relative error {e:.1e}"))
}

/// Fenchel–Young `<ζ, u> <= J(u) + J*(ζ)` for `ζ = ∂J(w)` of an unrelated `w`, and
/// agreement of the two evaluations of `J*`.
pub fn check_fenchel_young<P: FunctionalPair + ?Sized>(pair: &P, samples: &[Vec<f64>]) -> Vec<Part> {
    let mut slack = f64::INFINITY;
    let mut formula: f64 = 0.0;
    for (u, w) in samples.iter().zip(samples.iter().cycle().skip(1)) {
        let zeta = pair.subgradient(w);
        let j_star = fenchel_conjugate_value(pair, &zeta, w);
        let scale = pair.energy(u) + j_star.abs();
        slack = slack.min((pair.energy(u) + j_star - pair.pairing(&zeta, u)) / scale.max(1e-300));
        formula = formula.max(rel_err(j_star, pair.pairing(&zeta, w) / pair.q()));
    }
    vec![
        Part::new("Fenchel-Young inequality", slack >= -1e-10, format!("smallest relative slack {slack:.2e}")),
        Part::new("conjugate value formulas agree", formula <= 1e-8, format!("worst relative difference {formula:.1e}")),
    ]
}

/// Bound `R*(ζ)^{1/q} <= cosim(u, ζ) R(u)^{-1/p}` for `ζ = ∂J(u)` (tight for
/// homogeneous pairs), and agreement of the two duality-gap evaluations.
pub fn check_duality_relations<P: FunctionalPair + ?Sized>(pair: &P, samples: &[Vec<f64>]) -> Result<Vec<Part>> {
    let (p, q) = (pair.p(), pair.q());
    let mut slack = f64::INFINITY;
    let mut tight: f64 = 0.0;
    let mut gap_diff: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    for u in samples {
        let zeta = pair.subgradient(u);
        let lhs = metrics::dual_rayleigh_quotient(pair, &zeta, u)?.powf(1.0 / q);
        let rhs = metrics::cosine_similarity(pair, u, &zeta)? * metrics::rayleigh_quotient(pair, u)?.powf(-1.0 / p);
        slack = slack.min(rhs - lhs);
        tight = tight.max(rel_err(lhs, rhs));
        let g = metrics::duality_gap(pair, u, &zeta, u)?;
        let g2 = metrics::duality_gap_from_cosim(pair, u, &zeta)?;
        gap_diff = gap_diff.max(rel_err(g, g2));
        min_gap = min_gap.min(g);
    }
    Ok(vec![
        Part::new("rescaled quotient bound", slack >= -1e-10, format!("smallest slack {slack:.2e}")),
        Part::new("rescaled quotient bound is tight", tight <= 1e-8, format!("worst relative difference {tight:.1e}")),
        Part::new("duality gap formulas agree", gap_diff <= 1e-8, format!("worst relative difference {gap_diff:.1e}")),
        Part::new("duality gap nonnegative", min_gap >= -1e-10, format!("smallest gap {min_gap:.2e}")),
    ])
}

/// Every pair-level invariant on the given samples.
pub fn pair_invariants<P: FunctionalPair + ?Sized>(pair: &P, samples: &[Vec<f64>]) -> Result<Vec<Part>> {
    let mut parts = vec![
        check_exponents(pair),
        check_euler_identity(pair, samples),
        check_norm_link(pair, samples),
        check_homogeneity(pair, samples),
    ];
    parts.extend(check_fenchel_young(pair, samples));
    parts.extend(check_duality_relations(pair, samples)?);
    let mut euler_rq: f64 = 0.0;
    let mut cos_range = (f64::INFINITY, f64::NEG_INFINITY);
    for u in samples {
        euler_rq = euler_rq.max(rel_err(metrics::rayleigh_quotient_euler(pair, u)?, metrics::rayleigh_quotient(pair, u)?));
        let c = metrics::cosine_similarity(pair, u, &pair.subgradient(u))?;
        cos_range = (cos_range.0.min(c), cos_range.1.max(c));
    }
    parts.push(Part::new("Rayleigh quotient routes agree", euler_rq <= 1e-9, format!("worst relative difference {euler_rq:.1e}")));
    parts.push(Part::new(
        "cosine similarity range",
        cos_range.0 >= 0.0 && cos_range.1 <= 1.0 + 1e-12,
        format!("observed [{:.4}, {:.4}]", cos_range.0, cos_range.1),
    ));
    Ok(parts)
}

// ---------------------------------------------------------------------------
// instance-level invariants

fn spd_invariants() -> Result<Vec<Part>> {
    let mut rng = seeded(11);
    let (m, _) = random_spd(8, 1e3, 1.5, &mut rng);
    let a = SpdInstance::new(m.clone())?;
    let samples: Vec<Vec<f64>> = (0..50).map(|_| random_vector(8, &mut rng)).collect();
    let mut parts = pair_invariants(&a, &samples)?;
    let (values, vectors) = symmetric_eigen(&m);
    let mut eig: f64 = 0.0;
    let mut dual: f64 = 0.0;
    let mut resid: f64 = 0.0;
    for (lambda, v) in values.iter().zip(&vectors) {
        let v: Vec<f64> = v.iter().copied().collect();
        let g = a.subgradient(&v);
        let d = a.duality_map(&v);
        eig = eig.max(g.iter().zip(&d).map(|(x, y)| (x - lambda * y).powi(2)).sum::<f64>().sqrt());
        dual = dual.max(rel_err(metrics::dual_rayleigh_quotient(&a, &g, &v)?, 1.0 / lambda));
        resid = resid.max(metrics::eigen_residual(&a, &v)?);
    }
    parts.push(Part::new("matrix eigenpairs are p-eigenpairs", eig <= 1e-10, format!("worst |∂J(v) - λ∂H(v)| = {eig:.1e}")));
    parts.push(Part::new("dual quotient at eigenpairs equals 1/λ", dual <= 1e-10, format!("worst relative error {dual:.1e}")));
    parts.push(Part::new("eigen residual vanishes at eigenpairs", resid <= 1e-10, format!("largest residual {resid:.1e}")));
    let mut inv: f64 = 0.0;
    for z in &samples {
        let (x, _) = a.inverse_subgradient(z, &vec![0.0; 8], &Default::default());
        let ax = a.apply(&x);
        inv = inv.max(ax.iter().zip(z).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max) / z.iter().fold(0.0f64, |s, x| s.max(x.abs())));
    }
    parts.push(Part::new("inverse subgradient solves A x = ζ", inv <= 1e-10, format!("worst relative error {inv:.1e}")));
    let growth = check_growth_constant(&a, &samples, values[0])?;
    parts.push(Part::new(
        "growth bound with the smallest eigenvalue",
        growth.passed(),
        format!("smallest ratio {:.6} vs λ = {:.6}", growth.worst_ratio, values[0]),
    ));
    Ok(parts)
}

fn grid_invariants(p: f64) -> Result<Vec<Part>> {
    let inst = grid_instance(Shape::Lshape, 0.1, 0.25, p)?;
    let mut rng = seeded(5 + p as u64);
    let samples: Vec<Vec<f64>> = (0..30).map(|_| random_field(&inst, &mut rng)).collect();
    let mut parts = pair_invariants(&inst, &samples)?;
    let asym = worst(samples.iter().take(5).map(|u| inst.jacobian(u).asymmetry()));
    parts.push(Part::new("Jacobian is symmetric", asym <= 1e-12, format!("largest asymmetry {asym:.1e}")));
    Ok(parts)
}

fn grid_growth() -> Result<Vec<Part>> {
    let inst = grid_instance(Shape::Square, 0.1, 0.25, 2.0)?;
    let lambda = dense_ground_state(&inst)?;
    let mut rng = seeded(21);
    let samples: Vec<Vec<f64>> = (0..100).map(|_| random_field(&inst, &mut rng)).collect();
    let g = check_growth_constant(&inst, &samples, lambda)?;
    Ok(vec![Part::new(
        "growth bound with the dense ground state",
        g.passed(),
        format!("{} violations, smallest ratio {:.4} vs λ = {lambda:.4}", g.violations.len(), g.worst_ratio),
    )])
}

fn solver_invariants() -> Result<Vec<Part>> {
    let inst = grid_instance(Shape::Lshape, 0.1, 0.25, 3.0)?;
    let u0 = initial_field(&inst, InitialGuess::Ex1);
    let mut settings = EigenSettings::with_iters(200);
    settings.residual_tol = Some(1e-9);
    let ipm = run_ipm(&inst, &u0, &settings)?;
    let lam_inv = match ipm.steps.last().map(|s| &s.detail) {
        Some(StepDetail::Ipm { lambda_inverse }) => *lambda_inverse,
        _ => f64::NAN,
    };
    let mut parts = vec![Part::new(
        "inverse power estimates agree",
        rel_err(lam_inv, ipm.final_lambda) <= 1e-6,
        format!("R(u) = {:.10}, |u^(k+1/2)|^(1-p) = {lam_inv:.10}", ipm.final_lambda),
    )];
    let u = &ipm.final_u;
    let zeta = inst.duality_map(u);
    let (half, _) = inst.inverse_subgradient(&zeta, u, &settings.newton);
    let r_star = metrics::dual_rayleigh_quotient(&inst, &zeta, &half)?;
    let e = rel_err(r_star, inst.pairing(&zeta, &half));
    parts.push(Part::new("dual quotient equals <ζ, u^(k+1/2)> for unit ζ", e <= 1e-9, format!("relative difference {e:.1e}")));
    let ppm = run_ppm(&inst, &u0, 0.5, &settings)?;
    let rec = match ppm.steps.last().map(|s| &s.detail) {
        Some(StepDetail::Ppm { recovered_lambda, .. }) => *recovered_lambda,
        _ => f64::NAN,
    };
    parts.push(Part::new(
        "proximal recovered eigenvalue",
        ppm.converged && rel_err(rec, ppm.final_lambda) <= 1e-6,
        format!("R(u) = {:.10}, recovered {rec:.10}", ppm.final_lambda),
    ));
    let below_one = ppm.steps.iter().all(|s| matches!(s.detail, StepDetail::Ppm { dual_rq_tau, .. } if dual_rq_tau < 1.0));
    parts.push(Part::new("proximal dual quotient below 1", below_one, format!("{} steps", ppm.steps.len())));
    let geo = run_geometric(&inst, &u0, &EigenSettings::with_iters(5))?;
    let traces: [&EigenTrace; 3] = [&ipm, &ppm, &geo];
    let norm = worst(traces.iter().map(|t| (inst.norm(&t.final_u) - 1.0).abs()));
    parts.push(Part::new("final iterates are normalized", norm <= 1e-12, format!("largest | |u|_H - 1 | = {norm:.1e}")));
    Ok(parts)
}

/// Pair and solver invariants on small problems.
pub fn invariant_checks() -> Vec<Check> {
    vec![
        Check::timed("matrix pair invariants", spd_invariants),
        Check::timed("grid pair invariants, p = 1.5", || grid_invariants(1.5)),
        Check::timed("grid pair invariants, p = 3", || grid_invariants(3.0)),
        Check::timed("grid growth bound, p = 2", grid_growth),
        Check::timed("solver invariants", solver_invariants),
    ]
}

// ---------------------------------------------------------------------------
// acceptance criteria

/// Spacing of the L-shape runs: 41x41 at desk scale, 81x81 at full scale.
fn lshape_h(scale: Scale) -> f64 {
    match scale {
        Scale::Quick => 0.05,
        Scale::Full => 0.025,
    }
}

/// Random SPD matrices: inverse and proximal power methods against dense eigendecomposition.
pub fn criterion_spd_oracle() -> Result<Vec<Part>> {
    let start = Instant::now();
    let mut rng = seeded(2024);
    let (mut ipm_err, mut ppm_err): (f64, f64) = (0.0, 0.0);
    let mut all_converged = true;
    for _ in 0..20 {
        let (m, spectrum) = random_spd(8, 1e4, 1.5, &mut rng);
        let a = SpdInstance::new(m)?;
        let u0 = random_vector(8, &mut rng);
        let mut settings = EigenSettings::with_iters(5000);
        settings.residual_tol = Some(1e-10);
        let ipm = run_ipm(&a, &u0, &settings)?;
        ipm_err = ipm_err.max(rel_err(ipm.final_lambda, spectrum[0]));
        let ppm = run_ppm(&a, &u0, 0.1, &settings)?;
        let rec = match ppm.steps.last().map(|s| &s.detail) {
            Some(StepDetail::Ppm { recovered_lambda, .. }) => *recovered_lambda,
            _ => f64::NAN,
        };
        ppm_err = ppm_err.max(rel_err(rec, spectrum[0]));
        all_converged &= ipm.converged && ppm.converged;
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(vec![
        Part::new("inverse power eigenvalue within 1e-8", ipm_err <= 1e-8, format!("worst relative error {ipm_err:.1e}")),
        Part::new("proximal recovered eigenvalue within 1e-6", ppm_err <= 1e-6, format!("worst relative error {ppm_err:.1e}")),
        Part::new("all runs converged", all_converged, String::new()),
        Part::new("runtime below 1 s", secs < 1.0, format!("{secs:.3} s")),
    ])
}

fn ex1_ipm(h: f64, p: f64, iters: usize) -> Result<(PLaplaceInstance, EigenTrace)> {
    let inst = grid_instance(Shape::Lshape, h, 0.2, p)?;
    let u0 = initial_field(&inst, InitialGuess::Ex1);
    let trace = run_ipm(&inst, &u0, &EigenSettings::with_iters(iters))?;
    Ok((inst, trace))
}

/// Dual Rayleigh quotient nondecreasing along 30 inverse power steps on the L-shape, four exponents.
pub fn criterion_dual_monotonicity(scale: Scale) -> Result<Vec<Part>> {
    let h = lshape_h(scale);
    let exponents = [1.5, 2.0, 3.0, 5.0];
    let runs: Vec<Result<(PLaplaceInstance, EigenTrace)>> = std::thread::scope(|s| {
        let handles: Vec<_> = exponents.iter().map(|&p| s.spawn(move || ex1_ipm(h, p, 30))).collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    });
    let mut parts = Vec::new();
    for (p, run) in exponents.iter().zip(runs) {
        let (_, t) = run?;
        let dual: Vec<f64> = t.records.iter().filter_map(|r| r.dual_rq).collect();
        let worst_drop = dual.windows(2).map(|w| (w[1] - w[0]) / w[0].abs()).fold(f64::INFINITY, f64::min);
        let unconverged = t.steps.iter().filter(|s| !s.inner_converged).count();
        parts.push(Part::new(
            format!("p = {p}: dual quotient nondecreasing over {} steps", dual.len()),
            dual.len() == 30 && worst_drop >= -1e-9,
            format!("smallest relative increment {worst_drop:.2e}; {unconverged} inner solves above tolerance"),
        ));
    }
    Ok(parts)
}

/// Duality gap and residual at the end of the p = 3 L-shape run.
pub fn criterion_gap_roots(scale: Scale) -> Result<Vec<Part>> {
    let (inst, t) = ex1_ipm(lshape_h(scale), 3.0, 30)?;
    let g0 = t.records[0].gap;
    let u = &t.final_u;
    let zeta = inst.subgradient(u);
    let g = metrics::duality_gap(&inst, u, &zeta, u)?;
    Ok(vec![
        Part::new("initial gap above 1e-2", g0 > 1e-2, format!("{g0:.3e}")),
        Part::new("final gap at most 1e-5", g <= 1e-5, format!("{g:.3e}")),
        Part::new("final residual at most 1e-5", t.final_residual <= 1e-5, format!("{:.3e}", t.final_residual)),
    ])
}

/// Discrete Euler identity over 100 random fields for p = 1.5 and p = 3.
pub fn criterion_discrete_euler() -> Result<Vec<Part>> {
    let mut parts = Vec::new();
    for p in [1.5, 3.0] {
        let inst = grid_instance(Shape::Lshape, 0.05, 0.2, p)?;
        let mut rng = seeded(40 + p as u64);
        let mut e: f64 = 0.0;
        for _ in 0..100 {
            let u = random_field(&inst, &mut rng);
            let pj = p * inst.dirichlet_energy(&u);
            let minus_lap: Vec<f64> = inst.apply_plaplacian(&u).iter().map(|x| -x).collect();
            e = e.max((pj - inst.pairing(&minus_lap, &u)).abs() / pj.abs().max(1.0));
        }
        parts.push(Part::new(format!("p = {p}"), e <= 1e-10, format!("worst scaled error {e:.1e}")));
    }
    Ok(parts)
}

/// Matrix-free Jacobian products against central differences of the operator.
pub fn criterion_jacobian_fd() -> Result<Vec<Part>> {
    let inst = grid_instance(Shape::Lshape, 0.05, 0.2, 3.0)?;
    let mut rng = seeded(77);
    let step = 1e-6;
    let mut e: f64 = 0.0;
    for _ in 0..20 {
        let u = random_field(&inst, &mut rng);
        let x = random_field(&inst, &mut rng);
        let plus: Vec<f64> = u.iter().zip(&x).map(|(a, b)| a + step * b).collect();
        let minus: Vec<f64> = u.iter().zip(&x).map(|(a, b)| a - step * b).collect();
        let (lp, lm) = (inst.apply_plaplacian(&plus), inst.apply_plaplacian(&minus));
        let fd: Vec<f64> = lp.iter().zip(&lm).map(|(a, b)| -(a - b) / (2.0 * step)).collect();
        let jv = inst.jacobian_apply(&u, &x);
        let diff = jv.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = fd.iter().map(|a| a * a).sum::<f64>().sqrt();
        e = e.max(diff / norm);
    }
    Ok(vec![Part::new("p = 3, 20 random fields", e <= 1e-5, format!("worst relative error {e:.1e}"))])
}

/// `p = 2` on the square with `h = 0.025`, `r = 0.2`: solver error against the discrete
/// operator and, at full scale, discretization error against `π²/2`.
pub fn criterion_anchor(scale: Scale) -> Result<Vec<Part>> {
    let inst = grid_instance(Shape::Square, 0.025, 0.2, 2.0)?;
    let u0 = initial_field(&inst, InitialGuess::Expression(crate::grid::Expr::parse("(1-x1^2)*(1-x2^2)")?));
    let mut settings = EigenSettings::with_iters(2000);
    settings.residual_tol = Some(1e-9);
    let (t, oracle) = rayon::join(|| run_ipm(&inst, &u0, &settings), || symmetric_ground_state(&inst));
    let (t, oracle) = (t?, oracle?);
    let mut parts = vec![Part::new(
        "matches the assembled operator within 1e-8",
        (t.final_lambda - oracle).abs() <= 1e-8,
        format!("λ = {:.12}, dense {oracle:.12}", t.final_lambda),
    )];
    if scale == Scale::Full {
        let continuum = PI * PI / 2.0;
        let rel = rel_err(t.final_lambda, continuum);
        parts.push(Part::new(
            "within 5% of π²/2",
            rel <= 0.05,
            format!("λ = {:.6}, π²/2 = {continuum:.6}, relative difference {rel:.3}", t.final_lambda),
        ));
    }
    Ok(parts)
}

/// Inner Newton residual of every step of the p = 3 L-shape run with `h = 0.025`.
pub fn criterion_newton() -> Result<Vec<Part>> {
    let (_, t) = ex1_ipm(0.025, 3.0, 30)?;
    let worst_res = worst(t.steps.iter().map(|s| s.inner_residual));
    let most_iters = t.records.iter().map(|r| r.inner_iters).max().unwrap_or(0);
    Ok(vec![
        Part::new("residual at most 1e-12 at every step", worst_res <= 1e-12, format!("largest {worst_res:.2e}")),
        Part::new("at most 500 Newton iterations", most_iters <= 500, format!("largest {most_iters}")),
    ])
}

/// Balanced iteration from ex2 on the 51x51 square, `p = 3`, `r^{1.6} = h`, 50 steps.
pub fn criterion_balanced() -> Result<Vec<Part>> {
    let h = 0.04;
    let inst = grid_instance(Shape::Square, h, h.powf(1.0 / crate::config::CONSISTENCY_EXPONENT), 3.0)?;
    let u0 = initial_field(&inst, InitialGuess::Ex2);
    let t = run_balanced_ipm(&inst, &u0, &EigenSettings::with_iters(50))?;
    let mut rq: Vec<f64> = t.records.iter().map(|r| r.rq).collect();
    rq.push(t.final_lambda);
    let increases: Vec<usize> = (0..rq.len() - 1).filter(|&k| rq[k + 1] >= rq[k]).collect();
    let later_increases = increases.iter().filter(|&&k| k >= 1).count();
    let small: Vec<bool> = rq.windows(2).map(|w| (w[1] - w[0]).abs() / w[0].abs() < 1e-10).collect();
    let plateau = (0..small.len().saturating_sub(4)).find(|&k| k + 5 <= 40 && small[k..k + 5].iter().all(|&s| s));
    let (a, b) = partial_rayleigh_quotients(&inst, &t.final_u);
    let balance = match (a, b) {
        (Some(a), Some(b)) => (a - b).abs() / t.final_lambda,
        _ => f64::INFINITY,
    };
    let sign_change = t.final_u.iter().any(|&x| x > 0.0) && t.final_u.iter().any(|&x| x < 0.0);
    Ok(vec![
        Part::new(
            "Rayleigh quotient strictly decreasing over all 50 steps",
            increases.is_empty() && t.records.len() == 50,
            format!("non-decreasing steps at k = {increases:?}; R(u^0) = {:.6}, R(u^1) = {:.6}", rq[0], rq[1]),
        ),
        Part::new(
            "Rayleigh quotient strictly decreasing from u^1 on",
            later_increases == 0,
            format!("{later_increases} non-decreasing steps after the first"),
        ),
        Part::new(
            "no 5-step plateau (relative change < 1e-10) before step 40",
            plateau.is_none(),
            match plateau {
                Some(k) => format!("plateau starting at k = {k}, R = {:.12}", rq[k]),
                None => "none".into(),
            },
        ),
        Part::new("final partial quotients balanced to 1e-6", balance <= 1e-6, format!("|R(u+) - R(u-)| / R(u) = {balance:.1e}")),
        Part::new("final iterate changes sign", sign_change, String::new()),
    ])
}

/// Geometric descent on the 51x51 square, `p = 3`, `r = h^{1/2}`, from ex1 and ex2.
pub fn criterion_geometric() -> Result<Vec<Part>> {
    let h: f64 = 0.04;
    let inst = grid_instance(Shape::Square, h, h.sqrt(), 3.0)?;
    let settings = EigenSettings::with_iters(25);
    let starts = [initial_field(&inst, InitialGuess::Ex1), initial_field(&inst, InitialGuess::Ex2)];
    let (t1, t2) = rayon::join(|| run_geometric(&inst, &starts[0], &settings), || run_geometric(&inst, &starts[1], &settings));
    let (t1, t2) = (t1?, t2?);
    let mut targets = vec![geometric_target(&inst, &starts[0])];
    targets.extend(t1.steps.iter().filter_map(|s| match s.detail {
        StepDetail::Geometric { target, .. } => Some(target),
        _ => None,
    }));
    let monotone = targets.windows(2).all(|w| w[1] <= w[0]);
    let cos_best = t1.records.iter().map(|r| r.cosim).fold(f64::NEG_INFINITY, f64::max).max(1.0 - geometric_target(&inst, &t1.final_u));
    let cos2 = 1.0 - geometric_target(&inst, &t2.final_u);
    Ok(vec![
        Part::new(
            "ex1: target nonincreasing over accepted steps",
            monotone,
            format!("F from {:.4e} to {:.4e} in {} steps", targets[0], targets.last().unwrap(), targets.len() - 1),
        ),
        Part::new("ex1: cosine similarity reaches 1 - 1e-3 within 25 steps", cos_best >= 1.0 - 1e-3, format!("best {cos_best:.6}")),
        Part::new(
            "ex2: ends at a flagged non-eigenvector",
            !t2.converged && t2.final_residual > 1e-2 && cos2 < 1.0,
            format!("residual {:.3e}, cosine {cos2:.6}, stop {:?}", t2.final_residual, t2.stop_reason),
        ),
    ])
}

/// Duality relations on 200 random grid pairs and the dual eigenvalue relation at converged eigenpairs.
pub fn criterion_duality() -> Result<Vec<Part>> {
    let mut parts = Vec::new();
    for p in [1.5, 3.0] {
        let inst = grid_instance(Shape::Lshape, 0.05, 0.2, p)?;
        let mut rng = seeded(90 + p as u64);
        let samples: Vec<Vec<f64>> = (0..100).map(|_| random_field(&inst, &mut rng)).collect();
        for part in check_duality_relations(&inst, &samples)? {
            parts.push(Part { name: format!("p = {p}: {}", part.name), ..part });
        }
    }
    let mut worst_rel: f64 = 0.0;
    let mut count = 0;
    let mut check = |pair: &dyn FunctionalPair, t: &EigenTrace| -> Result<()> {
        if t.converged {
            let u = &t.final_u;
            let mu = metrics::dual_rayleigh_quotient(pair, &pair.subgradient(u), u)?;
            worst_rel = worst_rel.max((mu - t.final_lambda.powf(1.0 - pair.q())).abs() / mu);
            count += 1;
        }
        Ok(())
    };
    let a = SpdInstance::diagonal(&[2.0, 3.0, 5.0, 9.0])?;
    let mut settings = EigenSettings::with_iters(2000);
    settings.residual_tol = Some(1e-9);
    check(&a, &run_ipm(&a, &[1.0, 1.0, 1.0, 1.0], &settings)?)?;
    check(&a, &run_ppm(&a, &[1.0, 1.0, 1.0, 1.0], 0.1, &settings)?)?;
    for p in [2.0, 3.0] {
        let inst = grid_instance(Shape::Lshape, 0.1, 0.25, p)?;
        let u0 = initial_field(&inst, InitialGuess::Ex1);
        check(&inst, &run_ipm(&inst, &u0, &settings)?)?;
        check(&inst, &run_ppm(&inst, &u0, 0.5, &settings)?)?;
    }
    let sq = grid_instance(Shape::Square, 0.1, 0.25, 3.0)?;
    let odd = initial_field(&sq, InitialGuess::Expression(crate::grid::Expr::parse("x1*(1-x1^2)*(1-x2^2)")?));
    let mut bs = settings.clone();
    bs.residual_tol = Some(1e-7);
    bs.balance.quotient = PartialQuotient::Operator;
    check(&sq, &run_balanced_ipm(&sq, &odd, &bs)?)?;
    parts.push(Part::new(
        "dual eigenvalue relation at converged eigenpairs",
        count >= 6 && worst_rel <= 1e-6,
        format!("{count} converged runs, worst |μ - λ^(1-q)| / μ = {worst_rel:.1e}"),
    ));
    Ok(parts)
}

/// Title and evaluation of acceptance criterion `id` (1 to 10).
pub fn criterion(id: u8, scale: Scale) -> Check {
    let title = match id {
        1 => "1 matrix oracle equivalence",
        2 => "2 dual quotient monotonicity",
        3 => "3 duality gap roots",
        4 => "4 discrete Euler identity",
        5 => "5 Jacobian against finite differences",
        6 => "6 p = 2 anchor",
        7 => "7 Newton inner solver",
        8 => "8 balanced iteration",
        9 => "9 geometric descent",
        10 => "10 duality cross-checks",
        _ => panic!("unknown criterion {id}"),
    };
    Check::timed(title, || match id {
        1 => criterion_spd_oracle(),
        2 => criterion_dual_monotonicity(scale),
        3 => criterion_gap_roots(Scale::Full),
        4 => criterion_discrete_euler(),
        5 => criterion_jacobian_fd(),
        6 => criterion_anchor(scale),
        7 => criterion_newton(),
        8 => criterion_balanced(),
        9 => criterion_geometric(),
        _ => criterion_duality(),
    })
}

/// Criteria run by each suite scale.
pub fn suite_criteria(scale: Scale) -> &'static [u8] {
    match scale {
        Scale::Quick => &[1, 3, 4, 5, 6, 7, 10],
        Scale::Full => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
    }
}

/// Invariant checks followed by the criteria of `scale`.
pub fn run_suite(scale: Scale) -> Vec<Check> {
    let mut checks = invariant_checks();
    checks.extend(suite_criteria(scale).iter().map(|&id| criterion(id, scale)));
    checks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inner::{NewtonSettings, SolveReport};

    /// Delegates to the wrapped pair with the sign of the duality map flipped.
    struct FlippedDualityMap<'a>(&'a PLaplaceInstance);

    impl FunctionalPair for FlippedDualityMap<'_> {
        fn p(&self) -> f64 {
            self.0.p
        }
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn energy(&self, u: &[f64]) -> f64 {
            self.0.energy(u)
        }
        fn subgradient(&self, u: &[f64]) -> Vec<f64> {
            self.0.subgradient(u)
        }
        fn inverse_subgradient(&self, z: &[f64], g: &[f64], s: &NewtonSettings) -> (Vec<f64>, SolveReport) {
            self.0.inverse_subgradient(z, g, s)
        }
        fn prox(&self, u: &[f64], tau: f64, s: &NewtonSettings) -> (Vec<f64>, SolveReport) {
            self.0.prox(u, tau, s)
        }
        fn duality_map(&self, u: &[f64]) -> Vec<f64> {
            self.0.duality_map(u).iter().map(|x| -x).collect()
        }
        fn inverse_duality_map(&self, z: &[f64]) -> Vec<f64> {
            self.0.inverse_duality_map(z)
        }
        fn norm(&self, u: &[f64]) -> f64 {
            self.0.norm(u)
        }
        fn dual_norm(&self, z: &[f64]) -> f64 {
            self.0.dual_norm(z)
        }
        fn pairing(&self, z: &[f64], u: &[f64]) -> f64 {
            self.0.pairing(z, u)
        }
    }

    #[test]
    fn sign_flipped_duality_map_fails_euler_identity() {
        let inst = grid_instance(Shape::Square, 0.1, 0.25, 3.0).unwrap();
        let mut rng = seeded(3);
        let samples: Vec<Vec<f64>> = (0..5).map(|_| random_field(&inst, &mut rng)).collect();
        assert!(check_euler_identity(&inst, &samples).passed);
        let parts = pair_invariants(&FlippedDualityMap(&inst), &samples).unwrap();
        let euler = parts.iter().find(|p| p.name == "Euler identity").unwrap();
        assert!(!euler.passed, "{}", euler.detail);
    }

    #[test]
    fn invariants_pass() {
        for c in invariant_checks() {
            assert!(c.passed(), "{c}");
        }
    }

    #[test]
    fn display_marks_failures() {
        let c = Check {
            name: "demo".into(),
            parts: vec![Part::new("a", true, "1"), Part::new("b", false, "2")],
            seconds: 0.0,
        };
        let s = c.to_string();
        assert!(s.starts_with("FAIL  demo"));
        assert!(s.contains("[FAIL] b: 2"));
    }
}
