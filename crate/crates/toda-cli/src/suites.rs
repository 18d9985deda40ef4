//! The identity-check suites behind `toda check`.

use std::collections::BTreeMap;
use std::time::Instant;

use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use toda_core::circle_spectral::{LaurentSeries, LoopField};
use toda_core::deformed_connection::{
    c_relation_residual, deformed_flatness_residual, f_horizontality_residual, fundamental_ode_residual,
    levelt_residual, monodromy_data, omega, omega_xderiv_residual, orthogonality_residual, q_tilde_consistency,
    theta_coeff, theta_matrix_at_zero, window_leakage, y, zeta_equation_residual, Zeta,
};
use toda_core::frobenius_geometry::{
    christoffel, cotangent_product_triple, covariant_deriv, dt_differential, eta_cotangent, eta_flat_triple,
    fd_scalar, fd_triple, mult_operator, u_operator, v_operator, window_indices, FlatFrame, M0Point, OperatorMatrix,
};
use toda_core::lax_manifold::{triple_pairing, LoopLaxPoint, Triple};
use toda_core::toda_hierarchy::{
    classical_lax_flow, combination_residual, hamiltonian_density, poisson_p1, poisson_p2, AlphaHat, ClassicalTime,
    CovectorField, HierarchyIndex, LoopContext,
};
use toda_core::{TodaError, C64};

use crate::config::LoadedPoint;
use crate::error::CliResult;
use crate::report::{CheckRecord, CheckReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Zs,
    Recursion,
    Tau,
    Casimir,
    Metric,
    Flatness,
    Deformed,
    Levelt,
    Orthogonality,
    Omega,
    Classical,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Zs => "zs",
            Suite::Recursion => "recursion",
            Suite::Tau => "tau",
            Suite::Casimir => "casimir",
            Suite::Metric => "metric",
            Suite::Flatness => "flatness",
            Suite::Deformed => "deformed",
            Suite::Levelt => "levelt",
            Suite::Orthogonality => "orthogonality",
            Suite::Omega => "omega",
            Suite::Classical => "classical",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteOptions {
    pub zeta: C64,
    pub window: i32,
    /// Replaces every default tolerance when set.
    pub tol: Option<f64>,
    pub seed: u64,
}

type CheckFn<'a> = Box<dyn Fn() -> Result<f64, TodaError> + Send + Sync + 'a>;

struct Task<'a> {
    name: String,
    indices: Vec<String>,
    tol: f64,
    f: CheckFn<'a>,
}

struct Plan<'a> {
    opts: SuiteOptions,
    tasks: Vec<Task<'a>>,
}

impl<'a> Plan<'a> {
    fn new(opts: SuiteOptions) -> Self {
        Plan { opts, tasks: Vec::new() }
    }

    fn add<S: ToString>(
        &mut self,
        name: impl Into<String>,
        indices: &[S],
        tol: f64,
        f: impl Fn() -> Result<f64, TodaError> + Send + Sync + 'a,
    ) {
        self.tasks.push(Task {
            name: name.into(),
            indices: indices.iter().map(|s| s.to_string()).collect(),
            tol: self.opts.tol.unwrap_or(tol),
            f: Box::new(f),
        });
    }

    /// Runs the checks in parallel; records keep the order of `add`, and the
    /// first failing check in that order decides the error.
    fn run(self) -> CliResult<Vec<CheckRecord>> {
        let out: Vec<Result<CheckRecord, TodaError>> = self
            .tasks
            .par_iter()
            .map(|t| {
                let start = Instant::now();
                let r = (t.f)()?;
                let ms = start.elapsed().as_secs_f64() * 1e3;
                Ok(CheckRecord::new(t.name.clone(), t.indices.clone(), r, t.tol, ms))
            })
            .collect();
        Ok(out.into_iter().collect::<Result<Vec<_>, _>>()?)
    }
}

const TOL_LOOP: f64 = 1e-9;
const TOL_CASIMIR: f64 = 1e-10;
const TOL_CLASSICAL: f64 = 1e-10;
const TOL_HBAR: f64 = 1e-12;
const TOL_GRAM: f64 = 1e-10;
const TOL_FD: f64 = 1e-6;
const TOL_PRODUCT: f64 = 1e-9;
const TOL_FLATNESS: f64 = 1e-5;
const TOL_ZETA_ODE: f64 = 1e-5;
const TOL_HORIZONTALITY: f64 = 1e-10;
const TOL_LEVELT: f64 = 1e-8;
const TOL_THETA0: f64 = 1e-6;
const TOL_MONODROMY: f64 = 1e-9;
const TOL_ORTHOGONALITY: f64 = 1e-7;
const TOL_C_RELATION: f64 = 1e-8;
const TOL_THETA_COEFF: f64 = 1e-12;
const TOL_OMEGA: f64 = 1e-7;

fn loop_indices() -> Vec<HierarchyIndex> {
    let mut v = Vec::new();
    for p in 0..=1 {
        v.extend([HierarchyIndex::u(p), HierarchyIndex::v(p), HierarchyIndex::int(-1, p), HierarchyIndex::int(0, p)]);
    }
    v.extend([HierarchyIndex::int(1, 0), HierarchyIndex::int(-2, 1)]);
    v
}

fn chains() -> [AlphaHat; 6] {
    [AlphaHat::Int(-2), AlphaHat::Int(-1), AlphaHat::Int(0), AlphaHat::Int(1), AlphaHat::V, AlphaHat::U]
}

fn deformed_indices() -> [AlphaHat; 7] {
    [AlphaHat::Int(-2), AlphaHat::Int(-1), AlphaHat::Int(0), AlphaHat::Int(1), AlphaHat::Int(2), AlphaHat::U, AlphaHat::V]
}

fn max_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_series(rng: &mut ChaCha8Rng, n: usize, k: i32) -> LaurentSeries {
    let terms: Vec<(i32, C64)> = (-k..=k)
        .map(|j| {
            let r = 0.6f64.powi(j.abs());
            (j, C64::new(rng.random_range(-r..r), rng.random_range(-r..r)))
        })
        .collect();
    LaurentSeries::from_terms(n, &terms)
}

fn random_triple(rng: &mut ChaCha8Rng, n: usize) -> Triple {
    let k = 6.min(n as i32 / 2);
    Triple::new(
        random_series(rng, n, k),
        C64::new(rng.random_range(-1.0..1.0), 0.3),
        C64::new(0.2, rng.random_range(-1.0..1.0)),
    )
}

pub fn run_suite(suite: Suite, input: &LoadedPoint, opts: SuiteOptions) -> CliResult<CheckReport> {
    let lp = &input.point;
    let mut info = BTreeMap::new();
    let records = match suite {
        Suite::Zs | Suite::Recursion | Suite::Tau | Suite::Casimir | Suite::Classical => {
            lp.require_m1()?;
            let ctx = LoopContext::new(lp);
            loop_suite(suite, &ctx, opts)?
        }
        Suite::Omega => {
            lp.require_m0()?;
            let pt = M0Point::new(input.base())?;
            omega_suite(lp, &pt, opts)?
        }
        _ => {
            let pt = M0Point::new(input.base())?;
            if matches!(suite, Suite::Deformed | Suite::Levelt | Suite::Orthogonality) {
                Zeta::new(opts.zeta)?;
            }
            if suite == Suite::Levelt {
                let z = Zeta::new(opts.zeta)?;
                info.insert("window_leakage".to_string(), window_leakage(&z, &pt, opts.window)?);
            }
            m0_suite(suite, &pt, opts)?
        }
    };
    Ok(CheckReport::new(suite.name(), opts.seed, records, info))
}

fn loop_suite(suite: Suite, ctx: &LoopContext<'_>, opts: SuiteOptions) -> CliResult<Vec<CheckRecord>> {
    let lp = ctx.point();
    let mut plan = Plan::new(opts);
    match suite {
        Suite::Zs => {
            let idx = loop_indices();
            for (i, &a) in idx.iter().enumerate() {
                for &b in &idx[i + 1..] {
                    plan.add("zero_curvature", &[a, b], TOL_LOOP, move || Ok(ctx.zs_residual(a, b)?.max_abs()));
                }
            }
        }
        Suite::Recursion => {
            for a in chains() {
                for p in -1..=1 {
                    let idx = HierarchyIndex::new(a, p)?;
                    plan.add("recursion", &[idx], TOL_LOOP, move || Ok(ctx.recursion_residual(idx)?.max_abs()));
                }
            }
            for idx in loop_indices() {
                plan.add("lax_equals_hamiltonian", &[idx], TOL_LOOP, move || {
                    let g = ctx.hamiltonian_gradient(idx)?;
                    Ok(poisson_p1(&g.full, lp).max_diff(&ctx.lax_flow(idx)?))
                });
            }
        }
        Suite::Tau => {
            let pairs = [
                (HierarchyIndex::u(1), HierarchyIndex::int(0, 0)),
                (HierarchyIndex::v(1), HierarchyIndex::int(-1, 0)),
                (HierarchyIndex::v(0), HierarchyIndex::u(1)),
                (HierarchyIndex::v(1), HierarchyIndex::u(0)),
                (HierarchyIndex::int(-1, 1), HierarchyIndex::int(1, 0)),
                (HierarchyIndex::int(-2, 1), HierarchyIndex::v(1)),
                (HierarchyIndex::int(0, 1), HierarchyIndex::u(1)),
            ];
            for (a, b) in pairs {
                plan.add("tau_symmetry", &[a, b], TOL_LOOP, move || Ok(max_norm(&ctx.tau_symmetry_residual(a, b)?)));
            }
        }
        Suite::Casimir => {
            for a in [AlphaHat::Int(-2), AlphaHat::Int(-1), AlphaHat::Int(0), AlphaHat::Int(1), AlphaHat::Int(2), AlphaHat::V, AlphaHat::U] {
                let idx = HierarchyIndex::new(a, -1)?;
                plan.add("p1_casimir", &[idx], TOL_CASIMIR, move || Ok(poisson_p1(&ctx.hamiltonian_gradient(idx)?.full, lp).max_abs()));
            }
            for idx in [HierarchyIndex::int(-1, -1), HierarchyIndex::v(-1)] {
                plan.add("p2_casimir", &[idx], TOL_CASIMIR, move || Ok(poisson_p2(&ctx.hamiltonian_gradient(idx)?.full, lp).max_abs()));
            }
        }
        Suite::Classical => {
            for n in 1..=3 {
                plan.add("hamiltonian_combination", &[format!("H_{n}")], TOL_CLASSICAL, move || Ok(combination_residual(n, lp)?.0.norm()));
                plan.add("hbar_identity", &[format!("Hbar_{n}")], TOL_HBAR, move || Ok(combination_residual(n, lp)?.1.norm()));
                plan.add("classical_flow_hamiltonian", &[format!("t_{n}")], TOL_CLASSICAL, move || {
                    let flow = classical_lax_flow(n, ClassicalTime::T, lp);
                    let grad = CovectorField {
                        omega: lp.lambda().map(|s| s.samples().powi(n).to_series().scale(C64::new(-1.0, 0.0))),
                        omegabar: LoopField::zeros(lp.n_modes(), lp.x_modes())?,
                    };
                    Ok(poisson_p1(&grad, lp).max_diff(&flow))
                });
            }
        }
        _ => unreachable!("not a loop suite"),
    }
    plan.run()
}

fn m0_suite(suite: Suite, pt: &M0Point, opts: SuiteOptions) -> CliResult<Vec<CheckRecord>> {
    let n = pt.n_modes();
    let w = opts.window;
    let mut plan = Plan::new(opts);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    match suite {
        Suite::Metric => {
            let frame = FlatFrame::new(pt, w)?;
            let gram = frame.gram(pt);
            let eta = frame.eta_matrix();
            let duality = frame.duality();
            let id = OperatorMatrix::identity(frame.indices().to_vec());
            for (i, &a) in frame.indices().iter().enumerate() {
                let row = |m: &OperatorMatrix, r: &OperatorMatrix| (0..m.dim()).map(|j| (m[(i, j)] - r[(i, j)]).norm()).fold(0.0, f64::max);
                let (g, d) = (row(&gram, &eta), row(&duality, &id));
                plan.add("gram_row", &[a], TOL_GRAM, move || Ok(g));
                plan.add("duality_row", &[a], TOL_GRAM, move || Ok(d));
            }
        }
        Suite::Flatness => {
            let fa = |p: &M0Point| Triple::new(p.w().mul(p.w()), p.w_coords().u, C64::new(0.3, 0.0) * p.w_coords().v);
            let fb = |p: &M0Point| Triple::new(p.zw_prime().shift(-1), p.w_coords().v * p.w_coords().v, C64::new(1.0, 0.0));
            for s in 0..3 {
                let (x, yv, a) = (random_triple(&mut rng, n), random_triple(&mut rng, n), random_triple(&mut rng, n));
                let tag = [format!("draw {s}")];
                let (x2, a2) = (x.clone(), a.clone());
                plan.add("torsion", &tag, TOL_FD, move || {
                    Ok((triple_pairing(&christoffel(&x2, &a2, pt), &yv) - triple_pairing(&christoffel(&yv, &a2, pt), &x2)).norm())
                });
                plan.add("metric_compatibility", &tag, TOL_FD, move || {
                    let lhs = fd_scalar(pt, &x, 1e-6, |p| Ok(eta_cotangent(&fa(p), &fb(p), p)))?;
                    let da = fd_triple(pt, &x, 1e-6, |p| Ok(fa(p)))?;
                    let db = fd_triple(pt, &x, 1e-6, |p| Ok(fb(p)))?;
                    let (a0, b0) = (fa(pt), fb(pt));
                    let rhs = eta_cotangent(&covariant_deriv(&da, &x, &a0, pt), &b0, pt)
                        + eta_cotangent(&a0, &covariant_deriv(&db, &x, &b0, pt), pt);
                    Ok((lhs - rhs).norm())
                });
                let (a, b, g) = (random_triple(&mut rng, n), random_triple(&mut rng, n), random_triple(&mut rng, n));
                let x = random_triple(&mut rng, n);
                plan.add("product_associativity", &tag, TOL_PRODUCT, {
                    let (a, b, g) = (a.clone(), b.clone(), g.clone());
                    move || {
                        let l = cotangent_product_triple(&cotangent_product_triple(&a, &b, pt), &g, pt);
                        Ok(l.max_diff(&cotangent_product_triple(&a, &cotangent_product_triple(&b, &g, pt), pt)))
                    }
                });
                plan.add("frobenius_invariance", &tag, TOL_PRODUCT, {
                    let (a, b, g) = (a.clone(), b.clone(), g.clone());
                    move || {
                        let l = eta_cotangent(&cotangent_product_triple(&a, &b, pt), &g, pt);
                        Ok((l - eta_cotangent(&a, &cotangent_product_triple(&b, &g, pt), pt)).norm())
                    }
                });
                plan.add("mult_operator", &tag, TOL_PRODUCT, {
                    let a = a.clone();
                    move || Ok(mult_operator(&x, &a, pt).max_diff(&cotangent_product_triple(&eta_flat_triple(&x, pt), &a, pt)))
                });
                plan.add("u_symmetric", &tag, TOL_PRODUCT, {
                    let (a, b) = (a.clone(), b.clone());
                    move || Ok((eta_cotangent(&a, &u_operator(&b, pt), pt) - eta_cotangent(&u_operator(&a, pt), &b, pt)).norm())
                });
                plan.add("v_antisymmetric", &tag, TOL_PRODUCT, move || {
                    Ok((eta_cotangent(&a, &v_operator(&b, pt), pt) + eta_cotangent(&v_operator(&a, pt), &b, pt)).norm())
                });
            }
            let x = random_triple(&mut rng, n);
            for a in window_indices(w) {
                let x = x.clone();
                plan.add("dt_parallel", &[a], TOL_FD, move || {
                    let d = fd_triple(pt, &x, 1e-6, |p| Ok(dt_differential(a, p)))?;
                    Ok(covariant_deriv(&d, &x, &dt_differential(a, pt), pt).max_abs())
                });
                let e = match a {
                    AlphaHat::Int(k) => f64::from(k) + 0.5,
                    AlphaHat::V => -0.5,
                    AlphaHat::U => 0.5,
                };
                plan.add("v_eigenvalue", &[a], TOL_PRODUCT, move || {
                    let dt = dt_differential(a, pt);
                    Ok(v_operator(&dt, pt).max_diff(&dt.scale(C64::from(e))))
                });
            }
        }
        Suite::Deformed => {
            let z = Zeta::new(opts.zeta)?;
            let zero = LaurentSeries::zeros(n);
            let k = 4.min(n as i32 / 2);
            let dirs = vec![
                Triple::new(zero.clone(), C64::from(1.0), C64::from(0.0)),
                Triple::new(zero, C64::from(0.0), C64::from(1.0)),
                Triple::new(random_series(&mut rng, n, k), C64::from(0.0), C64::from(0.0)),
                Triple::new(random_series(&mut rng, n, k), C64::from(0.0), C64::from(0.0)),
            ];
            for a in deformed_indices() {
                let dirs = dirs.clone();
                plan.add("deformed_flatness", &[a], TOL_FLATNESS, move || {
                    let mut worst = 0.0f64;
                    for x in &dirs {
                        worst = worst.max(deformed_flatness_residual(a, &z, x, pt)?.max_abs());
                    }
                    Ok(worst)
                });
                plan.add("zeta_equation", &[a], TOL_ZETA_ODE, move || Ok(zeta_equation_residual(a, &z, pt)?.max_abs()));
                plan.add("f_horizontality", &[a], TOL_HORIZONTALITY, move || Ok(f_horizontality_residual(a, &z, pt)?.max()));
            }
        }
        Suite::Levelt => {
            let z = Zeta::new(opts.zeta)?;
            plan.add("levelt_factorization", &["Y", "Theta"], TOL_LEVELT, move || levelt_residual(&z, pt, w));
            plan.add("fundamental_ode", &["Y"], TOL_ZETA_ODE, move || fundamental_ode_residual(&z, pt, w));
            plan.add("theta_at_zero", &["Theta"], TOL_THETA0, move || {
                Ok(theta_matrix_at_zero(pt, w)?.max_diff(&OperatorMatrix::identity(window_indices(w))))
            });
            plan.add("y_v_monodromy", &["v", "u"], TOL_MONODROMY, move || {
                let around = z.around_origin(1, 64);
                let lhs = y(AlphaHat::V, &around, pt)?;
                let rhs = -(y(AlphaHat::V, &z, pt)? + C64::new(0.0, 4.0 * std::f64::consts::PI) * y(AlphaHat::U, &z, pt)?);
                Ok((lhs - rhs).norm())
            });
            plan.add("monodromy_invariants_failed", &["R", "mu"], 1.0, move || {
                let c = monodromy_data(w).check();
                Ok([c.nilpotent, c.eta_symmetric, c.graded].iter().filter(|ok| !**ok).count() as f64)
            });
        }
        Suite::Orthogonality => {
            let z = Zeta::new(opts.zeta)?;
            plan.add("orthogonality", &[format!("window {w}")], TOL_ORTHOGONALITY, move || Ok(orthogonality_residual(&z, pt, w)?.max_abs()));
            for a in window_indices(w) {
                plan.add("c_relation", &[a], TOL_C_RELATION, move || Ok(c_relation_residual(a, &z, pt)?.norm()));
            }
            for a in deformed_indices() {
                for p in 0..=3 {
                    let tag = [a.to_string(), p.to_string()];
                    plan.add("q_tilde_cauchy", &tag, TOL_C_RELATION, move || Ok(q_tilde_consistency(a, p, pt)?.0.norm()));
                    plan.add("q_tilde_c_sum", &tag, TOL_C_RELATION, move || Ok(q_tilde_consistency(a, p, pt)?.1.norm()));
                }
            }
        }
        _ => unreachable!("not an M0 suite"),
    }
    plan.run()
}

fn omega_suite(lp: &LoopLaxPoint, pt: &M0Point, opts: SuiteOptions) -> CliResult<Vec<CheckRecord>> {
    let mut plan = Plan::new(opts);
    for a in window_indices(opts.window) {
        plan.add("theta_coeff_density", &[a], TOL_THETA_COEFF, move || {
            let mut worst = 0.0f64;
            for p in 0..=4 {
                let h = hamiltonian_density(HierarchyIndex::new(a, p - 1)?, pt.lax())?;
                worst = worst.max((theta_coeff(a, p, pt)? - h).norm());
            }
            Ok(worst)
        });
    }
    let pairs = [
        (HierarchyIndex::u(0), HierarchyIndex::int(0, 0)),
        (HierarchyIndex::v(1), HierarchyIndex::int(-1, 1)),
        (HierarchyIndex::int(-2, 0), HierarchyIndex::u(1)),
    ];
    for (a, b) in pairs {
        plan.add("omega_x_derivative", &[a, b], TOL_OMEGA, move || Ok(max_norm(&omega_xderiv_residual(a, b, lp)?)));
        plan.add("omega_symmetry", &[a, b], TOL_OMEGA, move || Ok((omega(a, b, pt)? - omega(b, a, pt)?).norm()));
    }
    plan.run()
}
