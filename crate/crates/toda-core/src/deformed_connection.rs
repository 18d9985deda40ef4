//! Deformed flat coordinates of `M0`: the families `θ_α̂(ζ)`, `y_α̂(ζ)` and
//! their orthogonal variants, the horizontality conditions they satisfy, the
//! fundamental matrix with its Levelt factorization, and the functions `Ω`
//! of the tau structure.
//!
//! Everything is built from functions `F(x, x̄)` evaluated pointwise at
//! `x = ζλ(z)`, `x̄ = ζλ̄(z)` on the circle grid. ζ-derivatives and
//! ζ-Taylor coefficients are Cauchy integrals on a small circle.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::circle_spectral::{ein_unchecked, harmonic_f64, LaurentSeries, LoopField, Samples};
use crate::frobenius_geometry::{
    christoffel, coordinate_vector, dt_differential, eta_cotangent, eta_matrix, eta_partner, eta_sharp_triple,
    fd_triple, mult_operator, u_operator_tangent, v_operator_tangent, window_indices, M0Point, OperatorMatrix,
};
use crate::lax_manifold::{triple_pairing, LoopLaxPoint, Triple};
use crate::toda_hierarchy::{even_double_factorial, factorial, AlphaHat, HierarchyIndex, LaxSamples, LoopContext};
use crate::{Result, TodaError, C64};

/// Default radius of the deformation disc.
pub const ZETA_DISC: f64 = 0.75;
/// Radius and node count of the Cauchy circles.
pub const CAUCHY_RADIUS: f64 = 0.1;
pub const CAUCHY_NODES: usize = 64;

const EIN_LIMIT: f64 = 20.0;

/// A point of the universal cover of `ℂ^×`, stored by its logarithm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Zeta {
    log: C64,
}

impl Zeta {
    /// Principal branch, `arg ζ ∈ (-π, π]`, inside the default disc.
    pub fn new(z: C64) -> Result<Self> {
        Self::with_disc(z, ZETA_DISC)
    }

    pub fn with_disc(z: C64, radius: f64) -> Result<Self> {
        if z == C64::zero() || z.norm() > radius || !z.re.is_finite() || !z.im.is_finite() {
            return Err(TodaError::ZetaOutOfDisc(z.norm()));
        }
        Ok(Zeta { log: z.ln() })
    }

    pub fn from_log(log: C64) -> Result<Self> {
        let z = Zeta { log };
        if z.value().norm() > ZETA_DISC {
            return Err(TodaError::ZetaOutOfDisc(z.value().norm()));
        }
        Ok(z)
    }

    fn unchecked(log: C64) -> Self {
        Zeta { log }
    }

    pub fn value(&self) -> C64 {
        self.log.exp()
    }

    pub fn log(&self) -> C64 {
        self.log
    }

    /// `ζ^s` on this branch.
    pub fn pow(&self, s: f64) -> C64 {
        (self.log * s).exp()
    }

    /// The point `z` reached from `self` along the straight segment, which
    /// must not pass through the origin.
    pub fn continued(&self, z: C64) -> Self {
        Zeta { log: self.log + (z / self.value()).ln() }
    }

    /// `e^{2πik}ζ`, reached by `segments` steps around the origin.
    pub fn around_origin(&self, k: i32, segments: usize) -> Self {
        let steps = segments * k.unsigned_abs() as usize;
        let dir = f64::from(k.signum());
        let mut z = *self;
        let r = self.value().norm();
        let phase0 = self.log.im;
        for j in 1..=steps {
            let target = C64::from_polar(r, phase0 + dir * 2.0 * PI * j as f64 / segments as f64);
            z = z.continued(target);
        }
        z
    }

    fn negated(&self) -> Self {
        Zeta { log: self.log + C64::new(0.0, PI) }
    }
}

/// Eigenvalue of `𝒱` on `dt^α̂`: `α+½`, `-½` on `dv`, `½` on `du`.
pub fn exponent(a: AlphaHat) -> Ratio<i64> {
    match a {
        AlphaHat::Int(a) => Ratio::new(2 * i64::from(a) + 1, 2),
        AlphaHat::V => Ratio::new(-1, 2),
        AlphaHat::U => Ratio::new(1, 2),
    }
}

/// Eigenvalue of `𝒱` on `∇t^α̂`: `μ_α = -α-½`, `μ_v = ½`, `μ_u = -½`.
pub fn mu(a: AlphaHat) -> Ratio<i64> {
    -exponent(a)
}

fn exponent_f64(a: AlphaHat) -> f64 {
    let e = exponent(a);
    *e.numer() as f64 / *e.denom() as f64
}

/// `e_γ - e_α`, always an integer.
fn exponent_gap(g: AlphaHat, a: AlphaHat) -> i32 {
    (exponent(g) - exponent(a)).to_integer() as i32
}

/// `F, F_x, F_x̄, F_xx, F_xx̄, F_x̄x̄` at one node.
type Jet = [C64; 6];

fn times_exp(f: C64, f1: C64, f2: C64, e: C64) -> Jet {
    let q = f / 4.0;
    [f * e, (f1 - f / 2.0) * e, (f1 + f / 2.0) * e, (f2 - f1 + q) * e, (f2 - q) * e, (f2 + f1 + q) * e]
}

/// `-e^{-x}(log((x+x̄)/x) + Ein(-x) - 1)` and its derivatives.
fn log_part(x: C64, s: C64, lg: C64) -> Jet {
    let em = (-x).exp();
    let a = lg + ein_unchecked(-x) - 1.0;
    let (ix, is) = (x.inv(), s.inv());
    [
        -em * a,
        em * a - em * is + ix,
        -em * is,
        -em * a + 2.0 * em * is + em * is * is - ix - ix * ix,
        em * is + em * is * is,
        em * is * is,
    ]
}

/// `F_α̂` and its derivatives. `lg = log((x+x̄)/x)`, `lbs = log((x+x̄)x̄)`.
fn family_jet(a: AlphaHat, x: C64, xb: C64, lg: C64, lbs: C64) -> Jet {
    let s = x + xb;
    let half = ((xb - x) / 2.0).exp();
    match a {
        AlphaHat::Int(-1) => {
            let p = log_part(x, s, lg);
            let e = times_exp(C64::new(-1.0, 0.0), C64::zero(), C64::zero(), half);
            core::array::from_fn(|i| p[i] + e[i])
        }
        AlphaHat::Int(a) => {
            let n = a + 1;
            let nf = f64::from(n);
            times_exp(-s.powi(n) / nf, -s.powi(n - 1), -s.powi(n - 2) * (nf - 1.0), half)
        }
        AlphaHat::V => {
            let p = log_part(x, s, lg);
            let ep = xb.exp();
            let t = ep * (lbs - ein_unchecked(xb) - 1.0);
            let (is, ib) = (s.inv(), xb.inv());
            let q = [
                t,
                ep * is,
                t + ep * is + ib,
                -ep * is * is,
                ep * is - ep * is * is,
                t + 2.0 * ep * is - ep * is * is + ib - ib * ib,
            ];
            core::array::from_fn(|i| p[i] + q[i])
        }
        AlphaHat::U => {
            let ep = xb.exp();
            let z = C64::zero();
            [ep - 1.0, z, ep, z, z, ep]
        }
    }
}

/// Grid data of a point of `M0` for the deformed families.
struct Grid {
    ls: LaxSamples,
    eu: C64,
    n: usize,
}

impl Grid {
    fn new(pt: &M0Point) -> Result<Self> {
        let ls = LaxSamples::new(pt.lax());
        ls.log_ratio()?;
        Ok(Grid { ls, eu: pt.eu(), n: pt.n_modes() })
    }

    /// The six jet components on the grid, with `log ζ` added `log_shift`
    /// times to `log((x+x̄)x̄)`.
    fn jets(&self, a: AlphaHat, zeta: C64, log_shift: C64) -> Result<[Samples; 6]> {
        let (l, b) = (self.ls.lambda().values(), self.ls.lambdabar().values());
        let lg = self.ls.log_ratio()?.values();
        let lbs = self.ls.log_product()?.values();
        let reach = l.iter().chain(b).map(|v| (v * zeta).norm()).fold(0.0, f64::max);
        if reach > EIN_LIMIT {
            return Err(TodaError::EinOutOfRange(reach));
        }
        let mut cols: [Vec<C64>; 6] = core::array::from_fn(|_| Vec::with_capacity(l.len()));
        for j in 0..l.len() {
            let jet = family_jet(a, zeta * l[j], zeta * b[j], lg[j], lbs[j] + log_shift);
            for (c, v) in cols.iter_mut().zip(jet) {
                c.push(v);
            }
        }
        Ok(cols.map(|c| Samples::from_values(self.n, c)))
    }
}

/// `((g)_{≥0} + (ḡ)_{<0}, (ḡ-g)_0, e^u(ḡ-g)_1)`: the differential of
/// `∮ G(λ, λ̄) dz/(2πiz)` from the partials `g = G_λ`, `ḡ = G_λ̄`.
pub fn differential_from_partials(g: &Samples, gb: &Samples, pt: &M0Point) -> Triple {
    let (g, gb) = (g.to_series(), gb.to_series());
    let d = &gb - &g;
    Triple::new(&g.project(0..) + &gb.project(..0), d.coeff(0), pt.eu() * d.coeff(1))
}

/// `ζ^{-k}` with `θ = ζ^{-k}∮F`: `k = α+1`, `0` for `-1` and `v`, `1` for `u`.
fn theta_power(a: AlphaHat) -> i32 {
    (exponent(a) + Ratio::new(1, 2)).to_integer() as i32
}

fn theta_with(a: AlphaHat, zeta: &Zeta, grid: &Grid) -> Result<C64> {
    let z = zeta.value();
    let j = grid.jets(a, z, C64::zero())?;
    Ok(j[0].mean() * z.powi(-theta_power(a)))
}

/// `θ_α̂(ζ)`, holomorphic at `ζ = 0`.
pub fn theta(a: AlphaHat, zeta: &Zeta, pt: &M0Point) -> Result<C64> {
    theta_with(a, zeta, &Grid::new(pt)?)
}

/// `y_α = ζ^{α+½}θ_α`, `y_v = ζ^{-½}θ_v + 2ζ^{½}log ζ θ_u`, `y_u = ζ^{½}θ_u`.
pub fn y(a: AlphaHat, zeta: &Zeta, pt: &M0Point) -> Result<C64> {
    let grid = Grid::new(pt)?;
    let t = theta_with(a, zeta, &grid)?;
    Ok(match a {
        AlphaHat::V => {
            zeta.pow(-0.5) * t + 2.0 * zeta.pow(0.5) * zeta.log() * theta_with(AlphaHat::U, zeta, &grid)?
        }
        _ => zeta.pow(exponent_f64(a)) * t,
    })
}

/// `y_α̂` evaluated as `ζ^{-½}∮F_α̂(ζλ, ζλ̄) + φ_α̂(ζ)` with `φ_v = -2 log ζ`.
pub fn y_from_family(a: AlphaHat, zeta: &Zeta, pt: &M0Point) -> Result<C64> {
    let grid = Grid::new(pt)?;
    let j = grid.jets(a, zeta.value(), 2.0 * zeta.log())?;
    let phi = if a == AlphaHat::V { -2.0 * zeta.log() } else { C64::zero() };
    Ok(zeta.pow(-0.5) * (j[0].mean() + phi))
}

fn dy_with(a: AlphaHat, zeta: &Zeta, grid: &Grid, pt: &M0Point) -> Result<Triple> {
    let j = grid.jets(a, zeta.value(), 2.0 * zeta.log())?;
    let sq = zeta.pow(0.5);
    Ok(differential_from_partials(&(&j[1] * sq), &(&j[2] * sq), pt))
}

fn dtheta_with(a: AlphaHat, zeta: &Zeta, grid: &Grid, pt: &M0Point) -> Result<Triple> {
    let z = zeta.value();
    let j = grid.jets(a, z, C64::zero())?;
    let c = z.powi(1 - theta_power(a));
    Ok(differential_from_partials(&(&j[1] * c), &(&j[2] * c), pt))
}

/// `dy_α̂ = (√ζ((F_x)_{≥0} + (F_x̄)_{<0}), √ζ(F_x̄-F_x)_0, √ζ e^u(F_x̄-F_x)_1)`.
pub fn dy_differential(a: AlphaHat, zeta: &Zeta, pt: &M0Point) -> Result<Triple> {
    dy_with(a, zeta, &Grid::new(pt)?, pt)
}

/// `dθ_α̂(ζ)`.
pub fn theta_differential(a: AlphaHat, zeta: &Zeta, pt: &M0Point) -> Result<Triple> {
    dtheta_with(a, zeta, &Grid::new(pt)?, pt)
}

/// `θ_{α̂,p} = (Q_{α̂,p})_0`, the `p`-th Taylor coefficient of `θ_α̂`.
pub fn theta_coeff(a: AlphaHat, p: i32, pt: &M0Point) -> Result<C64> {
    if p < 0 {
        return Err(TodaError::InvalidIndex(format!("Taylor coefficient p = {p} < 0")));
    }
    Ok(LaxSamples::new(pt.lax()).q(HierarchyIndex::new(a, p)?)?.mean())
}

/// `dθ_{α̂,p}` from the partials of `Q_{α̂,p}`.
pub fn theta_coeff_differential(a: AlphaHat, p: i32, pt: &M0Point) -> Result<Triple> {
    if p < 0 {
        return Err(TodaError::InvalidIndex(format!("Taylor coefficient p = {p} < 0")));
    }
    let (g, gb) = LaxSamples::new(pt.lax()).q_partials(HierarchyIndex::new(a, p)?)?;
    Ok(differential_from_partials(&g, &gb, pt))
}

/// Values that can be combined linearly by the Cauchy quadratures.
pub trait Linear: Sized {
    fn scaled(&self, a: C64) -> Self;
    fn add_assign(&mut self, other: &Self);
}

impl Linear for C64 {
    fn scaled(&self, a: C64) -> Self {
        self * a
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
}

impl Linear for Triple {
    fn scaled(&self, a: C64) -> Self {
        self.scale(a)
    }
    fn add_assign(&mut self, other: &Self) {
        *self = &*self + other;
    }
}

impl Linear for OperatorMatrix {
    fn scaled(&self, a: C64) -> Self {
        self.scale(a)
    }
    fn add_assign(&mut self, other: &Self) {
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                self[(r, c)] += other[(r, c)];
            }
        }
    }
}

/// The `p`-th Taylor coefficient at `center` of a function holomorphic on
/// the disc of the given radius: `(1/n)Σ f(center + r q_j) q_j^{-p} r^{-p}`.
pub fn cauchy_coefficient<T: Linear>(
    center: &Zeta,
    p: i32,
    radius: f64,
    nodes: usize,
    f: impl Fn(&Zeta) -> Result<T>,
) -> Result<T> {
    let mut acc: Option<T> = None;
    for j in 0..nodes {
        let q = C64::from_polar(1.0, 2.0 * PI * j as f64 / nodes as f64);
        let z = center.continued(center.value() + q * radius);
        let w = (q * radius).powi(-p) / nodes as f64;
        let v = f(&z)?.scaled(w);
        match acc.as_mut() {
            Some(a) => a.add_assign(&v),
            None => acc = Some(v),
        }
    }
    Ok(acc.expect("at least one node"))
}

/// Taylor coefficient at `ζ = 0` of a function holomorphic near the origin.
pub fn taylor_at_zero<T: Linear>(p: i32, f: impl Fn(&Zeta) -> Result<T>) -> Result<T> {
    let mut acc: Option<T> = None;
    for j in 0..CAUCHY_NODES {
        let q = C64::from_polar(CAUCHY_RADIUS, 2.0 * PI * j as f64 / CAUCHY_NODES as f64);
        let v = f(&Zeta::unchecked(q.ln()))?.scaled(q.powi(-p) / CAUCHY_NODES as f64);
        match acc.as_mut() {
            Some(a) => a.add_assign(&v),
            None => acc = Some(v),
        }
    }
    Ok(acc.expect("at least one node"))
}

/// `∂_ζ f` at `zeta` on its branch.
pub fn zeta_derivative<T: Linear>(zeta: &Zeta, f: impl Fn(&Zeta) -> Result<T>) -> Result<T> {
    let r = CAUCHY_RADIUS.min(zeta.value().norm() / 2.0);
    cauchy_coefficient(zeta, 1, r, CAUCHY_NODES, f)
}

/// The Taylor coefficient `θ_{α̂,p}` extracted from `θ_α̂(ζ)` on a ζ-circle.
pub fn theta_coeff_cauchy(a: AlphaHat, p: i32, pt: &M0Point) -> Result<C64> {
    let grid = Grid::new(pt)?;
    taylor_at_zero(p, |z| theta_with(a, z, &grid))
}

/// The four conditions on `F_α̂` equivalent to horizontality along `M0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HorizontalityResidual {
    /// `max |(F_xx̄ - F_xx - F_x)_k|` over `k ≥ -1`.
    pub lower: f64,
    /// `max |(F_x̄x̄ - F_xx̄ - F_x̄)_k|` over `k ≤ 1`.
    pub upper: f64,
    /// `(F_x̄ - F_x - F)_0 - c` with `c = 1` for `u` and `0` otherwise.
    pub constant: C64,
    /// `∂_u [e^u(F_x̄ - F_x - F)]_1` at fixed `w`, `v`.
    pub u_derivative: C64,
}

impl HorizontalityResidual {
    pub fn max(&self) -> f64 {
        self.lower.max(self.upper).max(self.constant.norm()).max(self.u_derivative.norm())
    }
}

fn defect(j: &[Samples; 6]) -> LaurentSeries {
    (&(&j[2] - &j[1]) - &j[0]).to_series()
}

/// `∂_u` moves `λ` by `-e^u/z` and `λ̄` by `e^u/z`, so with
/// `D = F_x̄ - F_x - F` it acts as `ζe^u z^{-1}(D_x̄ - D_x)`.
fn u_derivative_of_defect(j: &[Samples; 6], zeta: C64, eu: C64) -> C64 {
    let dd = &(&(&(&j[5] - &j[4]) - &j[4]) + &j[3]) - &(&j[2] - &j[1]);
    eu * (defect(j).coeff(1) + zeta * eu * dd.to_series().coeff(2))
}

pub fn f_horizontality_residual(a: AlphaHat, zeta: &Zeta, pt: &M0Point) -> Result<HorizontalityResidual> {
    let shift = 2.0 * zeta.log();
    let z = zeta.value();
    let j = Grid::new(pt)?.jets(a, z, shift)?;
    let lower = (&(&j[4] - &j[3]) - &j[1]).to_series().project(-1..).max_abs();
    let upper = (&(&j[5] - &j[4]) - &j[2]).to_series().project(..=1).max_abs();
    let c = if a == AlphaHat::U { C64::one() } else { C64::zero() };
    let constant = defect(&j).coeff(0) - c;
    let u_derivative = u_derivative_of_defect(&j, z, pt.eu());
    Ok(HorizontalityResidual { lower, upper, constant, u_derivative })
}

/// `z∂_zG - ζ(G_x(zw')_{≤0} + G_x̄(zw')_{>0} - (G_x̄-G_x)(z + e^u/z))` for
/// `G = F_α̂`, as a max over the grid.
pub fn z_derivation_residual(a: AlphaHat, zeta: &Zeta, pt: &M0Point) -> Result<f64> {
    let z = zeta.value();
    let grid = Grid::new(pt)?;
    let j = grid.jets(a, z, 2.0 * zeta.log())?;
    let n = pt.n_modes();
    let lhs = j[0].to_series().z_deriv().samples();
    let zw = pt.zw_prime();
    let ring = LaurentSeries::from_terms(n, &[(1, C64::one()), (-1, grid.eu)]).samples();
    let rhs = (&j[1] * zw.project(..=0).samples() + &j[2] * zw.project(1..).samples() - (&j[2] - &j[1]) * ring) * z;
    Ok((lhs - rhs).max_abs())
}

/// `∂_X dy - (Γ_X + ζC_X)(dy)` with `∂_X` by central differences.
pub fn deformed_flatness_residual(a: AlphaHat, zeta: &Zeta, x: &Triple, pt: &M0Point) -> Result<Triple> {
    let d = fd_triple(pt, x, 1e-6, |q| dy_differential(a, zeta, q))?;
    let dy = dy_differential(a, zeta, pt)?;
    let rhs = &christoffel(x, &dy, pt) + &mult_operator(x, &dy, pt).scale(zeta.value());
    Ok(&d - &rhs)
}

/// `∂_ζ∇y - (𝒰 + 𝒱/ζ)∇y` on the tangent space.
pub fn zeta_equation_residual(a: AlphaHat, zeta: &Zeta, pt: &M0Point) -> Result<Triple> {
    let grid = Grid::new(pt)?;
    let grad = |z: &Zeta| -> Result<Triple> { Ok(eta_sharp_triple(&dy_with(a, z, &grid, pt)?, pt)) };
    let d = zeta_derivative(zeta, grad)?;
    let g = grad(zeta)?;
    let rhs = &u_operator_tangent(&g, pt) + &v_operator_tangent(&g, pt).scale(zeta.value().inv());
    Ok(&d - &rhs)
}

/// `⟨dF_{η(α̂)}, ∂/∂t^γ̂⟩` on the window: the matrix of `∇f^α̂ ↦` flat
/// components.
fn matrix_of(
    pt: &M0Point,
    window: i32,
    differential: impl Fn(AlphaHat) -> Result<Triple>,
) -> Result<OperatorMatrix> {
    let idx = window_indices(window);
    let vectors: Vec<Triple> = idx.iter().map(|&g| coordinate_vector(g, pt)).collect();
    let mut m = OperatorMatrix::zeros(idx.clone());
    for (c, &a) in idx.iter().enumerate() {
        let d = differential(eta_partner(a))?;
        for (r, v) in vectors.iter().enumerate() {
            m[(r, c)] = triple_pairing(&d, v);
        }
    }
    Ok(m)
}

fn check_window(window: i32) -> Result<()> {
    if window < 2 {
        return Err(TodaError::InvalidIndex(format!("window {window} < 2")));
    }
    Ok(())
}

/// `Y`, with `Y(∇t^α̂) = ∇y^α̂`.
pub fn fundamental_matrix(zeta: &Zeta, pt: &M0Point, window: i32) -> Result<OperatorMatrix> {
    check_window(window)?;
    let grid = Grid::new(pt)?;
    matrix_of(pt, window, |a| dy_with(a, zeta, &grid, pt))
}

/// `Θ`, with `Θ(∇t^α̂) = ∇θ^α̂`.
pub fn theta_matrix(zeta: &Zeta, pt: &M0Point, window: i32) -> Result<OperatorMatrix> {
    check_window(window)?;
    let grid = Grid::new(pt)?;
    matrix_of(pt, window, |a| dtheta_with(a, zeta, &grid, pt))
}

/// `Θ(0)`, the mean of `Θ` over a ζ-circle.
pub fn theta_matrix_at_zero(pt: &M0Point, window: i32) -> Result<OperatorMatrix> {
    check_window(window)?;
    let grid = Grid::new(pt)?;
    taylor_at_zero(0, |z| matrix_of(pt, window, |a| dtheta_with(a, z, &grid, pt)))
}

/// Largest flat component of `∇θ^α̂(ζ)`, `α̂` in the window, along `∂/∂t^γ`
/// with `A < |γ| ≤ 2A`: the part of `Θ` the window cuts off.
pub fn window_leakage(zeta: &Zeta, pt: &M0Point, window: i32) -> Result<f64> {
    check_window(window)?;
    let grid = Grid::new(pt)?;
    let outside: Vec<Triple> = (-2 * window..=2 * window)
        .filter(|g| g.abs() > window)
        .map(|g| coordinate_vector(AlphaHat::Int(g), pt))
        .collect();
    let mut worst = 0.0f64;
    for a in window_indices(window) {
        let d = dtheta_with(eta_partner(a), zeta, &grid, pt)?;
        for v in &outside {
            worst = worst.max(triple_pairing(&d, v).norm());
        }
    }
    Ok(worst)
}

/// `ζ^𝒱 ζ^R` on the window.
pub fn levelt_factor(zeta: &Zeta, window: i32) -> OperatorMatrix {
    let idx = window_indices(window);
    let mut m = OperatorMatrix::zeros(idx.clone());
    for (i, &a) in idx.iter().enumerate() {
        let e = mu(a);
        m[(i, i)] = zeta.pow(*e.numer() as f64 / *e.denom() as f64);
    }
    let (v, u) = (m.position(AlphaHat::V).unwrap(), m.position(AlphaHat::U).unwrap());
    m[(v, u)] = 2.0 * zeta.log() * zeta.pow(0.5);
    m
}

/// `max |Y - Θ ζ^𝒱 ζ^R|` on the window.
pub fn levelt_residual(zeta: &Zeta, pt: &M0Point, window: i32) -> Result<f64> {
    let y = fundamental_matrix(zeta, pt, window)?;
    let t = theta_matrix(zeta, pt, window)?;
    Ok(y.max_diff(&(&t * &levelt_factor(zeta, window))))
}

/// `max` over window columns and rows of the flat components of
/// `∂_ζ∇y^α̂ - (𝒰 + 𝒱/ζ)∇y^α̂`.
pub fn fundamental_ode_residual(zeta: &Zeta, pt: &M0Point, window: i32) -> Result<f64> {
    check_window(window)?;
    let idx = window_indices(window);
    let duals: Vec<Triple> = idx.iter().map(|&g| dt_differential(eta_partner(g), pt)).collect();
    let mut worst = 0.0f64;
    for &a in &idx {
        let r = zeta_equation_residual(eta_partner(a), zeta, pt)?;
        for d in &duals {
            worst = worst.max(triple_pairing(d, &r).norm());
        }
    }
    Ok(worst)
}

/// Spectrum at `ζ = 0`: `μ` and the nilpotent `R` with `R(∂_v) = 2∂_u`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonodromyData {
    pub indices: Vec<AlphaHat>,
    pub mu: Vec<Ratio<i64>>,
    /// `R` in the basis `∇t^α̂`; `∂_v = ∇t^u`, `∂_u = ∇t^v`.
    pub r: OperatorMatrix,
}

/// Outcome of the structural checks on [`MonodromyData`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonodromyChecks {
    pub nilpotent: bool,
    pub eta_symmetric: bool,
    pub graded: bool,
}

impl MonodromyChecks {
    pub fn all(&self) -> bool {
        self.nilpotent && self.eta_symmetric && self.graded
    }
}

pub fn monodromy_data(window: i32) -> MonodromyData {
    let indices = window_indices(window);
    let mu_v = indices.iter().map(|&a| mu(a)).collect();
    let mut r = OperatorMatrix::zeros(indices.clone());
    let (v, u) = (r.position(AlphaHat::V).unwrap(), r.position(AlphaHat::U).unwrap());
    r[(v, u)] = C64::from(2.0);
    MonodromyData { indices, mu: mu_v, r }
}

impl MonodromyData {
    /// `R² = 0`, `η(RX, Y) = η(X, RY)`, and `ζ^𝒱Rζ^{-𝒱} = ζR`, the last as
    /// `μ_row - μ_col = 1` on every nonzero entry. Entries of `R` are small
    /// integers, so these hold exactly.
    pub fn check(&self) -> MonodromyChecks {
        let r2 = &self.r * &self.r;
        let g = eta_matrix(self.indices.clone());
        let gr = &g * &self.r;
        let n = self.indices.len();
        let mut graded = true;
        for i in 0..n {
            for j in 0..n {
                if self.r[(i, j)] != C64::zero() && self.mu[i] - self.mu[j] != Ratio::one() {
                    graded = false;
                }
            }
        }
        MonodromyChecks { nilpotent: r2.max_abs() == 0.0, eta_symmetric: gr == gr.transpose(), graded }
    }
}

fn dfac(a: i32) -> f64 {
    even_double_factorial(a)
}

/// `C^γ̂_α̂`. The `-1` column is `(-1)^γ(c_{γ+1}-1)/(2(2γ)!!)`, half the
/// `v` column on even rows; this is the value for which `θ̃ = θC` holds.
pub fn c_entry(g: AlphaHat, a: AlphaHat) -> f64 {
    use AlphaHat::{Int, U, V};
    match (g, a) {
        (Int(g), Int(a)) if g >= 0 && a >= 0 => {
            if g >= a && (g - a) % 2 == 0 {
                dfac(a) / dfac(g)
            } else {
                0.0
            }
        }
        (Int(g), Int(-1)) if g >= 0 => {
            let sign = if g % 2 == 0 { 1.0 } else { -1.0 };
            sign * (harmonic_f64(g + 1) - 1.0) / (2.0 * dfac(g))
        }
        (Int(g), V) if g >= 0 => {
            if g % 2 == 0 {
                (harmonic_f64(g + 1) - 1.0) / dfac(g)
            } else {
                0.0
            }
        }
        (Int(g), Int(a)) if g == a => 1.0,
        (V, V) | (U, U) => 1.0,
        _ => 0.0,
    }
}

/// `C` on the window, rows `γ̂`, columns `α̂`.
pub fn c_matrix(window: i32) -> OperatorMatrix {
    OperatorMatrix::from_fn(window_indices(window), |g, a| C64::from(c_entry(g, a)))
}

/// Indices `γ̂` with `C^γ̂_α̂ ≠ 0`, in increasing `e_γ̂ - e_α̂`, up to
/// `max_int`.
fn c_support(a: AlphaHat, max_int: i32) -> Vec<AlphaHat> {
    let mut out = Vec::new();
    match a {
        AlphaHat::Int(a) if a >= 0 => out.extend((a..=max_int).step_by(2).map(AlphaHat::Int)),
        AlphaHat::Int(-1) => {
            out.push(AlphaHat::Int(-1));
            out.extend((1..=max_int).map(AlphaHat::Int));
        }
        AlphaHat::V => {
            out.push(AlphaHat::V);
            out.extend((2..=max_int).step_by(2).map(AlphaHat::Int));
        }
        other => out.push(other),
    }
    out
}

/// `θ̃_α̂(ζ)` and its partials in `λ`, `λ̄` on the grid.
fn theta_tilde_density(a: AlphaHat, zeta: C64, ls: &LaxSamples) -> Result<(Samples, Samples, Samples)> {
    let (l, b, s, d) = (ls.lambda(), ls.lambdabar(), ls.sum(), ls.diff());
    let z = zeta;
    let half = (d * (z / 2.0)).exp();
    match a {
        AlphaHat::Int(a) if a >= 0 => {
            let c = -dfac(a);
            let sh = s * 0.5;
            let (mut p, mut p1) = (Samples::constant(ls.n_modes(), C64::zero()), Samples::constant(ls.n_modes(), C64::zero()));
            let mut n = 0;
            loop {
                let m = 2 * n + a + 1;
                let zn = z.powi(2 * n);
                let t = sh.powi(m) * (zn * 2.0 / factorial(m));
                let t1 = sh.powi(m - 1) * (zn / factorial(m - 1));
                p = p + &t;
                p1 = p1 + &t1;
                if (t.max_abs() < 1e-18 && t1.max_abs() < 1e-18) || n > 60 {
                    break;
                }
                n += 1;
            }
            let f = &p * &half * c;
            let gl = (&p1 - &p * (z / 2.0)) * &half * c;
            let gb = (&p1 + &p * (z / 2.0)) * &half * c;
            Ok((f, gl, gb))
        }
        AlphaHat::Int(-1) | AlphaHat::V => {
            let lg = ls.log_ratio()?;
            let em = (l * (-z)).exp();
            let eh = (s * (z / 2.0)).exp();
            let k = lg + l.map(|v| ein_unchecked(-v * z)) - s.map(|v| ein_unchecked(-v * z / 2.0));
            let kl = -(l * z).exp() / l + &eh / s;
            let kb = &eh / s;
            let f = -(&em * &k);
            let gl = &em * &k * z - &em * &kl;
            let gb = -(&em * &kb);
            if a != AlphaHat::V {
                return Ok((f, gl, gb));
            }
            let ep = (b * z).exp();
            let ehm = (s * (-z / 2.0)).exp();
            let j = ls.log_product()? - b.map(|v| ein_unchecked(v * z)) - s.map(|v| ein_unchecked(v * z / 2.0));
            let jl = &ehm / s;
            let jb = (b * (-z)).exp() / b + &ehm / s;
            Ok((f + &ep * &j, gl + &ep * &jl, gb + &ep * &j * z + &ep * &jb))
        }
        AlphaHat::Int(a) => {
            let n = a + 1;
            let nf = f64::from(n);
            let f = -(s.powi(n) / nf) * &half;
            let gl = -(s.powi(n - 1) - s.powi(n) * (z / (2.0 * nf))) * &half;
            let gb = -(s.powi(n - 1) + s.powi(n) * (z / (2.0 * nf))) * &half;
            Ok((f, gl, gb))
        }
        AlphaHat::U => {
            let ep = (b * z).exp();
            Ok(((&ep - C64::one()) / z, Samples::constant(ls.n_modes(), C64::zero()), ep))
        }
    }
}

fn check_reach(ls: &LaxSamples, z: C64) -> Result<()> {
    let reach = ls.lambda().max_abs().max(ls.lambdabar().max_abs()) * z.norm();
    if reach > EIN_LIMIT {
        return Err(TodaError::EinOutOfRange(reach));
    }
    Ok(())
}

/// `θ̃_α̂(ζ)`, the orthogonal analytic family.
pub fn theta_tilde(a: AlphaHat, zeta: &Zeta, pt: &M0Point) -> Result<C64> {
    let ls = LaxSamples::new(pt.lax());
    check_reach(&ls, zeta.value())?;
    Ok(theta_tilde_density(a, zeta.value(), &ls)?.0.mean())
}

/// `dθ̃_α̂(ζ)`.
pub fn theta_tilde_differential(a: AlphaHat, zeta: &Zeta, pt: &M0Point) -> Result<Triple> {
    let ls = LaxSamples::new(pt.lax());
    check_reach(&ls, zeta.value())?;
    let (_, gl, gb) = theta_tilde_density(a, zeta.value(), &ls)?;
    Ok(differential_from_partials(&gl, &gb, pt))
}

/// `⟨dθ̃_α̂(-ζ), η* dθ̃_β̂(ζ)⟩ - η_{α̂β̂}` on the window.
pub fn orthogonality_residual(zeta: &Zeta, pt: &M0Point, window: i32) -> Result<OperatorMatrix> {
    check_window(window)?;
    let idx = window_indices(window);
    let minus = zeta.negated();
    let plus: Vec<Triple> = idx.iter().map(|&a| theta_tilde_differential(a, zeta, pt)).collect::<Result<_>>()?;
    let neg: Vec<Triple> = idx.iter().map(|&a| theta_tilde_differential(a, &minus, pt)).collect::<Result<_>>()?;
    let g = OperatorMatrix::from_fn(idx.clone(), |a, b| {
        let (i, j) = (idx.iter().position(|&x| x == a).unwrap(), idx.iter().position(|&x| x == b).unwrap());
        eta_cotangent(&neg[i], &plus[j], pt)
    });
    Ok(&g - &eta_matrix(idx))
}

/// `θ̃_α̂(ζ) - Σ_γ̂ θ_γ̂(ζ) C^γ̂_α̂ ζ^{e_γ̂ - e_α̂}`, summed until the terms
/// drop below `1e-18`.
pub fn c_relation_residual(a: AlphaHat, zeta: &Zeta, pt: &M0Point) -> Result<C64> {
    let grid = Grid::new(pt)?;
    let z = zeta.value();
    let mut sum = C64::zero();
    let mut small = 0;
    for g in c_support(a, 80) {
        let c = c_entry(g, a);
        if c == 0.0 {
            continue;
        }
        let term = theta_with(g, zeta, &grid)? * c * z.powi(exponent_gap(g, a));
        sum += term;
        if matches!(g, AlphaHat::Int(k) if k >= 0) && term.norm() < 1e-18 * sum.norm().max(1.0) {
            small += 1;
            if small >= 2 {
                break;
            }
        } else {
            small = 0;
        }
    }
    Ok(theta_tilde(a, zeta, pt)? - sum)
}

/// `(Q̃_{α̂,p})_0` against the Taylor coefficient of `θ̃_α̂` and against the
/// finite sum `Σ_γ̂ θ_{γ̂, p-(e_γ̂-e_α̂)} C^γ̂_α̂`.
pub fn q_tilde_consistency(a: AlphaHat, p: i32, pt: &M0Point) -> Result<(C64, C64)> {
    let ls = LaxSamples::new(pt.lax());
    let q = ls.q_tilde(HierarchyIndex::new(a, p)?)?.mean();
    let cauchy = taylor_at_zero(p, |z| Ok(theta_tilde_density(a, z.value(), &ls)?.0.mean()))?;
    let mut sum = C64::zero();
    for g in c_support(a, a_bound(a, p)) {
        let gap = exponent_gap(g, a);
        if gap < 0 || gap > p {
            continue;
        }
        let c = c_entry(g, a);
        if c != 0.0 {
            sum += theta_coeff(g, p - gap, pt)? * c;
        }
    }
    Ok((q - cauchy, q - sum))
}

fn a_bound(a: AlphaHat, p: i32) -> i32 {
    match a {
        AlphaHat::Int(a) => a.max(-1) + p + 1,
        _ => p + 1,
    }
}

/// `Ω_{α̂p;β̂q} = Σ_{m=0}^{q} (-1)^m ⟨∇θ_{α̂,p+m+1}, ∇θ_{β̂,q-m}⟩`.
pub fn omega(a: HierarchyIndex, b: HierarchyIndex, pt: &M0Point) -> Result<C64> {
    if b.p < 0 {
        return Err(TodaError::InvalidIndex(format!("Omega needs q >= 0, got {b}")));
    }
    let mut sum = C64::zero();
    for m in 0..=b.p {
        let da = theta_coeff_differential(a.alpha, a.p + m + 1, pt)?;
        let db = theta_coeff_differential(b.alpha, b.p - m, pt)?;
        let term = eta_cotangent(&da, &db, pt);
        sum += if m % 2 == 0 { term } else { -term };
    }
    Ok(sum)
}

/// `∂_xΩ_{α̂p;β̂q} - ∂θ_{α̂,p}/∂t^{β̂,q}` at each x-node.
pub fn omega_xderiv_residual(a: HierarchyIndex, b: HierarchyIndex, lp: &LoopLaxPoint) -> Result<Vec<C64>> {
    lp.require_m0()?;
    let n = lp.n_modes();
    let omegas = lp
        .slices()
        .map(|s| Ok(LaurentSeries::constant(n, omega(a, b, &M0Point::new(s)?)?)))
        .collect::<Result<Vec<_>>>()?;
    let dx = LoopField::from_slices(omegas)?.x_deriv();
    let ctx = LoopContext::new(lp);
    let dt = ctx.time_derivative(a, &ctx.lax_flow(b)?)?;
    Ok((0..lp.x_modes()).map(|j| dx.slice(j).coeff(0) - dt.slice(j).mean()).collect())
}
