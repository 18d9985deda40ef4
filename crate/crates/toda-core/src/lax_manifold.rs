//! Points of `M ⊃ M1 ⊃ M0`, the chart of w-coordinates, and the pair and
//! triple representations of tangent and cotangent vectors.
//!
//! A point is a pair of Lax symbols `λ = z + Σ_{k<=0} u_k z^k` and
//! `λ̄ = Σ_{k>=-1} ū_k z^k`. `M1` asks for windings `(1, -1, 1)` of
//! `(λ, λ̄, λ+λ̄)`; `M0` further asks that `w = λ+λ̄` trace a simple curve
//! around the origin with `w' ≠ 0` and `ū_{-1} ≠ 0`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::{Add, Sub};

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::circle_spectral::{winding_of_samples, LaurentSeries, LoopField, Samples};
use crate::{Result, TodaError, C64};

const STRUCTURE_TOL: f64 = 1e-12;

/// A pair of Lax symbols `(λ, λ̄)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaxPoint {
    lambda: LaurentSeries,
    lambdabar: LaurentSeries,
}

/// Coordinates `(w, v, u)` with `w = λ+λ̄`, `v = ū_0`, `e^u = ū_{-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct WCoords {
    pub w: LaurentSeries,
    pub v: C64,
    pub u: C64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub winding_lambda: Option<i32>,
    pub winding_lambdabar: Option<i32>,
    pub winding_w: Option<i32>,
    /// `|ū_{-1}|`.
    pub lambdabar_residue: f64,
    /// `min |w'| / max |w'|` on the circle.
    pub w_prime_ratio: f64,
    /// Smallest distance between points of Γ at least a quarter turn apart,
    /// relative to the diameter of Γ.
    pub gamma_separation: f64,
    pub self_intersecting: bool,
    pub tail_health: f64,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Membership {
    pub in_m1: bool,
    pub in_m0: bool,
    pub diagnostics: Diagnostics,
}

impl LaxPoint {
    /// Checks the normalisation `λ = z + O(1)` and that `λ̄` has no modes
    /// below `z^{-1}`.
    pub fn new(mut lambda: LaurentSeries, lambdabar: LaurentSeries) -> Result<Self> {
        if lambda.n_modes() != lambdabar.n_modes() {
            return Err(TodaError::InvalidLaxSymbol(format!(
                "mode counts differ: {} and {}",
                lambda.n_modes(),
                lambdabar.n_modes()
            )));
        }
        if (lambda.coeff(1) - 1.0).norm() > STRUCTURE_TOL {
            return Err(TodaError::InvalidLaxSymbol(format!("lambda has z-coefficient {}", lambda.coeff(1))));
        }
        if let Some((k, c)) = lambda.terms().find(|&(k, c)| k >= 2 && c.norm() > STRUCTURE_TOL) {
            return Err(TodaError::InvalidLaxSymbol(format!("lambda has mode {k} = {c}")));
        }
        if let Some((k, c)) = lambdabar.terms().find(|&(k, c)| k < -1 && c.norm() > STRUCTURE_TOL) {
            return Err(TodaError::InvalidLaxSymbol(format!("lambdabar has mode {k} = {c}")));
        }
        lambda.set_coeff(1, C64::new(1.0, 0.0));
        let lambda = lambda.project(..=1);
        let lambdabar = lambdabar.project(-1..);
        Ok(LaxPoint { lambda, lambdabar })
    }

    pub fn lambda(&self) -> &LaurentSeries {
        &self.lambda
    }

    pub fn lambdabar(&self) -> &LaurentSeries {
        &self.lambdabar
    }

    pub fn n_modes(&self) -> usize {
        self.lambda.n_modes()
    }

    pub fn w(&self) -> LaurentSeries {
        &self.lambda + &self.lambdabar
    }

    /// `ū_{-1}`.
    pub fn residue(&self) -> C64 {
        self.lambdabar.coeff(-1)
    }

    pub fn to_w_coords(&self) -> WCoords {
        WCoords { w: self.w(), v: self.lambdabar.coeff(0), u: self.residue().ln() }
    }

    pub fn from_w_coords(wc: &WCoords) -> LaxPoint {
        let n = wc.w.n_modes();
        let eu = wc.u.exp();
        let one = C64::new(1.0, 0.0);
        let lambda = &wc.w.project(..=0) + &LaurentSeries::from_terms(n, &[(1, one), (0, -wc.v), (-1, -eu)]);
        let lambdabar = &wc.w.project(1..) + &LaurentSeries::from_terms(n, &[(1, -one), (0, wc.v), (-1, eu)]);
        LaxPoint { lambda, lambdabar }
    }

    pub fn validate(&self) -> Membership {
        let mut d = Diagnostics::default();
        let w = self.w();
        let ws = w.samples();
        let wind = |s: &Samples, notes: &mut Vec<String>, name: &str| match winding_of_samples(s) {
            Ok(k) => Some(k.value()),
            Err(e) => {
                notes.push(format!("{name}: {e}"));
                None
            }
        };
        d.winding_lambda = wind(&self.lambda.samples(), &mut d.notes, "lambda");
        d.winding_lambdabar = wind(&self.lambdabar.samples(), &mut d.notes, "lambdabar");
        d.winding_w = wind(&ws, &mut d.notes, "w");
        d.tail_health = self.lambda.tail_health().max(self.lambdabar.tail_health());
        let in_m1 = d.winding_lambda == Some(1) && d.winding_lambdabar == Some(-1) && d.winding_w == Some(1);

        d.lambdabar_residue = self.residue().norm();
        let wp = w.z_deriv().samples();
        d.w_prime_ratio = if wp.max_abs() > 0.0 { wp.min_abs() / wp.max_abs() } else { 0.0 };
        let (sep, crossing) = curve_scan(&w, &ws);
        d.gamma_separation = sep;
        d.self_intersecting = crossing;

        let mut in_m0 = in_m1;
        if d.lambdabar_residue <= 1e-14 {
            d.notes.push("lambdabar residue vanishes".into());
            in_m0 = false;
        }
        if !(d.w_prime_ratio > 1e-8) {
            d.notes.push("w' vanishes on the circle".into());
            in_m0 = false;
        }
        if crossing {
            d.notes.push("the curve w(S^1) intersects itself".into());
            in_m0 = false;
        }
        Membership { in_m1, in_m0, diagnostics: d }
    }

    pub fn require_m1(&self) -> Result<()> {
        let m = self.validate();
        if m.in_m1 {
            Ok(())
        } else {
            Err(TodaError::NotInM1(failure_reason(&m)))
        }
    }

    pub fn require_m0(&self) -> Result<()> {
        let m = self.validate();
        if m.in_m0 {
            Ok(())
        } else {
            Err(TodaError::NotInM0(failure_reason(&m)))
        }
    }

    /// `(X + X̄, (X̄)_0, (X̄)_{-1}/ū_{-1})`.
    pub fn vector_pair_to_triple(&self, x: &Pair) -> Triple {
        Triple { z: &x.first + &x.second, v: x.second.coeff(0), u: x.second.coeff(-1) / self.residue() }
    }

    pub fn vector_triple_to_pair(&self, x: &Triple) -> Pair {
        let n = x.z.n_modes();
        let r = x.u * self.residue();
        let corr = LaurentSeries::from_terms(n, &[(0, x.v), (-1, r)]);
        Pair { first: &x.z.project(..=0) - &corr, second: &x.z.project(1..) + &corr }
    }

    /// `(α + (ᾱ)_{<0}, (ᾱ-α)_0, ū_{-1}(ᾱ-α)_1)`.
    pub fn covector_pair_to_triple(&self, a: &Pair) -> Triple {
        let diff = &a.second - &a.first;
        Triple { z: &a.first + &a.second.project(..0), v: diff.coeff(0), u: self.residue() * diff.coeff(1) }
    }

    pub fn covector_triple_to_pair(&self, a: &Triple) -> Pair {
        let n = a.z.n_modes();
        let mut second = a.z.project(..0);
        second.set_coeff(0, a.z.coeff(0) + a.v);
        second.set_coeff(1, a.z.coeff(1) + a.u / self.residue());
        let _ = n;
        Pair { first: a.z.project(0..), second }
    }

    pub fn covector_triple(&self, a: &CotangentRep) -> Triple {
        match a {
            CotangentRep::Pair(p) => self.covector_pair_to_triple(p),
            CotangentRep::Triple(t) => t.clone(),
        }
    }

    pub fn vector_triple(&self, x: &TangentRep) -> Triple {
        match x {
            TangentRep::Pair(p) => self.vector_pair_to_triple(p),
            TangentRep::Triple(t) => t.clone(),
        }
    }

    /// `⟨α, X⟩`, computed in pair form when both arguments are pairs and in
    /// triple form otherwise.
    pub fn pairing(&self, a: &CotangentRep, x: &TangentRep) -> C64 {
        match (a, x) {
            (CotangentRep::Pair(a), TangentRep::Pair(x)) => {
                a.first.product_mean(&x.first) + a.second.product_mean(&x.second)
            }
            _ => triple_pairing(&self.covector_triple(a), &self.vector_triple(x)),
        }
    }
}

fn failure_reason(m: &Membership) -> String {
    let d = &m.diagnostics;
    let mut s = format!(
        "windings (lambda, lambdabar, w) = ({:?}, {:?}, {:?})",
        d.winding_lambda, d.winding_lambdabar, d.winding_w
    );
    for n in &d.notes {
        s.push_str("; ");
        s.push_str(n);
    }
    s
}

fn segments_cross(a: C64, b: C64, c: C64, d: C64) -> bool {
    let cross = |o: C64, p: C64, q: C64| (p - o).re * (q - o).im - (p - o).im * (q - o).re;
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Refines the distance between two arcs of Γ near parameters `s`, `t` by
/// alternating bisection on each parameter.
fn refined_distance(w: &LaurentSeries, mut s: f64, mut t: f64, h: f64) -> f64 {
    let at = |th: f64| w.eval(C64::from_polar(1.0, th));
    let mut step = h;
    for _ in 0..40 {
        let q = at(t);
        let ds = |a: f64| (at(a) - q).norm();
        s = [s - step, s, s + step].into_iter().min_by(|a, b| ds(*a).total_cmp(&ds(*b))).unwrap();
        let p = at(s);
        let dt = |b: f64| (at(b) - p).norm();
        t = [t - step, t, t + step].into_iter().min_by(|a, b| dt(*a).total_cmp(&dt(*b))).unwrap();
        step *= 0.5;
    }
    (at(s) - at(t)).norm()
}

/// Returns `(relative separation, self-intersecting)` for Γ = w(S¹).
fn curve_scan(w: &LaurentSeries, ws: &Samples) -> (f64, bool) {
    let p = ws.values();
    let n = p.len();
    let mut diam = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            diam = diam.max((p[i] - p[j]).norm());
        }
    }
    if diam == 0.0 {
        return (0.0, true);
    }
    let h = 2.0 * core::f64::consts::PI / n as f64;
    let mut separation = f64::INFINITY;
    for i in 0..n {
        for j in i + 2..n {
            let gap = (j - i).min(n - (j - i));
            if gap < 2 {
                continue;
            }
            let dist = (p[i] - p[j]).norm();
            if gap >= n / 4 {
                separation = separation.min(dist / diam);
            }
            if dist < 1e-6 * diam && refined_distance(w, i as f64 * h, j as f64 * h, h) < 1e-6 * diam {
                return (separation.min(dist / diam), true);
            }
            if gap >= 2 && j + 1 - i < n && segments_cross(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n]) {
                return (separation.min(dist / diam), true);
            }
        }
    }
    (separation, false)
}

/// `(X(z), X_v, X_u)`: the representation in `ℋ(S¹) ⊕ ℂ²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Triple {
    pub z: LaurentSeries,
    pub v: C64,
    pub u: C64,
}

/// `(X(z), X̄(z))`: vectors live in `ℋ(D_∞) ⊕ z⁻¹ℋ(D_0)`, covectors in
/// `ℋ(D_0) ⊕ zℋ(D_∞)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pair {
    pub first: LaurentSeries,
    pub second: LaurentSeries,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TangentRep {
    Pair(Pair),
    Triple(Triple),
}

#[derive(Clone, Debug, PartialEq)]
pub enum CotangentRep {
    Pair(Pair),
    Triple(Triple),
}

impl Triple {
    pub fn new(z: LaurentSeries, v: C64, u: C64) -> Self {
        Triple { z, v, u }
    }

    pub fn zeros(n_modes: usize) -> Self {
        Triple { z: LaurentSeries::zeros(n_modes), v: C64::zero(), u: C64::zero() }
    }

    pub fn scale(&self, a: C64) -> Self {
        Triple { z: self.z.scale(a), v: self.v * a, u: self.u * a }
    }

    pub fn max_abs(&self) -> f64 {
        self.z.max_abs().max(self.v.norm()).max(self.u.norm())
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }
}

impl Add<&Triple> for &Triple {
    type Output = Triple;
    fn add(self, rhs: &Triple) -> Triple {
        Triple { z: &self.z + &rhs.z, v: self.v + rhs.v, u: self.u + rhs.u }
    }
}

impl Sub<&Triple> for &Triple {
    type Output = Triple;
    fn sub(self, rhs: &Triple) -> Triple {
        Triple { z: &self.z - &rhs.z, v: self.v - rhs.v, u: self.u - rhs.u }
    }
}

/// `⟨α, X⟩ = (αX)_0 + α_v X_v + α_u X_u`.
pub fn triple_pairing(a: &Triple, x: &Triple) -> C64 {
    a.z.product_mean(&x.z) + a.v * x.v + a.u * x.u
}

/// A point of the loop space: `(λ, λ̄)` depending periodically on `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopLaxPoint {
    lambda: LoopField,
    lambdabar: LoopField,
}

impl LoopLaxPoint {
    pub fn new(lambda: LoopField, lambdabar: LoopField) -> Result<Self> {
        if lambda.x_modes() != lambdabar.x_modes() {
            return Err(TodaError::InvalidLaxSymbol("x grids differ".into()));
        }
        let mut l = Vec::with_capacity(lambda.x_modes());
        let mut b = Vec::with_capacity(lambda.x_modes());
        for (a, c) in lambda.slices().iter().zip(lambdabar.slices()) {
            let pt = LaxPoint::new(a.clone(), c.clone())?;
            l.push(pt.lambda);
            b.push(pt.lambdabar);
        }
        Ok(LoopLaxPoint { lambda: LoopField::from_slices(l)?, lambdabar: LoopField::from_slices(b)? })
    }

    /// Skips the structure checks; callers keep the mode constraints.
    pub(crate) fn from_parts(lambda: LoopField, lambdabar: LoopField) -> Self {
        LoopLaxPoint { lambda, lambdabar }
    }

    /// The x-independent loop through a single point.
    pub fn constant(pt: &LaxPoint, x_modes: usize) -> Result<Self> {
        Ok(LoopLaxPoint {
            lambda: LoopField::constant(&pt.lambda, x_modes)?,
            lambdabar: LoopField::constant(&pt.lambdabar, x_modes)?,
        })
    }

    pub fn lambda(&self) -> &LoopField {
        &self.lambda
    }

    pub fn lambdabar(&self) -> &LoopField {
        &self.lambdabar
    }

    pub fn x_modes(&self) -> usize {
        self.lambda.x_modes()
    }

    pub fn n_modes(&self) -> usize {
        self.lambda.n_modes()
    }

    pub fn slice(&self, j: usize) -> LaxPoint {
        LaxPoint { lambda: self.lambda.slice(j).clone(), lambdabar: self.lambdabar.slice(j).clone() }
    }

    pub fn slices(&self) -> impl Iterator<Item = LaxPoint> + '_ {
        (0..self.x_modes()).map(|j| self.slice(j))
    }

    pub fn validate(&self) -> Vec<Membership> {
        self.slices().map(|p| p.validate()).collect()
    }

    pub fn require_m1(&self) -> Result<()> {
        for (j, p) in self.slices().enumerate() {
            p.require_m1().map_err(|e| match e {
                TodaError::NotInM1(s) => TodaError::NotInM1(format!("at x-node {j}: {s}")),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn require_m0(&self) -> Result<()> {
        for (j, p) in self.slices().enumerate() {
            p.require_m0().map_err(|e| match e {
                TodaError::NotInM0(s) => TodaError::NotInM0(format!("at x-node {j}: {s}")),
                other => other,
            })?;
        }
        Ok(())
    }

    /// Tail health `(z, x)` of both symbols.
    pub fn tail_health(&self) -> (f64, f64) {
        let (a, b) = self.lambda.tail_health();
        let (c, d) = self.lambdabar.tail_health();
        (a.max(c), b.max(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn point(lambda: &[(i32, C64)], lambdabar: &[(i32, C64)]) -> LaxPoint {
        LaxPoint::new(LaurentSeries::from_terms(32, lambda), LaurentSeries::from_terms(32, lambdabar)).unwrap()
    }

    #[test]
    fn sample_point_w_coords() {
        let pt = point(&[(1, c(1.0)), (0, c(0.1))], &[(-1, c(0.25))]);
        let wc = pt.to_w_coords();
        let w = LaurentSeries::from_terms(32, &[(1, c(1.0)), (0, c(0.1)), (-1, c(0.25))]);
        assert!(wc.w.max_diff(&w) < 1e-15);
        assert_eq!(wc.v, c(0.0));
        assert!((wc.u - c(0.25f64.ln())).norm() < 1e-15);
        assert!(LaxPoint::from_w_coords(&wc).lambda.max_diff(&pt.lambda) < 1e-15);
    }

    #[test]
    fn unit_circle_point() {
        let pt = point(&[(1, c(1.0))], &[(-1, c(1.0))]);
        let wc = pt.to_w_coords();
        assert_eq!(wc.v, c(0.0));
        assert_eq!(wc.u, c(0.0));
    }

    #[test]
    fn membership_examples() {
        let good = point(&[(1, c(1.0)), (0, c(0.1))], &[(-1, c(0.25))]).validate();
        assert!(good.in_m1 && good.in_m0, "{good:?}");
        let shifted = point(&[(1, c(1.0)), (0, c(3.0))], &[(-1, c(0.5))]).validate();
        assert!(!shifted.in_m0);
        let zero_outside = point(&[(1, c(1.0)), (0, c(-2.0))], &[(-1, c(1.0))]).validate();
        assert!(!zero_outside.in_m1);
        let degenerate = point(&[(1, c(1.0))], &[(-1, c(1.0))]).validate();
        assert!(!degenerate.in_m0);
        let empty = point(&[(1, c(1.0))], &[]).validate();
        assert!(!empty.in_m1);
    }

    #[test]
    fn structure_is_enforced() {
        let n = 8;
        let bad = LaxPoint::new(LaurentSeries::monomial(n, 2, c(1.0)), LaurentSeries::zeros(n));
        assert!(bad.is_err());
        let bad = LaxPoint::new(LaurentSeries::monomial(n, 1, c(1.0)), LaurentSeries::monomial(n, -2, c(1.0)));
        assert!(bad.is_err());
    }

    #[test]
    fn distinguished_fields_in_triple_form() {
        let pt = point(&[(1, c(1.0)), (0, c(0.1)), (-1, C64::new(0.0, 0.03))], &[(-1, c(0.25)), (0, c(0.05))]);
        let n = 32;
        let e = Pair { first: LaurentSeries::constant(n, c(-1.0)), second: LaurentSeries::constant(n, c(1.0)) };
        let t = pt.vector_pair_to_triple(&e);
        assert!(t.max_diff(&Triple::new(LaurentSeries::zeros(n), c(1.0), c(0.0))) < 1e-15);

        let euler = Pair {
            first: pt.lambda() - &pt.lambda().z_deriv(),
            second: pt.lambdabar() - &pt.lambdabar().z_deriv(),
        };
        let w = pt.w();
        let expected = Triple::new(&w - &w.z_deriv(), pt.lambdabar().coeff(0), c(2.0));
        assert!(pt.vector_pair_to_triple(&euler).max_diff(&expected) < 1e-14);
        assert_eq!(pt.vector_pair_to_triple(&pt.vector_triple_to_pair(&Triple::zeros(n))), Triple::zeros(n));
    }
}
