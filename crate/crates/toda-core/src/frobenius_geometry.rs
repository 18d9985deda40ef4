//! The Frobenius structure of `M0`: flat metric, Levi-Civita connection,
//! flat coordinates, the product on covectors and the operators `C_X`,
//! `𝒰`, `𝒱`.
//!
//! Vectors and covectors are triples `(X(z), X_v, X_u)` unless a function
//! says otherwise. All contour integrals are trapezoid sums on the circle
//! grid, which is spectrally accurate for these periodic integrands.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut, Mul, Sub};

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::{One, Zero};

use crate::circle_spectral::{log_samples, LaurentSeries, Samples};
use crate::lax_manifold::{CotangentRep, LaxPoint, Pair, TangentRep, Triple, WCoords};
use crate::toda_hierarchy::AlphaHat;
use crate::{Result, TodaError, C64};

/// A point of `M0` with the quantities every formula here needs.
#[derive(Clone, Debug)]
pub struct M0Point {
    pt: LaxPoint,
    wc: WCoords,
    /// `z w'(z)` as a series and on the grid.
    zw: LaurentSeries,
    zw_samples: Samples,
    w_samples: Samples,
}

impl M0Point {
    pub fn new(pt: LaxPoint) -> Result<Self> {
        pt.require_m0()?;
        let wc = pt.to_w_coords();
        let zw = wc.w.z_deriv();
        let zw_samples = zw.samples();
        let w_samples = wc.w.samples();
        Ok(M0Point { pt, wc, zw, zw_samples, w_samples })
    }

    pub fn from_w_coords(wc: &WCoords) -> Result<Self> {
        Self::new(LaxPoint::from_w_coords(wc))
    }

    pub fn lax(&self) -> &LaxPoint {
        &self.pt
    }

    pub fn w_coords(&self) -> &WCoords {
        &self.wc
    }

    pub fn w(&self) -> &LaurentSeries {
        &self.wc.w
    }

    pub fn n_modes(&self) -> usize {
        self.wc.w.n_modes()
    }

    /// `e^u = ū_{-1}`.
    pub fn eu(&self) -> C64 {
        self.pt.residue()
    }

    /// `z w'(z)`.
    pub fn zw_prime(&self) -> &LaurentSeries {
        &self.zw
    }

    pub fn w_samples(&self) -> &Samples {
        &self.w_samples
    }

    pub fn zw_samples(&self) -> &Samples {
        &self.zw_samples
    }

    /// The point with w-coordinates moved by `h·X`.
    pub fn displaced(&self, x: &Triple, h: f64) -> Result<Self> {
        let h = C64::from(h);
        Self::from_w_coords(&WCoords { w: &self.wc.w + &x.z.scale(h), v: self.wc.v + h * x.v, u: self.wc.u + h * x.u })
    }

    /// `f / (z w')` computed on the grid.
    fn over_zw(&self, f: &LaurentSeries) -> LaurentSeries {
        (f.samples() / &self.zw_samples).to_series()
    }
}

/// Central difference `(f(pt + hX) - f(pt - hX)) / 2h`.
pub fn fd_scalar(pt: &M0Point, x: &Triple, h: f64, f: impl Fn(&M0Point) -> Result<C64>) -> Result<C64> {
    Ok((f(&pt.displaced(x, h)?)? - f(&pt.displaced(x, -h)?)?) / (2.0 * h))
}

pub fn fd_triple(pt: &M0Point, x: &Triple, h: f64, f: impl Fn(&M0Point) -> Result<Triple>) -> Result<Triple> {
    let d = &f(&pt.displaced(x, h)?)? - &f(&pt.displaced(x, -h)?)?;
    Ok(d.scale(C64::from(0.5 / h)))
}

/// `η*(α) = (zw'α, α_u, α_v)`.
pub fn eta_sharp_triple(a: &Triple, pt: &M0Point) -> Triple {
    Triple::new(a.z.mul(&pt.zw), a.u, a.v)
}

/// `η_*(X) = (X/(zw'), X_u, X_v)`.
pub fn eta_flat_triple(x: &Triple, pt: &M0Point) -> Triple {
    Triple::new(pt.over_zw(&x.z), x.u, x.v)
}

/// `η*` in pair form, for the residue pairing `⟨α, X⟩ = (αX)_0 + (ᾱX̄)_0`.
pub fn eta_sharp_pair(a: &Pair, pt: &M0Point) -> Pair {
    let zl = pt.pt.lambda().z_deriv();
    let zb = pt.pt.lambdabar().z_deriv();
    let s = &zl.mul(&a.first) + &zb.mul(&a.second);
    let diff = &a.first - &a.second;
    Pair { first: &s.project(..=0) - &zl.mul(&diff.minus()), second: &s.project(1..) + &zb.mul(&diff.plus()) }
}

/// `η*`, returning the form it was given.
pub fn eta_sharp(a: &CotangentRep, pt: &M0Point) -> TangentRep {
    match a {
        CotangentRep::Triple(t) => TangentRep::Triple(eta_sharp_triple(t, pt)),
        CotangentRep::Pair(p) => TangentRep::Pair(eta_sharp_pair(p, pt)),
    }
}

/// `η_*`, returning the form it was given.
pub fn eta_flat(x: &TangentRep, pt: &M0Point) -> CotangentRep {
    match x {
        TangentRep::Triple(t) => CotangentRep::Triple(eta_flat_triple(t, pt)),
        TangentRep::Pair(p) => {
            let t = eta_flat_triple(&pt.pt.vector_pair_to_triple(p), pt);
            CotangentRep::Pair(pt.pt.covector_triple_to_pair(&t))
        }
    }
}

/// `η(α, β) = (1/2πi)∮ αβ w' dz + α_vβ_u + α_uβ_v`.
pub fn eta_cotangent(a: &Triple, b: &Triple, pt: &M0Point) -> C64 {
    (a.z.samples() * b.z.samples() * &pt.zw_samples).mean() + a.v * b.u + a.u * b.v
}

/// `η(X, Y) = (1/2πi)∮ XY/(z²w') dz + X_vY_u + X_uY_v`.
pub fn eta_tangent(x: &Triple, y: &Triple, pt: &M0Point) -> C64 {
    (x.z.samples() * y.z.samples() / &pt.zw_samples).mean() + x.v * y.u + x.u * y.v
}

/// `Γ_X(α) = (α'X/w', 0, 0)`.
pub fn christoffel(x: &Triple, a: &Triple, pt: &M0Point) -> Triple {
    let v = a.z.z_deriv().samples() * x.z.samples() / &pt.zw_samples;
    Triple::new(v.to_series(), C64::zero(), C64::zero())
}

/// `∇_Xα = ∂_Xα - Γ_X(α)`, with `∂_Xα` supplied by the caller.
pub fn covariant_deriv(d_alpha: &Triple, x: &Triple, a: &Triple, pt: &M0Point) -> Triple {
    d_alpha - &christoffel(x, a, pt)
}

/// `t^α = (w^{-α})_0/α`, `t^0 = -(log(w/z))_0`, `t^v = v`, `t^u = u`.
pub fn flat_coordinate(alpha: AlphaHat, pt: &M0Point) -> Result<C64> {
    Ok(match alpha {
        AlphaHat::U => pt.wc.u,
        AlphaHat::V => pt.wc.v,
        AlphaHat::Int(0) => {
            let (g, k) = log_samples(&pt.w_samples)?;
            if k.value() != 1 {
                return Err(TodaError::NotInM0(format!("w has winding {}", k.value())));
            }
            -g.mean()
        }
        AlphaHat::Int(a) => pt.w_samples.powi(-a).mean() / f64::from(a),
    })
}

/// `dt^α = (-w^{-α-1}, 0, 0)`, `dv = (0,1,0)`, `du = (0,0,1)`.
pub fn dt_differential(alpha: AlphaHat, pt: &M0Point) -> Triple {
    let n = pt.n_modes();
    let (z, o) = (C64::zero(), C64::one());
    match alpha {
        AlphaHat::V => Triple::new(LaurentSeries::zeros(n), o, z),
        AlphaHat::U => Triple::new(LaurentSeries::zeros(n), z, o),
        AlphaHat::Int(a) => Triple::new((-pt.w_samples.powi(-a - 1)).to_series(), z, z),
    }
}

/// `∂/∂t^α = (-zw'w^α, 0, 0)`, `∂_v = (0,1,0)`, `∂_u = (0,0,1)`.
pub fn coordinate_vector(alpha: AlphaHat, pt: &M0Point) -> Triple {
    let n = pt.n_modes();
    let (z, o) = (C64::zero(), C64::one());
    match alpha {
        AlphaHat::V => Triple::new(LaurentSeries::zeros(n), o, z),
        AlphaHat::U => Triple::new(LaurentSeries::zeros(n), z, o),
        AlphaHat::Int(a) => Triple::new((-(&pt.zw_samples * &pt.w_samples.powi(a))).to_series(), z, z),
    }
}

/// `{-A..A} ∪ {v, u}`.
pub fn window_indices(a: i32) -> Vec<AlphaHat> {
    (-a..=a).map(AlphaHat::Int).chain([AlphaHat::V, AlphaHat::U]).collect()
}

/// The index `β̂` with `η_{α̂β̂} = 1`.
pub fn eta_partner(alpha: AlphaHat) -> AlphaHat {
    match alpha {
        AlphaHat::Int(a) => AlphaHat::Int(-1 - a),
        AlphaHat::U => AlphaHat::V,
        AlphaHat::V => AlphaHat::U,
    }
}

/// A square matrix indexed by flat indices.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    indices: Vec<AlphaHat>,
    data: Vec<C64>,
}

impl OperatorMatrix {
    pub fn zeros(indices: Vec<AlphaHat>) -> Self {
        let n = indices.len();
        OperatorMatrix { indices, data: vec![C64::zero(); n * n] }
    }

    pub fn identity(indices: Vec<AlphaHat>) -> Self {
        let mut m = Self::zeros(indices);
        for i in 0..m.dim() {
            m[(i, i)] = C64::one();
        }
        m
    }

    pub fn from_fn(indices: Vec<AlphaHat>, f: impl Fn(AlphaHat, AlphaHat) -> C64) -> Self {
        let mut m = Self::zeros(indices);
        for r in 0..m.dim() {
            for c in 0..m.dim() {
                m[(r, c)] = f(m.indices[r], m.indices[c]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[AlphaHat] {
        &self.indices
    }

    pub fn position(&self, a: AlphaHat) -> Option<usize> {
        self.indices.iter().position(|&b| b == a)
    }

    /// Entry by flat indices.
    pub fn get(&self, row: AlphaHat, col: AlphaHat) -> Option<C64> {
        Some(self[(self.position(row)?, self.position(col)?)])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    pub fn scale(&self, a: C64) -> Self {
        OperatorMatrix { indices: self.indices.clone(), data: self.data.iter().map(|&c| c * a).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.indices.clone(), |r, c| self.get(c, r).unwrap())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl Index<(usize, usize)> for OperatorMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim() + c]
    }
}

impl IndexMut<(usize, usize)> for OperatorMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        let n = self.dim();
        &mut self.data[r * n + c]
    }
}

impl Mul<&OperatorMatrix> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.indices, rhs.indices, "index sets differ");
        let n = self.dim();
        let mut out = OperatorMatrix::zeros(self.indices.clone());
        for r in 0..n {
            for k in 0..n {
                let a = self[(r, k)];
                if a == C64::zero() {
                    continue;
                }
                for c in 0..n {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        out
    }
}

impl Sub<&OperatorMatrix> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.indices, rhs.indices, "index sets differ");
        OperatorMatrix { indices: self.indices.clone(), data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

/// Flat differentials and coordinate fields on a window at one point.
#[derive(Clone, Debug)]
pub struct FlatFrame {
    window: i32,
    indices: Vec<AlphaHat>,
    dt: Vec<Triple>,
    vectors: Vec<Triple>,
}

impl FlatFrame {
    pub fn new(pt: &M0Point, window: i32) -> Result<Self> {
        if window < 2 {
            return Err(TodaError::InvalidIndex(format!("window {window} < 2")));
        }
        let indices = window_indices(window);
        let dt = indices.iter().map(|&a| dt_differential(a, pt)).collect();
        let vectors = indices.iter().map(|&a| coordinate_vector(a, pt)).collect();
        Ok(FlatFrame { window, indices, dt, vectors })
    }

    pub fn window(&self) -> i32 {
        self.window
    }

    pub fn indices(&self) -> &[AlphaHat] {
        &self.indices
    }

    pub fn dt(&self, i: usize) -> &Triple {
        &self.dt[i]
    }

    pub fn vector(&self, i: usize) -> &Triple {
        &self.vectors[i]
    }

    /// `η(∂_α̂, ∂_β̂)` on the window.
    pub fn gram(&self, pt: &M0Point) -> OperatorMatrix {
        let mut m = OperatorMatrix::zeros(self.indices.clone());
        for r in 0..self.indices.len() {
            for c in 0..self.indices.len() {
                m[(r, c)] = eta_tangent(&self.vectors[r], &self.vectors[c], pt);
            }
        }
        m
    }

    /// `⟨dt^α̂, ∂_β̂⟩` on the window.
    pub fn duality(&self) -> OperatorMatrix {
        let mut m = OperatorMatrix::zeros(self.indices.clone());
        for r in 0..self.indices.len() {
            for c in 0..self.indices.len() {
                m[(r, c)] = crate::lax_manifold::triple_pairing(&self.dt[r], &self.vectors[c]);
            }
        }
        m
    }

    /// The expected Gram matrix `η_{αβ} = δ_{α+β,-1}`, `η_{uv} = 1`.
    pub fn eta_matrix(&self) -> OperatorMatrix {
        eta_matrix(self.indices.clone())
    }
}

pub fn eta_matrix(indices: Vec<AlphaHat>) -> OperatorMatrix {
    OperatorMatrix::from_fn(indices, |a, b| if eta_partner(a) == b { C64::one() } else { C64::zero() })
}

/// Solution of `z(w) = f_∞(w)/f_0(w)` truncated to the window.
#[derive(Clone, Debug, PartialEq)]
pub struct RHFactorization {
    /// `t^0, ..., t^A`: `log f_0 = -Σ t^α w^α`.
    pub f0: Vec<C64>,
    /// `t^{-1}, ..., t^{-A}`: `log(f_∞/w) = Σ t^α w^α`.
    pub finf: Vec<C64>,
    /// `max_Γ |z(w) f_0(w) - f_∞(w)|`.
    pub residual: f64,
    /// `max_Γ |f_∞(w)|`, the scale of the residual.
    pub scale: f64,
}

impl RHFactorization {
    /// Builds the truncated factorization and its residual on `Γ`, with no
    /// bound on the residual.
    pub fn compute(pt: &M0Point, window: i32) -> Result<Self> {
        let f0 = (0..=window).map(|a| flat_coordinate(AlphaHat::Int(a), pt)).collect::<Result<Vec<_>>>()?;
        let finf = (1..=window).map(|a| flat_coordinate(AlphaHat::Int(-a), pt)).collect::<Result<Vec<_>>>()?;
        let z = pt.w_samples.nodes();
        let mut residual = 0.0f64;
        let mut scale = 0.0f64;
        for (&zj, &wj) in z.values().iter().zip(pt.w_samples.values()) {
            let log_f0: C64 = -f0.iter().enumerate().map(|(a, t)| t * wj.powi(a as i32)).sum::<C64>();
            let log_finf: C64 = finf.iter().enumerate().map(|(a, t)| t * wj.powi(-(a as i32) - 1)).sum();
            let fi = wj * log_finf.exp();
            residual = residual.max((zj * log_f0.exp() - fi).norm());
            scale = scale.max(fi.norm());
        }
        Ok(RHFactorization { f0, finf, residual, scale })
    }

    /// Leading coefficient of `f_∞ = w + O(1)`.
    pub fn finf_leading(&self) -> C64 {
        C64::one()
    }
}

/// The factorization, failing when the residual exceeds `1e-6` of its scale.
pub fn rh_factorize(pt: &M0Point, window: i32) -> Result<RHFactorization> {
    let f = RHFactorization::compute(pt, window)?;
    let bound = 1e-6 * f.scale;
    if !(f.residual <= bound) {
        return Err(TodaError::FactorizationResidualTooLarge { residual: f.residual, bound });
    }
    Ok(f)
}

/// The product of two covectors in pair form.
pub fn cotangent_product(a: &Pair, b: &Pair, pt: &M0Point) -> Pair {
    let zl = pt.pt.lambda().z_deriv();
    let zb = pt.pt.lambdabar().z_deriv();
    let sb = &zl.mul(&b.first) + &zb.mul(&b.second);
    let sa = &zl.mul(&a.first) + &zb.mul(&a.second);
    let cross = &a.first.mul(&b.second) + &a.second.mul(&b.first);
    let first = &(&a.first.mul(&sb.project(1..)) + &sa.project(1..).mul(&b.first))
        - &(&zl.mul(&a.first.mul(&b.first)) + &zb.mul(&cross)).project(0..);
    let second = &(&(&zb.mul(&a.second.mul(&b.second)) + &zl.mul(&cross)).project(..=1)
        - &a.second.mul(&sb.project(..=0)))
        - &sa.project(..=0).mul(&b.second);
    Pair { first, second }
}

/// The product of two triple-form covectors, through the pair form.
pub fn cotangent_product_triple(a: &Triple, b: &Triple, pt: &M0Point) -> Triple {
    let l = &pt.pt;
    l.covector_pair_to_triple(&cotangent_product(&l.covector_triple_to_pair(a), &l.covector_triple_to_pair(b), pt))
}

/// `C_X(α) = η_*(X)·α` in closed form.
pub fn mult_operator(x: &Triple, a: &Triple, pt: &M0Point) -> Triple {
    let n = pt.n_modes();
    let eu = pt.eu();
    let wz = &pt.zw;
    let inv_z = LaurentSeries::monomial(n, -1, eu);
    let a_plus_v = &a.z + &LaurentSeries::constant(n, a.v);
    let inner = &(&(&(&wz.mul(&a.z).project(1..) - &wz.project(1..).mul(&a.z)) + &a.z.shift(1))
        + &inv_z.mul(&a_plus_v))
        + &LaurentSeries::constant(n, a.u);
    let z_part = &(&(&pt.over_zw(&x.z).mul(&inner) + &x.z.project(1..).mul(&a.z).project(..0))
        - &x.z.project(..=0).mul(&a.z).project(0..))
        + &(&inv_z.mul(&a_plus_v).scale(x.u) + &a.z.scale(x.v));
    let v_part = x.z.product_mean(&a.z) + x.u * a.u + x.v * a.v;
    let u_part = (&x.z + &wz.scale(x.u)).mul(&a_plus_v).coeff(1) * eu - eu * x.u * a.v + x.v * a.u;
    Triple::new(z_part, v_part, u_part)
}

/// `e = ∂/∂v`.
pub fn unit_field(pt: &M0Point) -> Triple {
    Triple::new(LaurentSeries::zeros(pt.n_modes()), C64::one(), C64::zero())
}

/// `E = (w - zw', v, 2)`.
pub fn euler_field(pt: &M0Point) -> Triple {
    Triple::new(&pt.wc.w - &pt.zw, pt.wc.v, C64::from(2.0))
}

/// `𝒰 = C_E` on covectors.
pub fn u_operator(a: &Triple, pt: &M0Point) -> Triple {
    mult_operator(&euler_field(pt), a, pt)
}

/// `𝒱(α) = (-α/2 - zα'·w/(zw'), -α_v/2, α_u/2)`.
pub fn v_operator(a: &Triple, pt: &M0Point) -> Triple {
    let ratio = &pt.w_samples / &pt.zw_samples;
    let z = a.z.samples() * (-0.5) - a.z.z_deriv().samples() * &ratio;
    Triple::new(z.to_series(), -a.v * 0.5, a.u * 0.5)
}

/// `𝒰` on vectors: `Y ↦ E·Y`.
pub fn u_operator_tangent(y: &Triple, pt: &M0Point) -> Triple {
    eta_sharp_triple(&u_operator(&eta_flat_triple(y, pt), pt), pt)
}

/// `𝒱(X) = (-X/2 + z∂_z(Xw/(zw')), -X_v/2, X_u/2)`.
pub fn v_operator_tangent(x: &Triple, pt: &M0Point) -> Triple {
    let ratio = &pt.w_samples / &pt.zw_samples;
    let inner = (x.z.samples() * &ratio).to_series().z_deriv();
    Triple::new(&inner - &x.z.scale(C64::from(0.5)), -x.v * 0.5, x.u * 0.5)
}
