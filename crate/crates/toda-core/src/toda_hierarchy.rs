//! The extended dispersionless 2D Toda hierarchy on loops of Lax symbols.
//!
//! Everything is driven by the functions `Q_{α̂,p}(λ, λ̄)`, evaluated on the
//! circle grid together with their closed-form partial derivatives. Flows
//! are `(∂λ, ∂λ̄) = ({-Q_-, λ}, {Q_+, λ̄})`, Hamiltonian densities are the
//! means `(Q_{α̂,p+1})_0`, and the Poisson operators act on pairs of loop
//! fields.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Sub};
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;

use crate::circle_spectral::{harmonic_f64, log_samples, poisson_bracket, LaurentSeries, LoopField, Samples};
use crate::lax_manifold::{LaxPoint, LoopLaxPoint};
use crate::{Result, TodaError, C64};

/// `α̂ ∈ ℤ ∪ {u, v}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlphaHat {
    Int(i32),
    U,
    V,
}

impl fmt::Display for AlphaHat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaHat::Int(a) => write!(f, "{a}"),
            AlphaHat::U => f.write_str("u"),
            AlphaHat::V => f.write_str("v"),
        }
    }
}

impl FromStr for AlphaHat {
    type Err = TodaError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "u" => Ok(AlphaHat::U),
            "v" => Ok(AlphaHat::V),
            t => t.parse().map(AlphaHat::Int).map_err(|_| TodaError::InvalidIndex(s.to_string())),
        }
    }
}

/// A time `t^{α̂,p}`. `p = -1` only appears in densities and base cases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HierarchyIndex {
    pub alpha: AlphaHat,
    pub p: i32,
}

impl HierarchyIndex {
    pub fn new(alpha: AlphaHat, p: i32) -> Result<Self> {
        if p < -1 {
            return Err(TodaError::InvalidIndex(format!("p = {p} < -1")));
        }
        Ok(HierarchyIndex { alpha, p })
    }

    pub fn int(alpha: i32, p: i32) -> Self {
        HierarchyIndex { alpha: AlphaHat::Int(alpha), p }
    }

    pub fn u(p: i32) -> Self {
        HierarchyIndex { alpha: AlphaHat::U, p }
    }

    pub fn v(p: i32) -> Self {
        HierarchyIndex { alpha: AlphaHat::V, p }
    }

    pub fn shifted(self, dp: i32) -> Self {
        HierarchyIndex { alpha: self.alpha, p: self.p + dp }
    }

}

impl fmt::Display for HierarchyIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.alpha, self.p)
    }
}

/// Parses `a,p` or `(a,p)`.
impl FromStr for HierarchyIndex {
    type Err = TodaError;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let (a, p) = t.split_once(',').ok_or_else(|| TodaError::InvalidIndex(s.to_string()))?;
        let p = p.trim().parse().map_err(|_| TodaError::InvalidIndex(s.to_string()))?;
        HierarchyIndex::new(a.parse()?, p)
    }
}

pub(crate) fn factorial(n: i32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `(2p)!! = 2^p p!`.
pub(crate) fn even_double_factorial(p: i32) -> f64 {
    2f64.powi(p) * factorial(p)
}

fn sign_pow(p: i32) -> f64 {
    if p % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Debug)]
struct Logs {
    /// `log(1 + λ̄/λ) = log(w/z) - log(λ/z)`.
    lg: Samples,
    /// `log(λ̄(λ+λ̄)) = log(zλ̄) + log(w/z)`.
    lbs: Samples,
}

/// Grid values of `λ`, `λ̄` and of the logarithms needed by the extended
/// families at one point.
#[derive(Clone, Debug)]
pub struct LaxSamples {
    l: Samples,
    b: Samples,
    s: Samples,
    d: Samples,
    logs: core::result::Result<Logs, TodaError>,
}

impl LaxSamples {
    pub fn new(pt: &LaxPoint) -> Self {
        let l = pt.lambda().samples();
        let b = pt.lambdabar().samples();
        let s = &l + &b;
        let d = &b - &l;
        let logs = Self::logs(&l, &b, &s);
        LaxSamples { l, b, s, d, logs }
    }

    fn logs(l: &Samples, b: &Samples, s: &Samples) -> Result<Logs> {
        let named = |f: &Samples, want: i32, name: &str| -> Result<Samples> {
            let (g, k) = log_samples(f).map_err(|e| TodaError::NotInM1(format!("{name}: {e}")))?;
            if k.value() != want {
                return Err(TodaError::NotInM1(format!("{name} has winding {} instead of {want}", k.value())));
            }
            Ok(g)
        };
        let log_l = named(l, 1, "lambda")?;
        let log_b = named(b, -1, "lambdabar")?;
        let log_s = named(s, 1, "w")?;
        Ok(Logs { lg: &log_s - &log_l, lbs: &log_b + &log_s })
    }

    pub fn n_modes(&self) -> usize {
        self.l.n_modes()
    }

    pub fn lambda(&self) -> &Samples {
        &self.l
    }

    pub fn lambdabar(&self) -> &Samples {
        &self.b
    }

    /// `λ + λ̄`.
    pub fn sum(&self) -> &Samples {
        &self.s
    }

    /// `λ̄ - λ`.
    pub fn diff(&self) -> &Samples {
        &self.d
    }

    /// `log(1 + λ̄/λ)` on the grid.
    pub fn log_ratio(&self) -> Result<&Samples> {
        self.logs.as_ref().map(|g| &g.lg).map_err(Clone::clone)
    }

    /// `log(λ̄(λ+λ̄))` on the grid.
    pub fn log_product(&self) -> Result<&Samples> {
        self.logs.as_ref().map(|g| &g.lbs).map_err(Clone::clone)
    }

    fn ones(&self) -> Samples {
        Samples::constant(self.n_modes(), C64::new(1.0, 0.0))
    }

    fn zeros(&self) -> Samples {
        Samples::constant(self.n_modes(), C64::new(0.0, 0.0))
    }

    /// `(-λ)^p / p!`, zero for `p < 0`.
    fn neg_lambda_term(&self, p: i32) -> Samples {
        if p < 0 {
            return self.zeros();
        }
        &self.l.powi(p) * (sign_pow(p) / factorial(p))
    }

    /// `λ̄^p / p!`, zero for `p < 0`.
    fn lambdabar_term(&self, p: i32) -> Samples {
        if p < 0 {
            return self.zeros();
        }
        &self.b.powi(p) * (1.0 / factorial(p))
    }

    /// `Q_{α̂,p}` on the grid.
    pub fn q(&self, idx: HierarchyIndex) -> Result<Samples> {
        let p = idx.p;
        if p < -1 {
            return Err(TodaError::InvalidIndex(format!("{idx}")));
        }
        if p == -1 {
            return Ok(match idx.alpha {
                AlphaHat::Int(-1) => -self.l.recip(),
                AlphaHat::V => self.b.recip() - self.l.recip(),
                AlphaHat::U => self.ones(),
                AlphaHat::Int(_) => self.zeros(),
            });
        }
        let cp = harmonic_f64(p);
        Ok(match idx.alpha {
            AlphaHat::Int(-1) => {
                let lg = self.log_ratio()?;
                -(self.neg_lambda_term(p) * (lg + (cp - 1.0))) - &self.d.powi(p) * (1.0 / even_double_factorial(p))
            }
            AlphaHat::Int(a) => {
                let n = a + 1;
                -(&self.s.powi(n) * &self.d.powi(p)) * (1.0 / (f64::from(n) * even_double_factorial(p)))
            }
            AlphaHat::V => {
                let lg = self.log_ratio()?;
                let lbs = self.log_product()?;
                self.lambdabar_term(p) * (lbs - (cp + 1.0)) - self.neg_lambda_term(p) * (lg + (cp - 1.0))
            }
            AlphaHat::U => self.lambdabar_term(p + 1),
        })
    }

    /// `(∂Q/∂λ, ∂Q/∂λ̄)` on the grid, from the differentiated closed forms.
    pub fn q_partials(&self, idx: HierarchyIndex) -> Result<(Samples, Samples)> {
        let p = idx.p;
        if p < -1 {
            return Err(TodaError::InvalidIndex(format!("{idx}")));
        }
        let (l, b, s, d) = (&self.l, &self.b, &self.s, &self.d);
        if p == -1 {
            let l2 = l.powi(-2);
            return Ok(match idx.alpha {
                AlphaHat::Int(-1) => (l2, self.zeros()),
                AlphaHat::V => (l2, -b.powi(-2)),
                _ => (self.zeros(), self.zeros()),
            });
        }
        let cp = harmonic_f64(p);
        let dd = even_double_factorial(p);
        // p d^{p-1} / (2p)!!
        let d_term = if p == 0 { self.zeros() } else { &d.powi(p - 1) * (f64::from(p) / dd) };
        Ok(match idx.alpha {
            AlphaHat::Int(-1) | AlphaHat::V => {
                let lg = self.log_ratio()?;
                // derivative of the common -(−λ)^p/p!·(log(1+λ̄/λ) + c_p − 1) part
                let log_part = self.neg_lambda_term(p - 1) * (lg + (cp - 1.0));
                let inv_s = s.recip();
                let ql = &log_part - &(self.neg_lambda_term(p) * (&inv_s - &l.recip()));
                let qb = -(self.neg_lambda_term(p) * &inv_s);
                if idx.alpha == AlphaHat::Int(-1) {
                    (ql + &d_term, qb - &d_term)
                } else {
                    let lbs = self.log_product()?;
                    let bp = self.lambdabar_term(p);
                    let ql = ql + &bp * &inv_s;
                    let qb = qb
                        + self.lambdabar_term(p - 1) * (lbs - (cp + 1.0))
                        + &bp * (b.recip() + &inv_s);
                    (ql, qb)
                }
            }
            AlphaHat::Int(a) => {
                let n = a + 1;
                let k = -1.0 / (f64::from(n) * dd);
                let first = &(s.powi(n - 1) * d.powi(p)) * f64::from(n);
                let second = if p == 0 { self.zeros() } else { &(s.powi(n) * d.powi(p - 1)) * f64::from(p) };
                ((&first - &second) * k, (first + second) * k)
            }
            AlphaHat::U => (self.zeros(), self.lambdabar_term(p)),
        })
    }

    /// `Q̃_{α̂,p}` on the grid, `p >= 0`.
    pub fn q_tilde(&self, idx: HierarchyIndex) -> Result<Samples> {
        let p = idx.p;
        if p < 0 {
            return Err(TodaError::InvalidIndex(format!("{idx}: the orthogonal family starts at p = 0")));
        }
        let cp = harmonic_f64(p);
        Ok(match idx.alpha {
            AlphaHat::Int(a) if a >= 0 => {
                let half_s = &self.s * 0.5;
                let half_d = &self.d * 0.5;
                let mut acc = self.zeros();
                for n in 0..=p / 2 {
                    let m = 2 * n + a + 1;
                    let c = 1.0 / (factorial(m) * factorial(p - 2 * n));
                    acc = acc + (half_s.powi(m) * half_d.powi(p - 2 * n)) * c;
                }
                acc * (-2.0 * even_double_factorial(a))
            }
            AlphaHat::Int(-1) => {
                let lg = self.log_ratio()?;
                let mut acc = -(self.neg_lambda_term(p) * (lg + cp));
                let neg_s = -&self.s;
                for l in 0..p {
                    let c = harmonic_f64(p - l) / (2f64.powi(p) * factorial(l) * factorial(p - l));
                    acc = acc + (self.d.powi(l) * neg_s.powi(p - l)) * c;
                }
                acc
            }
            AlphaHat::Int(_) | AlphaHat::U => self.q(idx)?,
            AlphaHat::V => {
                let lg = self.log_ratio()?;
                let lbs = self.log_product()?;
                let mut acc = self.lambdabar_term(p) * (lbs - cp) - self.neg_lambda_term(p) * (lg + cp);
                let neg_s = -&self.s;
                for l in 0..p {
                    let c = 1.0 / (even_double_factorial(p - l) * f64::from(p - l));
                    acc = acc - (self.neg_lambda_term(l) * self.s.powi(p - l)) * c
                        + (self.lambdabar_term(l) * neg_s.powi(p - l)) * c;
                }
                acc
            }
        })
    }
}

pub fn q_function(idx: HierarchyIndex, pt: &LaxPoint) -> Result<LaurentSeries> {
    Ok(LaxSamples::new(pt).q(idx)?.to_series())
}

pub fn q_tilde_function(idx: HierarchyIndex, pt: &LaxPoint) -> Result<LaurentSeries> {
    Ok(LaxSamples::new(pt).q_tilde(idx)?.to_series())
}

/// `h_{α̂,p} = (Q_{α̂,p+1})_0`.
pub fn hamiltonian_density(idx: HierarchyIndex, pt: &LaxPoint) -> Result<C64> {
    Ok(LaxSamples::new(pt).q(idx.shifted(1))?.mean())
}

/// Max over the circle of `|(∂_λ̄ - ∂_λ)Q_{α̂,p} - Q_{α̂,p-1}|` and of the
/// Euler-scaling defect of `(λ∂_λ + λ̄∂_λ̄)Q_{α̂,p}`, for `p >= 0`.
pub fn homogeneity_residual(idx: HierarchyIndex, pt: &LaxPoint) -> Result<(f64, f64)> {
    if idx.p < 0 {
        return Err(TodaError::InvalidIndex(format!("{idx}")));
    }
    let ls = LaxSamples::new(pt);
    let q = ls.q(idx)?;
    let (ql, qb) = ls.q_partials(idx)?;
    let lowering = (&qb - &ql - ls.q(idx.shifted(-1))?).max_abs();
    let euler = &ql * ls.lambda() + &qb * ls.lambdabar();
    let expected = match idx.alpha {
        AlphaHat::Int(a) => &q * f64::from(a + idx.p + 1),
        AlphaHat::V => &q * f64::from(idx.p) + ls.q(HierarchyIndex::u(idx.p - 1))? * 2.0,
        AlphaHat::U => &q * f64::from(idx.p + 1),
    };
    Ok((lowering, (euler - expected).max_abs()))
}

/// A tangent vector `(∂λ, ∂λ̄)` on the loop space.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowVector {
    pub d_lambda: LoopField,
    pub d_lambdabar: LoopField,
}

impl FlowVector {
    pub fn max_abs(&self) -> f64 {
        self.d_lambda.max_abs().max(self.d_lambdabar.max_abs())
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    pub fn scale(&self, a: C64) -> Self {
        FlowVector { d_lambda: self.d_lambda.scale(a), d_lambdabar: self.d_lambdabar.scale(a) }
    }

    /// Size of the modes outside `ℋ(D_∞) ⊕ z⁻¹ℋ(D_0)`.
    pub fn structure_defect(&self) -> f64 {
        self.d_lambda.project(1..).max_abs().max(self.d_lambdabar.project(..-1).max_abs())
    }

    fn projected(&self) -> Self {
        FlowVector { d_lambda: self.d_lambda.project(..=0), d_lambdabar: self.d_lambdabar.project(-1..) }
    }
}

impl Add<&FlowVector> for &FlowVector {
    type Output = FlowVector;
    fn add(self, rhs: &FlowVector) -> FlowVector {
        FlowVector { d_lambda: &self.d_lambda + &rhs.d_lambda, d_lambdabar: &self.d_lambdabar + &rhs.d_lambdabar }
    }
}

impl Sub<&FlowVector> for &FlowVector {
    type Output = FlowVector;
    fn sub(self, rhs: &FlowVector) -> FlowVector {
        FlowVector { d_lambda: &self.d_lambda - &rhs.d_lambda, d_lambdabar: &self.d_lambdabar - &rhs.d_lambdabar }
    }
}

/// A 1-form `(ω, ω̄)` on the loop space, any representative in
/// `ℋ(S¹) ⊕ ℋ(S¹)` at each x.
#[derive(Clone, Debug, PartialEq)]
pub struct CovectorField {
    pub omega: LoopField,
    pub omegabar: LoopField,
}

impl Add<&CovectorField> for &CovectorField {
    type Output = CovectorField;
    fn add(self, rhs: &CovectorField) -> CovectorField {
        CovectorField { omega: &self.omega + &rhs.omega, omegabar: &self.omegabar + &rhs.omegabar }
    }
}

/// `dH` in both representations.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianGradient {
    /// `(Q_λ, Q_λ̄)`.
    pub full: CovectorField,
    /// `((Q_λ)_{≥0}, (Q_λ̄)_{≤1})`.
    pub projected: CovectorField,
}

/// `∮ dx (1/2πi)∮ (ωX + ω̄X̄) dz/z` with x ∈ [0, 2π).
pub fn loop_pairing(omega: &CovectorField, x: &FlowVector) -> C64 {
    let m = omega.omega.x_modes();
    let sum: C64 = (0..m)
        .map(|j| {
            omega.omega.slice(j).product_mean(x.d_lambda.slice(j))
                + omega.omegabar.slice(j).product_mean(x.d_lambdabar.slice(j))
        })
        .sum();
    sum * (2.0 * core::f64::consts::PI / m as f64)
}

fn x_integral(values: &[C64]) -> C64 {
    values.iter().sum::<C64>() * (2.0 * core::f64::consts::PI / values.len() as f64)
}

/// Per-slice grid data of a loop point, built once and shared by the
/// evaluations below.
#[derive(Clone, Debug)]
pub struct LoopContext<'a> {
    lp: &'a LoopLaxPoint,
    slices: Vec<LaxSamples>,
}

impl<'a> LoopContext<'a> {
    pub fn new(lp: &'a LoopLaxPoint) -> Self {
        LoopContext { lp, slices: lp.slices().map(|pt| LaxSamples::new(&pt)).collect() }
    }

    pub fn point(&self) -> &LoopLaxPoint {
        self.lp
    }

    pub fn slice_samples(&self, j: usize) -> &LaxSamples {
        &self.slices[j]
    }

    fn field(&self, f: impl Fn(&LaxSamples) -> Result<Samples>) -> Result<LoopField> {
        let slices = self.slices.iter().map(|s| f(s).map(|v| v.to_series())).collect::<Result<Vec<_>>>()?;
        LoopField::from_slices(slices)
    }

    pub fn q_field(&self, idx: HierarchyIndex) -> Result<LoopField> {
        self.field(|s| s.q(idx))
    }

    pub fn q_tilde_field(&self, idx: HierarchyIndex) -> Result<LoopField> {
        self.field(|s| s.q_tilde(idx))
    }

    /// `({-Q_-, λ}, {Q_+, λ̄})` for a given loop field `Q`.
    pub fn flow_of(&self, q: &LoopField) -> FlowVector {
        FlowVector {
            d_lambda: -poisson_bracket(&q.minus(), self.lp.lambda()),
            d_lambdabar: poisson_bracket(&q.plus(), self.lp.lambdabar()),
        }
    }

    pub fn lax_flow(&self, idx: HierarchyIndex) -> Result<FlowVector> {
        if idx.p < 0 {
            return Err(TodaError::InvalidIndex(format!("flows need p >= 0, got {idx}")));
        }
        Ok(self.flow_of(&self.q_field(idx)?))
    }

    /// Flows of the orthogonal family `Q̃`.
    pub fn lax_flow_tilde(&self, idx: HierarchyIndex) -> Result<FlowVector> {
        Ok(self.flow_of(&self.q_tilde_field(idx)?))
    }

    /// `∂_t Q = Q_λ ∂_tλ + Q_λ̄ ∂_tλ̄` along a flow.
    pub fn time_derivative(&self, idx: HierarchyIndex, flow: &FlowVector) -> Result<LoopField> {
        let slices = (0..self.slices.len())
            .map(|j| {
                let (ql, qb) = self.slices[j].q_partials(idx)?;
                let v = ql * flow.d_lambda.slice(j).samples() + qb * flow.d_lambdabar.slice(j).samples();
                Ok(v.to_series())
            })
            .collect::<Result<Vec<_>>>()?;
        LoopField::from_slices(slices)
    }

    /// `dH_{α̂,p}` from the partials of `Q_{α̂,p+1}`.
    pub fn hamiltonian_gradient(&self, idx: HierarchyIndex) -> Result<HamiltonianGradient> {
        let q = idx.shifted(1);
        let mut a = Vec::with_capacity(self.slices.len());
        let mut b = Vec::with_capacity(self.slices.len());
        for s in &self.slices {
            let (ql, qb) = s.q_partials(q)?;
            a.push(ql.to_series());
            b.push(qb.to_series());
        }
        let full = CovectorField { omega: LoopField::from_slices(a)?, omegabar: LoopField::from_slices(b)? };
        let projected = CovectorField { omega: full.omega.project(0..), omegabar: full.omegabar.project(..=1) };
        Ok(HamiltonianGradient { full, projected })
    }

    pub fn density(&self, idx: HierarchyIndex) -> Result<Vec<C64>> {
        self.slices.iter().map(|s| Ok(s.q(idx.shifted(1))?.mean())).collect()
    }

    /// `H_{α̂,p} = ∮ h_{α̂,p} dx`.
    pub fn hamiltonian(&self, idx: HierarchyIndex) -> Result<C64> {
        Ok(x_integral(&self.density(idx)?))
    }

    pub fn zs_residual(&self, a: HierarchyIndex, b: HierarchyIndex) -> Result<LoopField> {
        let (qa, qb) = (self.q_field(a)?, self.q_field(b)?);
        let (fa, fb) = (self.flow_of(&qa), self.flow_of(&qb));
        let da_b = self.time_derivative(a, &fb)?;
        let db_a = self.time_derivative(b, &fa)?;
        Ok(&(&(&da_b - &db_a) + &poisson_bracket(&qa.plus(), &qb.plus())) - &poisson_bracket(&qa.minus(), &qb.minus()))
    }

    /// `∂_{t^b} h_{a,p-1} - ∂_{t^a} h_{b,q-1}` at each x-node.
    pub fn tau_symmetry_residual(&self, a: HierarchyIndex, b: HierarchyIndex) -> Result<Vec<C64>> {
        let fa = self.lax_flow(a)?;
        let fb = self.lax_flow(b)?;
        let da_b = self.time_derivative(a, &fb)?;
        let db_a = self.time_derivative(b, &fa)?;
        Ok((0..self.slices.len()).map(|j| da_b.slice(j).mean() - db_a.slice(j).mean()).collect())
    }

    /// Left side minus right side of the recursion relation starting at
    /// `idx`.
    pub fn recursion_residual(&self, idx: HierarchyIndex) -> Result<FlowVector> {
        let p = idx.p;
        let lp = self.lp;
        let lhs = poisson_p2(&self.hamiltonian_gradient(idx)?.full, lp);
        let p1 = |i: HierarchyIndex| -> Result<FlowVector> { Ok(poisson_p1(&self.hamiltonian_gradient(i)?.full, lp)) };
        let rhs = match idx.alpha {
            AlphaHat::Int(a) => p1(idx.shifted(1))?.scale(C64::from(f64::from(a + p + 2))),
            AlphaHat::V => &p1(idx.shifted(1))?.scale(C64::from(f64::from(p + 1))) + &p1(HierarchyIndex::u(p))?.scale(C64::from(2.0)),
            AlphaHat::U => p1(idx.shifted(1))?.scale(C64::from(f64::from(p + 2))),
        };
        Ok(&lhs - &rhs)
    }
}

pub fn lax_flow(idx: HierarchyIndex, lp: &LoopLaxPoint) -> Result<FlowVector> {
    LoopContext::new(lp).lax_flow(idx)
}

pub fn zs_residual(a: HierarchyIndex, b: HierarchyIndex, lp: &LoopLaxPoint) -> Result<LoopField> {
    LoopContext::new(lp).zs_residual(a, b)
}

pub fn tau_symmetry_residual(a: HierarchyIndex, b: HierarchyIndex, lp: &LoopLaxPoint) -> Result<Vec<C64>> {
    LoopContext::new(lp).tau_symmetry_residual(a, b)
}

pub fn hamiltonian_gradient(idx: HierarchyIndex, lp: &LoopLaxPoint) -> Result<HamiltonianGradient> {
    LoopContext::new(lp).hamiltonian_gradient(idx)
}

pub fn recursion_residual(idx: HierarchyIndex, lp: &LoopLaxPoint) -> Result<FlowVector> {
    LoopContext::new(lp).recursion_residual(idx)
}

/// `{λ, ω} + {λ̄, ω̄}`.
fn bracket_sum(omega: &CovectorField, lp: &LoopLaxPoint) -> LoopField {
    &poisson_bracket(lp.lambda(), &omega.omega) + &poisson_bracket(lp.lambdabar(), &omega.omegabar)
}

pub fn poisson_p1(omega: &CovectorField, lp: &LoopLaxPoint) -> FlowVector {
    let a = bracket_sum(omega, lp);
    let diff = &omega.omega - &omega.omegabar;
    FlowVector {
        d_lambda: &a.project(..=0) - &poisson_bracket(lp.lambda(), &diff.minus()),
        d_lambdabar: &a.project(1..) + &poisson_bracket(lp.lambdabar(), &diff.plus()),
    }
}

pub fn poisson_p2(omega: &CovectorField, lp: &LoopLaxPoint) -> FlowVector {
    let (l, b) = (lp.lambda(), lp.lambdabar());
    let a = bracket_sum(omega, lp);
    let m = &l.mul(&omega.omega) + &b.mul(&omega.omegabar);
    let phi: Vec<C64> = a.slices().iter().map(LaurentSeries::mean).collect();
    let with_phi = |f: &LoopField| f.z_deriv().map_indexed(|j, s| s.scale(phi[j]));
    FlowVector {
        d_lambda: &(&poisson_bracket(l, &m.minus()) - &l.mul(&a.project(..=0))) + &with_phi(l),
        d_lambdabar: &(&b.mul(&a.project(1..)) - &poisson_bracket(b, &m.plus())) + &with_phi(b),
    }
}

/// Which of the two classical time families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassicalTime {
    /// `t_n`, generated by `λ^n`.
    T,
    /// `t̄_n`, generated by `λ̄^n`.
    TBar,
}

fn power_field(f: &LoopField, n: i32) -> LoopField {
    f.map(|s| s.samples().powi(n).to_series())
}

pub fn classical_lax_flow(n: i32, which: ClassicalTime, lp: &LoopLaxPoint) -> FlowVector {
    let q = match which {
        ClassicalTime::T => power_field(lp.lambda(), n).plus(),
        ClassicalTime::TBar => power_field(lp.lambdabar(), n).minus(),
    };
    FlowVector { d_lambda: poisson_bracket(&q, lp.lambda()), d_lambdabar: poisson_bracket(&q, lp.lambdabar()) }
}

/// `H_n = -∮ (λ^{n+1})_0/(n+1) dx`, and `H̄_n` with `λ̄`.
pub fn classical_hamiltonian(n: i32, which: ClassicalTime, lp: &LoopLaxPoint) -> C64 {
    let f = match which {
        ClassicalTime::T => lp.lambda(),
        ClassicalTime::TBar => lp.lambdabar(),
    };
    let means: Vec<C64> = power_field(f, n + 1).slices().iter().map(LaurentSeries::mean).collect();
    -x_integral(&means) / f64::from(n + 1)
}

/// `(H_n - Σ, H̄_n + n! H_{u,n-1})` where `Σ` is the combination of extended
/// Hamiltonians that reproduces `H_n`.
pub fn combination_residual(n: i32, lp: &LoopLaxPoint) -> Result<(C64, C64)> {
    let ctx = LoopContext::new(lp);
    let nf = factorial(n);
    let hu = ctx.hamiltonian(HierarchyIndex::u(n - 1))?;
    let mut combo = hu * (sign_pow(n) * nf);
    for l in 0..=n {
        let c = nf * (sign_pow(l) - sign_pow(n + 1)) / (factorial(n - l) * 2f64.powi(n - l + 1));
        if c != 0.0 {
            combo += ctx.hamiltonian(HierarchyIndex::int(n - l, l - 1))? * c;
        }
    }
    let h = classical_hamiltonian(n, ClassicalTime::T, lp) - combo;
    let hbar = classical_hamiltonian(n, ClassicalTime::TBar, lp) + hu * nf;
    Ok((h, hbar))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    /// Largest tolerated tail health of the symbols after a step.
    pub tail_tol: f64,
    /// How many times a step may be halved before giving up.
    pub max_halvings: u32,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { tail_tol: 1e-6, max_halvings: 6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evolution {
    pub point: LoopLaxPoint,
    pub steps: usize,
    pub halvings: u32,
    /// Largest flow component dropped to keep the symbols in normal form.
    pub structure_drift: f64,
    pub max_tail: f64,
}

fn advance(lp: &LoopLaxPoint, k: &FlowVector, h: f64) -> LoopLaxPoint {
    let h = C64::from(h);
    LoopLaxPoint::from_parts(lp.lambda() + &k.d_lambda.scale(h), lp.lambdabar() + &k.d_lambdabar.scale(h))
}

fn rk4_step(idx: HierarchyIndex, lp: &LoopLaxPoint, dt: f64, drift: &mut f64) -> Result<LoopLaxPoint> {
    let mut f = |y: &LoopLaxPoint| -> Result<FlowVector> {
        let k = lax_flow(idx, y)?;
        *drift = drift.max(k.structure_defect());
        Ok(k.projected())
    };
    let k1 = f(lp)?;
    let k2 = f(&advance(lp, &k1, dt / 2.0))?;
    let k3 = f(&advance(lp, &k2, dt / 2.0))?;
    let k4 = f(&advance(lp, &k3, dt))?;
    let two = C64::from(2.0);
    let sum = &(&(&k1 + &k2.scale(two)) + &k3.scale(two)) + &k4;
    Ok(advance(lp, &sum, dt / 6.0))
}

fn tail(lp: &LoopLaxPoint) -> f64 {
    let (z, x) = lp.tail_health();
    z.max(x)
}

/// Integrates the flows one after another with classical RK4.
pub fn evolve(flows: &[(HierarchyIndex, f64)], lp: &LoopLaxPoint, dt: f64) -> Result<LoopLaxPoint> {
    Ok(evolve_with(flows, lp, dt, &EvolveOptions::default())?.point)
}

pub fn evolve_with(
    flows: &[(HierarchyIndex, f64)],
    lp: &LoopLaxPoint,
    dt: f64,
    opts: &EvolveOptions,
) -> Result<Evolution> {
    if !(dt > 0.0) {
        return Err(TodaError::InvalidIndex(format!("time step {dt} must be positive")));
    }
    lp.require_m1().map_err(|e| TodaError::LeftManifold { step: 0, reason: e.to_string() })?;
    let mut state = lp.clone();
    let mut out = Evolution { point: lp.clone(), steps: 0, halvings: 0, structure_drift: 0.0, max_tail: tail(lp) };
    for &(idx, duration) in flows {
        if duration == 0.0 {
            continue;
        }
        let n = (duration.abs() / dt).ceil().max(1.0) as usize;
        let h = duration / n as f64;
        for _ in 0..n {
            state = step_with_halving(idx, &state, h, opts, &mut out)?;
            out.steps += 1;
            state.require_m1().map_err(|e| TodaError::LeftManifold { step: out.steps, reason: e.to_string() })?;
        }
    }
    out.point = state;
    Ok(out)
}

fn step_with_halving(
    idx: HierarchyIndex,
    lp: &LoopLaxPoint,
    h: f64,
    opts: &EvolveOptions,
    out: &mut Evolution,
) -> Result<LoopLaxPoint> {
    let mut pieces = 1usize;
    loop {
        let dh = h / pieces as f64;
        let mut y = lp.clone();
        let mut ok = true;
        for _ in 0..pieces {
            y = rk4_step(idx, &y, dh, &mut out.structure_drift)
                .map_err(|e| TodaError::LeftManifold { step: out.steps + 1, reason: e.to_string() })?;
            let t = tail(&y);
            out.max_tail = out.max_tail.max(t);
            if !(t <= opts.tail_tol) {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(y);
        }
        if out.halvings >= opts.max_halvings {
            return Err(TodaError::TailBlowup { step: out.steps + 1, health: tail(&y) });
        }
        out.halvings += 1;
        pieces *= 2;
    }
}
