use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Bound, Mul, Neg, RangeBounds, Sub, SubAssign};

use num_traits::Zero;

use super::fft::{fft_forward, fft_inverse};
use super::samples::Samples;
use crate::C64;

/// Number of grid points used for a series with modes `[-n, n]`.
pub fn grid_len(n_modes: usize) -> usize {
    (2 * (2 * n_modes + 1)).next_power_of_two()
}

/// Truncated Laurent series `Σ_{|k|<=N} c_k z^k` on the unit circle.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSeries {
    n_modes: usize,
    coeffs: Vec<C64>,
}

impl LaurentSeries {
    pub fn zeros(n_modes: usize) -> Self {
        assert!(n_modes >= 4, "n_modes must be at least 4");
        LaurentSeries { n_modes, coeffs: vec![C64::zero(); 2 * n_modes + 1] }
    }

    pub fn constant(n_modes: usize, c: C64) -> Self {
        let mut s = Self::zeros(n_modes);
        s.coeffs[n_modes] = c;
        s
    }

    pub fn monomial(n_modes: usize, k: i32, c: C64) -> Self {
        let mut s = Self::zeros(n_modes);
        s.set_coeff(k, c);
        s
    }

    /// Builds a series from `(k, c_k)` pairs; repeated `k` accumulate.
    pub fn from_terms(n_modes: usize, terms: &[(i32, C64)]) -> Self {
        let mut s = Self::zeros(n_modes);
        for &(k, c) in terms {
            let idx = s.index(k);
            s.coeffs[idx] += c;
        }
        s
    }

    /// Coefficients ordered from `k = -N` to `k = N`.
    pub fn from_coeffs(n_modes: usize, coeffs: Vec<C64>) -> Self {
        assert_eq!(coeffs.len(), 2 * n_modes + 1);
        LaurentSeries { n_modes, coeffs }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    fn index(&self, k: i32) -> usize {
        let n = self.n_modes as i32;
        assert!((-n..=n).contains(&k), "mode {k} outside [-{n}, {n}]");
        (k + n) as usize
    }

    /// `(f)_k`; zero outside the truncation band.
    pub fn coeff(&self, k: i32) -> C64 {
        let n = self.n_modes as i32;
        if (-n..=n).contains(&k) {
            self.coeffs[(k + n) as usize]
        } else {
            C64::zero()
        }
    }

    pub fn set_coeff(&mut self, k: i32, c: C64) {
        let idx = self.index(k);
        self.coeffs[idx] = c;
    }

    pub fn mean(&self) -> C64 {
        self.coeffs[self.n_modes]
    }

    /// Iterator over `(k, c_k)`.
    pub fn terms(&self) -> impl Iterator<Item = (i32, C64)> + '_ {
        let n = self.n_modes as i32;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i32 - n, c))
    }

    /// Keeps the modes with `k` in `range`, e.g. `f.project(0..)` is `(f)_+`
    /// and `f.project(..=-1)` is `(f)_-`.
    pub fn project(&self, range: impl RangeBounds<i32>) -> Self {
        let lo = match range.start_bound() {
            Bound::Included(&a) => a,
            Bound::Excluded(&a) => a + 1,
            Bound::Unbounded => i32::MIN,
        };
        let hi = match range.end_bound() {
            Bound::Included(&b) => b,
            Bound::Excluded(&b) => b - 1,
            Bound::Unbounded => i32::MAX,
        };
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let k = i as i32 - self.n_modes as i32;
            if k < lo || k > hi {
                *c = C64::zero();
            }
        }
        out
    }

    pub fn plus(&self) -> Self {
        self.project(0..)
    }

    pub fn minus(&self) -> Self {
        self.project(..0)
    }

    /// `z ∂_z f`: multiplies `c_k` by `k`.
    pub fn z_deriv(&self) -> Self {
        let mut out = self.clone();
        for (k, c) in (-(self.n_modes as i32)..).zip(out.coeffs.iter_mut()) {
            *c *= k as f64;
        }
        out
    }

    /// Multiplication by `z^s`, dropping modes pushed out of band.
    pub fn shift(&self, s: i32) -> Self {
        let mut out = Self::zeros(self.n_modes);
        for (k, c) in self.terms() {
            let j = k + s;
            if j.unsigned_abs() as usize <= self.n_modes {
                out.set_coeff(j, c);
            }
        }
        out
    }

    pub fn scale(&self, a: C64) -> Self {
        LaurentSeries { n_modes: self.n_modes, coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// Dealiased product, truncated back to `[-N, N]`.
    pub fn mul(&self, other: &Self) -> Self {
        (&self.samples() * &other.samples()).to_series()
    }

    /// Values on the grid `z_j = e^{2πi j/L}`.
    pub fn samples(&self) -> Samples {
        let len = grid_len(self.n_modes);
        let mut buf = vec![C64::zero(); len];
        for (k, c) in self.terms() {
            buf[k.rem_euclid(len as i32) as usize] = c;
        }
        fft_inverse(&mut buf);
        Samples::from_values(self.n_modes, buf)
    }

    pub(crate) fn from_grid(n_modes: usize, values: &[C64]) -> Self {
        let len = values.len();
        let mut buf = values.to_vec();
        fft_forward(&mut buf);
        let inv = 1.0 / len as f64;
        let n = n_modes as i32;
        let coeffs = (-n..=n).map(|k| buf[k.rem_euclid(len as i32) as usize] * inv).collect();
        LaurentSeries { n_modes, coeffs }
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.terms().map(|(k, c)| c * z.powi(k)).sum()
    }

    /// `(f g)_0 = Σ_k f_k g_{-k}` from the in-band coefficients.
    pub fn product_mean(&self, other: &Self) -> C64 {
        assert_eq!(self.n_modes, other.n_modes, "mode count mismatch");
        self.coeffs.iter().zip(other.coeffs.iter().rev()).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `max(|c_k| : |k| >= N-2) / max |c_k|`; zero for the zero series.
    pub fn tail_health(&self) -> f64 {
        let top = self.max_abs();
        if top == 0.0 {
            return 0.0;
        }
        let edge = self.n_modes as i32 - 2;
        let tail = self.terms().filter(|(k, _)| k.abs() >= edge).map(|(_, c)| c.norm()).fold(0.0, f64::max);
        tail / top
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest coefficient difference.
    pub fn max_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }
}

impl Add<&LaurentSeries> for &LaurentSeries {
    type Output = LaurentSeries;
    fn add(self, rhs: &LaurentSeries) -> LaurentSeries {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&LaurentSeries> for &LaurentSeries {
    type Output = LaurentSeries;
    fn sub(self, rhs: &LaurentSeries) -> LaurentSeries {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&LaurentSeries> for LaurentSeries {
    fn add_assign(&mut self, rhs: &LaurentSeries) {
        assert_eq!(self.n_modes, rhs.n_modes, "mode count mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&LaurentSeries> for LaurentSeries {
    fn sub_assign(&mut self, rhs: &LaurentSeries) {
        assert_eq!(self.n_modes, rhs.n_modes, "mode count mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Add for LaurentSeries {
    type Output = LaurentSeries;
    fn add(mut self, rhs: LaurentSeries) -> LaurentSeries {
        self += &rhs;
        self
    }
}

impl Sub for LaurentSeries {
    type Output = LaurentSeries;
    fn sub(mut self, rhs: LaurentSeries) -> LaurentSeries {
        self -= &rhs;
        self
    }
}

impl Neg for &LaurentSeries {
    type Output = LaurentSeries;
    fn neg(self) -> LaurentSeries {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Neg for LaurentSeries {
    type Output = LaurentSeries;
    fn neg(self) -> LaurentSeries {
        -&self
    }
}

impl Mul<&LaurentSeries> for &LaurentSeries {
    type Output = LaurentSeries;
    fn mul(self, rhs: &LaurentSeries) -> LaurentSeries {
        LaurentSeries::mul(self, rhs)
    }
}

impl Mul<C64> for &LaurentSeries {
    type Output = LaurentSeries;
    fn mul(self, rhs: C64) -> LaurentSeries {
        self.scale(rhs)
    }
}

impl Mul<f64> for &LaurentSeries {
    type Output = LaurentSeries;
    fn mul(self, rhs: f64) -> LaurentSeries {
        self.scale(C64::new(rhs, 0.0))
    }
}
