use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Neg, RangeBounds, Sub};

use num_traits::Zero;

use super::fft::{fft_forward, fft_inverse};
use super::series::LaurentSeries;
use crate::{Result, TodaError, C64};

/// A function of `(z, x)` on S¹×S¹: one Laurent series per node
/// `x_j = 2πj/M` of the periodic x-grid. Fourier modes in `x` range over
/// `[-M/2, M/2 - 1]` and are computed on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopField {
    slices: Vec<LaurentSeries>,
}

fn check_x_modes(m: usize) -> Result<()> {
    if m >= 4 && m.is_power_of_two() {
        Ok(())
    } else {
        Err(TodaError::GridSize(m))
    }
}

impl LoopField {
    pub fn from_slices(slices: Vec<LaurentSeries>) -> Result<Self> {
        check_x_modes(slices.len())?;
        let n = slices[0].n_modes();
        assert!(slices.iter().all(|s| s.n_modes() == n), "mode count mismatch");
        Ok(LoopField { slices })
    }

    pub fn from_fn(x_modes: usize, f: impl Fn(f64) -> LaurentSeries) -> Result<Self> {
        check_x_modes(x_modes)?;
        Self::from_slices((0..x_modes).map(|j| f(Self::node(x_modes, j))).collect())
    }

    pub fn constant(series: &LaurentSeries, x_modes: usize) -> Result<Self> {
        Self::from_fn(x_modes, |_| series.clone())
    }

    pub fn zeros(n_modes: usize, x_modes: usize) -> Result<Self> {
        Self::constant(&LaurentSeries::zeros(n_modes), x_modes)
    }

    pub fn node(x_modes: usize, j: usize) -> f64 {
        2.0 * PI * j as f64 / x_modes as f64
    }

    pub fn n_modes(&self) -> usize {
        self.slices[0].n_modes()
    }

    pub fn x_modes(&self) -> usize {
        self.slices.len()
    }

    pub fn slice(&self, j: usize) -> &LaurentSeries {
        &self.slices[j]
    }

    pub fn slices(&self) -> &[LaurentSeries] {
        &self.slices
    }

    pub fn map(&self, f: impl Fn(&LaurentSeries) -> LaurentSeries) -> Self {
        LoopField { slices: self.slices.iter().map(f).collect() }
    }

    /// Like `map`, with the x-node index passed along.
    pub fn map_indexed(&self, f: impl Fn(usize, &LaurentSeries) -> LaurentSeries) -> Self {
        LoopField { slices: self.slices.iter().enumerate().map(|(j, s)| f(j, s)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(&LaurentSeries, &LaurentSeries) -> LaurentSeries) -> Self {
        assert_eq!(self.x_modes(), other.x_modes(), "x grid mismatch");
        LoopField { slices: self.slices.iter().zip(&other.slices).map(|(a, b)| f(a, b)).collect() }
    }

    pub fn project(&self, range: impl RangeBounds<i32> + Clone) -> Self {
        self.map(|s| s.project(range.clone()))
    }

    pub fn plus(&self) -> Self {
        self.map(LaurentSeries::plus)
    }

    pub fn minus(&self) -> Self {
        self.map(LaurentSeries::minus)
    }

    pub fn z_deriv(&self) -> Self {
        self.map(LaurentSeries::z_deriv)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_map(other, LaurentSeries::mul)
    }

    pub fn scale(&self, a: C64) -> Self {
        self.map(|s| s.scale(a))
    }

    /// `(F)_k` as a function of `x`, sampled on the x-grid.
    pub fn coeff(&self, k: i32) -> Vec<C64> {
        self.slices.iter().map(|s| s.coeff(k)).collect()
    }

    fn column_spectrum(&self, k: i32) -> Vec<C64> {
        let mut col = self.coeff(k);
        fft_forward(&mut col);
        let inv = 1.0 / col.len() as f64;
        col.iter_mut().for_each(|c| *c *= inv);
        col
    }

    /// Coefficient of `z^k e^{imx}`.
    pub fn fourier_coeff(&self, k: i32, m: i32) -> C64 {
        let col = self.column_spectrum(k);
        col[m.rem_euclid(col.len() as i32) as usize]
    }

    /// `∂_x`, spectrally: mode `m` is multiplied by `i m`; the unpaired
    /// Nyquist mode is dropped.
    pub fn x_deriv(&self) -> Self {
        let m = self.x_modes();
        let n = self.n_modes() as i32;
        let mut out = self.slices.clone();
        let mut col = vec![C64::zero(); m];
        for k in -n..=n {
            for (c, s) in col.iter_mut().zip(&self.slices) {
                *c = s.coeff(k);
            }
            fft_forward(&mut col);
            for (idx, c) in col.iter_mut().enumerate() {
                let freq = if idx < m / 2 {
                    idx as f64
                } else if idx == m / 2 {
                    0.0
                } else {
                    idx as f64 - m as f64
                };
                *c *= C64::new(0.0, freq / m as f64);
            }
            fft_inverse(&mut col);
            for (s, c) in out.iter_mut().zip(&col) {
                s.set_coeff(k, *c);
            }
        }
        LoopField { slices: out }
    }

    pub fn max_abs(&self) -> f64 {
        self.slices.iter().map(LaurentSeries::max_abs).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    /// Tail-health diagnostics `(z, x)`: the largest relative coefficient in
    /// the outermost two z-modes, and in the outermost two x-modes.
    pub fn tail_health(&self) -> (f64, f64) {
        let z_tail = self.slices.iter().map(LaurentSeries::tail_health).fold(0.0, f64::max);
        let m = self.x_modes() as i32;
        let n = self.n_modes() as i32;
        let mut top = 0.0f64;
        let mut tail = 0.0f64;
        for k in -n..=n {
            let col = self.column_spectrum(k);
            for (idx, c) in col.iter().enumerate() {
                let freq = if (idx as i32) < m / 2 { idx as i32 } else { idx as i32 - m };
                top = top.max(c.norm());
                if freq >= m / 2 - 2 || freq <= -m / 2 + 1 {
                    tail = tail.max(c.norm());
                }
            }
        }
        (z_tail, if top == 0.0 { 0.0 } else { tail / top })
    }

    pub fn is_finite(&self) -> bool {
        self.slices.iter().all(LaurentSeries::is_finite)
    }
}

impl Add<&LoopField> for &LoopField {
    type Output = LoopField;
    fn add(self, rhs: &LoopField) -> LoopField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub<&LoopField> for &LoopField {
    type Output = LoopField;
    fn sub(self, rhs: &LoopField) -> LoopField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Add for LoopField {
    type Output = LoopField;
    fn add(self, rhs: LoopField) -> LoopField {
        &self + &rhs
    }
}

impl Sub for LoopField {
    type Output = LoopField;
    fn sub(self, rhs: LoopField) -> LoopField {
        &self - &rhs
    }
}

impl Neg for &LoopField {
    type Output = LoopField;
    fn neg(self) -> LoopField {
        self.map(|s| -s)
    }
}

impl Neg for LoopField {
    type Output = LoopField;
    fn neg(self) -> LoopField {
        -&self
    }
}

/// `{f, g} = z f_z g_x - z g_z f_x`.
pub fn poisson_bracket(f: &LoopField, g: &LoopField) -> LoopField {
    let fz = f.z_deriv();
    let gz = g.z_deriv();
    let fx = f.x_deriv();
    let gx = g.x_deriv();
    &fz.mul(&gx) - &gz.mul(&fx)
}
