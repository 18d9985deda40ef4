use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Div, Mul, Neg, Sub};

use super::series::{grid_len, LaurentSeries};
use crate::C64;

/// Values of a function at the grid nodes `z_j = e^{2πi j/L}` of a series
/// with `N` modes. Pointwise arithmetic happens here; [`Samples::to_series`]
/// goes back to coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    n_modes: usize,
    values: Vec<C64>,
}

impl Samples {
    pub(crate) fn from_values(n_modes: usize, values: Vec<C64>) -> Self {
        debug_assert_eq!(values.len(), grid_len(n_modes));
        Samples { n_modes, values }
    }

    /// The grid nodes themselves, i.e. the samples of `z`.
    pub fn nodes_for(n_modes: usize) -> Self {
        let len = grid_len(n_modes);
        let values = (0..len).map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / len as f64)).collect();
        Samples { n_modes, values }
    }

    pub fn nodes(&self) -> Self {
        Self::nodes_for(self.n_modes)
    }

    pub fn constant(n_modes: usize, c: C64) -> Self {
        Samples { n_modes, values: alloc::vec![c; grid_len(n_modes)] }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn to_series(&self) -> LaurentSeries {
        LaurentSeries::from_grid(self.n_modes, &self.values)
    }

    /// Trapezoid rule for `(1/2πi)∮ f dz/z`, i.e. the mean over the grid.
    pub fn mean(&self) -> C64 {
        self.values.iter().sum::<C64>() / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Samples { n_modes: self.n_modes, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!(self.n_modes, other.n_modes, "mode count mismatch");
        Samples {
            n_modes: self.n_modes,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn exp(&self) -> Self {
        self.map(|v| v.exp())
    }

    pub fn recip(&self) -> Self {
        self.map(|v| v.inv())
    }

    pub fn powi(&self, n: i32) -> Self {
        self.map(|v| v.powi(n))
    }

    pub fn scale(&self, a: C64) -> Self {
        self.map(|v| v * a)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn min_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
    }
}

macro_rules! pointwise {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr<&Samples> for &Samples {
            type Output = Samples;
            fn $m(self, rhs: &Samples) -> Samples {
                self.zip_map(rhs, |a, b| a $op b)
            }
        }
        impl $tr<Samples> for Samples {
            type Output = Samples;
            fn $m(self, rhs: Samples) -> Samples {
                self.zip_map(&rhs, |a, b| a $op b)
            }
        }
        impl $tr<&Samples> for Samples {
            type Output = Samples;
            fn $m(self, rhs: &Samples) -> Samples {
                self.zip_map(rhs, |a, b| a $op b)
            }
        }
        impl $tr<Samples> for &Samples {
            type Output = Samples;
            fn $m(self, rhs: Samples) -> Samples {
                self.zip_map(&rhs, |a, b| a $op b)
            }
        }
        impl $tr<C64> for &Samples {
            type Output = Samples;
            fn $m(self, rhs: C64) -> Samples {
                self.map(|a| a $op rhs)
            }
        }
        impl $tr<C64> for Samples {
            type Output = Samples;
            fn $m(self, rhs: C64) -> Samples {
                self.map(|a| a $op rhs)
            }
        }
        impl $tr<f64> for &Samples {
            type Output = Samples;
            fn $m(self, rhs: f64) -> Samples {
                self.map(|a| a $op rhs)
            }
        }
        impl $tr<f64> for Samples {
            type Output = Samples;
            fn $m(self, rhs: f64) -> Samples {
                self.map(|a| a $op rhs)
            }
        }
    };
}

pointwise!(Add, add, +);
pointwise!(Sub, sub, -);
pointwise!(Mul, mul, *);
pointwise!(Div, div, /);

impl Neg for &Samples {
    type Output = Samples;
    fn neg(self) -> Samples {
        self.map(|a| -a)
    }
}

impl Neg for Samples {
    type Output = Samples;
    fn neg(self) -> Samples {
        self.map(|a| -a)
    }
}
