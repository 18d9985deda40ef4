use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use super::samples::Samples;
use super::series::LaurentSeries;
use crate::{Result, TodaError, C64};

/// Winding number of a closed curve around the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Winding(pub i32);

impl Winding {
    pub fn value(self) -> i32 {
        self.0
    }
}

pub(crate) fn winding_of_samples(f: &Samples) -> Result<Winding> {
    let (min, max) = (f.min_abs(), f.max_abs());
    if !(min > 1e-8 * max) {
        return Err(TodaError::DegenerateCurve { min, max });
    }
    let v = f.values();
    let total: f64 = (0..v.len()).map(|j| (v[(j + 1) % v.len()] / v[j]).arg()).sum();
    let turns = total / (2.0 * PI);
    let rounded = turns.round();
    if (turns - rounded).abs() > 1e-6 {
        return Err(TodaError::UnresolvedWinding(turns));
    }
    Ok(Winding(rounded as i32))
}

/// Total phase increment of `f` around the circle over 2π.
pub fn winding_number(f: &LaurentSeries) -> Result<Winding> {
    winding_of_samples(&f.samples())
}

/// Grid values of `g` with `e^g z^w = f`, continuous along the circle and
/// with `Im` of the mean in `(-π, π]`.
pub(crate) fn log_samples(f: &Samples) -> Result<(Samples, Winding)> {
    let w = winding_of_samples(f)?;
    let z = f.nodes();
    let h = f.zip_map(&z, |a, zj| a * zj.powi(-w.0));
    let v = h.values();
    let mut phase = v[0].arg();
    let mut out = alloc::vec::Vec::with_capacity(v.len());
    for j in 0..v.len() {
        if j > 0 {
            phase += (v[j] / v[j - 1]).arg();
        }
        out.push(C64::new(v[j].norm().ln(), phase));
    }
    let mut g = Samples::from_values(f.n_modes(), out);
    let m = g.mean().im;
    let k = ((m - PI) / (2.0 * PI)).ceil();
    if k != 0.0 {
        g = g.map(|c| c - C64::new(0.0, 2.0 * PI * k));
    }
    Ok((g, w))
}

/// Branch-controlled logarithm: `(g, w)` with `exp(g)·z^w = f` and the
/// imaginary part of `(g)_0` in `(-π, π]`.
pub fn circle_log(f: &LaurentSeries) -> Result<(LaurentSeries, Winding)> {
    let (g, w) = log_samples(&f.samples())?;
    Ok((g.to_series(), w))
}

pub fn circle_exp(g: &LaurentSeries) -> LaurentSeries {
    g.samples().exp().to_series()
}
