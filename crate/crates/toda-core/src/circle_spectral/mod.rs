//! Truncated Laurent series on the unit circle and loop fields on S¹×S¹.
//!
//! A series keeps the coefficients `c_k`, `k ∈ [-N, N]`. Products and all
//! pointwise functions are evaluated on a grid of `L` points, the smallest
//! power of two with `L >= 2(2N+1)`, so products of in-band series come back
//! without aliasing.

mod fft;
mod logarithm;
mod loop_field;
mod samples;
mod series;
mod special;

pub use logarithm::{circle_exp, circle_log, winding_number, Winding};
pub use loop_field::{poisson_bracket, LoopField};
pub use samples::Samples;
pub use series::{grid_len, LaurentSeries};
pub use special::{ein, harmonic, harmonic_f64};

pub(crate) use logarithm::{log_samples, winding_of_samples};
pub(crate) use special::ein_unchecked;
