//! Pseudo-spectral numerics for the extended dispersionless 2D Toda hierarchy
//! and the infinite-dimensional Frobenius manifold of analytic curves.
//!
//! Functions on the unit circle are truncated Laurent series evaluated on an
//! FFT grid; every nonlinear operation is done pointwise on the grid and
//! transformed back. Points of the phase space are pairs of Lax symbols
//! `(λ, λ̄)`; loop points add a periodic dependence on `x`.
//!
//! The crate is `no_std` (it needs `alloc`). File formats and the command
//! line driver live in `toda-cli`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod circle_spectral;
pub mod deformed_connection;
mod error;
pub mod frobenius_geometry;
pub mod lax_manifold;
pub mod toda_hierarchy;

pub use error::{Result, TodaError};
pub use num_complex::Complex64 as C64;
