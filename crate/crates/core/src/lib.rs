//! Multi-photon absorption fringes produced by a non-degenerate optical
//! parametric oscillator (NDPO) illuminating a p-photon absorber through a
//! 50:50 interferometer.
//!
//! Three independent computational routes are provided and cross-check each
//! other:
//!
//! * [`analytic`]: closed-form rates below threshold and the asymptotic form
//!   far above threshold, together with the tabulated rows for p = 1..6.
//! * [`moments`] + [`absorber`] + [`engine`]: an exact symbolic expansion of
//!   the absorber field power contracted against stationary positive-P
//!   moments, valid below, near and above threshold.
//! * [`langevin`]: Euler–Maruyama sampling of the reduced c-number Langevin
//!   equations.
//!
//! [`oracle`] holds the quadrature routines used to verify the special
//! functions and moments against the full stationary distribution.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, the command line
//! and parallel ensembles live in the `ndpo-litho` crate.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod absorber;
pub mod analytic;
pub mod engine;
pub mod error;
pub mod fringe;
pub mod langevin;
pub mod moments;
pub mod opa;
pub mod oracle;
pub mod params;
pub mod special;
pub mod tables;

pub use error::{Error, Result};
pub use fringe::FringePattern;
pub use params::{DerivedParams, NdpoParams, Regime, RegimeTag};
