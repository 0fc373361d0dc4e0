//! Transformation-operator kernels for the perturbed radial Schrödinger
//! operator H = -d²/dx² + l(l+1)/x² + q(x).
//!
//! The Gelfand–Levitan kernel B(x,y) is computed near the origin and the
//! Marchenko kernel K(x,y) near infinity, both by successive approximation
//! on Riemann-function integral equations, with Goursat-form oracles and
//! envelope-bound checks alongside.

mod bessel;
mod cheb;
pub mod cli;
pub mod error;
pub mod glkernel;
mod goursat;
pub mod makernel;
pub mod potential;
pub mod quadrature;
pub mod riemann;
pub mod solutions;
pub mod specfun;

pub use error::{Error, Result};
