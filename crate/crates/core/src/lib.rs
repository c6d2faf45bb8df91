//! Short-time action expansions and time-sliced propagators for the
//! one-dimensional Schrödinger equation `i hbar u_t = -hbar^2/2 u_xx + V(t,x) u`,
//! with a reference split-step solver and phase-space (modulation norm)
//! diagnostics.

pub mod action;
pub mod cli;
pub mod error;
pub mod grid;
pub mod oio;
pub mod parametrix;
pub mod potential;
pub mod quadrature;
pub mod reference;
pub mod slicing;
pub mod timefreq;

mod poly2;
mod spectral;

pub use error::{Error, Result};
