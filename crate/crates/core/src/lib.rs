//! Numerical toolkit for the weighted semilinear problem -Δu = |x|^α F(u)
//! in R^N: the singular radial reduction and its ground states by shooting,
//! the two weighted eigenproblems attached to the linearization, exact
//! spherical-harmonic combinatorics (Morse indices, kernel dimensions,
//! branch census at the even-alpha bifurcation values), modified Bessel
//! machinery for decay verification, and parameter sweeps in alpha.
//!
//! Every computation is deterministic and every result type is an immutable
//! value; independent solves can run concurrently without coordination.

pub mod asymptotics;
pub mod continuation;
pub mod error;
pub mod ivp;
pub mod linearization;
pub mod nonlinearity;
pub mod quad;
pub mod radial_ode;
pub mod spectral_geometry;
pub mod tridiag;

pub use error::{Error, Result};
