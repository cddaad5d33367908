//! Complex spectrum of the Gurtin–Pipkin integro-differential equation
//!
//! ```text
//! theta_tt = theta_xx - int_0^t k(t - s) theta_xx(s) ds,   x in (0, pi),
//! ```
//!
//! with Dirichlet conditions and the relaxation kernel
//! `k(t) = sum_k k^-alpha exp(-k^beta t)`. Mode `n` contributes the zeros of
//! `D_n(z) = z^2/n^2 + 1 - K(z)`, `K` the Laplace transform of `k`. This crate
//! evaluates `K` with certified truncation error, locates the complex zeros
//! `z_n^+` near `+in`, compares them with leading-order asymptotics, and
//! checks the supporting estimates numerically.

pub mod asymptotics;
pub mod charfunc;
pub mod cli;
pub mod error;
pub mod kernel;
pub mod oracle;
pub mod quadrature;
pub mod sum;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Complex number used throughout the crate.
pub type ComplexValue = Complex64;
