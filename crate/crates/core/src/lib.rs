//! Simulation and spectral verification of a 1-D coupled elastic/viscoelastic
//! wave system with localized Kelvin-Voigt damping and a localized internal
//! time delay.
//!
//! The continuous system on `(0, L)` is
//!
//! ```text
//! u_tt - [a u_x + b(x)(k1 u_tx(t) + k2 u_tx(t - tau))]_x + c(x) y_t = 0
//! y_tt - y_xx - c(x) u_t = 0
//! ```
//!
//! with Dirichlet ends, `b = 1` on `(0, beta)` and `c = c0` on `(alpha, gamma)`.
//! The delay is carried by the transport variable `eta(x, rho, t) = u_t(x, t - rho tau)`
//! which turns the system into `U' = A U` on a Hilbert space with an explicit
//! energy inner product.
//!
//! Module map:
//! - [`model`]: parameters, coefficients, initial/history data, config files
//! - [`discretize`]: breakpoint-aligned mesh and P1 matrices
//! - [`generator`]: semi-discrete generator `A_h` and energy Gram matrix `M_h`
//! - [`evolve`]: implicit time stepping and the method-of-steps oracle
//! - [`spectral`]: eigenvalues and energy-norm resolvent sweeps
//! - [`diagnostics`]: energy traces, dissipation checks, decay fits
//! - [`verify`]: the end-to-end property suite

// `!(x > 0.0)` is the NaN-rejecting form; index loops mirror the textbook kernels.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod discretize;
pub mod error;
pub mod evolve;
pub mod generator;
pub mod linalg;
pub mod model;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
