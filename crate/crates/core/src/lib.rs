//! Spectral simulation and statistical verification for the Galerkin-truncated stochastic
//! KdV equation on the torus,
//!
//! `∂_t u + ∂ₓ³u + P_N(u_N ∂ₓ u_N) = ξ`, `u(0) = u₀`,
//!
//! with `ξ` space-time white noise and `u₀` spatial white noise of variance `α`.
//!
//! The crate is organised as
//! - [`spectrum`]: Fourier-side states, white-noise sampling and projections,
//! - [`noise`]: counter-based Brownian increments coupled across step sizes and truncations,
//! - [`dynamics`]: the truncated flow, deterministic KdV, stochastic convolution, splitting,
//! - [`generator`]: drift identities and the Gaussian solution of the forward equation,
//! - [`norms`]: Fourier–Besov, Fourier–Lebesgue and space-time norms,
//! - [`statistics`]: ensembles and hypothesis tests,
//! - [`config`] and [`io`]: configuration, manifests and CSV output used by the `skdv` binary,
//! - [`runs`]: one driver per subcommand, shared by the binary, the examples and the tests.

// `!(x > 0.0)` is how validation rejects NaN; index loops mirror the formulas
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod dynamics;
pub mod error;
pub mod generator;
pub mod io;
pub mod noise;
pub mod norms;
pub mod rng;
pub mod runs;
pub mod spectrum;
pub mod statistics;

pub use error::{Error, Result};
pub use num_complex::Complex64;
