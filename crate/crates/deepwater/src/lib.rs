//! Spectral computation of the Dirichlet-Neumann operator for analytic
//! periodic surfaces over infinitely deep water, and of the analytic branches
//! of Stokes (traveling) waves bifurcating from flat equilibrium.
//!
//! The pipeline flattens the fluid domain to the half-cylinder with the
//! regularizing change of variables `y -> y + e^{y|D|} eta(x)`, solves the
//! transformed elliptic problem by a contractive fixed point built on an
//! exact per-mode Poisson solver, and assembles `G(eta) psi` from the
//! boundary trace. Everything in the depth direction is carried symbolically
//! on exponential-polynomial profiles, so the only approximation sources are
//! the Fourier truncation and coefficient pruning.
//!
//! Modules:
//! - [`analytic`]: truncated Fourier series with analytic-Sobolev norms.
//! - [`collocation`]: uniform grids and de-aliased pointwise evaluation.
//! - [`halfspace`]: exponential-polynomial functions on the half-cylinder.
//! - [`poisson`]: the exact flat solver via `T_lambda` integral operators.
//! - [`dn`]: flattening coefficients, fixed point, `G(eta)`, oracles.
//! - [`stokes`]: traveling-wave residual, bifurcation, Newton continuation.
//! - [`io`]: JSON/CSV formats shared by the library and the CLI.

pub mod analytic;
pub mod collocation;
pub mod config;
pub mod dn;
pub mod error;
pub mod halfspace;
pub mod io;
pub mod poisson;
pub mod stokes;

pub mod cli;

pub use analytic::{ModeIndex, NormParams, PeriodicFunction};
pub use config::SolverConfig;
pub use error::{Error, Result};
pub use halfspace::{ExpPolyProfile, HalfCylinderFunction, WeightedNormParams};
