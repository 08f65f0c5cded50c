//! Solver configuration shared by the library and the CLI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All tunable knobs of the pipeline. Deserializes from the same JSON schema
/// the CLI accepts via `--config`; unset fields fall back to defaults.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Space dimension, 1 or 2.
    #[serde(rename = "d")]
    pub dim: u8,
    /// Fourier truncation radius: modes with |k|_inf <= K are kept.
    #[serde(rename = "K")]
    pub trunc: u32,
    /// Exponential depth weight a of the half-cylinder norms, fixed to 1/2.
    #[serde(rename = "a")]
    pub depth_weight: f64,
    /// Relative tolerance of the elliptic fixed-point iteration.
    pub neumann_tol: f64,
    /// Iteration cap of the elliptic fixed point.
    pub neumann_max_iter: u32,
    /// Relative tolerance truncating the coefficient series of the
    /// flattening (alpha, delta and the 1/(dy rho) expansion).
    pub series_tol: f64,
    /// Relative tolerance under which two close decay rates are merged.
    pub merge_tol: f64,
    /// Relative tolerance under which small profile terms are dropped.
    pub prune_tol: f64,
    /// Diffeomorphism guard: require sup_x |(|D| eta)(x)| < eta_guard.
    pub eta_guard: f64,
    /// Hard cap on terms per exponential-polynomial profile.
    pub term_cap: usize,
    /// Residual tolerance of the traveling-wave Newton solver.
    pub stokes_tol: f64,
    /// Iteration cap of the traveling-wave Newton solver.
    pub newton_max_iter: u32,
    /// Base step of the forward-difference Jacobian.
    pub fd_step: f64,
    /// Cap on the amplitude parameter accepted by the Newton solver.
    pub eps_cap: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dim: 1,
            trunc: 32,
            depth_weight: 0.5,
            neumann_tol: 1e-12,
            neumann_max_iter: 100,
            series_tol: 1e-15,
            merge_tol: 1e-12,
            prune_tol: 1e-14,
            eta_guard: 1.0,
            term_cap: 512,
            stokes_tol: 1e-11,
            newton_max_iter: 25,
            fd_step: 1e-7,
            eps_cap: 0.2,
        }
    }
}

impl SolverConfig {
    /// Default configuration at the given dimension and truncation.
    pub fn with_trunc(dim: u8, trunc: u32) -> Self {
        SolverConfig {
            dim,
            trunc,
            ..SolverConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 1 or 2, got {}",
                self.dim
            )));
        }
        if self.trunc == 0 {
            return Err(Error::InvalidParameter("truncation K must be >= 1".into()));
        }
        if !(self.depth_weight > 0.0 && self.depth_weight < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "depth weight a must lie in (0, 1), got {}",
                self.depth_weight
            )));
        }
        for (name, v) in [
            ("neumann_tol", self.neumann_tol),
            ("series_tol", self.series_tol),
            ("merge_tol", self.merge_tol),
            ("prune_tol", self.prune_tol),
            ("eta_guard", self.eta_guard),
            ("stokes_tol", self.stokes_tol),
            ("fd_step", self.fd_step),
            ("eps_cap", self.eps_cap),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.term_cap == 0 {
            return Err(Error::InvalidParameter("term_cap must be >= 1".into()));
        }
        Ok(())
    }
}
