use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::{CoreError, Result};

/// Resolutions, tolerances, and iteration limits shared by the solvers.
///
/// The defaults reproduce the reference constants: a degree-25 constrained
/// Chebyshev basis for the ground state, a 32 000-point graded
/// finite-difference grid on [0, 40], and tolerances tight enough that all
/// cross-validation checks pass with margin.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Highest polynomial degree of the constrained Chebyshev basis used for
    /// the ground-state solve.
    pub n_max: usize,
    /// Number of radial grid points M of the finite-difference grid.
    pub grid_points: usize,
    /// Truncation radius; profiles decay like e^{-r}, so integrands and
    /// operators are cut off here.
    pub r_max: f64,
    /// Convergence tolerance on the collocation residual of the Newton solve.
    pub newton_tol: f64,
    /// Sup-norm tolerance on successive iterates of the ρ_α fixed point.
    pub fixedpoint_tol: f64,
    /// Threshold below which an eigenvalue magnitude counts as "near zero".
    pub eig_tol: f64,
    /// Smallest scaling parameter α accepted by the curved-soliton solver.
    pub alpha_min: f64,
    /// Directory for cached ground-state profiles; `None` disables caching.
    pub cache_dir: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_max: 25,
            grid_points: 32_000,
            r_max: 40.0,
            newton_tol: 1e-12,
            fixedpoint_tol: 1e-10,
            eig_tol: 1e-4,
            alpha_min: 4.0,
            cache_dir: None,
        }
    }
}

impl SolverConfig {
    /// Checks the structural invariants: tolerances in (0, 10⁻²], basis large
    /// enough for the constraint system, grid not degenerate.
    pub fn validate(&self) -> Result<()> {
        for (name, tol) in [
            ("newton_tol", self.newton_tol),
            ("fixedpoint_tol", self.fixedpoint_tol),
            ("eig_tol", self.eig_tol),
        ] {
            if !(tol > 0.0 && tol <= 1e-2) {
                return Err(CoreError::InvalidArgument(format!(
                    "{name} must lie in (0, 1e-2], got {tol:e}"
                )));
            }
        }
        if self.n_max < 10 {
            return Err(CoreError::InvalidArgument(format!(
                "n_max must be at least 10, got {}",
                self.n_max
            )));
        }
        if self.grid_points < 500 {
            return Err(CoreError::InvalidArgument(format!(
                "grid_points must be at least 500, got {}",
                self.grid_points
            )));
        }
        if !(self.r_max >= 20.0) {
            return Err(CoreError::InvalidArgument(format!(
                "r_max must be at least 20, got {}",
                self.r_max
            )));
        }
        if !(self.alpha_min > 0.0) {
            return Err(CoreError::InvalidArgument(format!(
                "alpha_min must be positive, got {}",
                self.alpha_min
            )));
        }
        Ok(())
    }
}
