//! Alternating solvers in TT format.

mod amen;
mod envs;
mod fit;

use serde::{Deserialize, Serialize};

use crate::error::{NteError, Result};

pub use amen::{tt_linsolve, LinsolveOutput, TtLinearSystem};
pub use fit::tt_matvec_fit;

/// How the reduced (single-core) systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocalSolver {
    /// Dense up to `dense_limit` unknowns, conjugate gradients above.
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative residual target.
    pub eps: f64,
    /// A sweep is one left-to-right plus one right-to-left pass.
    pub max_sweeps: usize,
    /// Residual enrichment rank; `0` gives plain ALS with fixed ranks.
    pub kickrank: usize,
    pub max_rank: usize,
    pub local_solver: LocalSolver,
    pub dense_limit: usize,
    /// Seed for random initial guesses.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            eps: 1e-8,
            max_sweeps: 30,
            kickrank: 4,
            max_rank: 256,
            local_solver: LocalSolver::Auto,
            dense_limit: 2000,
            seed: 0x7e11,
        }
    }
}

impl SolverOptions {
    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(NteError::Validation("solver eps must be positive".into()));
        }
        if self.max_sweeps == 0 {
            return Err(NteError::Validation("max_sweeps must be at least 1".into()));
        }
        if self.max_rank == 0 {
            return Err(NteError::Validation("max_rank must be at least 1".into()));
        }
        Ok(())
    }
}
