//! Outer eigenvalue iterations.
//!
//! `solve_keff` runs the fixed point
//!
//! ```text
//! H Ψ⁺ = (S + F / k) Ψ,    k⁺ = k · ΣFΨ⁺ / ΣFΨ,    Ψ⁺ ← Ψ⁺ / ‖Ψ⁺‖
//! ```
//!
//! and `solve_alpha` finds the `α` with `k_eff(H + αV⁻¹) = 1` by a secant
//! iteration. Both work on any [`OperatorSet`]: in dense mode `H` is inverted
//! by transport sweeps, in TT and QTT mode by the alternating linear solver.

mod dense_iter;
mod tensor_iter;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dense::{EigenPair, EigenSettings};
use crate::error::{NteError, Result};
use crate::solver::SolverOptions;
use crate::transport::{DenseOperators, LossSolver, OperatorSet};
use crate::tt::TtVector;

/// How `TT-matrix × TT-vector` products are formed inside the iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatvecMode {
    /// Exact product followed by rounding.
    Exact,
    /// Two-site alternating fit.
    Fit,
}

/// Secant step used by [`solve_alpha`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaUpdate {
    /// `α⁺ = α + (1 − k)(α − α₋)/(k − k₋)`.
    Secant,
    /// `α⁺ = α + (1 − k₋)/((k − k₋)(α − α₋))`, kept for comparison.
    Literal,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Eigenvalue tolerance.
    pub tol: f64,
    pub max_outer: usize,
    /// Inner linear-solver options (TT and QTT modes). `None` ties the inner
    /// tolerance to `0.1 · tol`.
    pub inner: Option<SolverOptions>,
    pub seed: u64,
    pub matvec: MatvecMode,
    pub alpha_update: AlphaUpdate,
    pub max_alpha_iter: usize,
    /// Second secant point.
    pub alpha_step: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-6,
            max_outer: 500,
            inner: None,
            seed: 0x5eed,
            matvec: MatvecMode::Exact,
            alpha_update: AlphaUpdate::Secant,
            max_alpha_iter: 20,
            alpha_step: 0.01,
        }
    }
}

impl EigenOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(NteError::Validation("eigenvalue tolerance must be positive".into()));
        }
        if self.max_outer == 0 || self.max_alpha_iter < 2 {
            return Err(NteError::Validation("iteration caps are too small".into()));
        }
        if let Some(inner) = &self.inner {
            inner.validate()?;
        }
        Ok(())
    }

    pub fn inner_options(&self) -> SolverOptions {
        self.inner
            .clone()
            .unwrap_or_else(|| SolverOptions::default().with_eps(0.1 * self.tol))
    }
}

/// The eigenvector in the representation it was computed in.
#[derive(Clone, Debug)]
pub enum Psi {
    Full(Vec<f64>),
    Tensor(TtVector),
}

impl Psi {
    pub fn to_full(&self) -> Vec<f64> {
        match self {
            Psi::Full(v) => v.clone(),
            Psi::Tensor(t) => t.to_vec(),
        }
    }

    pub fn stored_entries(&self) -> usize {
        match self {
            Psi::Full(v) => v.len(),
            Psi::Tensor(t) => t.num_params(),
        }
    }

    pub fn compression_ratio(&self) -> f64 {
        match self {
            Psi::Full(_) => 1.0,
            Psi::Tensor(t) => t.compression_ratio(),
        }
    }

    pub fn max_rank(&self) -> usize {
        match self {
            Psi::Full(_) => 1,
            Psi::Tensor(t) => t.max_rank(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub eigenvalue: f64,
    /// `‖HΨ − (S + F/k)Ψ‖ / ‖HΨ‖`.
    pub residual: f64,
    /// Sweeps used by the inner solve (0 in dense mode).
    pub inner_half_sweeps: usize,
    /// Largest TT rank of Ψ (1 in dense mode).
    pub psi_rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaStep {
    pub alpha: f64,
    pub keff: f64,
    pub keff_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    /// `k_eff` or `α`.
    pub eigenvalue: f64,
    /// For alpha solves, `k_eff` at the returned `α`.
    pub keff: f64,
    pub psi: Psi,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub alpha_history: Vec<AlphaStep>,
    pub psi_compression: f64,
    pub h_compression: f64,
    pub wall_time_seconds: f64,
}

impl EigenResult {
    pub fn final_residual(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |r| r.residual)
    }
}

/// Stored-entry ratio of a TT vector or TT matrix against its full size.
pub trait CompressionRatio {
    fn compression_ratio(&self) -> f64;
}

impl CompressionRatio for TtVector {
    fn compression_ratio(&self) -> f64 {
        TtVector::compression_ratio(self)
    }
}

impl CompressionRatio for crate::tt::TtMatrix {
    fn compression_ratio(&self) -> f64 {
        crate::tt::TtMatrix::compression_ratio(self)
    }
}

pub fn compression_ratio<T: CompressionRatio + ?Sized>(x: &T) -> f64 {
    x.compression_ratio()
}

/// k-effective fixed-point iteration.
pub fn solve_keff(ops: &OperatorSet, opts: &EigenOptions) -> Result<EigenResult> {
    solve_keff_shifted(ops, 0.0, None, opts)
}

/// k-effective of `(H + α V⁻¹) Ψ = (S + F/k) Ψ`, optionally warm-started.
pub fn solve_keff_shifted(
    ops: &OperatorSet,
    alpha: f64,
    warm: Option<(&Psi, f64)>,
    opts: &EigenOptions,
) -> Result<EigenResult> {
    opts.validate()?;
    let start = Instant::now();
    let mut res = match ops {
        OperatorSet::Dense(d) => dense_iter::keff(d, alpha, warm, opts)?,
        OperatorSet::Tt(t) | OperatorSet::Qtt(t) => tensor_iter::keff(t, alpha, warm, opts)?,
    };
    res.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(res)
}

/// Alpha eigenvalue by secant iteration on `α ↦ k_eff(α) − 1`, starting
/// from `α = 0` and `α = alpha_step`. Each k-effective solve uses tolerance
/// `0.1 · tol` and is warm-started from the previous eigenvector.
pub fn solve_alpha(ops: &OperatorSet, opts: &EigenOptions) -> Result<EigenResult> {
    opts.validate()?;
    let has_v = match ops {
        OperatorSet::Dense(d) => d.vinv.is_some(),
        OperatorSet::Tt(t) | OperatorSet::Qtt(t) => t.vinv.is_some(),
    };
    if !has_v {
        return Err(NteError::Validation("alpha mode needs group velocities".into()));
    }
    let start = Instant::now();
    let inner = EigenOptions {
        tol: 0.1 * opts.tol,
        inner: opts.inner.clone(),
        ..opts.clone()
    };
    let mut steps: Vec<AlphaStep> = Vec::new();
    let mut history = Vec::new();
    let run = |alpha: f64, warm: Option<(&Psi, f64)>, steps: &mut Vec<AlphaStep>| -> Result<EigenResult> {
        let r = solve_keff_shifted(ops, alpha, warm, &inner).map_err(|e| e.context(format!("k-effective at alpha = {alpha:.6e}")))?;
        steps.push(AlphaStep {
            alpha,
            keff: r.eigenvalue,
            keff_iterations: r.iterations,
        });
        Ok(r)
    };
    let (mut a0, mut a1) = (0.0, opts.alpha_step);
    let r0 = run(a0, None, &mut steps)?;
    let mut k0 = r0.eigenvalue;
    history.extend(r0.history.iter().cloned());
    let finish = |alpha: f64, r: EigenResult, steps: Vec<AlphaStep>, history: Vec<IterationRecord>| EigenResult {
        eigenvalue: alpha,
        keff: r.eigenvalue,
        iterations: steps.len(),
        alpha_history: steps,
        history,
        psi_compression: r.psi_compression,
        h_compression: r.h_compression,
        psi: r.psi,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    if (k0 - 1.0).abs() <= opts.tol {
        return Ok(finish(a0, r0, steps, history));
    }
    let mut last = run(a1, Some((&r0.psi, k0)), &mut steps)?;
    let mut k1 = last.eigenvalue;
    history.extend(last.history.iter().cloned());
    while steps.len() < opts.max_alpha_iter {
        if (k1 - 1.0).abs() <= opts.tol {
            return Ok(finish(a1, last, steps, history));
        }
        let a2 = alpha_step(opts.alpha_update, (a0, k0), (a1, k1))?;
        let next = run(a2, Some((&last.psi, k1)), &mut steps)?;
        history.extend(next.history.iter().cloned());
        (a0, k0) = (a1, k1);
        a1 = a2;
        k1 = next.eigenvalue;
        last = next;
    }
    if (k1 - 1.0).abs() <= opts.tol {
        return Ok(finish(a1, last, steps, history));
    }
    let hist: Vec<f64> = steps.iter().map(|s| (s.keff - 1.0).abs()).collect();
    Err(NteError::not_converged("alpha secant iteration", steps.len(), (k1 - 1.0).abs(), hist))
}

/// Next `α` from the two most recent `(α, k_eff)` points.
pub fn alpha_step(update: AlphaUpdate, (a0, k0): (f64, f64), (a1, k1): (f64, f64)) -> Result<f64> {
    let dk = k1 - k0;
    if dk.abs() < 1e-14 {
        return Err(NteError::Stagnation(format!(
            "k_eff did not change between alpha = {a0:.6e} and {a1:.6e}"
        )));
    }
    let a2 = match update {
        AlphaUpdate::Secant => a1 + (1.0 - k1) * (a1 - a0) / dk,
        AlphaUpdate::Literal => a1 + (1.0 - k0) / (dk * (a1 - a0)),
    };
    if !a2.is_finite() {
        return Err(NteError::Stagnation(format!("alpha update produced {a2}")));
    }
    Ok(a2)
}

/// Dominant eigenpair of `(H + αV⁻¹ − S) Ψ = (1/k) F Ψ` by power iteration on
/// `(H + αV⁻¹ − S)⁻¹ F`: the dense generalized eigensolver used as an oracle.
pub fn dense_ges(ops: &DenseOperators, alpha: f64, settings: &EigenSettings) -> Result<EigenPair> {
    let h = ops.shifted_h(alpha)?;
    let solver = LossSolver::new(&h, &ops.s, &ops.quadrature, 1e-13)?;
    crate::dense::generalized_power_iteration(&solver, &ops.f, settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn secant_step_hits_the_root_of_a_line() {
        // k(α) = 1.2 − 2α has its root at α = 0.1
        let k = |a: f64| 1.2 - 2.0 * a;
        let a2 = alpha_step(AlphaUpdate::Secant, (0.0, k(0.0)), (0.01, k(0.01))).unwrap();
        assert!((a2 - 0.1).abs() < 1e-14);
    }

    #[test]
    fn literal_step_follows_its_formula() {
        let a2 = alpha_step(AlphaUpdate::Literal, (0.0, 1.2), (0.01, 1.18)).unwrap();
        assert!((a2 - (0.01 + (1.0 - 1.2) / ((1.18 - 1.2) * 0.01))).abs() < 1e-12);
    }

    #[test]
    fn flat_k_is_stagnation() {
        let err = alpha_step(AlphaUpdate::Secant, (0.0, 1.1), (0.01, 1.1 + 1e-15)).unwrap_err();
        assert!(matches!(err, NteError::Stagnation(_)));
    }

    #[test]
    fn option_validation() {
        assert!(EigenOptions::default().validate().is_ok());
        assert!(EigenOptions::default().with_tol(-1.0).validate().is_err());
        let inner = EigenOptions::default().with_tol(1e-8).inner_options();
        assert_eq!(inner.eps, 1e-9);
    }
}
