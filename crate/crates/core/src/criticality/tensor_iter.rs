use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EigenOptions, EigenResult, IterationRecord, MatvecMode, Psi};
use crate::error::{NteError, Result};
use crate::solver::{tt_matvec_fit, SolverOptions, TtLinearSystem};
use crate::transport::TensorOperators;
use crate::tt::{TtMatrix, TtVector};

struct Products<'a> {
    mode: MatvecMode,
    eps: f64,
    opts: &'a SolverOptions,
}

impl Products<'_> {
    fn apply(&self, a: &TtMatrix, x: &TtVector) -> Result<TtVector> {
        match self.mode {
            MatvecMode::Exact => Ok(a.matvec(x)?.round_with(self.eps, self.opts.max_rank)),
            MatvecMode::Fit => tt_matvec_fit(a, x, &self.opts.clone().with_eps(self.eps)),
        }
    }
}

pub(super) fn keff(
    ops: &TensorOperators,
    alpha: f64,
    warm: Option<(&Psi, f64)>,
    opts: &EigenOptions,
) -> Result<EigenResult> {
    let inner = opts.inner_options();
    let h = ops.shifted_h(alpha)?;
    let system = TtLinearSystem::new(&h)?;
    let modes = ops.mode_sizes();
    // ΣFΨ = (Fᵀ1)·Ψ
    let f_ones = ops.f.transpose().matvec(&TtVector::ones(&modes))?.round(1e-14);
    if f_ones.norm() == 0.0 {
        return Err(NteError::NoFission);
    }
    let mv = Products {
        mode: opts.matvec,
        eps: 0.1 * inner.eps,
        opts: &inner,
    };
    let (mut psi, mut k) = match warm {
        Some((Psi::Tensor(t), k)) => (t.clone(), k),
        Some((Psi::Full(v), k)) => (ops.compress(v, 1e-12)?, k),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            (TtVector::random_positive(&modes, 2, &mut rng), 1.0)
        }
    };
    psi = psi.clone().scale(1.0 / psi.norm());
    let mut fsum = f_ones.dot(&psi)?;
    if fsum == 0.0 {
        return Err(NteError::NoFission);
    }
    let mut history = Vec::new();
    for it in 1..=opts.max_outer {
        let b = mv
            .apply(&ops.s, &psi)?
            .add(&mv.apply(&ops.f, &psi)?.scale(1.0 / k))?
            .round_with(mv.eps, inner.max_rank);
        let (next, sweeps) = match system.solve(&b, Some(&psi), &inner) {
            Ok(out) => (out.x, out.half_sweeps),
            // a solve that stalls just above its target is still far more
            // accurate than the outer tolerance needs
            Err(NteError::NotConverged(nc)) if nc.residual <= 10.0 * inner.eps && nc.best.is_some() => {
                (nc.best.expect("checked above"), nc.iterations)
            }
            Err(e) => return Err(e.context("transport solve")),
        };
        let next_fsum = f_ones.dot(&next)?;
        let k_new = k * next_fsum / fsum;
        if !k_new.is_finite() || k_new <= 0.0 {
            return Err(NteError::Singular(format!("k-effective update produced {k_new}")));
        }
        let scale = next.norm();
        psi = next.scale(1.0 / scale);
        fsum = next_fsum / scale;
        let residual = fixed_point_residual(ops, &h, &psi, k_new, &mv)?;
        let dk = (k_new - k).abs();
        k = k_new;
        history.push(IterationRecord {
            eigenvalue: k,
            residual,
            inner_half_sweeps: sweeps,
            psi_rank: psi.max_rank(),
        });
        if dk <= opts.tol && residual <= opts.tol {
            if psi.sum() < 0.0 {
                psi = psi.scale(-1.0);
            }
            return Ok(EigenResult {
                eigenvalue: k,
                keff: k,
                psi_compression: psi.compression_ratio(),
                psi: Psi::Tensor(psi),
                iterations: it,
                history,
                alpha_history: Vec::new(),
                h_compression: h.compression_ratio(),
                wall_time_seconds: 0.0,
            });
        }
    }
    let last = history.last().map_or(f64::NAN, |r| r.residual);
    let hist = history.iter().map(|r| r.eigenvalue).collect();
    Err(NteError::not_converged("k-effective fixed point (TT)", opts.max_outer, last, hist))
}

/// `‖HΨ − (S + F/k)Ψ‖ / ‖HΨ‖` with products rounded well below the outer
/// tolerance.
fn fixed_point_residual(ops: &TensorOperators, h: &TtMatrix, psi: &TtVector, k: f64, mv: &Products) -> Result<f64> {
    let exact = Products {
        mode: MatvecMode::Exact,
        eps: 1e-3 * mv.eps,
        opts: mv.opts,
    };
    let hp = exact.apply(h, psi)?;
    let sp = exact.apply(&ops.s, psi)?;
    let fp = exact.apply(&ops.f, psi)?;
    let r = hp.sub(&sp)?.sub(&fp.scale(1.0 / k))?;
    Ok(r.norm() / hp.norm())
}
