use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EigenOptions, EigenResult, IterationRecord, Psi};
use crate::dense::{LinearMap, LinearSolve};
use crate::error::{NteError, Result};
use crate::transport::{DenseOperators, HSolver};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(super) fn keff(ops: &DenseOperators, alpha: f64, warm: Option<(&Psi, f64)>, opts: &EigenOptions) -> Result<EigenResult> {
    let h = ops.shifted_h(alpha)?;
    let solver = HSolver::new(&h, &ops.quadrature)?;
    let n = h.dim();
    // ΣFΨ = (Fᵀ1)·Ψ
    let ones = vec![1.0; n];
    let f_ones = ops.f.apply(&ones);
    if f_ones.iter().all(|v| *v == 0.0) {
        return Err(NteError::NoFission);
    }
    let (mut psi, mut k) = match warm {
        Some((p, k)) => (p.to_full(), k),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            ((0..n).map(|_| 0.5 + rng.random::<f64>()).collect(), 1.0)
        }
    };
    let s0 = norm(&psi);
    psi.iter_mut().for_each(|v| *v /= s0);
    let mut f_psi = ops.f.apply(&psi);
    let mut s_psi = ops.s.apply(&psi);
    let mut fsum: f64 = f_psi.iter().sum();
    if fsum == 0.0 {
        return Err(NteError::NoFission);
    }
    let mut history = Vec::new();
    for it in 1..=opts.max_outer {
        let b: Vec<f64> = s_psi.iter().zip(&f_psi).map(|(s, f)| s + f / k).collect();
        let mut next = solver.solve(&b).map_err(|e| e.context("transport solve"))?;
        let next_f = ops.f.apply(&next);
        let next_fsum: f64 = next_f.iter().sum();
        let k_new = k * next_fsum / fsum;
        if !k_new.is_finite() || k_new <= 0.0 {
            return Err(NteError::Singular(format!("k-effective update produced {k_new}")));
        }
        let scale = norm(&next);
        next.iter_mut().for_each(|v| *v /= scale);
        psi = next;
        f_psi = next_f.iter().map(|v| v / scale).collect();
        fsum = next_fsum / scale;
        s_psi = ops.s.apply(&psi);
        let h_psi = h.apply(&psi);
        let r: Vec<f64> = h_psi
            .iter()
            .zip(s_psi.iter().zip(&f_psi))
            .map(|(hv, (sv, fv))| hv - sv - fv / k_new)
            .collect();
        let residual = norm(&r) / norm(&h_psi);
        let dk = (k_new - k).abs();
        k = k_new;
        history.push(IterationRecord {
            eigenvalue: k,
            residual,
            inner_half_sweeps: 0,
            psi_rank: 1,
        });
        if dk <= opts.tol && residual <= opts.tol {
            return Ok(EigenResult {
                eigenvalue: k,
                keff: k,
                psi: Psi::Full(orient(psi)),
                iterations: it,
                history,
                alpha_history: Vec::new(),
                psi_compression: 1.0,
                h_compression: 1.0,
                wall_time_seconds: 0.0,
            });
        }
    }
    let last = history.last().map_or(f64::NAN, |r| r.residual);
    let hist = history.iter().map(|r| r.eigenvalue).collect();
    Err(NteError::not_converged("k-effective fixed point", opts.max_outer, last, hist))
}

fn orient(mut v: Vec<f64>) -> Vec<f64> {
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}
