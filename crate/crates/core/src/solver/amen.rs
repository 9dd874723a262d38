use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::envs::{
    left_op, left_vec, local_apply, local_diagonal, local_matrix, local_rhs, right_op, right_vec, unit_env2,
    unit_env3,
};
use super::{LocalSolver, SolverOptions};
use crate::dense::{Matrix, Tensor};
use crate::error::{shape_err, NotConverged, NteError, Result};
use crate::tt::truncated_svd;
use crate::tt::{TtMatrix, TtVector};

/// Output of [`tt_linsolve`].
#[derive(Debug, Clone)]
pub struct LinsolveOutput {
    pub x: TtVector,
    /// True relative residual `‖Ax − b‖ / ‖b‖` after every half-sweep.
    pub residual_history: Vec<f64>,
    /// Objective `J(x) = ‖Ax − b‖²` after every half-sweep.
    pub objective_history: Vec<f64>,
    pub half_sweeps: usize,
    pub residual: f64,
}

/// `A x = b` in TT format, reusable for many right-hand sides.
///
/// The alternating steps work on the normal equations `AᵀA x = Aᵀb`: each
/// local problem is symmetric positive definite and its solution minimizes
/// `J(x) = ‖Ax − b‖²` exactly over the active core.
pub struct TtLinearSystem {
    a: TtMatrix,
    at: TtMatrix,
    normal: [Vec<Tensor>; 2],
}

const NORMAL_ROUND: f64 = 1e-14;

impl TtLinearSystem {
    pub fn new(a: &TtMatrix) -> Result<Self> {
        if a.row_sizes() != a.col_sizes() {
            return shape_err("tt_linsolve needs matching row and column mode sizes");
        }
        let at = a.transpose();
        let n = at.matmul(a)?.round(NORMAL_ROUND);
        let rev = n.reverse();
        Ok(TtLinearSystem {
            a: a.clone(),
            at,
            normal: [n.cores(), rev.cores()],
        })
    }

    pub fn operator(&self) -> &TtMatrix {
        &self.a
    }

    /// Relative residual of a candidate solution, computed with the exact
    /// TT matvec and independent of the sweep internals.
    pub fn relative_residual(&self, x: &TtVector, b: &TtVector) -> Result<f64> {
        relative_residual(&self.a, x, b)
    }

    /// Alternating sweeps followed, if they stall above `opts.eps`, by
    /// defect-correction passes on `A δ = b − A x`. The normal equations
    /// limit a single pass to roughly `cond(A) · 1e-14`; each correction
    /// pass gains that factor again.
    pub fn solve(&self, b: &TtVector, x0: Option<&TtVector>, opts: &SolverOptions) -> Result<LinsolveOutput> {
        opts.validate()?;
        if b.mode_sizes() != self.a.row_sizes() {
            return shape_err("right-hand side does not match the operator");
        }
        let modes = b.mode_sizes();
        if let Some(x0) = x0 {
            if x0.mode_sizes() != modes {
                return shape_err("initial guess does not match the operator");
            }
        }
        let bnorm = b.norm();
        if bnorm == 0.0 {
            return Ok(LinsolveOutput {
                x: TtVector::zeros(&modes),
                residual_history: vec![0.0],
                objective_history: vec![0.0],
                half_sweeps: 0,
                residual: 0.0,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let budget = 2 * opts.max_sweeps;
        let mut pass = self.sweeps(b, x0, opts, budget, &mut rng)?;
        let mut res_hist = pass.history.clone();
        let mut half = pass.half_sweeps;
        let mut x = pass.x;
        let mut res = pass.residual;
        let mut refinements = 0;
        while res > opts.eps && half < budget && refinements < MAX_REFINEMENTS && pass.stalled {
            refinements += 1;
            let r = b.sub(&self.a.matvec(&x)?)?.round(1e-12);
            let rnorm = r.norm();
            if rnorm == 0.0 {
                break;
            }
            let inner = SolverOptions {
                eps: (opts.eps * bnorm / rnorm).min(0.5),
                ..opts.clone()
            };
            pass = self.sweeps(&r, None, &inner, budget - half, &mut rng)?;
            half += pass.half_sweeps;
            res_hist.extend(pass.history.iter().map(|h| h * rnorm / bnorm));
            let cand = x.add(&pass.x)?.round_with(0.0, opts.max_rank);
            let cand_res = self.relative_residual(&cand, b)?;
            if cand_res >= res {
                break;
            }
            x = cand;
            res = cand_res;
            if let Some(last) = res_hist.last_mut() {
                *last = res;
            }
        }
        let obj_hist = res_hist.iter().map(|r| (r * bnorm).powi(2)).collect();
        if res <= opts.eps {
            return Ok(LinsolveOutput {
                x,
                residual_history: res_hist,
                objective_history: obj_hist,
                half_sweeps: half,
                residual: res,
            });
        }
        Err(NteError::NotConverged(Box::new(NotConverged {
            what: "tt_linsolve".into(),
            iterations: half,
            residual: res,
            history: obj_hist,
            best: Some(x),
        })))
    }

    fn sweeps(
        &self,
        b: &TtVector,
        x0: Option<&TtVector>,
        opts: &SolverOptions,
        budget: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Pass> {
        let modes = b.mode_sizes();
        let d = modes.len();
        let c = self.at.matvec(b)?.round(NORMAL_ROUND);
        let c_cores = [c.cores().to_vec(), c.reverse().into_cores()];

        let mut x = match x0 {
            Some(x0) => x0.round_with(0.0, opts.max_rank),
            None => TtVector::random(&modes, 2.min(opts.max_rank), rng),
        };
        x.right_orthogonalize();
        let kick = opts.kickrank;
        let mut z = if kick > 0 {
            let mut z = TtVector::random(&modes, kick, rng);
            z.right_orthogonalize();
            Some(z)
        } else {
            None
        };

        let mut trunc = (0.1 * opts.eps).max(TRUNC_FLOOR);
        let mut hist = Vec::new();
        let mut best: Option<(f64, TtVector)> = None;
        let mut reversed = false;
        let mut last_full = f64::INFINITY;
        let mut stale = 0;
        let mut stalled = false;
        let mut half = 0;
        while half < budget {
            half += 1;
            let dir = usize::from(reversed);
            let mut xc = x.into_cores();
            let mut zc = z.map(|z| z.into_cores());
            half_sweep(&mut xc, zc.as_mut(), &self.normal[dir], &c_cores[dir], opts, trunc)?;
            x = TtVector::from_cores(xc)?;
            z = zc.map(TtVector::from_cores).transpose()?;

            let forward = if reversed { x.reverse() } else { x.clone() };
            let res = self.relative_residual(&forward, b)?;
            hist.push(res);
            if best.as_ref().is_none_or(|(r, _)| res < *r) {
                best = Some((res, forward));
            }
            if res <= opts.eps || d == 1 {
                break;
            }
            if half % 2 == 0 {
                if res > 0.5 * last_full {
                    if trunc <= TRUNC_FLOOR {
                        stale += 1;
                    }
                    trunc = (trunc * 0.1).max(TRUNC_FLOOR);
                } else {
                    stale = 0;
                }
                last_full = last_full.min(res);
                if stale >= 2 {
                    stalled = true;
                    break;
                }
            }
            // Flip the train so the next half-sweep runs right to left.
            x = x.reverse();
            z = z.map(|z| z.reverse());
            reversed = !reversed;
        }
        let (res, bx) = best.expect("at least one half-sweep");
        let bx = if kick > 0 { bx.round_with(0.0, opts.max_rank) } else { bx };
        Ok(Pass {
            x: bx,
            residual: res,
            history: hist,
            half_sweeps: half,
            stalled: stalled || half >= budget,
        })
    }
}

struct Pass {
    x: TtVector,
    residual: f64,
    history: Vec<f64>,
    half_sweeps: usize,
    stalled: bool,
}

const MAX_REFINEMENTS: usize = 4;
const TRUNC_FLOOR: f64 = 1e-15;

/// Solves `A x = b` by alternating minimization with residual enrichment.
pub fn tt_linsolve(a: &TtMatrix, b: &TtVector, x0: Option<&TtVector>, opts: &SolverOptions) -> Result<LinsolveOutput> {
    TtLinearSystem::new(a)?.solve(b, x0, opts)
}

pub(crate) fn relative_residual(a: &TtMatrix, x: &TtVector, b: &TtVector) -> Result<f64> {
    let ax = a.matvec(x)?;
    let r = ax.sub(b)?;
    let bn = b.norm();
    Ok(if bn == 0.0 { r.norm() } else { r.norm() / bn })
}

/// One left-to-right pass. On entry cores `1..d` of `x` (and `z`) are
/// right-orthonormal; on exit cores `0..d-1` are left-orthonormal.
fn half_sweep(
    xc: &mut [Tensor],
    mut zc: Option<&mut Vec<Tensor>>,
    nc: &[Tensor],
    cc: &[Tensor],
    opts: &SolverOptions,
    trunc: f64,
) -> Result<()> {
    let d = xc.len();
    let mut phi_r = vec![unit_env3(); d + 1];
    let mut psi_r = vec![unit_env2(); d + 1];
    for k in (1..d).rev() {
        phi_r[k] = right_op(&phi_r[k + 1], &xc[k], &nc[k], &xc[k]);
        psi_r[k] = right_vec(&psi_r[k + 1], &xc[k], &cc[k]);
    }
    let mut phiz_r = vec![unit_env3(); d + 1];
    let mut psiz_r = vec![unit_env2(); d + 1];
    if let Some(z) = zc.as_deref() {
        for k in (1..d).rev() {
            phiz_r[k] = right_op(&phiz_r[k + 1], &z[k], &nc[k], &xc[k]);
            psiz_r[k] = right_vec(&psiz_r[k + 1], &z[k], &cc[k]);
        }
    }
    let (mut phi_l, mut psi_l) = (unit_env3(), unit_env2());
    let (mut phiz_l, mut psiz_l) = (unit_env3(), unit_env2());

    for k in 0..d {
        let f = local_rhs(&psi_l, &cc[k], &psi_r[k + 1]);
        let u = local_solve(&phi_l, &nc[k], &phi_r[k + 1], &f, &xc[k], opts)?;
        if k == d - 1 {
            xc[k] = u;
            break;
        }
        let (r0, n) = (u.shape()[0], u.shape()[1]);
        let umat = u.unfold(2);

        match zc.as_deref_mut() {
            None => {
                let qr = umat.qr();
                let (q, r) = (qr.q(), qr.r());
                xc[k] = Tensor::new(vec![r0, n, q.ncols()], rm(&q))?;
                xc[k + 1] = left_mul(&r, &xc[k + 1]);
            }
            Some(z) => {
                let crz = local_rhs(&psi_l, &cc[k], &psiz_r[k + 1])
                    .sub_assign(&local_apply(&phi_l, &nc[k], &phiz_r[k + 1], &u));
                let zz = local_rhs(&psiz_l, &cc[k], &psiz_r[k + 1])
                    .sub_assign(&local_apply(&phiz_l, &nc[k], &phiz_r[k + 1], &u));

                let t = truncated_svd(&umat, trunc * umat.norm(), opts.max_rank);
                let rank = t.rank();
                let extra = opts.kickrank.min(opts.max_rank.saturating_sub(rank));
                let crz_m = crz.unfold(2);
                let extra = extra.min(crz_m.ncols());
                let mut w = Matrix::zeros(r0 * n, rank + extra);
                w.columns_mut(0, rank).copy_from(&t.u);
                if extra > 0 {
                    w.columns_mut(rank, extra).copy_from(&crz_m.columns(0, extra));
                }
                let qr = w.qr();
                let (q, r) = (qr.q(), qr.r());
                let next = left_mul(&t.svt(), &xc[k + 1]);
                let (nn, r2) = (next.shape()[1], next.shape()[2]);
                let mut padded = Tensor::zeros(&[rank + extra, nn, r2]);
                padded.data_mut()[..next.len()].copy_from_slice(next.data());
                xc[k] = Tensor::new(vec![r0, n, q.ncols()], rm(&q))?;
                xc[k + 1] = left_mul(&r, &padded);

                let rz0 = zz.shape()[0];
                let tz = truncated_svd(&zz.unfold(2), 0.0, opts.kickrank);
                z[k] = Tensor::new(vec![rz0, n, tz.rank()], rm(&tz.u))?;
                z[k + 1] = left_mul(&tz.svt(), &z[k + 1]);

                phiz_l = left_op(&phiz_l, &z[k], &nc[k], &xc[k]);
                psiz_l = left_vec(&psiz_l, &z[k], &cc[k]);
            }
        }
        phi_l = left_op(&phi_l, &xc[k], &nc[k], &xc[k]);
        psi_l = left_vec(&psi_l, &xc[k], &cc[k]);
    }
    Ok(())
}

trait SubAssign {
    fn sub_assign(self, other: &Tensor) -> Tensor;
}

impl SubAssign for Tensor {
    fn sub_assign(mut self, other: &Tensor) -> Tensor {
        for (a, b) in self.data_mut().iter_mut().zip(other.data()) {
            *a -= b;
        }
        self
    }
}

fn rm(m: &Matrix) -> Vec<f64> {
    crate::tt::matrix_to_rm(m)
}

fn left_mul(m: &Matrix, core: &Tensor) -> Tensor {
    crate::tt::left_multiply_core(m, core)
}

fn local_solve(
    phi: &Tensor,
    a: &Tensor,
    phir: &Tensor,
    f: &Tensor,
    guess: &Tensor,
    opts: &SolverOptions,
) -> Result<Tensor> {
    let shape = f.shape().to_vec();
    let dim = f.len();
    let dense = match opts.local_solver {
        LocalSolver::Dense => true,
        LocalSolver::Iterative => false,
        LocalSolver::Auto => dim <= opts.dense_limit,
    };
    let sol = if dense {
        let m = local_matrix(phi, a, phir);
        dense_spd_solve(m, f.data())?
    } else {
        let x0 = if guess.shape() == f.shape() { guess.data().to_vec() } else { vec![0.0; dim] };
        let diag = local_diagonal(phi, a, phir);
        let apply = |v: &[f64]| -> Vec<f64> {
            let t = Tensor::new(shape.clone(), v.to_vec()).expect("shape");
            local_apply(phi, a, phir, &t).into_data()
        };
        pcg(&apply, &diag, f.data(), x0, (opts.eps * 1e-2).max(1e-14), 20 * dim.max(50))
    };
    Tensor::new(shape, sol)
}

/// Cholesky, then Cholesky with a `1e-12 ‖M‖` shift, then LU.
fn dense_spd_solve(m: Matrix, f: &[f64]) -> Result<Vec<f64>> {
    let rhs = nalgebra::DVector::from_column_slice(f);
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.solve(&rhs).as_slice().to_vec());
    }
    let mu = 1e-12 * m.norm();
    let shifted = &m + Matrix::identity(m.nrows(), m.ncols()) * mu;
    if let Some(ch) = shifted.cholesky() {
        return Ok(ch.solve(&rhs).as_slice().to_vec());
    }
    m.lu()
        .solve(&rhs)
        .map(|x| x.as_slice().to_vec())
        .ok_or_else(|| NteError::Singular("local system is singular even after regularization".into()))
}

/// Jacobi-preconditioned conjugate gradients.
fn pcg(apply: &dyn Fn(&[f64]) -> Vec<f64>, diag: &[f64], b: &[f64], mut x: Vec<f64>, tol: f64, max_iter: usize) -> Vec<f64> {
    use crate::dense::{dot, norm2};
    let bn = norm2(b);
    if bn == 0.0 {
        return vec![0.0; b.len()];
    }
    let inv: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut zv: Vec<f64> = r.iter().zip(&inv).map(|(ri, di)| ri * di).collect();
    let mut p = zv.clone();
    let mut rz = dot(&r, &zv);
    for _ in 0..max_iter {
        if norm2(&r) <= tol * bn {
            break;
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        zv = r.iter().zip(&inv).map(|(ri, di)| ri * di).collect();
        let rz_new = dot(&r, &zv);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&zv).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    x
}
