use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::envs::{left_op, right_op, unit_env3};
use super::SolverOptions;
use crate::dense::{tensordot, Tensor};
use crate::error::{shape_err, Result};
use crate::tt::{matrix_to_rm, truncated_svd, TtMatrix, TtVector};

/// Approximates `y ≈ A b` by minimizing `‖A b − y‖²` with two-site sweeps,
/// adapting ranks through truncated SVDs. Falls back to the exact product
/// followed by rounding when the sweeps do not settle within
/// `opts.max_sweeps`.
pub fn tt_matvec_fit(a: &TtMatrix, b: &TtVector, opts: &SolverOptions) -> Result<TtVector> {
    opts.validate()?;
    if a.col_sizes() != b.mode_sizes() {
        return shape_err("operator columns do not match the vector");
    }
    let d = a.ndim();
    if d == 1 {
        return a.matvec(b);
    }
    let fallback = || -> Result<TtVector> { Ok(a.matvec(b)?.round_with(opts.eps, opts.max_rank)) };

    let rows = a.row_sizes().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut y = TtVector::random(&rows, 2, &mut rng);
    y.right_orthogonalize();
    let fwd = (a.cores(), b.cores().to_vec());
    let rev_a = a.reverse();
    let rev_b = b.reverse();
    let bwd = (rev_a.cores(), rev_b.cores().to_vec());

    let mut prev: Option<TtVector> = None;
    let mut reversed = false;
    for half in 0..2 * opts.max_sweeps {
        let (ac, bc) = if reversed { &bwd } else { &fwd };
        let mut yc = y.into_cores();
        two_site_sweep(&mut yc, ac, bc, opts)?;
        y = TtVector::from_cores(yc)?;
        if half % 2 == 1 {
            let cur = y.reverse();
            if let Some(p) = &prev {
                let n = cur.norm();
                let change = cur.sub(p)?.norm();
                if change <= opts.eps * n.max(f64::MIN_POSITIVE) {
                    return Ok(cur);
                }
            }
            prev = Some(cur);
        }
        y = y.reverse();
        reversed = !reversed;
    }
    fallback()
}

fn two_site_sweep(yc: &mut [Tensor], ac: &[Tensor], bc: &[Tensor], opts: &SolverOptions) -> Result<()> {
    let d = yc.len();
    let mut env_r = vec![unit_env3(); d + 1];
    for k in (2..d).rev() {
        env_r[k] = right_op(&env_r[k + 1], &yc[k], &ac[k], &bc[k]);
    }
    let total: f64 = ((d - 1) as f64).sqrt();
    let mut env_l = unit_env3();
    for k in 0..d - 1 {
        // (α, i, i2, β) block of A b projected on the current frames
        let t1 = tensordot(&env_l, &bc[k], &[2], &[0])?; // (α,p,j,c1)
        let t2 = tensordot(&t1, &ac[k], &[1, 2], &[0, 2])?; // (α,c1,i,q)
        let t3 = tensordot(&t2, &bc[k + 1], &[1], &[0])?; // (α,i,q,j2,c2)
        let t4 = tensordot(&t3, &ac[k + 1], &[2, 3], &[0, 2])?; // (α,i,c2,i2,s)
        let t5 = tensordot(&t4, &env_r[k + 2], &[2, 4], &[2, 1])?; // (α,i,i2,β)
        let s = t5.shape().to_vec();
        let m = t5.unfold(2);
        let norm = m.norm();
        let t = truncated_svd(&m, opts.eps * norm / total, opts.max_rank);
        let r = t.rank();
        yc[k] = Tensor::new(vec![s[0], s[1], r], matrix_to_rm(&t.u))?;
        yc[k + 1] = Tensor::new(vec![r, s[2], s[3]], matrix_to_rm(&t.svt()))?;
        env_l = left_op(&env_l, &yc[k], &ac[k], &bc[k]);
    }
    Ok(())
}
