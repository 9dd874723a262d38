//! Interface ("frame") contractions shared by the alternating solvers.
//!
//! Operator cores are `(P, n, m, Q)` with `n` the row index; vector cores are
//! `(r, n, r')`. Operator environments are `(r_x, P, r_y)`, vector
//! environments `(r_x, r_c)`.

use crate::dense::{tensordot, Tensor};

pub(crate) fn unit_env3() -> Tensor {
    Tensor::new(vec![1, 1, 1], vec![1.0]).expect("shape")
}

pub(crate) fn unit_env2() -> Tensor {
    Tensor::new(vec![1, 1], vec![1.0]).expect("shape")
}

/// `Σ X[a,i,a1] Φ[a,p,b] A[p,i,j,q] Y[b,j,b1]` -> `(a1, q, b1)`
pub(crate) fn left_op(phi: &Tensor, x: &Tensor, a: &Tensor, y: &Tensor) -> Tensor {
    let t1 = tensordot(phi, y, &[2], &[0]).expect("env ranks");
    let t2 = tensordot(&t1, a, &[1, 2], &[0, 2]).expect("env ranks");
    let t3 = tensordot(x, &t2, &[0, 1], &[0, 2]).expect("env ranks");
    t3.permute(&[0, 2, 1]).expect("3-way")
}

/// `Σ X[a,i,a1] A[p,i,j,q] Y[b,j,b1] Φ[a1,q,b1]` -> `(a, p, b)`
pub(crate) fn right_op(phi: &Tensor, x: &Tensor, a: &Tensor, y: &Tensor) -> Tensor {
    let t1 = tensordot(y, phi, &[2], &[2]).expect("env ranks");
    let t2 = tensordot(a, &t1, &[2, 3], &[1, 3]).expect("env ranks");
    tensordot(x, &t2, &[1, 2], &[1, 3]).expect("env ranks")
}

/// `Σ X[a,i,a1] ψ[a,s] C[s,i,t]` -> `(a1, t)`
pub(crate) fn left_vec(psi: &Tensor, x: &Tensor, c: &Tensor) -> Tensor {
    let t1 = tensordot(psi, c, &[1], &[0]).expect("env ranks");
    tensordot(x, &t1, &[0, 1], &[0, 1]).expect("env ranks")
}

/// `Σ X[a,i,a1] C[s,i,t] ψ[a1,t]` -> `(a, s)`
pub(crate) fn right_vec(psi: &Tensor, x: &Tensor, c: &Tensor) -> Tensor {
    let t1 = tensordot(c, psi, &[2], &[1]).expect("env ranks");
    tensordot(x, &t1, &[1, 2], &[1, 2]).expect("env ranks")
}

/// Local operator applied to a core: `Σ Φ[a,p,a'] A[p,i,j,q] Φr[b,q,b'] u[a',j,b']`.
pub(crate) fn local_apply(phi: &Tensor, a: &Tensor, phir: &Tensor, u: &Tensor) -> Tensor {
    let t1 = tensordot(phi, u, &[2], &[0]).expect("env ranks");
    let t2 = tensordot(&t1, a, &[1, 2], &[0, 2]).expect("env ranks");
    tensordot(&t2, phir, &[1, 3], &[2, 1]).expect("env ranks")
}

/// Local right-hand side `Σ ψ[a,s] C[s,i,t] ψr[b,t]`.
pub(crate) fn local_rhs(psi: &Tensor, c: &Tensor, psir: &Tensor) -> Tensor {
    let t1 = tensordot(psi, c, &[1], &[0]).expect("env ranks");
    tensordot(&t1, psir, &[2], &[1]).expect("env ranks")
}

/// Dense local matrix, rows `(a,i,b)` and columns `(a',j,b')`.
pub(crate) fn local_matrix(phi: &Tensor, a: &Tensor, phir: &Tensor) -> crate::dense::Matrix {
    let t1 = tensordot(phi, a, &[1], &[0]).expect("env ranks"); // (a,a',i,j,q)
    let t2 = tensordot(&t1, phir, &[4], &[1]).expect("env ranks"); // (a,a',i,j,b,b')
    let t3 = t2.permute(&[0, 2, 4, 1, 3, 5]).expect("6-way");
    let s = t3.shape();
    let dim = s[0] * s[1] * s[2];
    crate::dense::Matrix::from_row_slice(dim, dim, t3.data())
}

/// Diagonal of the local matrix.
pub(crate) fn local_diagonal(phi: &Tensor, a: &Tensor, phir: &Tensor) -> Vec<f64> {
    let (ra, p) = (phi.shape()[0], phi.shape()[1]);
    let (n, q) = (a.shape()[1], a.shape()[3]);
    let rb = phir.shape()[0];
    let mut out = vec![0.0; ra * n * rb];
    for x in 0..ra {
        for i in 0..n {
            for y in 0..rb {
                let mut s = 0.0;
                for pp in 0..p {
                    let l = phi.get(&[x, pp, x]);
                    if l == 0.0 {
                        continue;
                    }
                    for qq in 0..q {
                        s += l * a.get(&[pp, i, i, qq]) * phir.get(&[y, qq, y]);
                    }
                }
                out[(x * n + i) * rb + y] = s;
            }
        }
    }
    out
}
