use super::TtVector;
use crate::dense::{Matrix, Tensor};

struct Sv {
    singular_values: nalgebra::DVector<f64>,
}

pub(crate) struct Truncated {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub vt: Matrix,
}

impl Truncated {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `diag(s) * vt`
    pub fn svt(&self) -> Matrix {
        let mut m = self.vt.clone();
        for (i, s) in self.s.iter().enumerate() {
            m.row_mut(i).scale_mut(*s);
        }
        m
    }
}

/// SVD keeping the smallest rank whose discarded tail has 2-norm at most
/// `abs_tol`, capped at `max_rank`. Numerically zero singular values are
/// always dropped; at least one triple is kept.
pub(crate) fn truncated_svd(m: &Matrix, abs_tol: f64, max_rank: usize) -> Truncated {
    let (rows, cols) = m.shape();
    let (u_full, singular, vt_full) = if rows >= cols {
        svd_tall(m)
    } else {
        let (u, s, vt) = svd_tall(&m.transpose());
        (vt.transpose(), s, u.transpose())
    };
    let svd = Sv { singular_values: singular };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s_sorted: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();

    let smax = s_sorted.first().copied().unwrap_or(0.0);
    let zero = smax * (rows.max(cols) as f64) * f64::EPSILON;
    let mut r = s_sorted.iter().take_while(|&&s| s > zero).count();
    // tail rule
    let mut tail = 0.0;
    let mut keep = r;
    for i in (0..r).rev() {
        let t = tail + s_sorted[i] * s_sorted[i];
        if t.sqrt() > abs_tol {
            break;
        }
        tail = t;
        keep = i;
    }
    r = keep.min(max_rank).max(1);

    let mut u = Matrix::zeros(rows, r);
    let mut vt = Matrix::zeros(r, cols);
    for (c, &src) in order.iter().take(r).enumerate() {
        u.set_column(c, &u_full.column(src));
        vt.set_row(c, &vt_full.row(src));
    }
    Truncated {
        u,
        s: s_sorted[..r].to_vec(),
        vt,
    }
}

/// Thin SVD of a matrix with at least as many rows as columns.
///
/// nalgebra's SVD can return a factorization that does not reconstruct its
/// input for exactly rank-deficient matrices (constant blocks are enough to
/// trigger it), and those are common here. The input is first reduced by QR;
/// the small triangular factor is decomposed and the result checked, with a
/// one-sided Jacobi SVD as fallback.
fn svd_tall(m: &Matrix) -> (Matrix, nalgebra::DVector<f64>, Matrix) {
    let qr = m.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let (ur, s, vt) = svd_small(&r);
    (q * ur, s, vt)
}

fn svd_small(r: &Matrix) -> (Matrix, nalgebra::DVector<f64>, Matrix) {
    let scale = r.amax();
    if scale == 0.0 {
        let k = r.ncols();
        return (Matrix::identity(r.nrows(), k), nalgebra::DVector::zeros(k), Matrix::identity(k, k));
    }
    let svd = r.clone().svd(true, true);
    if let (Some(u), Some(vt)) = (svd.u, svd.v_t) {
        let rec = &u * Matrix::from_diagonal(&svd.singular_values) * &vt;
        let k = u.ncols();
        let ortho = (u.transpose() * &u - Matrix::identity(k, k)).amax();
        let tol = 1e3 * f64::EPSILON * (r.nrows() as f64);
        if (rec - r).amax() <= tol * scale && ortho <= tol {
            return (u, svd.singular_values, vt);
        }
    }
    jacobi_svd(r)
}

/// One-sided (Hestenes) Jacobi SVD of a square matrix.
fn jacobi_svd(a: &Matrix) -> (Matrix, nalgebra::DVector<f64>, Matrix) {
    let n = a.ncols();
    let mut w = a.clone();
    let mut v = Matrix::identity(n, n);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..mat.nrows() {
                        let (x, y) = (mat[(i, p)], mat[(i, q)]);
                        mat[(i, p)] = c * x - s * y;
                        mat[(i, q)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sv = nalgebra::DVector::from_fn(n, |j, _| w.column(j).norm());
    let mut u = Matrix::zeros(a.nrows(), n);
    for j in 0..n {
        if sv[j] > 0.0 {
            u.set_column(j, &(w.column(j) / sv[j]));
        }
    }
    (u, sv, v.transpose())
}

pub(crate) fn matrix_to_rm(m: &Matrix) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// TT-SVD: sequential truncated SVDs of the unfoldings with per-step
/// threshold `eps * ‖X‖_F / sqrt(d - 1)`, so `‖X − TT‖_F ≤ eps ‖X‖_F`.
pub fn tt_svd(x: &Tensor, eps: f64) -> TtVector {
    tt_svd_with_max_rank(x, eps, usize::MAX)
}

pub fn tt_svd_with_max_rank(x: &Tensor, eps: f64, max_rank: usize) -> TtVector {
    let shape = x.shape().to_vec();
    let d = shape.len();
    if d == 1 {
        let core = Tensor::new(vec![1, shape[0], 1], x.data().to_vec()).expect("shape");
        return TtVector::from_cores_unchecked(vec![core]);
    }
    let delta = eps * x.frobenius_norm() / ((d - 1) as f64).sqrt();
    let mut cores = Vec::with_capacity(d);
    let mut rest: usize = shape.iter().product();
    let mut r_prev = 1usize;
    let mut c = Matrix::from_row_slice(1, rest, x.data());
    for &n in shape.iter().take(d - 1) {
        rest /= n;
        let rm = matrix_to_rm(&c);
        let unf = Matrix::from_row_slice(r_prev * n, rest, &rm);
        let t = truncated_svd(&unf, delta, max_rank);
        let r = t.rank();
        cores.push(Tensor::new(vec![r_prev, n, r], matrix_to_rm(&t.u)).expect("shape"));
        c = t.svt();
        r_prev = r;
    }
    cores.push(Tensor::new(vec![r_prev, shape[d - 1], 1], matrix_to_rm(&c)).expect("shape"));
    TtVector::from_cores_unchecked(cores)
}
