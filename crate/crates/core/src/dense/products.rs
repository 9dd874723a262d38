use nalgebra::DMatrixView;

use super::{Matrix, Tensor};
use crate::error::{shape_err, Result};

/// Kronecker product: `(A ⊗ B)[iA*mB + iB, jA*nB + jB] = A[iA, jA] * B[iB, jB]`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Left-to-right Kronecker product of a list of matrices (first factor outermost).
pub fn kron_all(factors: &[Matrix]) -> Matrix {
    let mut it = factors.iter();
    let Some(first) = it.next() else {
        return Matrix::identity(1, 1);
    };
    it.fold(first.clone(), |acc, f| acc.kronecker(f))
}

/// Tensor (outer) product: the result has the concatenated shape of `a` and `b`.
pub fn tensor_product(a: &Tensor, b: &Tensor) -> Tensor {
    let mut shape = a.shape().to_vec();
    shape.extend_from_slice(b.shape());
    let mut data = Vec::with_capacity(a.len() * b.len());
    for &x in a.data() {
        data.extend(b.data().iter().map(|&y| x * y));
    }
    Tensor::new(shape, data).expect("outer product shape is consistent")
}

/// Row-major matrix product of raw buffers: `C[m x n] = A[m x k] * B[k x n]`.
pub(crate) fn matmul_rm(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    if m == 0 || n == 0 {
        return Vec::new();
    }
    if k == 0 {
        return vec![0.0; m * n];
    }
    // A row-major m x k is the column-major k x m matrix A^T, so C^T = B^T A^T.
    let at = DMatrixView::from_slice(a, k, m);
    let bt = DMatrixView::from_slice(b, n, k);
    let ct = bt * at;
    ct.as_slice().to_vec()
}

/// Contracts `axes_a` of `a` against `axes_b` of `b` (pairwise). The result's
/// modes are the free modes of `a` followed by the free modes of `b`.
pub fn tensordot(a: &Tensor, b: &Tensor, axes_a: &[usize], axes_b: &[usize]) -> Result<Tensor> {
    if axes_a.len() != axes_b.len() {
        return shape_err("tensordot axis lists differ in length");
    }
    for (&i, &j) in axes_a.iter().zip(axes_b) {
        if i >= a.ndim() || j >= b.ndim() || a.shape()[i] != b.shape()[j] {
            return shape_err(format!(
                "tensordot: cannot contract axis {i} of {:?} with axis {j} of {:?}",
                a.shape(),
                b.shape()
            ));
        }
    }
    let free_a: Vec<usize> = (0..a.ndim()).filter(|k| !axes_a.contains(k)).collect();
    let free_b: Vec<usize> = (0..b.ndim()).filter(|k| !axes_b.contains(k)).collect();
    let perm_a: Vec<usize> = free_a.iter().chain(axes_a).copied().collect();
    let perm_b: Vec<usize> = axes_b.iter().chain(&free_b).copied().collect();
    let ap = a.permute(&perm_a)?;
    let bp = b.permute(&perm_b)?;
    let m: usize = free_a.iter().map(|&k| a.shape()[k]).product();
    let n: usize = free_b.iter().map(|&k| b.shape()[k]).product();
    let k: usize = axes_a.iter().map(|&k| a.shape()[k]).product();
    let data = matmul_rm(ap.data(), bp.data(), m, k, n);
    let mut shape: Vec<usize> = free_a.iter().map(|&k| a.shape()[k]).collect();
    shape.extend(free_b.iter().map(|&k| b.shape()[k]));
    if shape.is_empty() {
        shape.push(1);
    }
    Tensor::new(shape, data)
}

/// n-mode product `X ×_n U`: mode `mode` (0-based) of extent `n_n` is
/// replaced by `U.nrows()`, with `Y[.., p, ..] = Σ_q U[p, q] X[.., q, ..]`.
pub fn mode_product(x: &Tensor, mode: usize, u: &Matrix) -> Result<Tensor> {
    if mode >= x.ndim() {
        return shape_err(format!("mode {mode} out of range for {:?}", x.shape()));
    }
    let n = x.shape()[mode];
    if u.ncols() != n {
        return shape_err(format!(
            "mode_product: U has {} columns, mode {mode} has extent {n}",
            u.ncols()
        ));
    }
    let outer: usize = x.shape()[..mode].iter().product();
    let inner: usize = x.shape()[mode + 1..].iter().product();
    let p = u.nrows();
    let mut out = vec![0.0; outer * p * inner];
    let xd = x.data();
    for o in 0..outer {
        let src = &xd[o * n * inner..(o + 1) * n * inner];
        let dst = &mut out[o * p * inner..(o + 1) * p * inner];
        for q in 0..n {
            let row = &src[q * inner..(q + 1) * inner];
            for r in 0..p {
                let c = u[(r, q)];
                if c != 0.0 {
                    let d = &mut dst[r * inner..(r + 1) * inner];
                    for (dv, sv) in d.iter_mut().zip(row) {
                        *dv += c * sv;
                    }
                }
            }
        }
    }
    let mut shape = x.shape().to_vec();
    shape[mode] = p;
    Tensor::new(shape, out)
}

/// Contracts mode `mode` with a weight vector, removing that mode. A 1-way
/// input yields a 1-element tensor of shape `[1]`.
pub fn contract_with_vector(x: &Tensor, mode: usize, v: &[f64]) -> Result<Tensor> {
    if mode >= x.ndim() {
        return shape_err(format!("mode {mode} out of range for {:?}", x.shape()));
    }
    if v.len() != x.shape()[mode] {
        return shape_err(format!(
            "contract_with_vector: vector length {} vs extent {}",
            v.len(),
            x.shape()[mode]
        ));
    }
    let row = Matrix::from_row_slice(1, v.len(), v);
    let y = mode_product(x, mode, &row)?;
    let mut shape = x.shape().to_vec();
    shape.remove(mode);
    if shape.is_empty() {
        shape.push(1);
    }
    y.reshape(&shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
        Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn kron_identities() {
        let i6 = kron(&Matrix::identity(2, 2), &Matrix::identity(3, 3));
        assert_eq!(i6, Matrix::identity(6, 6));
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(4, 5);
        assert_eq!(kron(&a, &b).shape(), (8, 15));
    }

    #[test]
    fn kron_entry_rule_by_brute_force() {
        let a = Matrix::from_row_slice(2, 2, &[1., 2., 3., 4.]);
        let b = Matrix::from_row_slice(2, 2, &[0., 1., 1., 0.]);
        let k = kron(&a, &b);
        let expected = Matrix::from_row_slice(
            4,
            4,
            &[
                0., 1., 0., 2., //
                1., 0., 2., 0., //
                0., 3., 0., 4., //
                3., 0., 4., 0.,
            ],
        );
        assert_eq!(k, expected);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(k[(i, j)], a[(i / 2, j / 2)] * b[(i % 2, j % 2)]);
            }
        }
    }

    #[test]
    fn kron_associative_and_mixed_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = rand_matrix(&mut rng, 2, 3);
        let b = rand_matrix(&mut rng, 3, 2);
        let c = rand_matrix(&mut rng, 2, 2);
        // Small integers make every product exact, so equality is bitwise.
        let int = |m: &Matrix| m.map(|v| (v * 8.0).round());
        let (ai, bi, ci) = (int(&a), int(&b), int(&c));
        assert_eq!(kron(&kron(&ai, &bi), &ci), kron(&ai, &kron(&bi, &ci)));
        assert!((kron(&kron(&a, &b), &c) - kron(&a, &kron(&b, &c))).amax() < 1e-15);

        let c2 = rand_matrix(&mut rng, 3, 4);
        let d = rand_matrix(&mut rng, 2, 3);
        let lhs = kron(&a, &b) * kron(&c2, &d);
        let rhs = kron(&(&a * &c2), &(&b * &d));
        assert!((lhs - rhs).amax() < 1e-12);
    }

    #[test]
    fn tensor_product_of_basis_vectors() {
        let a = Tensor::new(vec![2], vec![1., 0.]).unwrap();
        let b = Tensor::new(vec![2], vec![0., 1.]).unwrap();
        let ab = tensor_product(&a, &b);
        assert_eq!(ab.shape(), &[2, 2]);
        assert_eq!(ab.data(), &[0., 1., 0., 0.]);
    }

    #[test]
    fn outer_product_is_kron_with_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = rand_tensor(&mut rng, &[3]);
        let b = rand_tensor(&mut rng, &[4]);
        let outer = tensor_product(&a, &b).to_matrix().unwrap();
        let am = Matrix::from_column_slice(3, 1, a.data());
        let bt = Matrix::from_row_slice(1, 4, b.data());
        assert_eq!(outer, kron(&am, &bt));
    }

    #[test]
    fn matrix_tensor_product_shape() {
        let a = Tensor::zeros(&[2, 2]);
        let b = Tensor::zeros(&[3, 3]);
        assert_eq!(tensor_product(&a, &b).shape(), &[2, 2, 3, 3]);
    }

    #[test]
    fn mode_product_shapes_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = rand_tensor(&mut rng, &[2, 3, 4]);
        assert_eq!(mode_product(&x, 1, &Matrix::identity(3, 3)).unwrap(), x);
        let u = rand_matrix(&mut rng, 5, 3);
        let y = mode_product(&x, 1, &u).unwrap();
        assert_eq!(y.shape(), &[2, 5, 4]);
        assert!(mode_product(&x, 1, &rand_matrix(&mut rng, 5, 4)).is_err());
        // brute-force loop
        for i in 0..2 {
            for p in 0..5 {
                for k in 0..4 {
                    let s: f64 = (0..3).map(|q| u[(p, q)] * x.get(&[i, q, k])).sum();
                    assert!((y.get(&[i, p, k]) - s).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn mode_product_with_ones_row_sums_the_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = rand_tensor(&mut rng, &[3, 4, 2]);
        let ones = Matrix::from_element(1, 4, 1.0);
        let y = mode_product(&x, 1, &ones).unwrap();
        for i in 0..3 {
            for k in 0..2 {
                let s: f64 = (0..4).map(|j| x.get(&[i, j, k])).sum();
                assert!((y.get(&[i, 0, k]) - s).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn contract_with_vector_cases() {
        let ones = Tensor::from_fn(&[2, 3], |_| 1.0);
        let r = contract_with_vector(&ones, 1, &[1.0; 3]).unwrap();
        assert_eq!(r.shape(), &[2]);
        assert_eq!(r.data(), &[3.0, 3.0]);
        // first mode of the (2,3) ones tensor -> (2,2,2)
        let r0 = contract_with_vector(&ones, 0, &[1.0; 2]).unwrap();
        assert_eq!(r0.data(), &[2.0, 2.0, 2.0]);

        let f = [1.0, 2.0, 3.0];
        let g = [0.5, -1.0];
        let w = [0.25, 0.75];
        let sep = Tensor::from_fn(&[3, 2], |i| f[i[0]] * g[i[1]]);
        let c = contract_with_vector(&sep, 1, &w).unwrap();
        let gw: f64 = g.iter().zip(&w).map(|(a, b)| a * b).sum();
        for i in 0..3 {
            assert!((c.data()[i] - f[i] * gw).abs() < 1e-15);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = rand_tensor(&mut rng, &[3, 4, 5]);
        let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = contract_with_vector(&x, 1, &v).unwrap();
        assert_eq!(y.shape(), &[3, 5]);
        for i in 0..3 {
            for k in 0..5 {
                let s: f64 = (0..4).map(|j| x.get(&[i, j, k]) * v[j]).sum();
                assert!((y.get(&[i, k]) - s).abs() < 1e-12);
            }
        }
        assert!(contract_with_vector(&x, 1, &v[..3]).is_err());
    }

    #[test]
    fn tensordot_matches_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = rand_tensor(&mut rng, &[2, 3, 4]);
        let b = rand_tensor(&mut rng, &[4, 5, 3]);
        let c = tensordot(&a, &b, &[1, 2], &[2, 0]).unwrap();
        assert_eq!(c.shape(), &[2, 5]);
        for i in 0..2 {
            for m in 0..5 {
                let mut s = 0.0;
                for j in 0..3 {
                    for k in 0..4 {
                        s += a.get(&[i, j, k]) * b.get(&[k, m, j]);
                    }
                }
                assert!((c.get(&[i, m]) - s).abs() < 1e-12);
            }
        }
    }
}
