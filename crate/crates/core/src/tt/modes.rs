use super::vector::{left_multiply_core, right_multiply_core, TtVector};
use crate::dense::{Matrix, Tensor};
use crate::error::{shape_err, Result};

/// Applies `m` along mode `k` (an n-mode product on a single core).
/// The TT ranks are unchanged.
pub fn tt_mode_apply(x: &TtVector, k: usize, m: &Matrix) -> Result<TtVector> {
    if k >= x.ndim() {
        return shape_err(format!("mode {k} out of range for {} modes", x.ndim()));
    }
    let core = &x.cores()[k];
    let (r0, n, r1) = (core.shape()[0], core.shape()[1], core.shape()[2]);
    if m.ncols() != n {
        return shape_err(format!("matrix has {} columns, mode {k} has size {n}", m.ncols()));
    }
    let rows = m.nrows();
    let cd = core.data();
    let mut out = vec![0.0; r0 * rows * r1];
    for a in 0..r0 {
        for i in 0..rows {
            for j in 0..n {
                let mij = m[(i, j)];
                if mij == 0.0 {
                    continue;
                }
                for b in 0..r1 {
                    out[(a * rows + i) * r1 + b] += mij * cd[(a * n + j) * r1 + b];
                }
            }
        }
    }
    let mut cores = x.cores().to_vec();
    cores[k] = Tensor::new(vec![r0, rows, r1], out)?;
    Ok(TtVector::from_cores_unchecked(cores))
}

/// Result of contracting a mode away: a shorter train, or a scalar when the
/// input had a single mode.
#[derive(Clone, Debug, PartialEq)]
pub enum ModeContraction {
    Tensor(TtVector),
    Scalar(f64),
}

impl ModeContraction {
    pub fn into_tensor(self) -> Option<TtVector> {
        match self {
            ModeContraction::Tensor(t) => Some(t),
            ModeContraction::Scalar(_) => None,
        }
    }
}

/// Contracts mode `k` with the weights `w`. The resulting `r_{k-1} x r_k`
/// matrix is merged into the right neighbour (or the left one for the last
/// mode).
pub fn tt_mode_contract(x: &TtVector, k: usize, w: &[f64]) -> Result<ModeContraction> {
    if k >= x.ndim() {
        return shape_err(format!("mode {k} out of range for {} modes", x.ndim()));
    }
    let core = &x.cores()[k];
    let (r0, n, r1) = (core.shape()[0], core.shape()[1], core.shape()[2]);
    if w.len() != n {
        return shape_err(format!("{} weights for mode of size {n}", w.len()));
    }
    let cd = core.data();
    let m = Matrix::from_fn(r0, r1, |a, b| (0..n).map(|j| w[j] * cd[(a * n + j) * r1 + b]).sum());
    if x.ndim() == 1 {
        return Ok(ModeContraction::Scalar(m[(0, 0)]));
    }
    let mut cores = x.cores().to_vec();
    cores.remove(k);
    if k < cores.len() {
        cores[k] = left_multiply_core(&m, &cores[k]);
    } else {
        let last = cores.len() - 1;
        cores[last] = right_multiply_core(&cores[last], &m);
    }
    Ok(ModeContraction::Tensor(TtVector::from_cores_unchecked(cores)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{contract_with_vector, mode_product};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_apply_is_noop_and_ranks_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = TtVector::random(&[3, 4, 5], 3, &mut rng);
        let y = tt_mode_apply(&x, 1, &Matrix::identity(4, 4)).unwrap();
        assert_eq!(y, x);
        let m = Matrix::from_fn(6, 4, |_, _| rng.random_range(-1.0..1.0));
        let z = tt_mode_apply(&x, 1, &m).unwrap();
        assert_eq!(z.ranks(), x.ranks());
        let dense = mode_product(&x.reconstruct(), 1, &m).unwrap();
        assert!(z.reconstruct().max_abs_diff(&dense).unwrap() < 1e-12);
        assert!(tt_mode_apply(&x, 0, &m).is_err());
    }

    #[test]
    fn forward_difference_of_linear_function() {
        // f(i1, i2) = 3 * i2 + 1 for every i1; forward differences equal 3.
        let f: Vec<f64> = (0..2).flat_map(|_| (0..6).map(|i| 3.0 * i as f64 + 1.0)).collect();
        let x = crate::tt::tt_svd(&Tensor::new(vec![2, 6], f).unwrap(), 1e-14);
        let diff = Matrix::from_fn(5, 6, |i, j| {
            if j == i + 1 {
                1.0
            } else if j == i {
                -1.0
            } else {
                0.0
            }
        });
        let y = tt_mode_apply(&x, 1, &diff).unwrap();
        assert!(y.to_vec().iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn contraction_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = TtVector::random(&[3, 4, 5], 2, &mut rng);
        let xd = x.reconstruct();
        for k in 0..3 {
            let n = x.mode_sizes()[k];
            let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let y = tt_mode_contract(&x, k, &w).unwrap().into_tensor().unwrap();
            assert_eq!(y.ndim(), 2);
            let dense = contract_with_vector(&xd, k, &w).unwrap();
            assert!(y.reconstruct().max_abs_diff(&dense).unwrap() < 1e-12);
        }
        let ones = TtVector::ones(&[3, 4]);
        let y = tt_mode_contract(&ones, 0, &[1.0; 3]).unwrap().into_tensor().unwrap();
        assert_eq!(y.to_vec(), vec![3.0; 4]);
        let single = TtVector::ones(&[5]);
        assert_eq!(tt_mode_contract(&single, 0, &[1.0; 5]).unwrap(), ModeContraction::Scalar(5.0));
    }
}
