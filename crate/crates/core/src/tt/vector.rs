use rand::Rng;
use serde::{Deserialize, Serialize};

use super::svd::{matrix_to_rm, truncated_svd};
use crate::dense::{tensordot, Matrix, Tensor};
use crate::error::{shape_err, NteError, Result};

/// A d-way tensor in TT format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTt", into = "RawTt")]
pub struct TtVector {
    cores: Vec<Tensor>,
}

#[derive(Serialize, Deserialize)]
struct RawTt {
    mode_sizes: Vec<usize>,
    ranks: Vec<usize>,
    cores: Vec<Tensor>,
}

impl TryFrom<RawTt> for TtVector {
    type Error = NteError;

    fn try_from(raw: RawTt) -> Result<Self> {
        let tt = TtVector::from_cores(raw.cores)?;
        if tt.mode_sizes() != raw.mode_sizes || tt.ranks() != raw.ranks {
            return Err(NteError::Validation("TT header disagrees with cores".into()));
        }
        Ok(tt)
    }
}

impl From<TtVector> for RawTt {
    fn from(tt: TtVector) -> Self {
        RawTt {
            mode_sizes: tt.mode_sizes(),
            ranks: tt.ranks(),
            cores: tt.cores,
        }
    }
}

pub(crate) fn core_slice(core: &Tensor, i: usize) -> Matrix {
    let s = core.shape();
    let (r0, n, r1) = (s[0], s[1], s[2]);
    let d = core.data();
    Matrix::from_fn(r0, r1, |a, b| d[(a * n + i) * r1 + b])
}

impl TtVector {
    pub fn from_cores(cores: Vec<Tensor>) -> Result<Self> {
        if cores.is_empty() {
            return Err(NteError::Validation("a TT needs at least one core".into()));
        }
        let mut prev = 1;
        for (k, c) in cores.iter().enumerate() {
            if c.ndim() != 3 {
                return shape_err(format!("core {k} has {} modes, expected 3", c.ndim()));
            }
            if c.shape()[0] != prev {
                return shape_err(format!(
                    "core {k} left rank {} does not match {prev}",
                    c.shape()[0]
                ));
            }
            prev = c.shape()[2];
        }
        if prev != 1 {
            return shape_err(format!("last TT rank is {prev}, expected 1"));
        }
        Ok(TtVector { cores })
    }

    pub(crate) fn from_cores_unchecked(cores: Vec<Tensor>) -> Self {
        debug_assert!(TtVector::from_cores(cores.clone()).is_ok());
        TtVector { cores }
    }

    pub fn cores(&self) -> &[Tensor] {
        &self.cores
    }

    pub fn into_cores(self) -> Vec<Tensor> {
        self.cores
    }

    pub fn ndim(&self) -> usize {
        self.cores.len()
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.shape()[1]).collect()
    }

    /// `(r_0, r_1, ..., r_d)` including the unit boundary ranks.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r = vec![1];
        r.extend(self.cores.iter().map(|c| c.shape()[2]));
        r
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// Number of stored core elements.
    pub fn num_params(&self) -> usize {
        self.cores.iter().map(|c| c.len()).sum()
    }

    /// Element count of the full tensor (as `f64`: it can overflow `usize` for QTT).
    pub fn full_size(&self) -> f64 {
        self.mode_sizes().iter().map(|&n| n as f64).product()
    }

    pub fn compression_ratio(&self) -> f64 {
        super::compression_ratio(self.num_params(), self.full_size())
    }

    pub fn zeros(mode_sizes: &[usize]) -> Self {
        TtVector::from_cores_unchecked(mode_sizes.iter().map(|&n| Tensor::zeros(&[1, n, 1])).collect())
    }

    pub fn ones(mode_sizes: &[usize]) -> Self {
        TtVector::rank_one(&mode_sizes.iter().map(|&n| vec![1.0; n]).collect::<Vec<_>>())
    }

    /// `v_1 ∘ v_2 ∘ ... ∘ v_d`
    pub fn rank_one(vectors: &[Vec<f64>]) -> Self {
        TtVector::from_cores_unchecked(
            vectors
                .iter()
                .map(|v| Tensor::new(vec![1, v.len(), 1], v.clone()).expect("nonempty vector"))
                .collect(),
        )
    }

    /// Random cores with entries uniform in `[-1, 1)` and the given interior
    /// ranks (clipped to what the mode sizes allow).
    pub fn random(mode_sizes: &[usize], interior_rank: usize, rng: &mut impl Rng) -> Self {
        let d = mode_sizes.len();
        let mut ranks = vec![1; d + 1];
        for k in 1..d {
            let left: f64 = mode_sizes[..k].iter().map(|&n| n as f64).product();
            let right: f64 = mode_sizes[k..].iter().map(|&n| n as f64).product();
            ranks[k] = (interior_rank as f64).min(left).min(right) as usize;
        }
        let cores = (0..d)
            .map(|k| {
                Tensor::from_fn(&[ranks[k], mode_sizes[k], ranks[k + 1]], |_| {
                    rng.random_range(-1.0..1.0)
                })
            })
            .collect();
        TtVector::from_cores_unchecked(cores)
    }

    /// Random TT whose reconstruction is strictly positive: a rank-1 positive
    /// part plus a small random perturbation of the given rank.
    pub fn random_positive(mode_sizes: &[usize], interior_rank: usize, rng: &mut impl Rng) -> Self {
        let base = TtVector::rank_one(
            &mode_sizes
                .iter()
                .map(|&n| (0..n).map(|_| 1.0 + 0.5 * rng.random::<f64>()).collect())
                .collect::<Vec<_>>(),
        );
        if interior_rank <= 1 {
            return base;
        }
        let pert = TtVector::random(mode_sizes, interior_rank - 1, rng);
        // Every base entry is at least 1, so a perturbation of norm 1/2 keeps
        // all entries positive.
        let scale = 0.5 / pert.norm().max(f64::MIN_POSITIVE);
        let pert = pert.scale(scale);
        base.add(&pert).expect("same modes")
    }

    pub fn reconstruct(&self) -> Tensor {
        let mut acc = self.cores[0].clone();
        for core in &self.cores[1..] {
            let last = acc.ndim() - 1;
            acc = tensordot(&acc, core, &[last], &[0]).expect("rank agreement");
        }
        let mut shape = self.mode_sizes();
        if shape.is_empty() {
            shape.push(1);
        }
        acc.reshape(&shape).expect("boundary ranks are 1")
    }

    /// Row-major full vector.
    pub fn to_vec(&self) -> Vec<f64> {
        self.reconstruct().into_data()
    }

    pub fn entry(&self, idx: &[usize]) -> f64 {
        let mut v = Matrix::from_element(1, 1, 1.0);
        for (core, &i) in self.cores.iter().zip(idx) {
            v = v * core_slice(core, i);
        }
        v[(0, 0)]
    }

    pub fn scale(mut self, c: f64) -> Self {
        let k = self.cores.len() - 1;
        self.cores[k] = std::mem::replace(&mut self.cores[k], Tensor::zeros(&[1])).scale(c);
        self
    }

    fn check_same_modes(&self, other: &TtVector) -> Result<()> {
        if self.mode_sizes() != other.mode_sizes() {
            return shape_err(format!(
                "mode sizes {:?} vs {:?}",
                self.mode_sizes(),
                other.mode_sizes()
            ));
        }
        Ok(())
    }

    /// Exact sum; interior ranks add.
    pub fn add(&self, other: &TtVector) -> Result<TtVector> {
        self.check_same_modes(other)?;
        let d = self.ndim();
        if d == 1 {
            let data: Vec<f64> = self.cores[0]
                .data()
                .iter()
                .zip(other.cores[0].data())
                .map(|(a, b)| a + b)
                .collect();
            let core = Tensor::new(self.cores[0].shape().to_vec(), data)?;
            return Ok(TtVector::from_cores_unchecked(vec![core]));
        }
        let mut cores = Vec::with_capacity(d);
        for k in 0..d {
            let (a, b) = (&self.cores[k], &other.cores[k]);
            let (ra0, n, ra1) = (a.shape()[0], a.shape()[1], a.shape()[2]);
            let (rb0, rb1) = (b.shape()[0], b.shape()[2]);
            let (r0, r1) = match k {
                0 => (1, ra1 + rb1),
                _ if k == d - 1 => (ra0 + rb0, 1),
                _ => (ra0 + rb0, ra1 + rb1),
            };
            let mut c = Tensor::zeros(&[r0, n, r1]);
            let (off_a0, off_b0) = (0, if k == 0 { 0 } else { ra0 });
            let (off_a1, off_b1) = (0, if k == d - 1 { 0 } else { ra1 });
            for i in 0..n {
                for p in 0..ra0 {
                    for q in 0..ra1 {
                        c.set(&[off_a0 + p, i, off_a1 + q], a.get(&[p, i, q]));
                    }
                }
                for p in 0..rb0 {
                    for q in 0..rb1 {
                        c.set(&[off_b0 + p, i, off_b1 + q], b.get(&[p, i, q]));
                    }
                }
            }
            cores.push(c);
        }
        Ok(TtVector::from_cores_unchecked(cores))
    }

    pub fn sub(&self, other: &TtVector) -> Result<TtVector> {
        self.add(&other.clone().scale(-1.0))
    }

    pub fn dot(&self, other: &TtVector) -> Result<f64> {
        self.check_same_modes(other)?;
        let mut env = Tensor::new(vec![1, 1], vec![1.0])?;
        for (x, y) in self.cores.iter().zip(&other.cores) {
            let t = tensordot(&env, y, &[1], &[0])?;
            env = tensordot(x, &t, &[0, 1], &[0, 1])?;
        }
        Ok(env.data()[0])
    }

    /// Frobenius norm, computed from an orthogonalized copy for accuracy.
    pub fn norm(&self) -> f64 {
        let mut c = self.clone();
        c.left_orthogonalize();
        c.cores.last().expect("nonempty").frobenius_norm()
    }

    /// Sum of all entries (contraction with all-ones in every mode).
    pub fn sum(&self) -> f64 {
        let mut v = Matrix::from_element(1, 1, 1.0);
        for core in &self.cores {
            let (r0, n, r1) = (core.shape()[0], core.shape()[1], core.shape()[2]);
            let d = core.data();
            let m = Matrix::from_fn(r0, r1, |a, b| (0..n).map(|i| d[(a * n + i) * r1 + b]).sum());
            v = v * m;
        }
        v[(0, 0)]
    }

    /// QR sweep left to right: cores `0..d-1` become left-orthonormal and the
    /// last core carries the norm.
    pub fn left_orthogonalize(&mut self) {
        let d = self.ndim();
        for k in 0..d.saturating_sub(1) {
            self.left_orthogonalize_core(k);
        }
    }

    pub(crate) fn left_orthogonalize_core(&mut self, k: usize) {
        let core = &self.cores[k];
        let (r0, n, r1) = (core.shape()[0], core.shape()[1], core.shape()[2]);
        let qr = core.unfold(2).qr();
        let q = qr.q();
        let r = qr.r();
        let rn = q.ncols();
        self.cores[k] = Tensor::new(vec![r0, n, rn], matrix_to_rm(&q)).expect("shape");
        self.cores[k + 1] = left_multiply_core(&r, &self.cores[k + 1]);
        let _ = r1;
    }

    /// QR sweep right to left: cores `1..d` become right-orthonormal and the
    /// first core carries the norm.
    pub fn right_orthogonalize(&mut self) {
        for k in (1..self.ndim()).rev() {
            self.right_orthogonalize_core(k);
        }
    }

    pub(crate) fn right_orthogonalize_core(&mut self, k: usize) {
        let core = &self.cores[k];
        let (r0, n, r1) = (core.shape()[0], core.shape()[1], core.shape()[2]);
        let m = Matrix::from_row_slice(r0, n * r1, core.data());
        let qr = m.transpose().qr();
        let q = qr.q(); // (n r1) x rn
        let r = qr.r(); // rn x r0
        let rn = q.ncols();
        self.cores[k] = Tensor::new(vec![rn, n, r1], matrix_to_rm(&q.transpose())).expect("shape");
        self.cores[k - 1] = right_multiply_core(&self.cores[k - 1], &r.transpose());
    }

    /// TT rounding to relative accuracy `eps`.
    pub fn round(&self, eps: f64) -> TtVector {
        self.round_with(eps, usize::MAX)
    }

    /// Right-to-left orthogonalization followed by left-to-right truncated
    /// SVDs with threshold `eps ‖x‖ / sqrt(d - 1)` and a rank cap.
    pub fn round_with(&self, eps: f64, max_rank: usize) -> TtVector {
        let d = self.ndim();
        if d == 1 {
            return self.clone();
        }
        let mut x = self.clone();
        x.right_orthogonalize();
        let nrm = x.cores[0].frobenius_norm();
        let delta = eps * nrm / ((d - 1) as f64).sqrt();
        for k in 0..d - 1 {
            let core = &x.cores[k];
            let (r0, n) = (core.shape()[0], core.shape()[1]);
            let t = truncated_svd(&core.unfold(2), delta, max_rank);
            x.cores[k] = Tensor::new(vec![r0, n, t.rank()], matrix_to_rm(&t.u)).expect("shape");
            x.cores[k + 1] = left_multiply_core(&t.svt(), &x.cores[k + 1]);
        }
        x
    }

    /// Reverses the mode order (each core is transposed in its rank indices).
    pub fn reverse(&self) -> TtVector {
        TtVector::from_cores_unchecked(
            self.cores
                .iter()
                .rev()
                .map(|c| c.permute(&[2, 1, 0]).expect("3-way"))
                .collect(),
        )
    }
}

/// `M (p x r0)` applied to the left rank index of a 3-way core.
pub(crate) fn left_multiply_core(m: &Matrix, core: &Tensor) -> Tensor {
    let (r0, n, r1) = (core.shape()[0], core.shape()[1], core.shape()[2]);
    debug_assert_eq!(m.ncols(), r0);
    let unf = Matrix::from_row_slice(r0, n * r1, core.data());
    let prod = m * unf;
    Tensor::new(vec![m.nrows(), n, r1], matrix_to_rm(&prod)).expect("shape")
}

/// `M (r1 x p)` applied to the right rank index of a 3-way core.
pub(crate) fn right_multiply_core(core: &Tensor, m: &Matrix) -> Tensor {
    let (r0, n, r1) = (core.shape()[0], core.shape()[1], core.shape()[2]);
    debug_assert_eq!(m.nrows(), r1);
    let prod = core.unfold(2) * m;
    Tensor::new(vec![r0, n, m.ncols()], matrix_to_rm(&prod)).expect("shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tt::tt_svd;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dense_dot(a: &Tensor, b: &Tensor) -> f64 {
        a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn validation_of_cores() {
        assert!(TtVector::from_cores(vec![]).is_err());
        assert!(TtVector::from_cores(vec![Tensor::zeros(&[1, 2, 2])]).is_err());
        assert!(TtVector::from_cores(vec![Tensor::zeros(&[1, 2, 2]), Tensor::zeros(&[3, 2, 1])]).is_err());
        assert!(TtVector::from_cores(vec![Tensor::zeros(&[1, 2, 2]), Tensor::zeros(&[2, 2, 1])]).is_ok());
    }

    #[test]
    fn reductions_on_simple_cases() {
        assert_eq!(TtVector::ones(&[2, 3, 4]).sum(), 24.0);
        let (a, b, c, d) = (vec![1.0, 2.0], vec![3.0, -1.0, 0.5], vec![0.5, 0.25], vec![2.0, 1.0, 4.0]);
        let x = TtVector::rank_one(&[a.clone(), b.clone()]);
        let y = TtVector::rank_one(&[c.clone(), d.clone()]);
        let ac: f64 = a.iter().zip(&c).map(|(p, q)| p * q).sum();
        let bd: f64 = b.iter().zip(&d).map(|(p, q)| p * q).sum();
        assert!((x.dot(&y).unwrap() - ac * bd).abs() < 1e-14);
    }

    #[test]
    fn add_rank_law_and_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = TtVector::random(&[3, 4, 5, 2], 2, &mut rng);
        let y = TtVector::random(&[3, 4, 5, 2], 3, &mut rng);
        let s = x.add(&y).unwrap();
        let rx = x.ranks();
        let ry = y.ranks();
        let rs = s.ranks();
        for k in 1..4 {
            assert_eq!(rs[k], rx[k] + ry[k]);
        }
        let dense: Vec<f64> = x.to_vec().iter().zip(y.to_vec()).map(|(a, b)| a + b).collect();
        for (u, v) in s.to_vec().iter().zip(&dense) {
            assert!((u - v).abs() < 1e-12);
        }
        let z = TtVector::zeros(&[3, 4, 5, 2]);
        let xz = x.add(&z).unwrap();
        for (u, v) in xz.to_vec().iter().zip(x.to_vec()) {
            assert_eq!(*u, v);
        }
        assert!(x.add(&TtVector::zeros(&[3, 4, 5])).is_err());
    }

    #[test]
    fn dot_norm_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = TtVector::random(&[3, 4, 5], 3, &mut rng);
        let y = TtVector::random(&[3, 4, 5], 2, &mut rng);
        let (xd, yd) = (x.reconstruct(), y.reconstruct());
        assert!((x.dot(&y).unwrap() - dense_dot(&xd, &yd)).abs() < 1e-12);
        assert!((x.norm() - xd.frobenius_norm()).abs() < 1e-12);
        assert!((x.norm() - x.dot(&x).unwrap().sqrt()).abs() < 1e-12);
        let sum: f64 = xd.data().iter().sum();
        assert!((x.sum() - sum).abs() < 1e-12);
    }

    #[test]
    fn doubling_then_rounding_restores_ranks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = tt_svd(&TtVector::random(&[4, 4, 4, 4], 3, &mut rng).reconstruct(), 1e-14);
        let xx = x.add(&x).unwrap().round(1e-12);
        assert_eq!(xx.ranks(), x.ranks());
        for (u, v) in xx.to_vec().iter().zip(x.to_vec()) {
            assert!((u - 2.0 * v).abs() < 1e-11);
        }
    }

    #[test]
    fn round_zero_keeps_full_rank_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = TtVector::random(&[3, 3, 3], 2, &mut rng);
        let r = x.round(0.0);
        assert!(r.ranks().iter().zip(x.ranks()).all(|(a, b)| *a <= b));
        for (u, v) in r.to_vec().iter().zip(x.to_vec()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn orthogonalization_preserves_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = TtVector::random(&[2, 3, 4, 3], 3, &mut rng);
        let mut l = x.clone();
        l.left_orthogonalize();
        let mut r = x.clone();
        r.right_orthogonalize();
        for ((a, b), c) in l.to_vec().iter().zip(r.to_vec()).zip(x.to_vec()) {
            assert!((a - c).abs() < 1e-12 && (b - c).abs() < 1e-12);
        }
        // left-orthonormal cores: U^T U = I
        let u = l.cores()[1].unfold(2);
        let g = u.transpose() * &u;
        assert!((g - Matrix::identity(u.ncols(), u.ncols())).amax() < 1e-12);
    }

    #[test]
    fn reverse_reverses_indices() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = TtVector::random(&[2, 3, 4], 2, &mut rng);
        let r = x.reverse();
        assert_eq!(r.mode_sizes(), vec![4, 3, 2]);
        assert!((r.entry(&[3, 1, 0]) - x.entry(&[0, 1, 3])).abs() < 1e-14);
    }

    #[test]
    fn serde_roundtrip_and_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = TtVector::random(&[2, 3, 2], 2, &mut rng);
        let s = serde_json::to_string(&x).unwrap();
        let y: TtVector = serde_json::from_str(&s).unwrap();
        assert_eq!(x, y);
        let bad = s.replacen("\"ranks\":[1,2,2,1]", "\"ranks\":[1,3,2,1]", 1);
        assert!(serde_json::from_str::<TtVector>(&bad).is_err());
    }
}
