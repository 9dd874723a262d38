use serde::{Deserialize, Serialize};

use super::vector::TtVector;
use crate::dense::{Matrix, Tensor};
use crate::error::{shape_err, NteError, Result};

/// Largest entry count [`TtMatrix::expand`] will materialize.
pub const EXPAND_CAP: usize = 1 << 26;

/// A linear operator in TT-matrix format.
///
/// Internally the row and column index of each core are merged into one mode
/// `i * n_k + j`, which lets rounding and addition reuse the vector code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTtm", into = "RawTtm")]
pub struct TtMatrix {
    row_sizes: Vec<usize>,
    col_sizes: Vec<usize>,
    tt: TtVector,
}

#[derive(Serialize, Deserialize)]
struct RawTtm {
    row_sizes: Vec<usize>,
    col_sizes: Vec<usize>,
    merged: TtVector,
}

impl TryFrom<RawTtm> for TtMatrix {
    type Error = NteError;

    fn try_from(raw: RawTtm) -> Result<Self> {
        TtMatrix::from_merged(raw.merged, raw.row_sizes, raw.col_sizes)
    }
}

impl From<TtMatrix> for RawTtm {
    fn from(m: TtMatrix) -> Self {
        RawTtm {
            row_sizes: m.row_sizes,
            col_sizes: m.col_sizes,
            merged: m.tt,
        }
    }
}

impl TtMatrix {
    /// Builds from 4-way cores `(r_{k-1}, m_k, n_k, r_k)`.
    pub fn from_cores(cores: Vec<Tensor>) -> Result<Self> {
        let mut rows = Vec::with_capacity(cores.len());
        let mut cols = Vec::with_capacity(cores.len());
        let mut merged = Vec::with_capacity(cores.len());
        for (k, c) in cores.into_iter().enumerate() {
            if c.ndim() != 4 {
                return shape_err(format!("TT-matrix core {k} has {} modes, expected 4", c.ndim()));
            }
            let s = c.shape().to_vec();
            rows.push(s[1]);
            cols.push(s[2]);
            merged.push(c.reshape(&[s[0], s[1] * s[2], s[3]])?);
        }
        Ok(TtMatrix {
            row_sizes: rows,
            col_sizes: cols,
            tt: TtVector::from_cores(merged)?,
        })
    }

    pub(crate) fn from_merged(tt: TtVector, row_sizes: Vec<usize>, col_sizes: Vec<usize>) -> Result<Self> {
        let ok = tt.ndim() == row_sizes.len()
            && row_sizes.len() == col_sizes.len()
            && tt
                .mode_sizes()
                .iter()
                .zip(row_sizes.iter().zip(&col_sizes))
                .all(|(&s, (&m, &n))| s == m * n);
        if !ok {
            return shape_err("merged TT does not match the row/column sizes");
        }
        Ok(TtMatrix { row_sizes, col_sizes, tt })
    }

    /// Rank-1 operator `A_1 ∘ A_2 ∘ ... ∘ A_d`, which expands to
    /// `A_1 ⊗ A_2 ⊗ ... ⊗ A_d`.
    pub fn from_factors(factors: &[Matrix]) -> Result<Self> {
        if factors.is_empty() {
            return Err(NteError::Validation("from_factors needs at least one factor".into()));
        }
        let cores = factors
            .iter()
            .map(|f| {
                let (m, n) = f.shape();
                Tensor::from_fn(&[1, m, n, 1], |ix| f[(ix[1], ix[2])])
            })
            .collect();
        TtMatrix::from_cores(cores)
    }

    pub fn identity(sizes: &[usize]) -> Self {
        let factors: Vec<Matrix> = sizes.iter().map(|&n| Matrix::identity(n, n)).collect();
        TtMatrix::from_factors(&factors).expect("nonempty sizes")
    }

    pub fn ndim(&self) -> usize {
        self.row_sizes.len()
    }

    pub fn row_sizes(&self) -> &[usize] {
        &self.row_sizes
    }

    pub fn col_sizes(&self) -> &[usize] {
        &self.col_sizes
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.tt.ranks()
    }

    pub fn max_rank(&self) -> usize {
        self.tt.max_rank()
    }

    pub fn num_params(&self) -> usize {
        self.tt.num_params()
    }

    /// Entry count of the expanded matrix.
    pub fn full_size(&self) -> f64 {
        self.tt.full_size()
    }

    pub fn compression_ratio(&self) -> f64 {
        self.tt.compression_ratio()
    }

    /// Core `k` as a 4-way tensor `(r_{k-1}, m_k, n_k, r_k)`.
    pub fn core(&self, k: usize) -> Tensor {
        let c = &self.tt.cores()[k];
        let s = c.shape();
        c.clone()
            .reshape(&[s[0], self.row_sizes[k], self.col_sizes[k], s[2]])
            .expect("sizes agree")
    }

    pub fn cores(&self) -> Vec<Tensor> {
        (0..self.ndim()).map(|k| self.core(k)).collect()
    }

    /// The merged-index TT view.
    pub fn as_vector(&self) -> &TtVector {
        &self.tt
    }

    pub fn nrows(&self) -> usize {
        self.row_sizes.iter().product()
    }

    pub fn ncols(&self) -> usize {
        self.col_sizes.iter().product()
    }

    /// Dense expansion, refused above [`EXPAND_CAP`] entries.
    pub fn expand(&self) -> Result<Matrix> {
        let total = self.full_size();
        if total > EXPAND_CAP as f64 {
            return Err(NteError::Capacity {
                unknowns: total.min(usize::MAX as f64) as usize,
                cap: EXPAND_CAP,
            });
        }
        let (rows, cols) = (self.nrows(), self.ncols());
        let d = self.ndim();
        // Reconstruct on the merged modes, then un-interleave.
        let full = self.tt.reconstruct();
        let mut split = Vec::with_capacity(2 * d);
        for k in 0..d {
            split.push(self.row_sizes[k]);
            split.push(self.col_sizes[k]);
        }
        let t = full.reshape(&split)?;
        let perm: Vec<usize> = (0..d).map(|k| 2 * k).chain((0..d).map(|k| 2 * k + 1)).collect();
        let t = t.permute(&perm)?;
        Ok(Matrix::from_row_slice(rows, cols, t.data()))
    }

    /// Sub-operator obtained by fixing the row and column indices of the
    /// leading `row_prefix.len()` modes.
    pub fn block(&self, row_prefix: &[usize], col_prefix: &[usize]) -> Result<TtMatrix> {
        let p = row_prefix.len();
        if p != col_prefix.len() || p >= self.ndim() {
            return shape_err("block prefix must fix fewer modes than the operator has");
        }
        let mut left = Matrix::from_element(1, 1, 1.0);
        for k in 0..p {
            let (i, j) = (row_prefix[k], col_prefix[k]);
            if i >= self.row_sizes[k] || j >= self.col_sizes[k] {
                return shape_err(format!("block index ({i},{j}) out of range in mode {k}"));
            }
            let slice = super::vector::core_slice(&self.tt.cores()[k], i * self.col_sizes[k] + j);
            left = left * slice;
        }
        let mut cores: Vec<Tensor> = self.tt.cores()[p..].to_vec();
        cores[0] = super::vector::left_multiply_core(&left, &cores[0]);
        TtMatrix::from_merged(
            TtVector::from_cores_unchecked(cores),
            self.row_sizes[p..].to_vec(),
            self.col_sizes[p..].to_vec(),
        )
    }

    pub fn scale(&self, c: f64) -> TtMatrix {
        TtMatrix {
            row_sizes: self.row_sizes.clone(),
            col_sizes: self.col_sizes.clone(),
            tt: self.tt.clone().scale(c),
        }
    }

    pub fn add(&self, other: &TtMatrix) -> Result<TtMatrix> {
        if self.row_sizes != other.row_sizes || self.col_sizes != other.col_sizes {
            return shape_err("TT-matrix sizes differ");
        }
        Ok(TtMatrix {
            row_sizes: self.row_sizes.clone(),
            col_sizes: self.col_sizes.clone(),
            tt: self.tt.add(&other.tt)?,
        })
    }

    pub fn sub(&self, other: &TtMatrix) -> Result<TtMatrix> {
        self.add(&other.scale(-1.0))
    }

    /// Sum of many operators, rounding after every addition to keep ranks small.
    pub fn sum_rounded(terms: &[TtMatrix], eps: f64) -> Result<TtMatrix> {
        let mut it = terms.iter();
        let mut acc = it
            .next()
            .ok_or_else(|| NteError::Validation("empty operator sum".into()))?
            .clone();
        for t in it {
            acc = acc.add(t)?.round(eps);
        }
        Ok(acc)
    }

    pub fn round(&self, eps: f64) -> TtMatrix {
        self.round_with(eps, usize::MAX)
    }

    pub fn round_with(&self, eps: f64, max_rank: usize) -> TtMatrix {
        TtMatrix {
            row_sizes: self.row_sizes.clone(),
            col_sizes: self.col_sizes.clone(),
            tt: self.tt.round_with(eps, max_rank),
        }
    }

    /// Exact TT matvec; result ranks are products of operator and vector ranks.
    pub fn matvec(&self, x: &TtVector) -> Result<TtVector> {
        if x.mode_sizes() != self.col_sizes {
            return shape_err(format!(
                "operator columns {:?} vs vector modes {:?}",
                self.col_sizes,
                x.mode_sizes()
            ));
        }
        let mut cores = Vec::with_capacity(self.ndim());
        for k in 0..self.ndim() {
            let a = self.core(k);
            let xc = &x.cores()[k];
            let (ra0, m, n, ra1) = (a.shape()[0], a.shape()[1], a.shape()[2], a.shape()[3]);
            let (rx0, rx1) = (xc.shape()[0], xc.shape()[2]);
            let (ad, xd) = (a.data(), xc.data());
            let mut out = vec![0.0; ra0 * rx0 * m * ra1 * rx1];
            for al in 0..ra0 {
                for i in 0..m {
                    for j in 0..n {
                        for be in 0..ra1 {
                            let av = ad[((al * m + i) * n + j) * ra1 + be];
                            if av == 0.0 {
                                continue;
                            }
                            for p in 0..rx0 {
                                for q in 0..rx1 {
                                    let xv = xd[(p * n + j) * rx1 + q];
                                    out[(((al * rx0 + p) * m + i) * ra1 + be) * rx1 + q] += av * xv;
                                }
                            }
                        }
                    }
                }
            }
            cores.push(Tensor::new(vec![ra0 * rx0, m, ra1 * rx1], out)?);
        }
        Ok(TtVector::from_cores_unchecked(cores))
    }

    /// Applies the operator to a full row-major vector without expanding it.
    pub fn apply_full(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols() {
            return shape_err(format!("vector length {} vs {} columns", x.len(), self.ncols()));
        }
        // State layout: [rows done, rank, cols remaining].
        let mut state = x.to_vec();
        let mut done = 1usize;
        let mut rest = self.ncols();
        let mut r = 1usize;
        for k in 0..self.ndim() {
            let a = self.core(k);
            let (r0, m, n, r1) = (a.shape()[0], a.shape()[1], a.shape()[2], a.shape()[3]);
            debug_assert_eq!(r0, r);
            rest /= n;
            let ad = a.data();
            let mut next = vec![0.0; done * m * r1 * rest];
            for d0 in 0..done {
                for p in 0..r0 {
                    for j in 0..n {
                        let src = &state[((d0 * r0 + p) * n + j) * rest..][..rest];
                        for i in 0..m {
                            for s in 0..r1 {
                                let av = ad[((p * m + i) * n + j) * r1 + s];
                                if av == 0.0 {
                                    continue;
                                }
                                let dst = &mut next[((d0 * m + i) * r1 + s) * rest..][..rest];
                                for (o, v) in dst.iter_mut().zip(src) {
                                    *o += av * v;
                                }
                            }
                        }
                    }
                }
            }
            state = next;
            done *= m;
            r = r1;
        }
        Ok(state)
    }

    pub fn transpose(&self) -> TtMatrix {
        let cores = (0..self.ndim())
            .map(|k| self.core(k).permute(&[0, 2, 1, 3]).expect("4-way"))
            .collect();
        TtMatrix::from_cores(cores).expect("valid")
    }

    /// Exact product `self * other`; ranks multiply.
    pub fn matmul(&self, other: &TtMatrix) -> Result<TtMatrix> {
        if self.col_sizes != other.row_sizes {
            return shape_err("inner TT-matrix sizes differ");
        }
        let mut cores = Vec::with_capacity(self.ndim());
        for k in 0..self.ndim() {
            let a = self.core(k);
            let b = other.core(k);
            let (ra0, m, n, ra1) = (a.shape()[0], a.shape()[1], a.shape()[2], a.shape()[3]);
            let (rb0, l, rb1) = (b.shape()[0], b.shape()[2], b.shape()[3]);
            let (ad, bd) = (a.data(), b.data());
            let mut out = vec![0.0; ra0 * rb0 * m * l * ra1 * rb1];
            for al in 0..ra0 {
                for i in 0..m {
                    for j in 0..n {
                        for be in 0..ra1 {
                            let av = ad[((al * m + i) * n + j) * ra1 + be];
                            if av == 0.0 {
                                continue;
                            }
                            for p in 0..rb0 {
                                for c in 0..l {
                                    for q in 0..rb1 {
                                        let bv = bd[((p * n + j) * l + c) * rb1 + q];
                                        out[((((al * rb0 + p) * m + i) * l + c) * ra1 + be) * rb1 + q] += av * bv;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            cores.push(Tensor::new(vec![ra0 * rb0, m, l, ra1 * rb1], out)?);
        }
        TtMatrix::from_cores(cores)
    }

    /// Reverses the mode order.
    pub fn reverse(&self) -> TtMatrix {
        let mut rows = self.row_sizes.clone();
        let mut cols = self.col_sizes.clone();
        rows.reverse();
        cols.reverse();
        TtMatrix {
            row_sizes: rows,
            col_sizes: cols,
            tt: self.tt.reverse(),
        }
    }
}
