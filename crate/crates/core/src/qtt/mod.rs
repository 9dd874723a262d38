//! Quantized tensor trains.
//!
//! A vector of length `2^n` is reshaped to an `n`-way `2 x 2 x ... x 2`
//! tensor and compressed as a TT. The first quantized mode carries the most
//! significant bit of the index, so the reshape is a plain row-major view and
//! concatenating the quantized modes of several factors reproduces the
//! row-major Kronecker ordering of the whole operator.

use serde::{Deserialize, Serialize};

use crate::dense::{Matrix, Tensor};
use crate::error::{NteError, Result};
use crate::tt::{tt_svd, TtMatrix, TtVector};

/// `log2(n)` when `n` is a power of two no smaller than 2.
pub fn log2_exact(n: usize) -> Option<usize> {
    (n >= 2 && n.is_power_of_two()).then(|| n.trailing_zeros() as usize)
}

fn require_pow2(n: usize, what: &str) -> Result<usize> {
    log2_exact(n).ok_or_else(|| NteError::Validation(format!("{what} {n} must be a power of two (>= 2)")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QttVector {
    tt: TtVector,
}

impl QttVector {
    /// Wraps a TT whose modes all have size 2.
    pub fn from_tt(tt: TtVector) -> Result<Self> {
        if tt.mode_sizes().iter().any(|&n| n != 2) {
            return Err(NteError::Validation("QTT modes must all have size 2".into()));
        }
        Ok(QttVector { tt })
    }

    pub fn tt(&self) -> &TtVector {
        &self.tt
    }

    pub fn into_tt(self) -> TtVector {
        self.tt
    }

    pub fn source_length(&self) -> usize {
        1 << self.tt.ndim()
    }

    pub fn dequantize(&self) -> Vec<f64> {
        self.tt.to_vec()
    }
}

/// Quantizes a length-`2^n` vector with relative accuracy `eps`.
pub fn quantize_vector(v: &[f64], eps: f64) -> Result<QttVector> {
    let n = require_pow2(v.len(), "vector length")?;
    let t = Tensor::new(vec![2; n], v.to_vec())?;
    Ok(QttVector { tt: tt_svd(&t, eps) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QttMatrix {
    tt: TtMatrix,
}

impl QttMatrix {
    pub fn from_tt(tt: TtMatrix) -> Result<Self> {
        if tt.row_sizes().iter().chain(tt.col_sizes()).any(|&n| n != 2) {
            return Err(NteError::Validation("QTT operator modes must all be 2 x 2".into()));
        }
        Ok(QttMatrix { tt })
    }

    pub fn tt(&self) -> &TtMatrix {
        &self.tt
    }

    pub fn into_tt(self) -> TtMatrix {
        self.tt
    }

    pub fn source_shape(&self) -> (usize, usize) {
        (self.tt.nrows(), self.tt.ncols())
    }

    pub fn expand(&self) -> Result<Matrix> {
        self.tt.expand()
    }

    pub fn matvec(&self, x: &QttVector) -> Result<QttVector> {
        Ok(QttVector { tt: self.tt.matvec(&x.tt)? })
    }
}

/// Converts a square `2^n x 2^n` matrix: reshape to row bits and column bits,
/// interleave them as `(i_1, j_1, i_2, j_2, ...)` and run TT-SVD on the
/// merged `4`-sized modes.
pub fn matrix_to_qtt(m: &Matrix, eps: f64) -> Result<QttMatrix> {
    if m.nrows() != m.ncols() {
        return Err(NteError::Validation(format!(
            "matrix_to_qtt needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = require_pow2(m.nrows(), "matrix side")?;
    Ok(QttMatrix { tt: square_to_qtt_tt(m, n, eps) })
}

fn square_to_qtt_tt(m: &Matrix, n: usize, eps: f64) -> TtMatrix {
    let side = m.nrows();
    let rm = Tensor::from_fn(&[side, side], |ix| m[(ix[0], ix[1])]);
    let bits = rm.reshape(&vec![2; 2 * n]).expect("power of two");
    let perm: Vec<usize> = (0..n).flat_map(|k| [k, n + k]).collect();
    let inter = bits.permute(&perm).expect("valid permutation");
    let merged = inter.reshape(&vec![4; n]).expect("same size");
    let tt = tt_svd(&merged, eps);
    TtMatrix::from_merged(tt, vec![2; n], vec![2; n]).expect("2 x 2 modes")
}

/// Algorithm for rank-1 TT operators: each factor is quantized on its own and
/// the resulting cores are concatenated. Size-1 factors (a single energy
/// group, for instance) are scalars and get folded into a neighbour.
pub fn tt_factors_to_qtt(factors: &[Matrix], eps: f64) -> Result<QttMatrix> {
    let mut scalar = 1.0;
    let mut parts: Vec<TtMatrix> = Vec::new();
    for (k, f) in factors.iter().enumerate() {
        if f.nrows() == 1 && f.ncols() == 1 {
            scalar *= f[(0, 0)];
            continue;
        }
        if f.nrows() != f.ncols() {
            return Err(NteError::Validation(format!("factor {k} is not square")));
        }
        let n = require_pow2(f.nrows(), &format!("factor {k} size"))?;
        parts.push(square_to_qtt_tt(f, n, eps));
    }
    if parts.is_empty() {
        return Err(NteError::Validation("operator has no factor of size >= 2".into()));
    }
    let mut cores = Vec::new();
    for p in &parts {
        cores.extend(p.cores());
    }
    cores[0] = cores[0].clone().scale(scalar);
    Ok(QttMatrix { tt: TtMatrix::from_cores(cores)? })
}

/// Converts a rank-1 TT-matrix with power-of-two square mode sizes.
pub fn tt_operator_to_qtt(a: &TtMatrix, eps: f64) -> Result<QttMatrix> {
    if a.max_rank() != 1 {
        return Err(NteError::Validation("tt_operator_to_qtt expects a rank-1 TT-matrix".into()));
    }
    let factors: Vec<Matrix> = a
        .cores()
        .iter()
        .map(|c| {
            let (m, n) = (c.shape()[1], c.shape()[2]);
            Matrix::from_row_slice(m, n, c.data())
        })
        .collect();
    tt_factors_to_qtt(&factors, eps)
}
