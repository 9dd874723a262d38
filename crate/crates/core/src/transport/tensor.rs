use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::problem::TransportProblem;
use super::terms::{operator_terms, OperatorKind};
use crate::dense::{Matrix, Tensor};
use crate::error::{NteError, Result};
use crate::qtt::{log2_exact, tt_factors_to_qtt};
use crate::tt::{tt_svd, TtMatrix, TtVector};

/// Relative rounding applied after summing the per-octant terms.
pub const ASSEMBLY_ROUNDING: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorFormat {
    Tt,
    Qtt,
}

/// Operators in TT-matrix form. In QTT format every mode has size 2 and the
/// bits of each physical mode follow one another, most significant first, so
/// a full vector is converted by a plain reshape in both formats.
#[derive(Clone, Debug)]
pub struct TensorOperators {
    pub format: TensorFormat,
    /// Physical full-grid shape `(G, L, spatial...)`.
    pub full_shape: Vec<usize>,
    pub h: TtMatrix,
    pub s: TtMatrix,
    pub f: TtMatrix,
    pub vinv: Option<TtMatrix>,
    /// `Hx`, `Hy`, `Hz`, `Hsigma` (only those the problem has).
    pub h_parts: BTreeMap<&'static str, TtMatrix>,
    /// Number of rank-1 terms summed into each operator.
    pub term_counts: BTreeMap<&'static str, usize>,
}

impl TensorOperators {
    /// Mode sizes of vectors the operators act on.
    pub fn mode_sizes(&self) -> Vec<usize> {
        self.h.col_sizes().to_vec()
    }

    pub fn dim(&self) -> usize {
        self.full_shape.iter().product()
    }

    pub fn get(&self, kind: OperatorKind) -> Option<&TtMatrix> {
        match kind {
            OperatorKind::S => Some(&self.s),
            OperatorKind::F => Some(&self.f),
            OperatorKind::Vinv => self.vinv.as_ref(),
            k => self.h_parts.get(k.name()),
        }
    }

    /// Converts a full row-major vector to this format's TT layout.
    pub fn compress(&self, full: &[f64], eps: f64) -> Result<TtVector> {
        let t = Tensor::new(self.mode_sizes(), full.to_vec())?;
        Ok(tt_svd(&t, eps))
    }

    /// `H + α V⁻¹`, rounded.
    pub fn shifted_h(&self, alpha: f64) -> Result<TtMatrix> {
        if alpha == 0.0 {
            return Ok(self.h.clone());
        }
        let v = self
            .vinv
            .as_ref()
            .ok_or_else(|| NteError::Validation("alpha mode needs group velocities".into()))?;
        Ok(self.h.add(&v.scale(alpha))?.round(ASSEMBLY_ROUNDING))
    }
}

fn check_tensor_problem(p: &TransportProblem, format: TensorFormat) -> Result<()> {
    p.validate()?;
    if p.uniform_material().is_none() {
        return Err(NteError::Unsupported(
            "heterogeneous materials are only supported in dense mode".into(),
        ));
    }
    if format == TensorFormat::Qtt {
        p.grid.check_power_of_two()?;
        let (g, l) = (p.groups(), p.ordinates());
        if g != 1 && log2_exact(g).is_none() {
            return Err(NteError::Validation(format!("group count {g} must be a power of two for QTT")));
        }
        if log2_exact(l).is_none() {
            return Err(NteError::Validation(format!("ordinate count {l} must be a power of two for QTT")));
        }
    }
    Ok(())
}

fn build(p: &TransportProblem, format: TensorFormat, kind: OperatorKind) -> Result<Option<(TtMatrix, usize)>> {
    let terms = operator_terms(p, kind)?;
    if terms.is_empty() {
        return Ok(None);
    }
    let mats: Vec<TtMatrix> = terms
        .iter()
        .map(|t| match format {
            TensorFormat::Tt => TtMatrix::from_factors(&t.factors),
            TensorFormat::Qtt => tt_factors_to_qtt(&t.factors, 1e-14).map(|q| q.into_tt()),
        })
        .collect::<Result<_>>()?;
    Ok(Some((TtMatrix::sum_rounded(&mats, ASSEMBLY_ROUNDING)?, terms.len())))
}

fn assemble(p: &TransportProblem, format: TensorFormat) -> Result<TensorOperators> {
    check_tensor_problem(p, format)?;
    let mut h_parts = BTreeMap::new();
    let mut term_counts = BTreeMap::new();
    for kind in [OperatorKind::Hx, OperatorKind::Hy, OperatorKind::Hz, OperatorKind::Hsigma] {
        if let Some((m, n)) = build(p, format, kind)? {
            h_parts.insert(kind.name(), m);
            term_counts.insert(kind.name(), n);
        }
    }
    let parts: Vec<TtMatrix> = h_parts.values().cloned().collect();
    let h = TtMatrix::sum_rounded(&parts, ASSEMBLY_ROUNDING)?;
    term_counts.insert("H", term_counts.values().sum());
    let mut take = |kind: OperatorKind| -> Result<TtMatrix> {
        let (m, n) = build(p, format, kind)?.expect("every problem has S and F terms");
        term_counts.insert(kind.name(), n);
        Ok(m)
    };
    let s = take(OperatorKind::S)?;
    let f = take(OperatorKind::F)?;
    let vinv = if p.has_velocities() {
        Some(take(OperatorKind::Vinv)?)
    } else {
        None
    };
    Ok(TensorOperators {
        format,
        full_shape: p.mode_sizes(),
        h,
        s,
        f,
        vinv,
        h_parts,
        term_counts,
    })
}

/// Per-octant rank-1 TT-matrix terms over modes `(energy, angle, spatial...)`,
/// summed and rounded.
pub fn assemble_tt_operators(p: &TransportProblem) -> Result<TensorOperators> {
    assemble(p, TensorFormat::Tt)
}

/// Each rank-1 term is quantized factor by factor, then the terms are summed
/// and rounded.
pub fn assemble_qtt_operators(p: &TransportProblem) -> Result<TensorOperators> {
    assemble(p, TensorFormat::Qtt)
}

/// Expanded spatial block of a tensor operator for fixed (group, ordinate)
/// row and column indices.
pub fn tensor_block(ops: &TensorOperators, m: &TtMatrix, row: (usize, usize), col: (usize, usize)) -> Result<Matrix> {
    let (g, l) = (ops.full_shape[0], ops.full_shape[1]);
    let (rp, cp) = match ops.format {
        TensorFormat::Tt => (vec![row.0, row.1], vec![col.0, col.1]),
        TensorFormat::Qtt => {
            let bits = |n: usize| if n == 1 { 0 } else { n.trailing_zeros() as usize };
            let to_bits = |v: usize, nb: usize| (0..nb).rev().map(move |b| (v >> b) & 1);
            let (bg, bl) = (bits(g), bits(l));
            let rp: Vec<usize> = to_bits(row.0, bg).chain(to_bits(row.1, bl)).collect();
            let cp: Vec<usize> = to_bits(col.0, bg).chain(to_bits(col.1, bl)).collect();
            (rp, cp)
        }
    };
    if rp.is_empty() {
        return m.expand();
    }
    m.block(&rp, &cp)?.expand()
}
