use serde::{Deserialize, Serialize};

use super::factors::{angular_matrix, diff_matrix, integral_matrix, interp_matrix, octant_selector, Sign};
use super::problem::{CrossSections, TransportProblem};
use super::quadrature::Axis;
use crate::dense::Matrix;
use crate::error::{NteError, Result};

/// The operator pieces of `H Ψ = (S + F/k) Ψ` and `(H + α V⁻¹) Ψ = (S + F) Ψ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Hx,
    Hy,
    Hz,
    Hsigma,
    S,
    F,
    Vinv,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 7] = [
        OperatorKind::Hx,
        OperatorKind::Hy,
        OperatorKind::Hz,
        OperatorKind::Hsigma,
        OperatorKind::S,
        OperatorKind::F,
        OperatorKind::Vinv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Hx => "Hx",
            OperatorKind::Hy => "Hy",
            OperatorKind::Hz => "Hz",
            OperatorKind::Hsigma => "Hsigma",
            OperatorKind::S => "S",
            OperatorKind::F => "F",
            OperatorKind::Vinv => "Vinv",
        }
    }

    fn depends_on_material(self) -> bool {
        matches!(self, OperatorKind::Hsigma | OperatorKind::S | OperatorKind::F | OperatorKind::Vinv)
    }
}

/// One rank-1 term `E ∘ A ∘ X_1 ∘ ... ∘ X_dims` of an operator, in mode order
/// `(energy, angle, spatial...)`.
///
/// When `material` is set the term applies only to equation rows whose cell
/// holds that material; this happens only for heterogeneous problems.
#[derive(Clone, Debug)]
pub struct FactorTerm {
    pub octant: usize,
    pub material: Option<usize>,
    pub factors: Vec<Matrix>,
}

/// Energy factor of a material-dependent operator.
fn energy_factor(kind: OperatorKind, xs: &CrossSections) -> Result<Matrix> {
    let g = xs.groups();
    Ok(match kind {
        OperatorKind::Hsigma => Matrix::from_diagonal(&nalgebra::DVector::from_column_slice(&xs.sigma_t)),
        OperatorKind::S => Matrix::from_fn(g, g, |i, j| xs.sigma_s[i][j]),
        OperatorKind::F => Matrix::from_fn(g, g, |i, j| xs.chi[i] * xs.nu_sigma_f[j]),
        OperatorKind::Vinv => {
            let v = xs
                .velocity
                .as_ref()
                .ok_or_else(|| NteError::Validation(format!("material '{}' has no velocities", xs.name)))?;
            Matrix::from_fn(g, g, |i, j| if i == j { 1.0 / v[i] } else { 0.0 })
        }
        _ => Matrix::identity(g, g),
    })
}

/// Spatial factors in storage order (`[x]` or `[z, y, x]`).
fn spatial_factors(p: &TransportProblem, kind: OperatorKind, signs: [f64; 3]) -> Vec<Matrix> {
    let grid = &p.grid;
    let with_bc = !matches!(kind, OperatorKind::S | OperatorKind::F);
    let diff_axis = match kind {
        OperatorKind::Hx => Some(0),
        OperatorKind::Hy => Some(1),
        OperatorKind::Hz => Some(2),
        _ => None,
    };
    (0..grid.dims)
        .rev()
        .map(|a| {
            let s = Sign::of(signs[a]);
            if diff_axis == Some(a) {
                diff_matrix(grid.nodes[a], s, grid.step(a))
            } else {
                interp_matrix(grid.nodes[a], s, with_bc)
            }
        })
        .collect()
}

/// Per-octant rank-1 terms of `kind`. Streaming terms along axes the problem
/// does not have yield an empty list.
pub fn operator_terms(p: &TransportProblem, kind: OperatorKind) -> Result<Vec<FactorTerm>> {
    let axis_index = match kind {
        OperatorKind::Hx => Some(0),
        OperatorKind::Hy => Some(1),
        OperatorKind::Hz => Some(2),
        _ => None,
    };
    if axis_index.is_some_and(|a| a >= p.grid.dims) {
        return Ok(Vec::new());
    }
    let q = &p.quadrature;
    let materials: Vec<Option<usize>> = match (kind.depends_on_material(), p.uniform_material()) {
        (false, _) => vec![None],
        (true, Some(m)) => vec![Some(m)],
        (true, None) => {
            let mut used: Vec<usize> = p.cell_material.clone();
            used.sort_unstable();
            used.dedup();
            used.into_iter().map(Some).collect()
        }
    };
    let uniform = p.uniform_material().is_some();
    let mut terms = Vec::new();
    for o in 1..=q.num_octants() {
        let signs = q.octant_signs(o)?;
        let angle = match kind {
            OperatorKind::Hx => angular_matrix(q, Axis::Mu, o)?,
            OperatorKind::Hy => angular_matrix(q, Axis::Eta, o)?,
            OperatorKind::Hz => angular_matrix(q, Axis::Xi, o)?,
            OperatorKind::Hsigma | OperatorKind::Vinv => octant_selector(q, o)?,
            OperatorKind::S | OperatorKind::F => integral_matrix(q, o)?,
        };
        let spatial = spatial_factors(p, kind, signs);
        for &m in &materials {
            let energy = match m {
                Some(m) => energy_factor(kind, &p.materials[m])?,
                None => Matrix::identity(p.groups(), p.groups()),
            };
            let mut factors = vec![energy, angle.clone()];
            factors.extend(spatial.iter().cloned());
            terms.push(FactorTerm {
                octant: o,
                material: if uniform { None } else { m },
                factors,
            });
        }
    }
    Ok(terms)
}

/// Material of the cell whose equation sits in each spatial row, for the
/// sweep directions `signs`. Boundary rows take the adjacent cell.
pub fn row_materials(p: &TransportProblem, signs: [f64; 3]) -> Vec<usize> {
    let shape = p.grid.spatial_shape();
    let cells = p.grid.cell_shape();
    let dims = p.grid.dims;
    let total: usize = shape.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; dims];
    for r in 0..total {
        let mut rem = r;
        for pos in (0..dims).rev() {
            idx[pos] = rem % shape[pos];
            rem /= shape[pos];
        }
        let mut cell = 0;
        for pos in 0..dims {
            let axis = dims - 1 - pos;
            let n = shape[pos];
            let c = if signs[axis] > 0.0 {
                idx[pos].max(1) - 1
            } else {
                idx[pos].min(n - 2)
            };
            cell = cell * cells[pos] + c;
        }
        out.push(p.cell_material[cell]);
    }
    out
}
