//! Discrete-ordinates transport: problem data and operator assembly.
//!
//! Unknowns are vertex values `ψ[g, ℓ, k, j, i]` stored row-major with mode
//! order `(energy, angle, z, y, x)` (`(energy, angle, x)` in 1D). Every
//! operator is a sum over octants of rank-1 Kronecker terms built from the
//! factor matrices in [`factors`]; the dense, TT and QTT representations all
//! come from the same term lists.

mod dense;
pub mod factors;
mod problem;
mod quadrature;
mod tensor;
mod terms;

pub use dense::{
    assemble_dense_operators, assemble_dense_operators_with_cap, DenseOperators, HSolver, KronSum, KronTerm,
    LossSolver, TransportSweep, DEFAULT_DENSE_CAP, DENSE_LU_LIMIT,
};
pub use factors::{angular_matrix, diff_matrix, integral_matrix, interp_matrix, octant_selector, Sign};
pub use problem::{
    CrossSections, GridSpec, MaterialSpec, ProblemFile, QuadratureSpec, RegionSpec, SpatialGrid, TransportProblem,
};
pub use quadrature::{build_quadrature, gauss_legendre, AngularQuadrature, Axis};
pub use tensor::{
    assemble_qtt_operators, assemble_tt_operators, tensor_block, TensorFormat, TensorOperators, ASSEMBLY_ROUNDING,
};
pub use terms::{operator_terms, row_materials, FactorTerm, OperatorKind};

/// An assembled operator set in one of the three representations.
#[derive(Clone, Debug)]
pub enum OperatorSet {
    Dense(DenseOperators),
    Tt(TensorOperators),
    Qtt(TensorOperators),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Dense,
    Tt,
    Qtt,
}

impl std::str::FromStr for Representation {
    type Err = crate::NteError;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dense" => Ok(Representation::Dense),
            "tt" => Ok(Representation::Tt),
            "qtt" => Ok(Representation::Qtt),
            other => Err(crate::NteError::Validation(format!("unknown mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for Representation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Representation::Dense => "dense",
            Representation::Tt => "tt",
            Representation::Qtt => "qtt",
        })
    }
}

impl OperatorSet {
    pub fn assemble(p: &TransportProblem, rep: Representation) -> crate::Result<Self> {
        Ok(match rep {
            Representation::Dense => OperatorSet::Dense(assemble_dense_operators(p)?),
            Representation::Tt => OperatorSet::Tt(assemble_tt_operators(p)?),
            Representation::Qtt => OperatorSet::Qtt(assemble_qtt_operators(p)?),
        })
    }

    pub fn representation(&self) -> Representation {
        match self {
            OperatorSet::Dense(_) => Representation::Dense,
            OperatorSet::Tt(_) => Representation::Tt,
            OperatorSet::Qtt(_) => Representation::Qtt,
        }
    }

    /// Stored entries of `H` in this representation.
    pub fn h_storage(&self) -> f64 {
        match self {
            OperatorSet::Dense(d) => d.h_storage_entries(),
            OperatorSet::Tt(t) | OperatorSet::Qtt(t) => t.h.num_params() as f64,
        }
    }
}
