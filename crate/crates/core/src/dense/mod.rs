//! Dense multiway arrays and the dense linear-algebra kernels used both as
//! building blocks for the TT code and as independent oracles.

mod eigen;
mod krylov;
mod products;
mod tensor;

pub use eigen::{
    dense_generalized_eigensolve, generalized_power_iteration, DenseLu, EigenPair, EigenSettings,
    LinearMap, LinearSolve,
};
pub use krylov::{gmres, GmresOutcome};
pub use products::{contract_with_vector, kron, kron_all, mode_product, tensor_product, tensordot};
pub use tensor::Tensor;

/// Dense real matrix. nalgebra storage is column-major; conversions to and
/// from [`Tensor`] handle the row-major layout used everywhere else.
pub type Matrix = nalgebra::DMatrix<f64>;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
