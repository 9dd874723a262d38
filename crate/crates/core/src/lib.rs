//! Tensor-train (TT) and quantized tensor-train (QTT) numerics, plus a
//! deterministic discrete-ordinates criticality solver built on top of them.
//!
//! The crate is organised bottom-up:
//!
//! - [`dense`]: multiway arrays, Kronecker/tensor/mode products and the dense
//!   eigensolvers used as oracles.
//! - [`tt`]: TT vectors and TT matrices (TT-SVD, rounding, arithmetic, matvec).
//! - [`qtt`]: quantization of vectors and operators to `2 x 2 x ... x 2` trains.
//! - [`solver`]: alternating linear solvers (AMEn-style `linsolve`, fitted matvec).
//! - [`transport`]: quadrature, grids, cross sections and operator assembly in
//!   dense, TT and QTT form.
//! - [`criticality`]: k-effective fixed-point and alpha secant iterations.
//! - [`report`]: serializable run reports and report comparison.
//!
//! All full-grid data uses row-major linearization. For transport unknowns the
//! mode order is `(energy, angle, z, y, x)` with `x` varying fastest.

pub mod criticality;
pub mod dense;
pub mod error;
pub mod qtt;
pub mod report;
pub mod solver;
pub mod transport;
pub mod tt;

pub use dense::{kron, kron_all, Matrix, Tensor};
pub use error::{NteError, Result};
pub use qtt::{QttMatrix, QttVector};
pub use tt::{TtMatrix, TtVector};
