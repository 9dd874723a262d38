//! Tensor trains.
//!
//! A [`TtVector`] stores cores `G_k` of shape `(r_{k-1}, n_k, r_k)` with
//! `r_0 = r_d = 1`; a [`TtMatrix`] stores cores of shape
//! `(r_{k-1}, m_k, n_k, r_k)` where `m_k` indexes rows and `n_k` columns.
//! Core data is row-major, so left and right unfoldings are plain views.

mod matrix;
mod modes;
mod svd;
mod vector;

pub use matrix::{TtMatrix, EXPAND_CAP};
pub use modes::{tt_mode_apply, tt_mode_contract, ModeContraction};
pub use svd::{tt_svd, tt_svd_with_max_rank};
pub use vector::TtVector;

pub(crate) use svd::{matrix_to_rm, truncated_svd};
pub(crate) use vector::left_multiply_core;

/// Stored-element count divided by the element count of the full object.
pub fn compression_ratio(stored: usize, full: f64) -> f64 {
    stored as f64 / full
}
