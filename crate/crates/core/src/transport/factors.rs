//! Single-mode factor matrices of the transport operators.
//!
//! Vertex `0` is the low end of an axis. For a positive direction cosine the
//! inflow boundary is vertex `0`: the row there carries the boundary condition
//! and row `i >= 1` holds the diamond-difference equation of the cell between
//! vertices `i - 1` and `i`. For a negative cosine the inflow boundary is the
//! last vertex and row `i < n - 1` belongs to the cell between `i` and `i + 1`.

use super::quadrature::{check_octant, AngularQuadrature, Axis};
use crate::dense::Matrix;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x > 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Differentiation matrix `D±` with the boundary row embedded.
pub fn diff_matrix(n: usize, sign: Sign, delta: f64) -> Matrix {
    let h = 1.0 / delta;
    Matrix::from_fn(n, n, |i, j| match sign {
        Sign::Plus if i == j => h,
        Sign::Plus if i == j + 1 => -h,
        Sign::Minus if i == j => -h,
        Sign::Minus if j == i + 1 => h,
        _ => 0.0,
    })
}

/// Diamond-difference averaging matrix `Ip±`. Without the boundary condition
/// the inflow row is zero.
pub fn interp_matrix(n: usize, sign: Sign, with_bc: bool) -> Matrix {
    let mut m = Matrix::from_fn(n, n, |i, j| match sign {
        Sign::Plus if i == j || i == j + 1 => 0.5,
        Sign::Minus if i == j || j == i + 1 => 0.5,
        _ => 0.0,
    });
    if !with_bc {
        let row = match sign {
            Sign::Plus => 0,
            Sign::Minus => n - 1,
        };
        m.row_mut(row).fill(0.0);
    }
    m
}

/// `C_o ⊗ diag(cosines)`: the direction cosines of octant `o`, zero elsewhere.
pub fn angular_matrix(q: &AngularQuadrature, axis: Axis, octant: usize) -> Result<Matrix> {
    check_octant(octant, q.num_octants())?;
    let (a, b) = q.octant_ranges[octant - 1];
    let c = q.cosines(axis);
    let l = q.len();
    Ok(Matrix::from_fn(l, l, |i, j| if i == j && (a..b).contains(&i) { c[i] } else { 0.0 }))
}

/// Selector `C_o ⊗ I` of the ordinates in octant `o`.
pub fn octant_selector(q: &AngularQuadrature, octant: usize) -> Result<Matrix> {
    check_octant(octant, q.num_octants())?;
    let (a, b) = q.octant_ranges[octant - 1];
    let l = q.len();
    Ok(Matrix::from_fn(l, l, |i, j| if i == j && (a..b).contains(&i) { 1.0 } else { 0.0 }))
}

/// Rows of octant `o` hold the full quadrature weight row, other rows are zero.
/// Summed over octants this is `1 wᵀ`, the angular integral broadcast to every
/// outgoing ordinate.
pub fn integral_matrix(q: &AngularQuadrature, octant: usize) -> Result<Matrix> {
    check_octant(octant, q.num_octants())?;
    let (a, b) = q.octant_ranges[octant - 1];
    let l = q.len();
    Ok(Matrix::from_fn(l, l, |i, j| if (a..b).contains(&i) { q.weights[j] } else { 0.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::quadrature::build_quadrature;

    fn m3(v: [[f64; 3]; 3]) -> Matrix {
        Matrix::from_fn(3, 3, |i, j| v[i][j])
    }

    #[test]
    fn displayed_difference_matrices() {
        assert_eq!(
            diff_matrix(3, Sign::Plus, 1.0),
            m3([[1.0, 0.0, 0.0], [-1.0, 1.0, 0.0], [0.0, -1.0, 1.0]])
        );
        assert_eq!(
            diff_matrix(3, Sign::Minus, 1.0),
            m3([[-1.0, 1.0, 0.0], [0.0, -1.0, 1.0], [0.0, 0.0, -1.0]])
        );
        assert_eq!(diff_matrix(4, Sign::Plus, 0.5), diff_matrix(4, Sign::Plus, 1.0) * 2.0);
    }

    #[test]
    fn displayed_interpolation_matrices() {
        assert_eq!(
            interp_matrix(3, Sign::Minus, true),
            m3([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]]) * 0.5
        );
        assert_eq!(
            interp_matrix(3, Sign::Plus, false),
            m3([[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 1.0]]) * 0.5
        );
        assert_eq!(
            interp_matrix(3, Sign::Plus, true),
            m3([[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 1.0]]) * 0.5
        );
        assert_eq!(
            interp_matrix(3, Sign::Minus, false),
            m3([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [0.0, 0.0, 0.0]]) * 0.5
        );
        for s in [Sign::Plus, Sign::Minus] {
            let m = interp_matrix(6, s, true);
            assert!(m.row_iter().all(|r| [0.5, 1.0].contains(&r.sum())));
            let m = interp_matrix(6, s, false);
            assert_eq!(m.row_iter().filter(|r| r.sum() == 0.0).count(), 1);
        }
    }

    #[test]
    fn angular_matrices_partition_the_cosines() {
        let q = build_quadrature(4, 3).unwrap();
        for axis in [Axis::Mu, Axis::Eta, Axis::Xi] {
            let mut total = Matrix::zeros(q.len(), q.len());
            for o in 1..=8 {
                total += angular_matrix(&q, axis, o).unwrap();
            }
            let want = Matrix::from_diagonal(&nalgebra::DVector::from_column_slice(q.cosines(axis)));
            assert_eq!(total, want);
        }
        let q2 = build_quadrature(2, 3).unwrap();
        let m = angular_matrix(&q2, Axis::Mu, 1).unwrap();
        assert_eq!(m.iter().filter(|v| **v != 0.0).count(), 1);
        assert!(m[(0, 0)] < 0.0);
        assert!(angular_matrix(&q2, Axis::Mu, 9).is_err());
        assert!(angular_matrix(&q2, Axis::Mu, 0).is_err());
    }

    #[test]
    fn integral_matrices_sum_to_rank_one_broadcast() {
        let q = build_quadrature(4, 3).unwrap();
        let mut total = Matrix::zeros(q.len(), q.len());
        for o in 1..=8 {
            total += integral_matrix(&q, o).unwrap();
        }
        let ones = vec![1.0; q.len()];
        let applied = &total * nalgebra::DVector::from_column_slice(&ones);
        assert!(applied.iter().all(|v| (v - 1.0).abs() < 1e-14));
        // every row equals wᵀ, so the sum is the rank-one matrix 1 wᵀ
        for i in 0..q.len() {
            for j in 0..q.len() {
                assert_eq!(total[(i, j)], q.weights[j]);
            }
        }
    }
}
