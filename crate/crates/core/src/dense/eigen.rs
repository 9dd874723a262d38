use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, norm2, Matrix};
use crate::error::{shape_err, NteError, Result};

/// Action of a linear operator on a full vector.
pub trait LinearMap {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
}

/// Something that can solve `A x = b`.
pub trait LinearSolve {
    fn dim(&self) -> usize;
    fn solve(&self, b: &[f64]) -> Result<Vec<f64>>;
}

impl LinearMap for Matrix {
    fn dim(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVectorView::from_slice(x, x.len());
        (self * v).as_slice().to_vec()
    }
}

/// LU factorization of a square dense matrix.
pub struct DenseLu {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl DenseLu {
    pub fn new(a: Matrix) -> Result<Self> {
        if !a.is_square() {
            return shape_err(format!("LU needs a square matrix, got {:?}", a.shape()));
        }
        let n = a.nrows();
        let scale = a.amax().max(f64::MIN_POSITIVE);
        let lu = a.lu();
        let u = lu.u();
        let min_pivot = (0..n).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        if !(min_pivot > scale * 1e-14) {
            return Err(NteError::Singular(format!(
                "LU pivot {min_pivot:.3e} is negligible relative to {scale:.3e}"
            )));
        }
        Ok(DenseLu { lu, n })
    }
}

impl LinearSolve for DenseLu {
    fn dim(&self) -> usize {
        self.n
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let rhs = nalgebra::DVector::from_column_slice(b);
        self.lu
            .solve(&rhs)
            .map(|x| x.as_slice().to_vec())
            .ok_or_else(|| NteError::Singular("LU solve failed".into()))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigenSettings {
    /// Relative tolerance on successive eigenvalue estimates.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EigenSettings {
    fn default() -> Self {
        EigenSettings {
            tol: 1e-10,
            max_iter: 10_000,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// Unit 2-norm, oriented so that its entries sum to a nonnegative value.
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

pub(crate) fn orient_unit(v: &mut [f64]) {
    let n = norm2(v);
    let sign = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x *= sign / n);
    }
}

/// Dominant eigenpair of `A x = λ B x` by power iteration on `A⁻¹ B`.
///
/// Converged when successive estimates agree to `tol` (relative) and the
/// eigenvector residual `‖A⁻¹Bx − λx‖ / |λ|` is below `100 tol`.
pub fn generalized_power_iteration(
    a: &dyn LinearSolve,
    b: &dyn LinearMap,
    settings: &EigenSettings,
) -> Result<EigenPair> {
    let n = a.dim();
    if b.dim() != n {
        return shape_err(format!("A is {n}-dimensional, B is {}", b.dim()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut x: Vec<f64> = (0..n).map(|_| 0.5 + rng.random::<f64>()).collect();
    orient_unit(&mut x);
    let mut lambda = f64::NAN;
    let mut history = Vec::new();
    for it in 1..=settings.max_iter {
        let bx = b.apply(&x);
        let y = a.solve(&bx)?;
        let new_lambda = dot(&x, &y);
        if !new_lambda.is_finite() || norm2(&y) == 0.0 {
            return Err(NteError::Singular(
                "power iteration produced a zero or non-finite iterate".into(),
            ));
        }
        let resid = y
            .iter()
            .zip(&x)
            .map(|(yi, xi)| (yi - new_lambda * xi).powi(2))
            .sum::<f64>()
            .sqrt()
            / new_lambda.abs();
        history.push(resid);
        let dl = (new_lambda - lambda).abs();
        lambda = new_lambda;
        x = y;
        orient_unit(&mut x);
        if dl <= settings.tol * lambda.abs() && resid <= 100.0 * settings.tol {
            return Ok(EigenPair {
                value: lambda,
                vector: x,
                iterations: it,
                residual: resid,
            });
        }
    }
    let last = history.last().copied().unwrap_or(f64::NAN);
    Err(NteError::not_converged(
        "generalized power iteration",
        settings.max_iter,
        last,
        history,
    ))
}

/// Dominant eigenpair of the dense pencil `(A, B)` using an LU factorization of `A`.
pub fn dense_generalized_eigensolve(a: &Matrix, b: &Matrix, settings: &EigenSettings) -> Result<EigenPair> {
    if a.shape() != b.shape() || !a.is_square() {
        return shape_err(format!("pencil shapes {:?} and {:?}", a.shape(), b.shape()));
    }
    let lu = DenseLu::new(a.clone())?;
    generalized_power_iteration(&lu, b, settings)
}
