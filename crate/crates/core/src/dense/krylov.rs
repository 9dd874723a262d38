use super::{dot, norm2};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual `‖b − A x‖ / ‖b‖`.
    pub residual: f64,
    pub converged: bool,
}

/// Restarted GMRES with right preconditioning: solves `A M⁻¹ u = b − A x0`
/// and returns `x = x0 + M⁻¹ u`.
pub fn gmres(
    apply: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    precond: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<GmresOutcome> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    if bnorm == 0.0 {
        return Ok(GmresOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
            converged: true,
        });
    }
    let restart = restart.max(1);
    let mut total = 0;
    while total < max_iter {
        let ax = apply(&x)?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        let rel = beta / bnorm;
        if rel <= tol {
            return Ok(GmresOutcome {
                x,
                iterations: total,
                residual: rel,
                converged: true,
            });
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            if total >= max_iter {
                break;
            }
            total += 1;
            let zk = precond(&v[k])?;
            let mut w = apply(&zk)?;
            z.push(zk);
            for (i, vi) in v.iter().enumerate() {
                let hik = dot(&w, vi);
                h[i][k] = hik;
                w.iter_mut().zip(vi).for_each(|(wj, vj)| *wj -= hik * vj);
            }
            let hk1 = norm2(&w);
            h[k + 1][k] = hk1;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() / bnorm <= tol || hk1 == 0.0 {
                break;
            }
            v.push(w.iter().map(|wj| wj / hk1).collect());
        }
        // back substitution
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            x.iter_mut().zip(zi).for_each(|(xj, zj)| *xj += yi * zj);
        }
        if k_used == 0 {
            break;
        }
    }
    let ax = apply(&x)?;
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let rel = norm2(&r) / bnorm;
    Ok(GmresOutcome {
        x,
        iterations: total,
        residual: rel,
        converged: rel <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{LinearMap, Matrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_nonsymmetric_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 30;
        let a = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                4.0
            } else {
                rng.random_range(-0.2..0.2)
            }
        });
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let b = a.apply(&xs);
        let out = gmres(
            &|x| Ok(a.apply(x)),
            &|x| Ok(x.to_vec()),
            &b,
            None,
            1e-12,
            10,
            500,
        )
        .unwrap();
        assert!(out.converged);
        for (u, v) in out.x.iter().zip(&xs) {
            assert!((u - v).abs() < 1e-9);
        }
    }
}
