use serde::{Deserialize, Serialize};

use crate::error::{NteError, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n from the Tricomi initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Discrete-ordinates set with the octant ordering used by the operators.
///
/// Octant `o` (1-based) has sign bits `o - 1 = b_μ + 2 b_η + 4 b_ξ`, where a set
/// bit means a positive cosine. In 1D there are two octants, `μ < 0` first, and
/// `η = sqrt(1 - μ²)`, `ξ = 0` are carried only to keep every ordinate on the
/// unit sphere; the operators read `μ` alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularQuadrature {
    pub n: usize,
    pub dims: usize,
    pub mu: Vec<f64>,
    pub eta: Vec<f64>,
    pub xi: Vec<f64>,
    pub weights: Vec<f64>,
    /// Half-open index range of each octant, in octant order.
    pub octant_ranges: Vec<(usize, usize)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Mu,
    Eta,
    Xi,
}

impl AngularQuadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn num_octants(&self) -> usize {
        self.octant_ranges.len()
    }

    pub fn cosines(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::Mu => &self.mu,
            Axis::Eta => &self.eta,
            Axis::Xi => &self.xi,
        }
    }

    /// Signs `(μ, η, ξ)` of octant `o` (1-based), each `+1` or `-1`.
    pub fn octant_signs(&self, o: usize) -> Result<[f64; 3]> {
        check_octant(o, self.num_octants())?;
        let b = o - 1;
        let s = |bit: usize| if b & bit != 0 { 1.0 } else { -1.0 };
        Ok([s(1), s(2), s(4)])
    }

    /// Octant (1-based) containing ordinate `l`.
    pub fn octant_of(&self, l: usize) -> usize {
        self.octant_ranges
            .iter()
            .position(|&(a, b)| (a..b).contains(&l))
            .map(|o| o + 1)
            .expect("ordinate index out of range")
    }
}

pub(crate) fn check_octant(o: usize, count: usize) -> Result<()> {
    if o == 0 || o > count {
        return Err(NteError::Validation(format!("octant {o} is not in 1..={count}")));
    }
    Ok(())
}

/// Builds the angular quadrature.
///
/// 1D: `L = N` Gauss–Legendre ordinates. 3D: a square set of `L = 2N²`
/// ordinates. The in-plane cosines `(μ, η)` are the `N` Gauss–Legendre nodes
/// scaled by `κ = min(1, 0.95 / (√2 · max node))` so that `μ² + η² < 1`, and
/// `ξ = ±sqrt(1 - μ² - η²)`. Weights are products of the Gauss–Legendre
/// weights. In both cases weights sum to one.
pub fn build_quadrature(n: usize, dims: usize) -> Result<AngularQuadrature> {
    if n < 2 || n % 2 != 0 {
        return Err(NteError::Validation(format!("quadrature order N={n} must be even and >= 2")));
    }
    let (nodes, w) = gauss_legendre(n);
    match dims {
        1 => {
            let total: f64 = w.iter().sum();
            Ok(AngularQuadrature {
                n,
                dims,
                eta: nodes.iter().map(|m| (1.0 - m * m).sqrt()).collect(),
                xi: vec![0.0; n],
                mu: nodes,
                weights: w.iter().map(|x| x / total).collect(),
                octant_ranges: vec![(0, n / 2), (n / 2, n)],
            })
        }
        3 => {
            let xmax = nodes[n - 1];
            let kappa = (0.95 / (std::f64::consts::SQRT_2 * xmax)).min(1.0);
            let half = n / 2;
            let (mut mu, mut eta, mut xi, mut wt) = (vec![], vec![], vec![], vec![]);
            let mut ranges = Vec::with_capacity(8);
            for b in 0..8usize {
                let start = mu.len();
                let pick = |positive: bool| -> std::ops::Range<usize> {
                    if positive {
                        half..n
                    } else {
                        0..half
                    }
                };
                for a in pick(b & 1 != 0) {
                    for c in pick(b & 2 != 0) {
                        let (m, e) = (kappa * nodes[a], kappa * nodes[c]);
                        let z = (1.0 - m * m - e * e).sqrt();
                        mu.push(m);
                        eta.push(e);
                        xi.push(if b & 4 != 0 { z } else { -z });
                        wt.push(w[a] * w[c]);
                    }
                }
                ranges.push((start, mu.len()));
            }
            let total: f64 = wt.iter().sum();
            Ok(AngularQuadrature {
                n,
                dims,
                mu,
                eta,
                xi,
                weights: wt.iter().map(|x| x / total).collect(),
                octant_ranges: ranges,
            })
        }
        d => Err(NteError::Validation(format!("dimensionality {d} is not supported (use 1 or 3)"))),
    }
}
