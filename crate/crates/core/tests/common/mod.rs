//! Index-loop evaluation of the discretized transport equations, written
//! directly from the per-vertex diamond-difference equations. Used as the
//! ground truth for every operator assembled by the library.
#![allow(dead_code)]

use qtt_nte::transport::{CrossSections, TransportProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Op {
    Hx,
    Hy,
    Hz,
    Hsigma,
    S,
    F,
    Vinv,
}

pub const ALL_OPS: [Op; 7] = [Op::Hx, Op::Hy, Op::Hz, Op::Hsigma, Op::S, Op::F, Op::Vinv];

/// Stencil of one axis at one equation row: list of (vertex, weight).
fn stencil(idx: usize, n: usize, positive: bool, delta: f64, diff: bool, with_bc: bool) -> Vec<(usize, f64)> {
    let bc_row = (positive && idx == 0) || (!positive && idx == n - 1);
    if bc_row {
        return if diff {
            vec![(idx, if positive { 1.0 } else { -1.0 } / delta)]
        } else if with_bc {
            vec![(idx, 0.5)]
        } else {
            vec![]
        };
    }
    let (lo, hi) = if positive { (idx - 1, idx) } else { (idx, idx + 1) };
    if diff {
        vec![(hi, 1.0 / delta), (lo, -1.0 / delta)]
    } else {
        vec![(lo, 0.5), (hi, 0.5)]
    }
}

fn cell_of(idx: usize, n: usize, positive: bool) -> usize {
    if positive {
        idx.max(1) - 1
    } else {
        idx.min(n - 2)
    }
}

/// Applies operator `op` to the full vector `psi` by explicit loops.
pub fn loop_apply(p: &TransportProblem, op: Op, psi: &[f64]) -> Vec<f64> {
    let g_n = p.groups();
    let l_n = p.ordinates();
    let dims = p.grid.dims;
    // physical axis sizes x, y, z (1 for absent axes)
    let nx = p.grid.nodes[0];
    let (ny, nz) = if dims == 3 { (p.grid.nodes[1], p.grid.nodes[2]) } else { (1, 1) };
    let at = |g: usize, l: usize, k: usize, j: usize, i: usize| psi[((g * l_n + l) * nz + k) * ny * nx + j * nx + i];
    let q = &p.quadrature;
    let (cx, cy) = if dims == 3 {
        (p.grid.cell_shape()[2], p.grid.cell_shape()[1])
    } else {
        (nx - 1, 1)
    };
    let mut out = vec![0.0; psi.len()];
    if dims == 1 && matches!(op, Op::Hy | Op::Hz) {
        return out;
    }
    let with_bc = !matches!(op, Op::S | Op::F);
    for g in 0..g_n {
        for l in 0..l_n {
            let (pm, pe, px) = (q.mu[l] > 0.0, q.eta[l] > 0.0, q.xi[l] > 0.0);
            for k in 0..nz {
                for j in 0..ny {
                    for i in 0..nx {
                        let st = |axis: usize, idx: usize, n: usize, pos: bool| -> Vec<(usize, f64)> {
                            if n == 1 {
                                return vec![(0, 1.0)];
                            }
                            let diff = matches!((op, axis), (Op::Hx, 0) | (Op::Hy, 1) | (Op::Hz, 2));
                            stencil(idx, n, pos, p.grid.step(axis), diff, with_bc)
                        };
                        let sx = st(0, i, nx, pm);
                        let sy = st(1, j, ny, pe);
                        let sz = st(2, k, nz, px);
                        let cell = {
                            let ci = cell_of(i, nx, pm);
                            let cj = if ny > 1 { cell_of(j, ny, pe) } else { 0 };
                            let ck = if nz > 1 { cell_of(k, nz, px) } else { 0 };
                            (ck * cy + cj) * cx + ci
                        };
                        let xs: &CrossSections = &p.materials[p.cell_material[cell]];
                        let avg = |g2: usize, l2: usize| -> f64 {
                            let mut s = 0.0;
                            for &(kk, wz) in &sz {
                                for &(jj, wy) in &sy {
                                    for &(ii, wx) in &sx {
                                        s += wz * wy * wx * at(g2, l2, kk, jj, ii);
                                    }
                                }
                            }
                            s
                        };
                        let v = match op {
                            Op::Hx => q.mu[l] * avg(g, l),
                            Op::Hy => q.eta[l] * avg(g, l),
                            Op::Hz => q.xi[l] * avg(g, l),
                            Op::Hsigma => xs.sigma_t[g] * avg(g, l),
                            Op::Vinv => avg(g, l) / xs.velocity.as_ref().unwrap()[g],
                            Op::S | Op::F => {
                                let mut s = 0.0;
                                for g2 in 0..g_n {
                                    let c = if op == Op::S {
                                        xs.sigma_s[g][g2]
                                    } else {
                                        xs.chi[g] * xs.nu_sigma_f[g2]
                                    };
                                    if c == 0.0 {
                                        continue;
                                    }
                                    for l2 in 0..l_n {
                                        s += c * q.weights[l2] * avg(g2, l2);
                                    }
                                }
                                s
                            }
                        };
                        out[((g * l_n + l) * nz + k) * ny * nx + j * nx + i] = v;
                    }
                }
            }
        }
    }
    out
}

pub fn loop_h(p: &TransportProblem, psi: &[f64]) -> Vec<f64> {
    let mut h = vec![0.0; psi.len()];
    for op in [Op::Hx, Op::Hy, Op::Hz, Op::Hsigma] {
        let v = loop_apply(p, op, psi);
        h.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
    }
    h
}

pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Two-group material used for the operator checks.
pub fn two_group_xs() -> CrossSections {
    CrossSections {
        name: "two-group".into(),
        sigma_t: vec![1.0, 1.5],
        sigma_s: vec![vec![0.3, 0.0], vec![0.2, 0.8]],
        nu_sigma_f: vec![0.05, 0.6],
        chi: vec![1.0, 0.0],
        velocity: Some(vec![10.0, 1.0]),
    }
}

pub fn cube_problem(nodes: usize, n: usize, side: f64, xs: CrossSections) -> TransportProblem {
    let grid = qtt_nte::transport::SpatialGrid::cube(side, nodes).unwrap();
    TransportProblem::homogeneous("cube", grid, n, xs).unwrap()
}

pub fn pu239() -> CrossSections {
    let mut xs = CrossSections::one_group(0.32640, 0.225216, 3.24, 0.081600);
    xs.name = "Pu-239".into();
    xs
}

pub const PU_WIDTH: f64 = 3.707444;

pub fn pu_slab(nodes: usize, n: usize, width: f64) -> TransportProblem {
    let grid = qtt_nte::transport::SpatialGrid::slab(width, nodes).unwrap();
    TransportProblem::homogeneous("pu239-slab", grid, n, pu239()).unwrap()
}

/// One-group material for the 3D eigenvalue checks; k is close to 1 on a
/// 4 cm cube with 8 nodes per axis and N = 2.
pub fn cube_xs() -> CrossSections {
    let mut xs = CrossSections::one_group(1.0, 0.5, 0.82, 1.0);
    xs.name = "synthetic".into();
    xs
}

pub const CUBE_SIDE: f64 = 4.0;
