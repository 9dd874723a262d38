//! Fixtures shared by the benchmarks.

use qtt_nte::transport::{CrossSections, SpatialGrid, TransportProblem};
use qtt_nte::{Tensor, TtMatrix, TtVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tt(modes: &[usize], rank: usize, seed: u64) -> TtVector {
    TtVector::random(modes, rank, &mut rng(seed))
}

/// `2 I + 0.02 R` with a random rank-2 TT-matrix `R`.
pub fn shifted_identity(modes: &[usize], seed: u64) -> TtMatrix {
    let mut r = rng(seed);
    let d = modes.len();
    let cores = (0..d)
        .map(|k| {
            let r0 = if k == 0 { 1 } else { 2 };
            let r1 = if k == d - 1 { 1 } else { 2 };
            Tensor::from_fn(&[r0, modes[k], modes[k], r1], |_| r.random_range(-1.0..1.0))
        })
        .collect();
    let pert = TtMatrix::from_cores(cores).expect("consistent cores");
    TtMatrix::identity(modes).scale(2.0).add(&pert.scale(0.02)).expect("same modes")
}

pub fn pu239_slab(nodes: usize, n: usize) -> TransportProblem {
    let xs = CrossSections::one_group(0.32640, 0.225216, 3.24, 0.081600);
    TransportProblem::homogeneous("pu239-slab", SpatialGrid::slab(3.707444, nodes).unwrap(), n, xs).unwrap()
}

pub fn cube(nodes: usize) -> TransportProblem {
    let xs = CrossSections::one_group(1.0, 0.5, 0.82, 1.0);
    TransportProblem::homogeneous("cube", SpatialGrid::cube(4.0, nodes).unwrap(), 2, xs).unwrap()
}
