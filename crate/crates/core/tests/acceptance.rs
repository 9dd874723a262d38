//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::time::Instant;

use common::*;
use qtt_nte::criticality::{
    compression_ratio, dense_ges, solve_alpha, solve_keff, solve_keff_shifted, EigenOptions, EigenResult,
};
use qtt_nte::dense::EigenSettings;
use qtt_nte::qtt::{matrix_to_qtt, quantize_vector};
use qtt_nte::solver::{tt_linsolve, SolverOptions};
use qtt_nte::transport::{
    assemble_dense_operators, assemble_qtt_operators, assemble_tt_operators, tensor_block, DenseOperators, KronSum,
    OperatorSet, TensorOperators,
};
use qtt_nte::tt::tt_svd;
use qtt_nte::{Matrix, NteError, Tensor, TtMatrix, TtVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NODES_1D: usize = 1024;
const ORDERS: [usize; 5] = [2, 4, 8, 16, 32];
/// Bound on `|k − 1|` at L = 32, set from a dense generalized-eigensolver run
/// (`|k_GES − 1| = 3.61e-4`).
const K_BOUND_L32: f64 = 5e-4;
/// Bound on `|α|` for the critical slab at L = 32, from the same oracle:
/// `|k_GES(0) − 1| / |dk/dα| ≈ 1.05e-4`.
const ALPHA_BOUND_L32: f64 = 5e-4;
const TOL: f64 = 1e-6;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dense_of(p: &qtt_nte::transport::TransportProblem) -> Result<DenseOperators, String> {
    assemble_dense_operators(p).map_err(|e| e.to_string())
}

fn criterion_1(l32: &mut Option<EigenResult>) -> Outcome {
    let opts = EigenOptions::default();
    let mut errs = Vec::new();
    for n in ORDERS {
        let t = Instant::now();
        let p = pu_slab(NODES_1D, n, PU_WIDTH);
        let ops = OperatorSet::assemble(&p, qtt_nte::transport::Representation::Dense).map_err(|e| e.to_string())?;
        let r = solve_keff(&ops, &opts).map_err(|e| format!("L={n}: {e}"))?;
        let secs = t.elapsed().as_secs_f64();
        check(secs <= 120.0, || format!("L={n} took {secs:.1}s"))?;
        errs.push((r.eigenvalue - 1.0).abs());
        if n == 32 {
            *l32 = Some(r);
        }
    }
    check(errs.windows(2).all(|w| w[1] < w[0]), || format!("|k-1| not strictly decreasing: {errs:?}"))?;
    let last = *errs.last().expect("five orders");
    check(last <= K_BOUND_L32, || format!("|k-1| = {last:.3e} at L=32 exceeds {K_BOUND_L32:e}"))?;
    let list: Vec<String> = errs.iter().map(|e| format!("{e:.2e}")).collect();
    Ok(format!("|k-1| over L=2..32: [{}]", list.join(", ")))
}

fn criterion_2(dense_l32: &EigenResult, qtt_out: &mut Option<EigenResult>) -> Outcome {
    let t = Instant::now();
    let p = pu_slab(NODES_1D, 32, PU_WIDTH);
    let d = dense_of(&p)?;
    let ges = dense_ges(&d, 0.0, &EigenSettings::default()).map_err(|e| e.to_string())?;
    check((ges.value - 1.0).abs() <= K_BOUND_L32, || format!("oracle |k-1| = {:.3e}", (ges.value - 1.0).abs()))?;
    let k_isfm = dense_l32.eigenvalue;
    let d_ges = (ges.value - k_isfm).abs();
    check(d_ges <= TOL, || format!("|k_GES - k_ISFM| = {d_ges:.3e}"))?;

    let q = OperatorSet::Qtt(assemble_qtt_operators(&p).map_err(|e| e.to_string())?);
    let r = solve_keff(&q, &EigenOptions::default()).map_err(|e| e.to_string())?;
    let d_qtt = (r.eigenvalue - k_isfm).abs();
    check(d_qtt <= TOL, || format!("|k_ISFM - k_QTT| = {d_qtt:.3e}"))?;
    let vec_gap = max_abs_diff(&r.psi.to_full(), &dense_l32.psi.to_full());
    check(vec_gap <= 1e-4, || format!("eigenvector max difference {vec_gap:.3e}"))?;
    let secs = t.elapsed().as_secs_f64();
    check(secs <= 300.0, || format!("took {secs:.1}s"))?;
    *qtt_out = Some(r);
    Ok(format!(
        "|k_GES-k_ISFM| = {d_ges:.2e}, |k_ISFM-k_QTT| = {d_qtt:.2e}, eigenvector gap {vec_gap:.2e} ({secs:.1}s)"
    ))
}

fn compare_tensor_blocks(d: &DenseOperators, t: &TensorOperators, g: usize, l: usize) -> Result<f64, String> {
    let pairs: [(&str, &KronSum, &TtMatrix); 4] = [
        ("H", &d.h, &t.h),
        ("S", &d.s, &t.s),
        ("F", &d.f, &t.f),
        ("Vinv", d.vinv.as_ref().ok_or("dense V^-1 missing")?, t.vinv.as_ref().ok_or("tensor V^-1 missing")?),
    ];
    let mut worst: f64 = 0.0;
    for (name, dense, tt) in pairs {
        for r in 0..g * l {
            for c in 0..g * l {
                let (rr, cc) = ((r / l, r % l), (c / l, c % l));
                let a = dense.block(rr, cc).map_err(|e| e.to_string())?;
                let b = tensor_block(t, tt, rr, cc).map_err(|e| e.to_string())?;
                let diff = (a - b).amax();
                check(diff <= 1e-8, || format!("{:?} {name} block {rr:?},{cc:?} differs by {diff:.3e}", t.format))?;
                worst = worst.max(diff);
            }
        }
    }
    Ok(worst)
}

fn criterion_3() -> Outcome {
    let t0 = Instant::now();
    let p = cube_problem(8, 2, 3.0, two_group_xs());
    let d = dense_of(&p)?;
    let tensors = [
        assemble_tt_operators(&p).map_err(|e| e.to_string())?,
        assemble_qtt_operators(&p).map_err(|e| e.to_string())?,
    ];
    let mut block_gap: f64 = 0.0;
    let mut oracle_gap: f64 = 0.0;
    for t in &tensors {
        block_gap = block_gap.max(compare_tensor_blocks(&d, t, p.groups(), p.ordinates())?);
        for seed in 0..20 {
            let psi = random_vec(d.dim(), 3000 + seed);
            let checks: [(&str, &TtMatrix, Vec<f64>); 4] = [
                ("H", &t.h, loop_h(&p, &psi)),
                ("S", &t.s, loop_apply(&p, Op::S, &psi)),
                ("F", &t.f, loop_apply(&p, Op::F, &psi)),
                ("Vinv", t.vinv.as_ref().ok_or("V^-1 missing")?, loop_apply(&p, Op::Vinv, &psi)),
            ];
            for (name, m, expect) in checks {
                let got = m.apply_full(&psi).map_err(|e| e.to_string())?;
                let gap = max_abs_diff(&got, &expect);
                check(gap <= 1e-10, || format!("{:?} {name} vs loop oracle: {gap:.3e}", t.format))?;
                oracle_gap = oracle_gap.max(gap);
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(secs <= 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!(
        "blocks within {block_gap:.1e}, 20 random psi within {oracle_gap:.1e} of the loop oracle ({secs:.1}s)"
    ))
}

fn criterion_4() -> Outcome {
    let t0 = Instant::now();
    let p = cube_problem(8, 2, CUBE_SIDE, cube_xs());
    let d = dense_of(&p)?;
    let ges = dense_ges(&d, 0.0, &EigenSettings::default()).map_err(|e| e.to_string())?;
    check(ges.value > 0.9 && ges.value < 1.1, || format!("oracle k = {} outside (0.9, 1.1)", ges.value))?;
    let q = OperatorSet::Qtt(assemble_qtt_operators(&p).map_err(|e| e.to_string())?);
    let r = solve_keff(&q, &EigenOptions::default()).map_err(|e| e.to_string())?;
    let gap = (r.eigenvalue - ges.value).abs();
    check(gap <= TOL, || format!("|k_QTT - k_GES| = {gap:.3e}"))?;
    let secs = t0.elapsed().as_secs_f64();
    check(secs <= 300.0, || format!("took {secs:.1}s"))?;
    Ok(format!("k_GES = {:.8}, |k_QTT - k_GES| = {gap:.2e} ({secs:.1}s)", ges.value))
}

fn criterion_5() -> Outcome {
    let t0 = Instant::now();
    let opts = EigenOptions::default();
    let mut parts = Vec::new();
    for (width, label) in [(PU_WIDTH, "critical"), (2.0 * PU_WIDTH, "doubled")] {
        let p = pu_slab(NODES_1D, 32, width);
        let ops = OperatorSet::Dense(dense_of(&p)?);
        let r = solve_alpha(&ops, &opts).map_err(|e| format!("{label}: {e}"))?;
        let alpha = r.eigenvalue;
        check(r.iterations <= 10, || format!("{label}: {} alpha iterations", r.iterations))?;
        let again = solve_keff_shifted(&ops, alpha, None, &opts).map_err(|e| e.to_string())?;
        check((again.eigenvalue - 1.0).abs() <= TOL, || {
            format!("{label}: k_eff(alpha*) = {:.9}", again.eigenvalue)
        })?;
        if label == "critical" {
            check(alpha.abs() <= ALPHA_BOUND_L32, || format!("|alpha| = {:.3e}", alpha.abs()))?;
        } else {
            let k0 = r.alpha_history[0].keff;
            check(alpha > 0.0 && k0 > 1.0, || format!("doubled slab: alpha = {alpha:e}, k(0) = {k0}"))?;
        }
        parts.push(format!("{label}: alpha = {alpha:.3e} in {} k-solves", r.iterations));
    }
    let secs = t0.elapsed().as_secs_f64();
    check(secs <= 300.0, || format!("took {secs:.1}s"))?;
    Ok(format!("{} ({secs:.1}s)", parts.join(", ")))
}

fn criterion_6(qtt_l32: &EigenResult) -> Outcome {
    let ratio = qtt_l32.psi_compression;
    let direct = match &qtt_l32.psi {
        qtt_nte::criticality::Psi::Tensor(t) => compression_ratio(t),
        qtt_nte::criticality::Psi::Full(_) => return Err("QTT eigenvector is not in TT form".into()),
    };
    check(ratio == direct, || "reported and recomputed ratios differ".into())?;
    check(ratio <= 0.1, || format!("1D eigenvector compression ratio {ratio:.3e}"))?;
    let p = cube_problem(16, 2, CUBE_SIDE, cube_xs());
    let q = assemble_qtt_operators(&p).map_err(|e| e.to_string())?;
    let dense_entries = (p.num_unknowns() as f64).powi(2);
    let factor = dense_entries / q.h.num_params() as f64;
    check(factor >= 10.0, || format!("QTT H only {factor:.1}x smaller than dense"))?;
    check(compression_ratio(&q.h) == q.h.num_params() as f64 / dense_entries, || "H ratio mismatch".into())?;
    Ok(format!("psi ratio {ratio:.2e}, QTT H at 16^3 is {factor:.2e}x below dense"))
}

fn frob(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn criterion_7() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let epsilons = [0.0, 1e-12, 1e-8, 1e-4, 1e-2, 0.1];
    let ok = |err: f64, eps: f64, scale: f64| err <= eps * scale * (1.0 + 1e-8) + 1e-12 * scale;
    for case in 0..100 {
        let eps = epsilons[case % epsilons.len()];
        let d = rng.random_range(2..=4);
        let shape: Vec<usize> = (0..d).map(|_| rng.random_range(1..=5)).collect();
        let x = Tensor::from_fn(&shape, |_| rng.random_range(-1.0..1.0));
        let err = gap(&tt_svd(&x, eps).to_vec(), x.data());
        check(ok(err, eps, frob(x.data())), || format!("tt_svd case {case}: {err:e} at eps {eps:e}"))?;

        let modes: Vec<usize> = (0..rng.random_range(2..=5)).map(|_| rng.random_range(2..=4)).collect();
        let rank = rng.random_range(1..=4);
        let a = TtVector::random(&modes, rank, &mut rng);
        let y = a.add(&TtVector::random(&modes, rank, &mut rng).scale(1e-3)).map_err(|e| e.to_string())?;
        let full = y.to_vec();
        let err = gap(&y.round(eps).to_vec(), &full);
        check(ok(err, eps, frob(&full)), || format!("tt_round case {case}: {err:e} at eps {eps:e}"))?;

        let bits = rng.random_range(1..=10);
        let v: Vec<f64> = (0..1usize << bits).map(|_| rng.random_range(-1.0..1.0)).collect();
        let err = gap(&quantize_vector(&v, eps).map_err(|e| e.to_string())?.dequantize(), &v);
        check(ok(err, eps, frob(&v)), || format!("quantize case {case}: {err:e} at eps {eps:e}"))?;

        let n = 1usize << rng.random_range(1..=5);
        let m = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let back = matrix_to_qtt(&m, eps).and_then(|q| q.expand()).map_err(|e| e.to_string())?;
        let err = (&back - &m).norm();
        check(ok(err, eps, m.norm()), || format!("matrix_to_qtt case {case}: {err:e} at eps {eps:e}"))?;
    }

    for case in 0..20 {
        let modes: Vec<usize> = (0..rng.random_range(2..=4)).map(|_| rng.random_range(2..=3)).collect();
        let a = perturbed_identity(&modes, 2.0, 0.02, &mut rng);
        let b = TtVector::random(&modes, 2, &mut rng);
        let out = tt_linsolve(&a, &b, None, &SolverOptions::default().with_eps(1e-9)).map_err(|e| e.to_string())?;
        let ad = a.expand().map_err(|e| e.to_string())?;
        let bd = nalgebra::DVector::from_vec(b.to_vec());
        let res = (&ad * nalgebra::DVector::from_vec(out.x.to_vec()) - &bd).norm() / bd.norm();
        check(res <= 1e-9 * (1.0 + 1e-6), || format!("linsolve case {case}: dense residual {res:e}"))?;

        let a = perturbed_identity(&modes, 1.0, 0.05, &mut rng);
        let b = TtVector::random(&modes, 3, &mut rng);
        let opts = SolverOptions {
            eps: 1e-14,
            max_sweeps: 4,
            kickrank: 0,
            ..SolverOptions::default()
        };
        let hist = match tt_linsolve(&a, &b, None, &opts) {
            Ok(o) => o.objective_history,
            Err(NteError::NotConverged(nc)) => nc.history,
            Err(e) => return Err(e.to_string()),
        };
        let j0 = hist[0].max(1e-300);
        check(hist.windows(2).all(|w| w[1] <= w[0] + 1e-10 * j0), || {
            format!("ALS objective increased in case {case}: {hist:?}")
        })?;
    }
    let secs = t0.elapsed().as_secs_f64();
    check(secs <= 120.0, || format!("took {secs:.1}s"))?;
    Ok(format!(
        "100 roundtrips each for tt_svd, tt_round, quantize, matrix_to_qtt; 20 linsolve and ALS checks ({secs:.1}s)"
    ))
}

fn perturbed_identity(modes: &[usize], diag: f64, size: f64, rng: &mut ChaCha8Rng) -> TtMatrix {
    let d = modes.len();
    let cores = (0..d)
        .map(|k| {
            let r0 = if k == 0 { 1 } else { 2 };
            let r1 = if k == d - 1 { 1 } else { 2 };
            Tensor::from_fn(&[r0, modes[k], modes[k], r1], |_| rng.random_range(-1.0..1.0))
        })
        .collect();
    let pert = TtMatrix::from_cores(cores).expect("consistent cores");
    TtMatrix::identity(modes)
        .scale(diag)
        .add(&pert.scale(size))
        .expect("same modes")
}

fn report(id: usize, title: &str, outcome: Outcome, failures: &mut usize) {
    match outcome {
        Ok(detail) => println!("PASS criterion {id} ({title}): {detail}"),
        Err(reason) => {
            *failures += 1;
            println!("FAIL criterion {id} ({title}): {reason}");
        }
    }
}

fn main() {
    let mut failures = 0;
    let mut dense_l32 = None;
    let mut qtt_l32 = None;
    report(1, "1D Pu-239 angular convergence", criterion_1(&mut dense_l32), &mut failures);
    let c2 = match &dense_l32 {
        Some(r) => criterion_2(r, &mut qtt_l32),
        None => Err("needs the L=32 dense solve from criterion 1".into()),
    };
    report(2, "solver cross-agreement", c2, &mut failures);
    report(3, "operator expansion equivalence", criterion_3(), &mut failures);
    report(4, "3D eigenvalue vs dense oracle", criterion_4(), &mut failures);
    report(5, "alpha eigenvalue consistency", criterion_5(), &mut failures);
    let c6 = match &qtt_l32 {
        Some(r) => criterion_6(r),
        None => Err("needs the QTT L=32 solve from criterion 2".into()),
    };
    report(6, "compression", c6, &mut failures);
    report(7, "TT/QTT property suite", criterion_7(), &mut failures);
    println!("acceptance: {} of 7 criteria passed", 7 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
