mod common;

use common::*;
use qtt_nte::criticality::{compression_ratio, solve_keff, EigenOptions, Psi};
use qtt_nte::report::{compare, history_from_csv, SolveKind, SolveReport};
use qtt_nte::transport::{OperatorSet, Representation, TransportProblem};
use qtt_nte::NteError;

fn run(p: &TransportProblem, rep: Representation) -> (OperatorSet, SolveReport) {
    let ops = OperatorSet::assemble(p, rep).unwrap();
    let opts = EigenOptions::default();
    let r = solve_keff(&ops, &opts).unwrap();
    let report = SolveReport::from_result(p, &ops, SolveKind::Keff, &opts, &r, 0.0);
    (ops, report)
}

#[test]
fn json_round_trip_is_lossless() {
    let p = pu_slab(64, 4, PU_WIDTH);
    for rep in [Representation::Dense, Representation::Qtt] {
        let (_, report) = run(&p, rep);
        let text = report.to_json().unwrap();
        assert_eq!(SolveReport::from_json(&text).unwrap(), report);
        assert_eq!(report.history.len(), report.iterations);
        assert!(report.converged);
    }
}

#[test]
fn history_csv_round_trip() {
    let (_, report) = run(&pu_slab(64, 4, PU_WIDTH), Representation::Qtt);
    let csv = report.history_csv().unwrap();
    assert!(csv.starts_with("iteration,eigenvalue,residual,inner_half_sweeps,psi_rank\n"));
    assert_eq!(history_from_csv(&csv).unwrap(), report.history);
}

#[test]
fn compression_fields_match_compression_ratio() {
    let p = cube_problem(4, 2, CUBE_SIDE, cube_xs());
    let (ops, report) = run(&p, Representation::Qtt);
    let OperatorSet::Qtt(t) = &ops else { unreachable!() };
    assert_eq!(report.h_compression, compression_ratio(&t.h));
    assert_eq!(report.operator("H").unwrap().compression_ratio, compression_ratio(&t.h));
    assert_eq!(report.operator("S").unwrap().entries, t.s.num_params() as u64);
    assert_eq!(report.operator("H").unwrap().bytes, 8 * t.h.num_params() as u64);
    let r = solve_keff(&ops, &EigenOptions::default()).unwrap();
    let Psi::Tensor(psi) = &r.psi else { unreachable!() };
    assert_eq!(report.psi_compression, Some(compression_ratio(psi)));

    let (_, dense) = run(&p, Representation::Dense);
    let n = p.num_unknowns() as u64;
    assert_eq!(dense.operator("H").unwrap().entries, n * n);
    assert_eq!(dense.psi_compression, Some(1.0));
}

#[test]
fn identical_reports_have_zero_deltas() {
    let (_, report) = run(&pu_slab(32, 4, PU_WIDTH), Representation::Dense);
    let c = compare(&[("a".into(), report.clone()), ("b".into(), report)]).unwrap();
    assert_eq!(c.pairs.len(), 1);
    assert_eq!(c.pairs[0].eigenvalue_delta, 0.0);
    assert_eq!(c.pairs[0].h_storage_ratio, 1.0);
    assert_eq!(c.pairs[0].psi_storage_ratio, 1.0);
}

#[test]
fn dense_and_qtt_agree_on_small_cube() {
    let p = cube_problem(4, 2, CUBE_SIDE, cube_xs());
    let (_, dense) = run(&p, Representation::Dense);
    let (_, qtt) = run(&p, Representation::Qtt);
    let c = compare(&[("dense".into(), dense), ("qtt".into(), qtt)]).unwrap();
    assert!(c.pairs[0].abs_eigenvalue_delta <= 1e-6, "{:?}", c.pairs[0]);
    assert!(c.pairs[0].h_storage_ratio < 1.0);
    let csv = c.pairs_csv().unwrap();
    assert!(csv.lines().count() == 2);
}

#[test]
fn refinement_in_angle_shrinks_distance_to_critical() {
    let reports: Vec<(String, SolveReport)> = [8, 16, 32]
        .iter()
        .map(|&n| (format!("L={n}"), run(&pu_slab(256, n, PU_WIDTH), Representation::Dense).1))
        .collect();
    let c = compare(&reports).unwrap();
    assert!(c.monotone_convergence(), "{:?}", c.rows);
    assert_eq!(c.pairs.len(), 3);
    let rows = c.rows_csv().unwrap();
    assert_eq!(rows.lines().count(), 4);
}

#[test]
fn compare_rejects_bad_input() {
    let (_, a) = run(&pu_slab(32, 4, PU_WIDTH), Representation::Dense);
    let (_, b) = run(&pu_slab(32, 4, 2.0 * PU_WIDTH), Representation::Dense);
    let err = compare(&[("a".into(), a.clone()), ("b".into(), b)]).unwrap_err();
    assert!(matches!(err, NteError::Validation(_)), "{err}");
    assert!(matches!(compare(&[("a".into(), a)]), Err(NteError::Validation(_))));
}

#[test]
fn failed_run_gives_partial_report() {
    let p = pu_slab(32, 4, PU_WIDTH);
    let ops = OperatorSet::assemble(&p, Representation::Dense).unwrap();
    let opts = EigenOptions {
        max_outer: 3,
        ..Default::default()
    };
    let err = solve_keff(&ops, &opts).unwrap_err();
    let report = SolveReport::from_error(&p, &ops, SolveKind::Keff, &opts, &err, 0.0, 0.0);
    assert!(!report.converged);
    assert_eq!(report.eigenvalue, None);
    let failure = report.failure.as_ref().unwrap();
    assert_eq!(failure.iterations, 3);
    assert_eq!(failure.trace.len(), 3);
    assert_eq!(SolveReport::from_json(&report.to_json().unwrap()).unwrap(), report);
    let ok = run(&p, Representation::Dense).1;
    assert!(compare(&[("ok".into(), ok), ("failed".into(), report)]).is_err());
}

#[test]
fn unsupported_schema_version_is_rejected() {
    let (_, mut report) = run(&pu_slab(16, 2, PU_WIDTH), Representation::Dense);
    report.schema_version = 99;
    let err = SolveReport::from_json(&report.to_json().unwrap()).unwrap_err();
    assert!(matches!(err, NteError::Validation(_)));
}
