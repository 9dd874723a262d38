//! Machine-readable run reports and report comparison.
//!
//! A [`SolveReport`] is written as JSON (the primary format) and its
//! iteration history can also be written as CSV. [`compare`] lines up two or
//! more reports of the same physical problem, possibly at different
//! discretizations or in different representations.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::criticality::{compression_ratio, AlphaStep, EigenOptions, EigenResult, IterationRecord, MatvecMode, Psi};
use crate::error::{NteError, Result};
use crate::transport::{CrossSections, OperatorSet, Representation, TransportProblem};
use crate::tt::TtMatrix;

pub const SCHEMA_VERSION: u32 = 1;

const BYTES_PER_ENTRY: u64 = std::mem::size_of::<f64>() as u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveKind {
    Keff,
    Alpha,
}

impl FromStr for SolveKind {
    type Err = NteError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "keff" | "k" => Ok(SolveKind::Keff),
            "alpha" => Ok(SolveKind::Alpha),
            other => Err(NteError::Validation(format!("unknown solve kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for SolveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveKind::Keff => "keff",
            SolveKind::Alpha => "alpha",
        })
    }
}

/// Output format for reports written by the command-line tool.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = NteError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(NteError::Validation(format!("unknown report format '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub name: String,
    pub dims: usize,
    /// Nodes per axis in `(x, y, z)` order.
    pub nodes: [usize; 3],
    pub extents: [(f64, f64); 3],
    pub quadrature_order: usize,
    pub groups: usize,
    pub ordinates: usize,
    pub unknowns: usize,
    pub materials: Vec<CrossSections>,
}

impl ProblemSummary {
    pub fn of(p: &TransportProblem) -> Self {
        ProblemSummary {
            name: p.name.clone(),
            dims: p.grid.dims,
            nodes: p.grid.nodes,
            extents: p.grid.extents,
            quadrature_order: p.quadrature.n,
            groups: p.groups(),
            ordinates: p.ordinates(),
            unknowns: p.num_unknowns(),
            materials: p.materials.clone(),
        }
    }

    /// Same geometry and materials; node counts and quadrature may differ.
    pub fn same_physics(&self, other: &ProblemSummary) -> bool {
        self.dims == other.dims && self.extents == other.extents && self.materials == other.materials
    }
}

/// Storage of one operator or of the eigenvector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Storage {
    pub name: String,
    pub entries: u64,
    pub bytes: u64,
    /// Entries of the equivalent full object.
    pub full_entries: f64,
    pub compression_ratio: f64,
    pub max_rank: usize,
}

impl Storage {
    fn tt_matrix(name: &str, m: &TtMatrix) -> Self {
        let entries = m.num_params() as u64;
        Storage {
            name: name.into(),
            entries,
            bytes: entries * BYTES_PER_ENTRY,
            full_entries: m.full_size(),
            compression_ratio: compression_ratio(m),
            max_rank: m.max_rank(),
        }
    }

    fn full_matrix(name: &str, n: usize) -> Self {
        let full = (n as f64) * (n as f64);
        Storage {
            name: name.into(),
            entries: (n as u64) * (n as u64),
            bytes: (n as u64) * (n as u64) * BYTES_PER_ENTRY,
            full_entries: full,
            compression_ratio: 1.0,
            max_rank: 1,
        }
    }

    fn psi(psi: &Psi, full: usize) -> Self {
        let entries = psi.stored_entries() as u64;
        let (ratio, rank) = match psi {
            Psi::Full(_) => (1.0, 1),
            Psi::Tensor(t) => (compression_ratio(t), t.max_rank()),
        };
        Storage {
            name: "psi".into(),
            entries,
            bytes: entries * BYTES_PER_ENTRY,
            full_entries: full as f64,
            compression_ratio: ratio,
            max_rank: rank,
        }
    }
}

/// Storage of `H`, `S`, `F` and (when present) `V⁻¹`.
pub fn operator_storage(ops: &OperatorSet) -> Vec<Storage> {
    match ops {
        OperatorSet::Dense(d) => {
            let n = d.dim();
            let mut out: Vec<Storage> = ["H", "S", "F"].iter().map(|k| Storage::full_matrix(k, n)).collect();
            if d.vinv.is_some() {
                out.push(Storage::full_matrix("Vinv", n));
            }
            out
        }
        OperatorSet::Tt(t) | OperatorSet::Qtt(t) => {
            let mut out = vec![
                Storage::tt_matrix("H", &t.h),
                Storage::tt_matrix("S", &t.s),
                Storage::tt_matrix("F", &t.f),
            ];
            if let Some(v) = &t.vinv {
                out.push(Storage::tt_matrix("Vinv", v));
            }
            out
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverMetadata {
    pub tol: f64,
    pub max_outer: usize,
    pub seed: u64,
    pub matvec: MatvecMode,
    /// Inner linear-solver tolerance (TT and QTT modes).
    pub inner_eps: Option<f64>,
    pub inner_max_rank: Option<usize>,
    pub total_inner_half_sweeps: usize,
    pub max_psi_rank: usize,
}

/// Why a run stopped early.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub message: String,
    /// Iterations performed by the failing loop.
    pub iterations: usize,
    pub last_residual: Option<f64>,
    /// Eigenvalue (or `|k − 1|` for alpha) trace of the failing loop.
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub problem: ProblemSummary,
    pub mode: Representation,
    pub solve: SolveKind,
    pub converged: bool,
    /// `k_eff` or `α`; absent when the run failed.
    pub eigenvalue: Option<f64>,
    /// `k_eff` at the returned eigenvalue (equals `eigenvalue` for keff runs).
    pub keff: Option<f64>,
    pub iterations: usize,
    pub final_residual: Option<f64>,
    pub history: Vec<IterationRecord>,
    pub alpha_history: Vec<AlphaStep>,
    pub assembly_seconds: f64,
    pub wall_time_seconds: f64,
    pub operators: Vec<Storage>,
    pub psi: Option<Storage>,
    pub h_compression: f64,
    pub psi_compression: Option<f64>,
    pub solver: SolverMetadata,
    pub failure: Option<Failure>,
}

fn metadata(ops: &OperatorSet, opts: &EigenOptions, history: &[IterationRecord]) -> SolverMetadata {
    let tensor = !matches!(ops, OperatorSet::Dense(_));
    let inner = opts.inner_options();
    SolverMetadata {
        tol: opts.tol,
        max_outer: opts.max_outer,
        seed: opts.seed,
        matvec: opts.matvec,
        inner_eps: tensor.then_some(inner.eps),
        inner_max_rank: tensor.then_some(inner.max_rank),
        total_inner_half_sweeps: history.iter().map(|r| r.inner_half_sweeps).sum(),
        max_psi_rank: history.iter().map(|r| r.psi_rank).max().unwrap_or(0),
    }
}

fn h_compression(ops: &OperatorSet) -> f64 {
    match ops {
        OperatorSet::Dense(_) => 1.0,
        OperatorSet::Tt(t) | OperatorSet::Qtt(t) => compression_ratio(&t.h),
    }
}

impl SolveReport {
    pub fn from_result(
        p: &TransportProblem,
        ops: &OperatorSet,
        solve: SolveKind,
        opts: &EigenOptions,
        result: &EigenResult,
        assembly_seconds: f64,
    ) -> Self {
        let psi = Storage::psi(&result.psi, p.num_unknowns());
        SolveReport {
            schema_version: SCHEMA_VERSION,
            problem: ProblemSummary::of(p),
            mode: ops.representation(),
            solve,
            converged: true,
            eigenvalue: Some(result.eigenvalue),
            keff: Some(result.keff),
            iterations: result.iterations,
            final_residual: result.history.last().map(|r| r.residual),
            history: result.history.clone(),
            alpha_history: result.alpha_history.clone(),
            assembly_seconds,
            wall_time_seconds: result.wall_time_seconds,
            operators: operator_storage(ops),
            psi_compression: Some(psi.compression_ratio),
            psi: Some(psi),
            h_compression: h_compression(ops),
            solver: metadata(ops, opts, &result.history),
            failure: None,
        }
    }

    /// Partial report for a run that ended with `err`.
    pub fn from_error(
        p: &TransportProblem,
        ops: &OperatorSet,
        solve: SolveKind,
        opts: &EigenOptions,
        err: &NteError,
        assembly_seconds: f64,
        wall_time_seconds: f64,
    ) -> Self {
        let failure = match err.root() {
            NteError::NotConverged(nc) => Failure {
                message: err.to_string(),
                iterations: nc.iterations,
                last_residual: nc.residual.is_finite().then_some(nc.residual),
                trace: nc.history.iter().copied().filter(|v| v.is_finite()).collect(),
            },
            _ => Failure {
                message: err.to_string(),
                iterations: 0,
                last_residual: None,
                trace: Vec::new(),
            },
        };
        SolveReport {
            schema_version: SCHEMA_VERSION,
            problem: ProblemSummary::of(p),
            mode: ops.representation(),
            solve,
            converged: false,
            eigenvalue: None,
            keff: None,
            iterations: failure.iterations,
            final_residual: failure.last_residual,
            history: Vec::new(),
            alpha_history: Vec::new(),
            assembly_seconds,
            wall_time_seconds,
            operators: operator_storage(ops),
            psi: None,
            h_compression: h_compression(ops),
            psi_compression: None,
            solver: metadata(ops, opts, &[]),
            failure: Some(failure),
        }
    }

    pub fn operator(&self, name: &str) -> Option<&Storage> {
        self.operators.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| NteError::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: SolveReport = serde_json::from_str(s).map_err(|e| NteError::Parse(format!("report: {e}")))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(NteError::Validation(format!(
                "report schema version {} is not supported (expected {SCHEMA_VERSION})",
                r.schema_version
            )));
        }
        Ok(r)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| NteError::Io(e).context(path.display().to_string()))?;
        Self::from_json(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn history_csv(&self) -> Result<String> {
        let rows = self.history.iter().enumerate().map(|(i, r)| HistoryRow {
            iteration: i + 1,
            eigenvalue: r.eigenvalue,
            residual: r.residual,
            inner_half_sweeps: r.inner_half_sweeps,
            psi_rank: r.psi_rank,
        });
        write_csv(rows)
    }

    pub fn alpha_history_csv(&self) -> Result<String> {
        write_csv(self.alpha_history.iter().cloned())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub eigenvalue: f64,
    pub residual: f64,
    pub inner_half_sweeps: usize,
    pub psi_rank: usize,
}

/// Parses a history table written by [`SolveReport::history_csv`].
pub fn history_from_csv(s: &str) -> Result<Vec<IterationRecord>> {
    let mut reader = csv::Reader::from_reader(s.as_bytes());
    reader
        .deserialize::<HistoryRow>()
        .map(|row| {
            let row = row.map_err(|e| NteError::Parse(format!("history csv: {e}")))?;
            Ok(IterationRecord {
                eigenvalue: row.eigenvalue,
                residual: row.residual,
                inner_half_sweeps: row.inner_half_sweeps,
                psi_rank: row.psi_rank,
            })
        })
        .collect()
}

fn write_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| NteError::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| NteError::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| NteError::Parse(e.to_string()))
}

/// One report in a comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub mode: Representation,
    pub solve: SolveKind,
    pub ordinates: usize,
    pub nodes: [usize; 3],
    pub eigenvalue: f64,
    /// `|k − 1|` for keff runs, `|α|` for alpha runs.
    pub distance_to_critical: f64,
    pub iterations: usize,
    pub wall_time_seconds: f64,
    pub h_entries: u64,
    pub psi_entries: u64,
}

/// Differences of report `b` relative to report `a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDelta {
    pub a: String,
    pub b: String,
    /// `λ_b − λ_a`.
    pub eigenvalue_delta: f64,
    pub abs_eigenvalue_delta: f64,
    /// `t_b / t_a`.
    pub time_ratio: f64,
    /// Stored entries of `H`, `b` over `a`.
    pub h_storage_ratio: f64,
    pub psi_storage_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub schema_version: u32,
    pub problem: String,
    pub rows: Vec<ComparisonRow>,
    pub pairs: Vec<PairDelta>,
}

impl Comparison {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| NteError::Parse(e.to_string()))
    }

    pub fn rows_csv(&self) -> Result<String> {
        write_csv(self.rows.iter().map(|r| {
            (
                &r.label,
                r.mode,
                r.solve,
                r.ordinates,
                r.nodes[0],
                r.nodes[1],
                r.nodes[2],
                r.eigenvalue,
                r.distance_to_critical,
                r.iterations,
                r.wall_time_seconds,
                r.h_entries,
                r.psi_entries,
            )
        }))
        .map(|body| {
            "label,mode,solve,ordinates,nodes_x,nodes_y,nodes_z,eigenvalue,distance_to_critical,iterations,wall_time_seconds,h_entries,psi_entries\n".to_string()
                + &body
        })
    }

    pub fn pairs_csv(&self) -> Result<String> {
        write_csv(self.pairs.iter().cloned())
    }

    /// Whether `distance_to_critical` strictly decreases down the table.
    pub fn monotone_convergence(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].distance_to_critical < w[0].distance_to_critical)
    }
}

fn ratio(b: f64, a: f64) -> f64 {
    if a == 0.0 {
        if b == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        b / a
    }
}

/// Compares labelled reports of the same physical problem. Every pair
/// `(i, j)` with `i < j` gets a [`PairDelta`] of `j` relative to `i`.
pub fn compare(reports: &[(String, SolveReport)]) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(NteError::Validation("compare needs at least two reports".into()));
    }
    let (first_label, first) = &reports[0];
    let mut rows = Vec::with_capacity(reports.len());
    for (label, r) in reports {
        if !r.problem.same_physics(&first.problem) {
            return Err(NteError::Validation(format!(
                "reports '{first_label}' and '{label}' describe different problems"
            )));
        }
        if r.solve != first.solve {
            return Err(NteError::Validation(format!(
                "reports '{first_label}' and '{label}' solve for different eigenvalues"
            )));
        }
        let eigenvalue = r
            .eigenvalue
            .ok_or_else(|| NteError::Validation(format!("report '{label}' has no converged eigenvalue")))?;
        let distance_to_critical = match r.solve {
            SolveKind::Keff => (eigenvalue - 1.0).abs(),
            SolveKind::Alpha => eigenvalue.abs(),
        };
        rows.push(ComparisonRow {
            label: label.clone(),
            mode: r.mode,
            solve: r.solve,
            ordinates: r.problem.ordinates,
            nodes: r.problem.nodes,
            eigenvalue,
            distance_to_critical,
            iterations: r.iterations,
            wall_time_seconds: r.wall_time_seconds,
            h_entries: r.operator("H").map_or(0, |s| s.entries),
            psi_entries: r.psi.as_ref().map_or(0, |s| s.entries),
        });
    }
    let mut pairs = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (a, b) = (&rows[i], &rows[j]);
            let delta = b.eigenvalue - a.eigenvalue;
            pairs.push(PairDelta {
                a: a.label.clone(),
                b: b.label.clone(),
                eigenvalue_delta: delta,
                abs_eigenvalue_delta: delta.abs(),
                time_ratio: ratio(b.wall_time_seconds, a.wall_time_seconds),
                h_storage_ratio: ratio(b.h_entries as f64, a.h_entries as f64),
                psi_storage_ratio: ratio(b.psi_entries as f64, a.psi_entries as f64),
            });
        }
    }
    Ok(Comparison {
        schema_version: SCHEMA_VERSION,
        problem: first.problem.name.clone(),
        rows,
        pairs,
    })
}
