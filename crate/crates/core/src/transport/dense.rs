use super::quadrature::AngularQuadrature;
use super::terms::{operator_terms, row_materials, FactorTerm, OperatorKind};
use super::problem::TransportProblem;
use crate::dense::{gmres, kron_all, DenseLu, LinearMap, LinearSolve, Matrix};
use crate::error::{shape_err, NteError, Result};
use crate::tt::EXPAND_CAP;

/// Default cap on the number of unknowns the dense path accepts.
pub const DEFAULT_DENSE_CAP: usize = 200_000;

/// Row-wise sparse copy of a factor matrix.
#[derive(Clone, Debug)]
struct SparseFactor {
    identity: bool,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseFactor {
    fn new(m: &Matrix) -> Self {
        let identity = m.is_square() && *m == Matrix::identity(m.nrows(), m.ncols());
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] != 0.0).map(|j| (j, m[(i, j)])).collect())
            .collect();
        SparseFactor { identity, rows }
    }
}

/// One Kronecker-product term of a [`KronSum`].
#[derive(Clone, Debug)]
pub struct KronTerm {
    pub octant: usize,
    pub coeff: f64,
    pub factors: Vec<Matrix>,
    /// Optional 0/1 weights on spatial rows (heterogeneous materials).
    pub row_mask: Option<Vec<f64>>,
    sparse: Vec<SparseFactor>,
}

impl KronTerm {
    pub fn new(octant: usize, factors: Vec<Matrix>, row_mask: Option<Vec<f64>>) -> Self {
        let sparse = factors.iter().map(SparseFactor::new).collect();
        KronTerm {
            octant,
            coeff: 1.0,
            factors,
            row_mask,
            sparse,
        }
    }
}

/// A full-grid operator stored as a sum of Kronecker products, applied without
/// forming the matrix.
#[derive(Clone, Debug)]
pub struct KronSum {
    shape: Vec<usize>,
    terms: Vec<KronTerm>,
}

impl KronSum {
    pub fn new(shape: Vec<usize>, terms: Vec<KronTerm>) -> Result<Self> {
        for t in &terms {
            let ok = t.factors.len() == shape.len()
                && t.factors.iter().zip(&shape).all(|(f, &n)| f.nrows() == n && f.ncols() == n);
            if !ok {
                return shape_err("Kronecker term does not match the operator shape");
            }
            if let Some(m) = &t.row_mask {
                if m.len() != shape[2..].iter().product::<usize>() {
                    return shape_err("row mask does not match the spatial grid");
                }
            }
        }
        Ok(KronSum { shape, terms })
    }

    pub fn zero(shape: Vec<usize>) -> Self {
        KronSum { shape, terms: Vec::new() }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn terms(&self) -> &[KronTerm] {
        &self.terms
    }

    fn spatial_len(&self) -> usize {
        self.shape[2..].iter().product()
    }

    pub fn add(&self, other: &KronSum) -> Result<KronSum> {
        if self.shape != other.shape {
            return shape_err("operator shapes differ");
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(KronSum {
            shape: self.shape.clone(),
            terms,
        })
    }

    pub fn scale(&self, c: f64) -> KronSum {
        let mut out = self.clone();
        out.terms.iter_mut().for_each(|t| t.coeff *= c);
        out
    }

    fn apply_term(&self, t: &KronTerm, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let d = self.shape.len();
        for k in (0..d).rev() {
            let f = &t.sparse[k];
            if f.identity {
                continue;
            }
            let n = self.shape[k];
            let post: usize = self.shape[k + 1..].iter().product();
            let pre: usize = self.shape[..k].iter().product();
            let mut next = vec![0.0; cur.len()];
            for p in 0..pre {
                let base = p * n * post;
                for (i, row) in f.rows.iter().enumerate() {
                    if row.is_empty() {
                        continue;
                    }
                    let out = &mut next[base + i * post..base + (i + 1) * post];
                    for &(j, a) in row {
                        let src = &cur[base + j * post..base + (j + 1) * post];
                        out.iter_mut().zip(src).for_each(|(o, s)| *o += a * s);
                    }
                }
            }
            cur = next;
        }
        if let Some(mask) = &t.row_mask {
            let s = mask.len();
            cur.iter_mut().enumerate().for_each(|(r, v)| *v *= mask[r % s]);
        }
        cur
    }

    pub fn expand(&self) -> Result<Matrix> {
        let n = self.dim();
        if n.saturating_mul(n) > EXPAND_CAP {
            return Err(NteError::Capacity { unknowns: n, cap: (EXPAND_CAP as f64).sqrt() as usize });
        }
        let mut out = Matrix::zeros(n, n);
        let s = self.spatial_len();
        for t in &self.terms {
            let mut m = kron_all(&t.factors) * t.coeff;
            if let Some(mask) = &t.row_mask {
                for r in 0..n {
                    let w = mask[r % s];
                    if w != 1.0 {
                        m.row_mut(r).scale_mut(w);
                    }
                }
            }
            out += m;
        }
        Ok(out)
    }

    /// Spatial block for the (group, ordinate) row index `row` and column
    /// index `col`.
    pub fn block(&self, row: (usize, usize), col: (usize, usize)) -> Result<Matrix> {
        let s = self.spatial_len();
        if row.0 >= self.shape[0] || col.0 >= self.shape[0] || row.1 >= self.shape[1] || col.1 >= self.shape[1] {
            return shape_err("block index out of range");
        }
        let mut out = Matrix::zeros(s, s);
        for t in &self.terms {
            let c = t.coeff * t.factors[0][(row.0, col.0)] * t.factors[1][(row.1, col.1)];
            if c == 0.0 {
                continue;
            }
            let mut m = kron_all(&t.factors[2..]) * c;
            if let Some(mask) = &t.row_mask {
                for r in 0..s {
                    m.row_mut(r).scale_mut(mask[r]);
                }
            }
            out += m;
        }
        Ok(out)
    }
}

impl LinearMap for KronSum {
    fn dim(&self) -> usize {
        KronSum::dim(self)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for t in &self.terms {
            let z = self.apply_term(t, x);
            y.iter_mut().zip(&z).for_each(|(a, b)| *a += t.coeff * b);
        }
        y
    }
}

/// Dense-mode operators, each a [`KronSum`] over the full `(G, L, spatial)` grid.
#[derive(Clone, Debug)]
pub struct DenseOperators {
    pub hx: KronSum,
    pub hy: KronSum,
    pub hz: KronSum,
    pub hsigma: KronSum,
    pub h: KronSum,
    pub s: KronSum,
    pub f: KronSum,
    pub vinv: Option<KronSum>,
    pub quadrature: AngularQuadrature,
}

impl DenseOperators {
    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn shape(&self) -> &[usize] {
        self.h.shape()
    }

    pub fn get(&self, kind: OperatorKind) -> Option<&KronSum> {
        Some(match kind {
            OperatorKind::Hx => &self.hx,
            OperatorKind::Hy => &self.hy,
            OperatorKind::Hz => &self.hz,
            OperatorKind::Hsigma => &self.hsigma,
            OperatorKind::S => &self.s,
            OperatorKind::F => &self.f,
            OperatorKind::Vinv => return self.vinv.as_ref(),
        })
    }

    /// Entries of the equivalent explicit matrix `H`.
    pub fn h_storage_entries(&self) -> f64 {
        (self.dim() as f64).powi(2)
    }

    /// `H + α V⁻¹`.
    pub fn shifted_h(&self, alpha: f64) -> Result<KronSum> {
        if alpha == 0.0 {
            return Ok(self.h.clone());
        }
        let v = self
            .vinv
            .as_ref()
            .ok_or_else(|| NteError::Validation("alpha mode needs group velocities".into()))?;
        self.h.add(&v.scale(alpha))
    }
}

fn kron_sum_of(p: &TransportProblem, kind: OperatorKind) -> Result<KronSum> {
    let shape = p.mode_sizes();
    let terms = operator_terms(p, kind)?
        .into_iter()
        .map(|t: FactorTerm| {
            let mask = t.material.map(|m| {
                let signs = p.quadrature.octant_signs(t.octant).expect("octant from term list");
                row_materials(p, signs).iter().map(|&c| if c == m { 1.0 } else { 0.0 }).collect()
            });
            KronTerm::new(t.octant, t.factors, mask)
        })
        .collect();
    KronSum::new(shape, terms)
}

pub fn assemble_dense_operators(p: &TransportProblem) -> Result<DenseOperators> {
    assemble_dense_operators_with_cap(p, DEFAULT_DENSE_CAP)
}

pub fn assemble_dense_operators_with_cap(p: &TransportProblem, cap: usize) -> Result<DenseOperators> {
    p.validate()?;
    let n = p.num_unknowns();
    if n > cap {
        return Err(NteError::Capacity { unknowns: n, cap });
    }
    let hx = kron_sum_of(p, OperatorKind::Hx)?;
    let hy = kron_sum_of(p, OperatorKind::Hy)?;
    let hz = kron_sum_of(p, OperatorKind::Hz)?;
    let hsigma = kron_sum_of(p, OperatorKind::Hsigma)?;
    let h = hx.add(&hy)?.add(&hz)?.add(&hsigma)?;
    Ok(DenseOperators {
        h,
        hx,
        hy,
        hz,
        hsigma,
        s: kron_sum_of(p, OperatorKind::S)?,
        f: kron_sum_of(p, OperatorKind::F)?,
        vinv: if p.has_velocities() {
            Some(kron_sum_of(p, OperatorKind::Vinv)?)
        } else {
            None
        },
        quadrature: p.quadrature.clone(),
    })
}

/// Per-axis sweep data of one term: diagonal and upwind entries.
#[derive(Clone, Debug)]
struct SweepTerm {
    mask: Option<Vec<f64>>,
    diag: Vec<Vec<f64>>,
    upwind: Vec<Vec<f64>>,
}

/// Exact inverse of a streaming-plus-collision operator by transport sweeps.
///
/// For a fixed group and ordinate the spatial block is a sum of Kronecker
/// products of bidiagonal matrices whose off-diagonal lies on the upwind
/// side, so it is triangular in sweep order and one pass of substitution
/// solves it.
#[derive(Clone, Debug)]
pub struct TransportSweep {
    shape: Vec<usize>,
    /// Per (group, ordinate): sweep direction per spatial storage axis
    /// (`true` means ascending) and the contributing terms.
    blocks: Vec<(Vec<bool>, Vec<(usize, f64)>)>,
    /// Per term and direction pattern.
    terms: Vec<Option<SweepTerm>>,
}

impl TransportSweep {
    pub fn new(h: &KronSum, q: &AngularQuadrature) -> Result<Self> {
        let shape = h.shape().to_vec();
        let (g, l) = (shape[0], shape[1]);
        let dims = shape.len() - 2;
        if l != q.len() || (dims != q.dims) {
            return shape_err("quadrature does not match the operator");
        }
        let unsupported = |msg: &str| Err(NteError::Unsupported(format!("sweep: {msg}")));
        let mut term_dirs: Vec<Option<Vec<bool>>> = vec![None; h.terms.len()];
        let mut blocks = Vec::with_capacity(g * l);
        for gi in 0..g {
            for li in 0..l {
                let cos = [q.mu[li], q.eta[li], q.xi[li]];
                // storage axis `pos` is physical axis dims-1-pos
                let dirs: Vec<bool> = (0..dims).map(|pos| cos[dims - 1 - pos] > 0.0).collect();
                let mut list = Vec::new();
                for (ti, t) in h.terms.iter().enumerate() {
                    let c = t.coeff * t.factors[0][(gi, gi)] * t.factors[1][(li, li)];
                    if c == 0.0 {
                        continue;
                    }
                    match &term_dirs[ti] {
                        Some(d) if *d != dirs => return unsupported("term mixes sweep directions"),
                        _ => term_dirs[ti] = Some(dirs.clone()),
                    }
                    list.push((ti, c));
                }
                blocks.push((dirs, list));
            }
        }
        let mut terms = Vec::with_capacity(h.terms.len());
        for (ti, t) in h.terms.iter().enumerate() {
            for k in 0..2 {
                let f = &t.factors[k];
                let off = (0..f.nrows()).any(|i| (0..f.ncols()).any(|j| i != j && f[(i, j)] != 0.0));
                if off {
                    return unsupported("energy or angle factor is not diagonal");
                }
            }
            let Some(dirs) = &term_dirs[ti] else {
                terms.push(None);
                continue;
            };
            let mut diag = Vec::with_capacity(dims);
            let mut upwind = Vec::with_capacity(dims);
            for pos in 0..dims {
                let f = &t.factors[2 + pos];
                let n = f.nrows();
                let mut dg = vec![0.0; n];
                let mut up = vec![0.0; n];
                for i in 0..n {
                    for j in 0..n {
                        let v = f[(i, j)];
                        if v == 0.0 {
                            continue;
                        }
                        let upwind_j = if dirs[pos] { i.checked_sub(1) } else { (i + 1 < n).then_some(i + 1) };
                        if i == j {
                            dg[i] = v;
                        } else if Some(j) == upwind_j {
                            up[i] = v;
                        } else {
                            return unsupported("spatial factor couples downwind vertices");
                        }
                    }
                }
                diag.push(dg);
                upwind.push(up);
            }
            terms.push(Some(SweepTerm {
                mask: t.row_mask.clone(),
                diag,
                upwind,
            }));
        }
        Ok(TransportSweep { shape, blocks, terms })
    }

    fn solve_block(&self, dirs: &[bool], list: &[(usize, f64)], b: &[f64], x: &mut [f64]) -> Result<()> {
        let sp = &self.shape[2..];
        let dims = sp.len();
        let total: usize = sp.iter().product();
        let mut strides = vec![1usize; dims];
        for pos in (0..dims.saturating_sub(1)).rev() {
            strides[pos] = strides[pos + 1] * sp[pos + 1];
        }
        let mut idx = vec![0usize; dims];
        let combos = 1usize << dims;
        for step in 0..total {
            let mut rem = step;
            let mut r = 0;
            for pos in (0..dims).rev() {
                let c = rem % sp[pos];
                rem /= sp[pos];
                idx[pos] = if dirs[pos] { c } else { sp[pos] - 1 - c };
                r += idx[pos] * strides[pos];
            }
            let mut acc = b[r];
            let mut diag = 0.0;
            for &(ti, c) in list {
                let t = self.terms[ti].as_ref().expect("term used by a block has sweep data");
                let w = c * t.mask.as_ref().map_or(1.0, |m| m[r]);
                if w == 0.0 {
                    continue;
                }
                'combo: for mask in 0..combos {
                    let mut prod = w;
                    let mut nb = r;
                    for pos in 0..dims {
                        if mask & (1 << pos) != 0 {
                            let v = t.upwind[pos][idx[pos]];
                            if v == 0.0 {
                                continue 'combo;
                            }
                            prod *= v;
                            if dirs[pos] {
                                nb -= strides[pos];
                            } else {
                                nb += strides[pos];
                            }
                        } else {
                            prod *= t.diag[pos][idx[pos]];
                        }
                    }
                    if mask == 0 {
                        diag += prod;
                    } else {
                        acc -= prod * x[nb];
                    }
                }
            }
            if diag.abs() <= f64::MIN_POSITIVE || !diag.is_finite() {
                return Err(NteError::Singular(format!("sweep met a zero pivot at spatial row {r}")));
            }
            x[r] = acc / diag;
        }
        Ok(())
    }
}

impl LinearSolve for TransportSweep {
    fn dim(&self) -> usize {
        self.shape.iter().product()
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let s: usize = self.shape[2..].iter().product();
        if b.len() != self.dim() {
            return shape_err("right-hand side length does not match the sweep");
        }
        let mut x = vec![0.0; b.len()];
        for (blk, (dirs, list)) in self.blocks.iter().enumerate() {
            let range = blk * s..(blk + 1) * s;
            if list.is_empty() {
                if b[range.clone()].iter().any(|v| *v != 0.0) {
                    return Err(NteError::Singular("operator has an empty (group, ordinate) block".into()));
                }
                continue;
            }
            self.solve_block(dirs, list, &b[range.clone()], &mut x[range])?;
        }
        Ok(x)
    }
}

/// Largest system solved by an explicit LU when the sweep does not apply.
pub const DENSE_LU_LIMIT: usize = 1024;

/// Solver for `H x = b` in dense mode.
pub enum HSolver {
    Sweep(TransportSweep),
    Lu(DenseLu),
}

impl HSolver {
    pub fn new(h: &KronSum, q: &AngularQuadrature) -> Result<Self> {
        match TransportSweep::new(h, q) {
            Ok(s) => Ok(HSolver::Sweep(s)),
            Err(NteError::Unsupported(_)) if h.dim() <= DENSE_LU_LIMIT => Ok(HSolver::Lu(DenseLu::new(h.expand()?)?)),
            Err(e) => Err(e),
        }
    }
}

impl LinearSolve for HSolver {
    fn dim(&self) -> usize {
        match self {
            HSolver::Sweep(s) => s.dim(),
            HSolver::Lu(l) => l.dim(),
        }
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            HSolver::Sweep(s) => s.solve(b),
            HSolver::Lu(l) => l.solve(b),
        }
    }
}

/// Solver for `(H - S) x = b`: explicit LU for small systems, otherwise GMRES
/// right-preconditioned by the sweep for `H`.
pub enum LossSolver {
    Lu(DenseLu),
    Krylov {
        a: KronSum,
        precond: HSolver,
        tol: f64,
    },
}

impl LossSolver {
    pub fn new(h: &KronSum, s: &KronSum, q: &AngularQuadrature, tol: f64) -> Result<Self> {
        let a = h.add(&s.scale(-1.0))?;
        if a.dim() <= DENSE_LU_LIMIT {
            return Ok(LossSolver::Lu(DenseLu::new(a.expand()?)?));
        }
        Ok(LossSolver::Krylov {
            precond: HSolver::new(h, q)?,
            a,
            tol,
        })
    }
}

impl LinearSolve for LossSolver {
    fn dim(&self) -> usize {
        match self {
            LossSolver::Lu(l) => l.dim(),
            LossSolver::Krylov { a, .. } => a.dim(),
        }
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            LossSolver::Lu(l) => l.solve(b),
            LossSolver::Krylov { a, precond, tol } => {
                let out = gmres(&|x| Ok(a.apply(x)), &|x| precond.solve(x), b, None, *tol, 150, 3000)?;
                if !out.converged {
                    return Err(NteError::not_converged(
                        "GMRES for (H - S)",
                        out.iterations,
                        out.residual,
                        vec![out.residual],
                    ));
                }
                Ok(out.x)
            }
        }
    }
}
