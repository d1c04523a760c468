use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};
use faer::{Conj, Mat, Side};

use super::constraints::{ConstraintMatrix, NullSpaceBasis};
use crate::dkt::{DofLayout, SdktOperator};
use crate::error::{Error, Result};

/// Linear solver for the constrained step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    /// Indefinite system with Lagrange multipliers, sparse LU.
    Saddle,
    /// Reduced positive definite system on the kernel basis, sparse Cholesky.
    NullSpace,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "saddle" => Ok(SolverKind::Saddle),
            "nullspace" => Ok(SolverKind::NullSpace),
            _ => Err(Error::Parameter(format!("unknown solver `{s}`"))),
        }
    }
}

/// Sparse pattern whose symbolic factorization is computed once.
struct Pattern<F> {
    n: usize,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    factor: F,
}

fn pattern_of(n: usize, idx: &[(usize, usize)]) -> Result<(SymbolicSparseColMat<usize>, Argsort<usize>)> {
    let pairs: Vec<Pair<usize, usize>> = idx.iter().map(|&(r, c)| Pair::new(r, c)).collect();
    SymbolicSparseColMat::try_new_from_indices(n, n, &pairs).map_err(|e| Error::Solver(format!("sparse pattern: {e:?}")))
}

fn matrix(p: &(SymbolicSparseColMat<usize>, Argsort<usize>), vals: &[f64]) -> Result<SparseColMat<usize, f64>> {
    SparseColMat::new_from_argsort(p.0.clone(), &p.1, vals).map_err(|e| Error::Solver(format!("sparse values: {e:?}")))
}

fn solve_in_place<S: SolveCore<f64>>(f: &S, rhs: &[f64]) -> Vec<f64> {
    let mut m = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    f.solve_in_place_with_conj(Conj::No, m.as_mut());
    (0..rhs.len()).map(|i| m[(i, 0)]).collect()
}

/// Entries of `S` restricted to free dofs, as `(free row, free col, value)`, zeros kept.
fn free_stiffness(sdkt: &SdktOperator<f64>, layout: &DofLayout, lower_only: bool) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    let m = &sdkt.matrix;
    for n in 0..m.n_nodes() {
        for (k, blk) in m.row(n) {
            for c in 0..3 {
                for a in 0..3 {
                    let Some(i) = layout.free_index(9 * n + 3 * c + a) else { continue };
                    for b in 0..3 {
                        let Some(j) = layout.free_index(9 * k + 3 * c + b) else { continue };
                        if !lower_only || i >= j {
                            out.push((i, j, blk[a][b]));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Result of one constrained solve.
#[derive(Debug, Clone)]
pub struct StepSolution {
    /// `d_t y` on all dofs (fixed dofs zero).
    pub d: Vec<f64>,
    /// Multipliers of the saddle system, one per constraint row.
    pub multipliers: Option<Vec<f64>>,
}

/// Solves `(1+τ)(d, w)_* = b(w)` for all `w` in the kernel of the linearized constraint,
/// reusing symbolic factorizations across steps.
pub struct FlowSolver {
    layout: DofLayout,
    saddle: Option<Pattern<SymbolicLu<usize>>>,
    reduced: Option<Pattern<SymbolicLlt<usize>>>,
    s_free: Vec<(usize, usize, f64)>,
}

impl FlowSolver {
    pub fn new(sdkt: &SdktOperator<f64>, layout: &DofLayout) -> Self {
        FlowSolver {
            layout: layout.clone(),
            saddle: None,
            reduced: None,
            s_free: free_stiffness(sdkt, layout, false),
        }
    }

    pub fn layout(&self) -> &DofLayout {
        &self.layout
    }

    pub fn solve(
        &mut self,
        kind: SolverKind,
        sdkt: &SdktOperator<f64>,
        y: &[f64],
        b: &[f64],
        tau: f64,
    ) -> Result<StepSolution> {
        match kind {
            SolverKind::Saddle => self.solve_saddle(y, b, tau),
            SolverKind::NullSpace => self.solve_nullspace(sdkt, y, b, tau),
        }
    }

    fn solve_saddle(&mut self, y: &[f64], b: &[f64], tau: f64) -> Result<StepSolution> {
        let a = ConstraintMatrix::build(y, &self.layout)?;
        let nf = self.layout.n_free();
        let n = nf + a.n_rows();
        let mut idx = Vec::with_capacity(self.s_free.len() + 36 * a.nodes.len());
        let mut vals = Vec::with_capacity(idx.capacity());
        for &(i, j, v) in &self.s_free {
            idx.push((i, j));
            vals.push((1.0 + tau) * v);
        }
        for (r, dof, v) in a.entries() {
            let Some(j) = self.layout.free_index(dof) else { continue };
            idx.push((nf + r, j));
            vals.push(v);
            idx.push((j, nf + r));
            vals.push(v);
        }
        if self.saddle.as_ref().is_none_or(|p| p.n != n) {
            let (symbolic, argsort) = pattern_of(n, &idx)?;
            let factor = SymbolicLu::try_new(symbolic.as_ref()).map_err(|e| Error::Solver(format!("symbolic LU: {e:?}")))?;
            self.saddle = Some(Pattern { n, symbolic, argsort, factor });
        }
        let p = self.saddle.as_ref().unwrap();
        let mat = matrix(&(p.symbolic.clone(), p.argsort.clone()), &vals)?;
        let lu = Lu::try_new_with_symbolic(p.factor.clone(), mat.as_ref()).map_err(|e| Error::Solver(format!("LU: {e:?}")))?;
        let mut rhs = self.layout.restrict(b);
        rhs.resize(n, 0.0);
        let x = solve_in_place(&lu, &rhs);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("singular saddle point system".into()));
        }
        Ok(StepSolution { d: self.layout.extend(&x[..nf]), multipliers: Some(x[nf..].to_vec()) })
    }

    fn solve_nullspace(&mut self, sdkt: &SdktOperator<f64>, y: &[f64], b: &[f64], tau: f64) -> Result<StepSolution> {
        let c = NullSpaceBasis::build(y, &self.layout)?;
        let n = c.n_cols;
        // local column blocks as dense 9-vectors per node
        let mut node_pos = vec![usize::MAX; self.layout.n_nodes()];
        let dense: Vec<Vec<[f64; 9]>> = c
            .nodes
            .iter()
            .enumerate()
            .map(|(k, (z, cols))| {
                node_pos[*z] = k;
                cols.iter()
                    .map(|col| {
                        let mut v = [0.0; 9];
                        for &(dof, x) in col {
                            v[dof - 9 * z] = x;
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        let m = &sdkt.matrix;
        let mut idx = Vec::new();
        let mut vals = Vec::new();
        for (k, (z, _)) in c.nodes.iter().enumerate() {
            for (w, blk) in m.row(*z) {
                let kw = node_pos[w];
                if kw == usize::MAX || c.offsets[kw] > c.offsets[k] {
                    continue;
                }
                // S_zw C_w, column by column
                for (j, cw) in dense[kw].iter().enumerate() {
                    let mut sc = [0.0; 9];
                    for comp in 0..3 {
                        for a in 0..3 {
                            sc[3 * comp + a] = (0..3).map(|b2| blk[a][b2] * cw[3 * comp + b2]).sum();
                        }
                    }
                    for (i, cz) in dense[k].iter().enumerate() {
                        let (r, col) = (c.offsets[k] + i, c.offsets[kw] + j);
                        if r < col {
                            continue;
                        }
                        let v: f64 = (0..9).map(|t| cz[t] * sc[t]).sum();
                        idx.push((r, col));
                        vals.push((1.0 + tau) * v);
                    }
                }
            }
        }
        if self.reduced.as_ref().is_none_or(|p| p.n != n) {
            let (symbolic, argsort) = pattern_of(n, &idx)?;
            let factor = SymbolicLlt::try_new(symbolic.as_ref(), Side::Lower)
                .map_err(|e| Error::Solver(format!("symbolic Cholesky: {e:?}")))?;
            self.reduced = Some(Pattern { n, symbolic, argsort, factor });
        }
        let p = self.reduced.as_ref().unwrap();
        let mat = matrix(&(p.symbolic.clone(), p.argsort.clone()), &vals)?;
        let llt = Llt::try_new_with_symbolic(p.factor.clone(), mat.as_ref(), Side::Lower)
            .map_err(|e| Error::Solver(format!("Cholesky: {e:?}")))?;
        let x = solve_in_place(&llt, &c.reduce(b));
        Ok(StepSolution { d: c.expand(&x, self.layout.n_dofs()), multipliers: None })
    }
}
