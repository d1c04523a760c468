use crate::dkt::DofLayout;
use crate::error::{Error, Result};
use crate::geom::{cross3, dot3, norm3, scale3, V3};

/// Gradient dofs of a node in the local order `[∂₁w (3 comps), ∂₂w (3 comps)]`.
#[inline]
pub fn gradient_dof(node: usize, local: usize) -> usize {
    let (kind, comp) = (1 + local / 3, local % 3);
    9 * node + 3 * comp + kind
}

fn frame(y: &[f64], z: usize) -> [V3<f64>; 2] {
    [[y[9 * z + 1], y[9 * z + 4], y[9 * z + 7]], [y[9 * z + 2], y[9 * z + 5], y[9 * z + 8]]]
}

/// Linearized nodal isometry constraint `sym(∇y(z)ᵀ∇w(z)) = 0` at every non-clamped node.
///
/// Each constrained node contributes the rows `(1,1)`, `(2,2)`, `(1,2)` acting on its six
/// gradient dofs.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    pub nodes: Vec<usize>,
    pub rows: Vec<[[f64; 6]; 3]>,
}

impl ConstraintMatrix {
    pub fn build(y: &[f64], layout: &DofLayout) -> Result<Self> {
        if y.len() != layout.n_dofs() {
            return Err(Error::LayoutMismatch { expected: layout.n_dofs(), got: y.len() });
        }
        let nodes: Vec<usize> = (0..layout.n_nodes()).filter(|&z| !layout.is_clamped(z)).collect();
        let rows = nodes
            .iter()
            .map(|&z| {
                let [f1, f2] = frame(y, z);
                let mut r = [[0.0; 6]; 3];
                for c in 0..3 {
                    r[0][c] = 2.0 * f1[c];
                    r[1][3 + c] = 2.0 * f2[c];
                    r[2][c] = f2[c];
                    r[2][3 + c] = f1[c];
                }
                r
            })
            .collect();
        Ok(ConstraintMatrix { nodes, rows })
    }

    pub fn n_rows(&self) -> usize {
        3 * self.nodes.len()
    }

    /// `A w` for a full dof vector.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_rows());
        for (z, r) in self.nodes.iter().zip(&self.rows) {
            for row in r {
                out.push((0..6).map(|k| row[k] * w[gradient_dof(*z, k)]).sum());
            }
        }
        out
    }

    /// Entries `(row, full dof, value)`, zeros included so the pattern is state independent.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.nodes.iter().zip(&self.rows).enumerate().flat_map(|(k, (&z, r))| {
            (0..3).flat_map(move |i| (0..6).map(move |j| (3 * k + i, gradient_dof(z, j), r[i][j])))
        })
    }
}

/// Kernel basis `C` of the constraint, block diagonal over nodes.
///
/// Per constrained node: a unit column for every free value dof and three orthonormal
/// gradient directions spanning the exact kernel of the 3×6 node block.
#[derive(Debug, Clone)]
pub struct NullSpaceBasis {
    /// For each node with columns: the node and its columns as `(full dof, value)` lists.
    pub nodes: Vec<(usize, Vec<Vec<(usize, f64)>>)>,
    /// First reduced index of every entry of `nodes`.
    pub offsets: Vec<usize>,
    pub n_cols: usize,
}

/// Orthonormal basis of `{(u, v) ∈ ℝ³ × ℝ³ : f₁·u = 0, f₂·v = 0, f₂·u + f₁·v = 0}`.
///
/// Returns `None` when the frame is (nearly) rank deficient.
pub fn local_kernel(f1: V3<f64>, f2: V3<f64>) -> Option<[[f64; 6]; 3]> {
    let nu = cross3(f1, f2);
    let nn = norm3(nu);
    if !(nn > 1e-10 * norm3(f1) * norm3(f2)) || !nn.is_finite() {
        return None;
    }
    let n = scale3(1.0 / nn, nu);
    // in-plane direction u = a f1 + b f2, v = c f1 + d f2 from the 3x4 system M (a,b,c,d) = 0
    let (g11, g12, g22) = (dot3(f1, f1), dot3(f1, f2), dot3(f2, f2));
    let m = [[g11, g12, 0.0, 0.0], [0.0, 0.0, g12, g22], [g12, g22, g11, g12]];
    let minor = |skip: usize| -> f64 {
        let cols: Vec<usize> = (0..4).filter(|&c| c != skip).collect();
        let e = |r: usize, k: usize| m[r][cols[k]];
        e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
            + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
    };
    let coef = [minor(0), -minor(1), minor(2), -minor(3)];
    let u: V3<f64> = [0, 1, 2].map(|i| coef[0] * f1[i] + coef[1] * f2[i]);
    let v: V3<f64> = [0, 1, 2].map(|i| coef[2] * f1[i] + coef[3] * f2[i]);
    let len = (dot3(u, u) + dot3(v, v)).sqrt();
    if !(len > 0.0) {
        return None;
    }
    Some([
        [n[0], n[1], n[2], 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, n[0], n[1], n[2]],
        [u[0] / len, u[1] / len, u[2] / len, v[0] / len, v[1] / len, v[2] / len],
    ])
}

impl NullSpaceBasis {
    pub fn build(y: &[f64], layout: &DofLayout) -> Result<Self> {
        if y.len() != layout.n_dofs() {
            return Err(Error::LayoutMismatch { expected: layout.n_dofs(), got: y.len() });
        }
        let mut nodes = Vec::new();
        let mut offsets = Vec::new();
        let mut degenerate = Vec::new();
        let mut n_cols = 0;
        for z in 0..layout.n_nodes() {
            if layout.is_clamped(z) {
                continue;
            }
            let mut cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(6);
            for c in 0..3 {
                let dof = 9 * z + 3 * c;
                if !layout.is_fixed(dof) {
                    cols.push(vec![(dof, 1.0)]);
                }
            }
            let [f1, f2] = frame(y, z);
            match local_kernel(f1, f2) {
                Some(k) => {
                    for v in k {
                        cols.push((0..6).map(|j| (gradient_dof(z, j), v[j])).collect());
                    }
                }
                None => degenerate.push(z),
            }
            offsets.push(n_cols);
            n_cols += cols.len();
            nodes.push((z, cols));
        }
        if !degenerate.is_empty() {
            return Err(Error::DegenerateGradient(degenerate));
        }
        Ok(NullSpaceBasis { nodes, offsets, n_cols })
    }

    /// `C x` as a full dof vector.
    pub fn expand(&self, x: &[f64], n_dofs: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_dofs];
        for ((_, cols), &off) in self.nodes.iter().zip(&self.offsets) {
            for (j, col) in cols.iter().enumerate() {
                for &(dof, v) in col {
                    out[dof] += v * x[off + j];
                }
            }
        }
        out
    }

    /// `Cᵀ b` for a full dof vector.
    pub fn reduce(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        for ((_, cols), &off) in self.nodes.iter().zip(&self.offsets) {
            for (j, col) in cols.iter().enumerate() {
                out[off + j] = col.iter().map(|&(dof, v)| v * b[dof]).sum();
            }
        }
        out
    }
}
