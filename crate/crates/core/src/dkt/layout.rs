use crate::error::{Error, Result};
use crate::geom::{cross3, V3};
use crate::mesh::TriMesh;
use crate::scalar::Real;

/// Nodal dof kinds of the scalar DKT space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofKind {
    Value = 0,
    D1 = 1,
    D2 = 2,
}

/// Global numbering `9·node + 3·component + kind` for deformations `y: ω → ℝ³`.
///
/// Fixed dofs carry Dirichlet data; the remaining ones get consecutive free indices.
#[derive(Debug, Clone)]
pub struct DofLayout {
    n_nodes: usize,
    fixed: Vec<bool>,
    free_index: Vec<Option<usize>>,
    free: Vec<usize>,
}

impl DofLayout {
    pub fn new(n_nodes: usize) -> Self {
        let mut l = DofLayout { n_nodes, fixed: vec![false; 9 * n_nodes], free_index: vec![], free: vec![] };
        l.renumber();
        l
    }

    /// Fixes all nine dofs (position and gradient) at the given nodes.
    pub fn with_clamped(mut self, nodes: &[usize]) -> Self {
        for &n in nodes {
            for k in 0..9 {
                self.fixed[9 * n + k] = true;
            }
        }
        self.renumber();
        self
    }

    /// Fixes only the three position dofs at `node`.
    pub fn with_pinned_position(mut self, node: usize) -> Self {
        for c in 0..3 {
            self.fixed[9 * node + 3 * c] = true;
        }
        self.renumber();
        self
    }

    fn renumber(&mut self) {
        self.free.clear();
        self.free_index = self
            .fixed
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                if f {
                    None
                } else {
                    self.free.push(i);
                    Some(self.free.len() - 1)
                }
            })
            .collect();
    }

    #[inline]
    pub fn index(node: usize, comp: usize, kind: DofKind) -> usize {
        9 * node + 3 * comp + kind as usize
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_dofs(&self) -> usize {
        9 * self.n_nodes
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.fixed[dof]
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free_index[dof]
    }

    /// Global indices of the free dofs in free-index order.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    /// A node whose nine dofs are all fixed.
    pub fn is_clamped(&self, node: usize) -> bool {
        self.fixed[9 * node..9 * node + 9].iter().all(|&f| f)
    }

    pub fn restrict<T: Copy>(&self, full: &[T]) -> Vec<T> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// Embeds a free vector into a full one, fixed entries zero.
    pub fn extend<T: Real>(&self, free: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_dofs()];
        for (k, &i) in self.free.iter().enumerate() {
            out[i] = free[k];
        }
        out
    }
}

/// Coefficient vector of a deformation in [`DofLayout`] numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationState<T> {
    pub coeffs: Vec<T>,
}

impl<T: Real> DeformationState<T> {
    pub fn zeros(n_nodes: usize) -> Self {
        DeformationState { coeffs: vec![T::zero(); 9 * n_nodes] }
    }

    pub fn from_coeffs(coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() % 9 != 0 {
            return Err(Error::LayoutMismatch { expected: coeffs.len() / 9 * 9 + 9, got: coeffs.len() });
        }
        Ok(DeformationState { coeffs })
    }

    /// Nodal interpolation of a map given with its two partial derivatives.
    pub fn interpolate(mesh: &TriMesh<T>, f: impl Fn([T; 2]) -> (V3<T>, [V3<T>; 2])) -> Self {
        let mut s = Self::zeros(mesh.n_vertices());
        for (n, &p) in mesh.vertices.iter().enumerate() {
            let (y, [d1, d2]) = f(p);
            s.set_position(n, y);
            s.set_gradient(n, [d1, d2]);
        }
        s
    }

    pub fn n_nodes(&self) -> usize {
        self.coeffs.len() / 9
    }

    pub fn position(&self, n: usize) -> V3<T> {
        [0, 1, 2].map(|c| self.coeffs[9 * n + 3 * c])
    }

    /// Partial derivatives `[∂₁y, ∂₂y]` at node `n`.
    pub fn gradient(&self, n: usize) -> [V3<T>; 2] {
        [1, 2].map(|k| [0, 1, 2].map(|c| self.coeffs[9 * n + 3 * c + k]))
    }

    pub fn set_position(&mut self, n: usize, y: V3<T>) {
        for c in 0..3 {
            self.coeffs[9 * n + 3 * c] = y[c];
        }
    }

    pub fn set_gradient(&mut self, n: usize, g: [V3<T>; 2]) {
        for c in 0..3 {
            self.coeffs[9 * n + 3 * c + 1] = g[0][c];
            self.coeffs[9 * n + 3 * c + 2] = g[1][c];
        }
    }

    /// Unnormalized normal `∂₁y × ∂₂y` at node `n`.
    pub fn normal(&self, n: usize) -> V3<T> {
        let [a, b] = self.gradient(n);
        cross3(a, b)
    }

    pub fn positions(&self) -> Vec<V3<T>> {
        (0..self.n_nodes()).map(|n| self.position(n)).collect()
    }

    /// Scalar coefficients `[w, ∂₁w, ∂₂w]` of component `c`, three per node.
    pub fn component(&self, c: usize) -> Vec<T> {
        let mut out = Vec::with_capacity(3 * self.n_nodes());
        for n in 0..self.n_nodes() {
            out.extend_from_slice(&self.coeffs[9 * n + 3 * c..9 * n + 3 * c + 3]);
        }
        out
    }

    pub fn cast<U: Real>(&self) -> DeformationState<U> {
        DeformationState { coeffs: self.coeffs.iter().map(|v| U::lit(v.to_f64_lossy())).collect() }
    }

    pub fn axpy(&mut self, a: T, x: &[T]) {
        for (c, &v) in self.coeffs.iter_mut().zip(x) {
            *c += a * v;
        }
    }
}
