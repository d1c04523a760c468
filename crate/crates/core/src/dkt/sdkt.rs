use rayon::prelude::*;

use super::element::LocalDkt;
use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::scalar::Real;

/// Element operators with the orientation signs of glued corners.
///
/// `local = sign ⊙ global` on the nine element dofs; on a Möbius seam the local `∂₂`
/// of a corner is the negated global one.
#[derive(Debug, Clone)]
pub struct DiscreteGradientMap<T> {
    pub elements: Vec<LocalDkt<T>>,
    pub signs: Vec<[T; 9]>,
    pub triangles: Vec<[usize; 3]>,
}

impl<T: Real> DiscreteGradientMap<T> {
    pub fn build(mesh: &TriMesh<T>) -> Result<Self> {
        let mut elements = Vec::with_capacity(mesh.n_triangles());
        let mut signs = Vec::with_capacity(mesh.n_triangles());
        for (t, c) in mesh.corners.iter().enumerate() {
            elements.push(LocalDkt::new(c).ok_or(Error::DegenerateTriangle(t))?);
            let mut s = [T::one(); 9];
            for i in 0..3 {
                if mesh.corner_flip[t][i] {
                    s[3 * i + 2] = -T::one();
                }
            }
            signs.push(s);
        }
        Ok(DiscreteGradientMap { elements, signs, triangles: mesh.triangles.clone() })
    }

    /// Local element dofs of a scalar field stored as three entries per node.
    pub fn gather_scalar(&self, t: usize, w: &[T]) -> [T; 9] {
        let tri = self.triangles[t];
        let s = &self.signs[t];
        let mut out = [T::zero(); 9];
        for i in 0..3 {
            for k in 0..3 {
                out[3 * i + k] = s[3 * i + k] * w[3 * tri[i] + k];
            }
        }
        out
    }

    /// Local element dofs of component `c` of a deformation.
    pub fn gather(&self, t: usize, y: &[T], c: usize) -> [T; 9] {
        let tri = self.triangles[t];
        let s = &self.signs[t];
        let mut out = [T::zero(); 9];
        for i in 0..3 {
            for k in 0..3 {
                out[3 * i + k] = s[3 * i + k] * y[9 * tri[i] + 3 * c + k];
            }
        }
        out
    }

    /// Adds the transpose of [`Self::gather`] applied to `local` into `out`.
    pub fn scatter(&self, t: usize, local: &[T; 9], c: usize, out: &mut [T]) {
        let tri = self.triangles[t];
        let s = &self.signs[t];
        for i in 0..3 {
            for k in 0..3 {
                out[9 * tri[i] + 3 * c + k] += s[3 * i + k] * local[3 * i + k];
            }
        }
    }
}

/// Symmetric node-block sparse matrix with 3×3 blocks.
#[derive(Debug, Clone)]
pub struct BlockSparse<T> {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub blocks: Vec<[[T; 3]; 3]>,
}

impl<T: Real> BlockSparse<T> {
    /// Pattern of all node pairs sharing a triangle, with zero blocks.
    pub fn pattern(n_nodes: usize, triangles: &[[usize; 3]]) -> Self {
        let mut adj: Vec<Vec<usize>> = (0..n_nodes).map(|n| vec![n]).collect();
        for tri in triangles {
            for &a in tri {
                adj[a].extend_from_slice(tri);
            }
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        for mut a in adj {
            a.sort_unstable();
            a.dedup();
            cols.extend(a);
            row_ptr.push(cols.len());
        }
        let blocks = vec![[[T::zero(); 3]; 3]; cols.len()];
        BlockSparse { row_ptr, cols, blocks }
    }

    pub fn n_nodes(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let r = &self.cols[self.row_ptr[row]..self.row_ptr[row + 1]];
        r.binary_search(&col).ok().map(|k| self.row_ptr[row] + k)
    }

    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, &[[T; 3]; 3])> {
        let r = self.row_ptr[row]..self.row_ptr[row + 1];
        self.cols[r.clone()].iter().copied().zip(self.blocks[r].iter())
    }

    /// Product with a scalar field stored three entries per node.
    pub fn apply_scalar(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        out.par_chunks_mut(3).enumerate().for_each(|(n, o)| {
            for (m, b) in self.row(n) {
                for a in 0..3 {
                    for k in 0..3 {
                        o[a] += b[a][k] * x[3 * m + k];
                    }
                }
            }
        });
        out
    }

    /// Componentwise product with a deformation in nine-per-node layout.
    pub fn apply_deformation(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); y.len()];
        out.par_chunks_mut(9).enumerate().for_each(|(n, o)| {
            for (m, b) in self.row(n) {
                for c in 0..3 {
                    for a in 0..3 {
                        for k in 0..3 {
                            o[3 * c + a] += b[a][k] * y[9 * m + 3 * c + k];
                        }
                    }
                }
            }
        });
        out
    }

    pub fn to_dense_scalar(&self) -> Vec<Vec<T>> {
        let n = 3 * self.n_nodes();
        let mut d = vec![vec![T::zero(); n]; n];
        for r in 0..self.n_nodes() {
            for (c, b) in self.row(r) {
                for a in 0..3 {
                    for k in 0..3 {
                        d[3 * r + a][3 * c + k] = b[a][k];
                    }
                }
            }
        }
        d
    }
}

/// Discrete bending operator `S` with `(S w, v) = (∇∇_h w, ∇∇_h v)` and the lumped
/// mass weights `β_z`.
#[derive(Debug, Clone)]
pub struct SdktOperator<T> {
    pub matrix: BlockSparse<T>,
    pub lumped: Vec<T>,
    pub map: DiscreteGradientMap<T>,
}

impl<T: Real> SdktOperator<T> {
    pub fn assemble(mesh: &TriMesh<T>) -> Result<Self> {
        let map = DiscreteGradientMap::build(mesh)?;
        let mut matrix = BlockSparse::pattern(mesh.n_vertices(), &mesh.triangles);
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let s = map.elements[t].stiffness();
            let sg = &map.signs[t];
            for i in 0..3 {
                for j in 0..3 {
                    let pos = matrix.position(tri[i], tri[j]).expect("pattern covers triangle");
                    let blk = &mut matrix.blocks[pos];
                    for a in 0..3 {
                        for b in 0..3 {
                            blk[a][b] += sg[3 * i + a] * sg[3 * j + b] * s[3 * i + a][3 * j + b];
                        }
                    }
                }
            }
        }
        Ok(SdktOperator { matrix, lumped: mesh.lumped_weights(), map })
    }

    pub fn n_nodes(&self) -> usize {
        self.matrix.n_nodes()
    }

    /// `S y` for a deformation, componentwise.
    pub fn apply(&self, y: &[T]) -> Vec<T> {
        self.matrix.apply_deformation(y)
    }

    /// `½ (S y, y)`.
    pub fn bending_energy(&self, y: &[T]) -> T {
        let sy = self.apply(y);
        T::lit(0.5) * sy.iter().zip(y).map(|(a, b)| *a * *b).sum::<T>()
    }

    /// Assembles `½ Σ_T ‖∇∇_h y‖²_{L²(T)}` element by element.
    pub fn bending_energy_elementwise(&self, y: &[T]) -> T {
        let mut e = T::zero();
        for t in 0..self.map.elements.len() {
            let s = self.map.elements[t].stiffness();
            for c in 0..3 {
                let l = self.map.gather(t, y, c);
                for a in 0..9 {
                    for b in 0..9 {
                        e += l[a] * s[a][b] * l[b];
                    }
                }
            }
        }
        T::lit(0.5) * e
    }
}

/// Lumped product `Σ_z β_z y(z)·v(z)` of the nodal positions.
pub fn lumped_product<T: Real>(beta: &[T], y: &[T], v: &[T]) -> T {
    let mut s = T::zero();
    for (z, &b) in beta.iter().enumerate() {
        for c in 0..3 {
            s += b * y[9 * z + 3 * c] * v[9 * z + 3 * c];
        }
    }
    s
}

/// Lumped load `b_f` with `(b_f, v) = Σ_z β_z f(z)·v(z)`.
pub fn load_vector<T: Real>(mesh: &TriMesh<T>, f: impl Fn([T; 2]) -> [T; 3]) -> Vec<T> {
    let beta = mesh.lumped_weights();
    let mut b = vec![T::zero(); 9 * mesh.n_vertices()];
    for (z, &p) in mesh.vertices.iter().enumerate() {
        let fz = f(p);
        for c in 0..3 {
            b[9 * z + 3 * c] = beta[z] * fz[c];
        }
    }
    b
}
