use super::TriMesh;
use crate::geom::{point_triangle_distance, P2};
use crate::scalar::Real;

/// Per-vertex exclusion sets for the inner tangent-point integral.
///
/// Triangle `T` is excluded for vertex `z` iff `dist(z, T) < h_min / 2`; a triangle touching the
/// ball only at its boundary stays admissible. The excluded lists are short, so they are what
/// gets stored; the admissible sets are their complements.
#[derive(Debug, Clone, PartialEq)]
pub struct ExclusionTable {
    excluded: Vec<Vec<usize>>,
    n_triangles: usize,
}

impl ExclusionTable {
    pub fn n_vertices(&self) -> usize {
        self.excluded.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.n_triangles
    }

    /// Sorted excluded triangles of vertex `z`.
    pub fn excluded(&self, z: usize) -> &[usize] {
        &self.excluded[z]
    }

    pub fn is_admissible(&self, z: usize, t: usize) -> bool {
        self.excluded[z].binary_search(&t).is_err()
    }

    /// Sorted admissible triangles `ω_h(z)`.
    pub fn admissible(&self, z: usize) -> Vec<usize> {
        let ex = &self.excluded[z];
        let mut out = Vec::with_capacity(self.n_triangles - ex.len());
        let mut k = 0;
        for t in 0..self.n_triangles {
            if k < ex.len() && ex[k] == t {
                k += 1;
            } else {
                out.push(t);
            }
        }
        out
    }
}

/// Uniform bucket grid over triangle bounding boxes.
struct Buckets {
    origin: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
}

impl Buckets {
    fn new<T: Real>(mesh: &TriMesh<T>, cell: f64) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for c in &mesh.corners {
            for p in c {
                for d in 0..2 {
                    lo[d] = lo[d].min(p[d].to_f64_lossy());
                    hi[d] = hi[d].max(p[d].to_f64_lossy());
                }
            }
        }
        let nx = (((hi[0] - lo[0]) / cell).ceil() as usize).max(1);
        let ny = (((hi[1] - lo[1]) / cell).ceil() as usize).max(1);
        let mut cells = vec![Vec::new(); nx * ny];
        let mut b = Buckets { origin: lo, cell, nx, ny, cells: Vec::new() };
        for (t, c) in mesh.corners.iter().enumerate() {
            let xs = c.map(|p| p[0].to_f64_lossy());
            let ys = c.map(|p| p[1].to_f64_lossy());
            let (i0, j0) = b.locate(xs.iter().copied().fold(f64::INFINITY, f64::min), ys.iter().copied().fold(f64::INFINITY, f64::min));
            let (i1, j1) = b.locate(xs.iter().copied().fold(f64::NEG_INFINITY, f64::max), ys.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    cells[j * nx + i].push(t);
                }
            }
        }
        b.cells = cells;
        b
    }

    fn locate(&self, x: f64, y: f64) -> (usize, usize) {
        let i = ((x - self.origin[0]) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((y - self.origin[1]) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    fn near(&self, p: [f64; 2], r: f64, out: &mut Vec<usize>) {
        let (i0, j0) = self.locate(p[0] - r, p[1] - r);
        let (i1, j1) = self.locate(p[0] + r, p[1] + r);
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.extend_from_slice(&self.cells[j * self.nx + i]);
            }
        }
    }
}

/// Builds the exclusion sets of every mesh vertex (periodic images included).
pub fn exclusion_table<T: Real>(mesh: &TriMesh<T>) -> ExclusionTable {
    let radius = mesh.h_min * T::lit(0.5);
    let tol = mesh.h_min * T::lit(1e-9);
    let buckets = Buckets::new(mesh, mesh.h_min.to_f64_lossy().max(1e-300));
    let reach = radius.to_f64_lossy() * 1.01;
    let mut candidates = Vec::new();
    let excluded = mesh
        .vertices
        .iter()
        .map(|&z| {
            let images: Vec<P2<T>> = match &mesh.periodicity {
                Some(p) => p.images(z).to_vec(),
                None => vec![z],
            };
            candidates.clear();
            for img in &images {
                buckets.near([img[0].to_f64_lossy(), img[1].to_f64_lossy()], reach, &mut candidates);
            }
            candidates.sort_unstable();
            candidates.dedup();
            candidates
                .iter()
                .copied()
                .filter(|&t| {
                    images
                        .iter()
                        .any(|&img| point_triangle_distance(img, &mesh.corners[t]) < radius - tol)
                })
                .collect()
        })
        .collect();
    ExclusionTable { excluded, n_triangles: mesh.n_triangles() }
}
