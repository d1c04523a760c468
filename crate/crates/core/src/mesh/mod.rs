//! Structured triangulations: halved-square strips, the O-shaped ring, periodic closed strips,
//! red refinement, and the per-vertex exclusion sets used by the tangent-point quadrature.

mod build;
mod exclusion;
mod refine;

use std::collections::HashMap;

pub use build::{build_halved_squares, build_oshape, build_periodic_strip, Diagonal};
pub use exclusion::{exclusion_table, ExclusionTable};
pub use refine::{red_refine, red_refine_detailed, vertex_permutation, Refinement, RefinementHierarchy, RefinementStep};

use crate::error::{Error, Result};
use crate::geom::{cross2, midpoint2, norm2, sub2, P2};
use crate::scalar::Real;

/// Identification of the short ends of a strip `(0, L) x (y0, y1)`.
///
/// With `flip`, the point `(L, s)` is glued to `(0, y0 + y1 - s)` (Möbius-type closure) and the
/// `∂₂` derivative changes sign across the seam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Periodicity<T> {
    pub x0: T,
    pub length: T,
    pub y_range: (T, T),
    pub flip: bool,
}

impl<T: Real> Periodicity<T> {
    /// Maps a reference point onto the fundamental domain `[x0, x0 + L)`. Returns the wrapped
    /// point and whether the wrap reversed orientation.
    pub fn wrap(&self, p: P2<T>, tol: T) -> (P2<T>, bool) {
        if p[0] >= self.x0 + self.length - tol {
            let y = if self.flip { self.y_range.0 + self.y_range.1 - p[1] } else { p[1] };
            ([p[0] - self.length, y], self.flip)
        } else {
            (p, false)
        }
    }

    /// Images of `p` in the neighbouring periods, including `p` itself.
    pub fn images(&self, p: P2<T>) -> [P2<T>; 3] {
        let y = if self.flip { self.y_range.0 + self.y_range.1 - p[1] } else { p[1] };
        [p, [p[0] + self.length, y], [p[0] - self.length, y]]
    }
}

/// A glued pair: `node` is identified with the reference point `image` on the far end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GluedPair<T> {
    pub node: usize,
    pub image: P2<T>,
    pub flip: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Side<T> {
    pub ends: [usize; 2],
    pub midpoint: P2<T>,
    /// Unit tangent pointing from `ends[0]` to `ends[1]`.
    pub tangent: P2<T>,
    pub normal: P2<T>,
    pub length: T,
    pub boundary: bool,
}

/// Conforming 2D triangulation with counterclockwise triangles.
///
/// `vertices` are the distinct nodes. For periodic strips, triangles touching the seam
/// reference nodes on the opposite end, and `corners` keeps the unwrapped reference
/// coordinates each triangle actually spans.
#[derive(Debug, Clone)]
pub struct TriMesh<T> {
    pub vertices: Vec<P2<T>>,
    pub triangles: Vec<[usize; 3]>,
    pub corners: Vec<[P2<T>; 3]>,
    pub corner_flip: Vec<[bool; 3]>,
    pub areas: Vec<T>,
    pub sides: Vec<Side<T>>,
    pub boundary_vertex: Vec<bool>,
    pub hhat: T,
    pub h_min: T,
    pub periodicity: Option<Periodicity<T>>,
    pub gluing: Vec<GluedPair<T>>,
    vt_offsets: Vec<usize>,
    vt_list: Vec<usize>,
}

impl<T: Real> TriMesh<T> {
    /// Assembles a mesh from nodes and triangles, computing sides, areas, boundary tags and
    /// adjacency. `corners` defaults to the node coordinates.
    pub fn from_parts(
        vertices: Vec<P2<T>>,
        triangles: Vec<[usize; 3]>,
        corners: Option<Vec<[P2<T>; 3]>>,
        periodicity: Option<Periodicity<T>>,
        hhat: T,
    ) -> Result<Self> {
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} references missing vertex")));
            }
        }
        let corners = corners.unwrap_or_else(|| {
            triangles.iter().map(|tri| [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]]).collect()
        });
        let tol = T::lit(1e-9) * hhat;
        let corner_flip: Vec<[bool; 3]> = corners
            .iter()
            .map(|c| {
                let mut f = [false; 3];
                if let Some(p) = &periodicity {
                    for i in 0..3 {
                        f[i] = p.wrap(c[i], tol).1;
                    }
                }
                f
            })
            .collect();

        let mut areas = Vec::with_capacity(triangles.len());
        let mut h_min = T::infinity();
        for (t, c) in corners.iter().enumerate() {
            let a = T::lit(0.5) * cross2(sub2(c[1], c[0]), sub2(c[2], c[0]));
            if !(a > T::zero()) {
                return Err(Error::DegenerateTriangle(t));
            }
            areas.push(a);
            let longest = (0..3).map(|i| norm2(sub2(c[(i + 1) % 3], c[i]))).fold(T::zero(), T::max);
            h_min = h_min.min(longest);
        }

        // sides keyed by sorted node pair; first triangle defines the geometry
        let mut side_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut sides: Vec<Side<T>> = Vec::new();
        let mut side_count: Vec<usize> = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                let key = (a.min(b), a.max(b));
                match side_index.get(&key) {
                    Some(&s) => side_count[s] += 1,
                    None => {
                        let (pa, pb) = (corners[t][i], corners[t][(i + 1) % 3]);
                        let (p0, p1) = if a < b { (pa, pb) } else { (pb, pa) };
                        let d = sub2(p1, p0);
                        let len = norm2(d);
                        let tangent = [d[0] / len, d[1] / len];
                        side_index.insert(key, sides.len());
                        sides.push(Side {
                            ends: [key.0, key.1],
                            midpoint: midpoint2(p0, p1),
                            tangent,
                            normal: [tangent[1], -tangent[0]],
                            length: len,
                            boundary: false,
                        });
                        side_count.push(1);
                    }
                }
            }
        }
        let mut boundary_vertex = vec![false; nv];
        for (s, side) in sides.iter_mut().enumerate() {
            match side_count[s] {
                1 => {
                    side.boundary = true;
                    boundary_vertex[side.ends[0]] = true;
                    boundary_vertex[side.ends[1]] = true;
                }
                2 => {}
                n => {
                    return Err(Error::InvalidMesh(format!(
                        "side {:?} shared by {n} triangles",
                        side.ends
                    )))
                }
            }
        }

        let mut counts = vec![0usize; nv + 1];
        for tri in &triangles {
            for &v in tri {
                counts[v + 1] += 1;
            }
        }
        for i in 0..nv {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut vt_list = vec![0usize; counts[nv]];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vt_list[fill[v]] = t;
                fill[v] += 1;
            }
        }

        let mut gluing = Vec::new();
        if let Some(p) = &periodicity {
            let mut seen = std::collections::BTreeSet::new();
            for (t, c) in corners.iter().enumerate() {
                for i in 0..3 {
                    if c[i][0] >= p.x0 + p.length - tol && seen.insert(triangles[t][i]) {
                        gluing.push(GluedPair { node: triangles[t][i], image: c[i], flip: p.flip });
                    }
                }
            }
            gluing.sort_by_key(|g| g.node);
        }

        Ok(TriMesh {
            vertices,
            triangles,
            corners,
            corner_flip,
            areas,
            sides,
            boundary_vertex,
            hhat,
            h_min,
            periodicity,
            gluing,
            vt_offsets: counts,
            vt_list,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Triangles incident to vertex `v`, in increasing index order.
    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vt_list[self.vt_offsets[v]..self.vt_offsets[v + 1]]
    }

    pub fn area(&self) -> T {
        self.areas.iter().copied().sum()
    }

    /// Lumped vertex weights `β_z = Σ_{T ∋ z} |T| / 3`.
    pub fn lumped_weights(&self) -> Vec<T> {
        let third = T::one() / T::lit(3.0);
        (0..self.n_vertices())
            .map(|v| self.vertex_triangles(v).iter().fold(T::zero(), |acc, &t| acc + self.areas[t] * third))
            .collect()
    }

    pub fn boundary_sides(&self) -> impl Iterator<Item = &Side<T>> {
        self.sides.iter().filter(|s| s.boundary)
    }

    /// Boundary vertex weights `γ_z`: half the summed lengths of incident boundary sides.
    pub fn boundary_weights(&self) -> Vec<T> {
        let mut w = vec![T::zero(); self.n_vertices()];
        let half = T::lit(0.5);
        for s in self.boundary_sides() {
            w[s.ends[0]] += half * s.length;
            w[s.ends[1]] += half * s.length;
        }
        w
    }

    pub fn boundary_length(&self) -> T {
        self.boundary_sides().map(|s| s.length).sum()
    }

    /// Vertices whose reference coordinates satisfy `pred`.
    pub fn vertices_where(&self, pred: impl Fn(P2<T>) -> bool) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| pred(self.vertices[v])).collect()
    }

    pub fn coordinate_tolerance(&self) -> T {
        T::lit(1e-9) * self.hhat
    }

    /// Converts the coordinates to another scalar type.
    pub fn cast<U: Real>(&self) -> TriMesh<U> {
        let c2 = |p: P2<T>| [U::lit(p[0].to_f64_lossy()), U::lit(p[1].to_f64_lossy())];
        let per = self.periodicity.map(|p| Periodicity {
            x0: U::lit(p.x0.to_f64_lossy()),
            length: U::lit(p.length.to_f64_lossy()),
            y_range: (U::lit(p.y_range.0.to_f64_lossy()), U::lit(p.y_range.1.to_f64_lossy())),
            flip: p.flip,
        });
        TriMesh::from_parts(
            self.vertices.iter().map(|&p| c2(p)).collect(),
            self.triangles.clone(),
            Some(self.corners.iter().map(|c| [c2(c[0]), c2(c[1]), c2(c[2])]).collect()),
            per,
            U::lit(self.hhat.to_f64_lossy()),
        )
        .expect("casting a valid mesh")
    }
}
