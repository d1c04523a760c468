use crate::geom::{cross2, norm2, point_triangle_distance, sub2, P2};
use crate::mesh::{ExclusionTable, TriMesh};
use crate::scalar::Real;

/// Lumped double-sum rule `Σ_z W_z Σ_z̃ w_z(z̃) g(z, z̃)`.
///
/// The inner weights of outer node `z` are `support` except at the nodes listed in
/// `overrides[k]` (the nodes touched by triangles that are excluded for `z`).
#[derive(Debug, Clone)]
pub struct PairQuadrature<T> {
    /// Outer nodes with their weights.
    pub outer: Vec<(usize, T)>,
    /// Inner nodes, sorted, with the unrestricted weights.
    pub support: Vec<(usize, T)>,
    /// Per outer entry, sorted `(node, weight)` replacements.
    pub overrides: Vec<Vec<(usize, T)>>,
    /// For inner nodes carried by coarse triangles: how the reaction on that node is shared
    /// among the working-mesh nodes it represents. Empty when all triangles are fine.
    pub spread: Vec<Option<Vec<(usize, T)>>>,
}

/// A triangle of the inner quadrature mesh, possibly coarser than the working mesh.
#[derive(Debug, Clone)]
pub struct QuadTriangle<T> {
    /// Working-mesh node indices of the corners.
    pub nodes: [usize; 3],
    pub area: T,
    /// Reference coordinates of the corners.
    pub corners: [P2<T>; 3],
    /// Working-mesh triangles covering it, or just itself.
    pub fine: Vec<usize>,
}

impl<T: Real> PairQuadrature<T> {
    /// Full lumped rule with the outer integral over all vertices.
    pub fn full(mesh: &TriMesh<T>, exclusion: &ExclusionTable) -> Self {
        let outer = mesh.lumped_weights().into_iter().enumerate().collect();
        Self::build(mesh, exclusion, outer, &fine_triangles(mesh))
    }

    /// Outer integral over the boundary curve with weights `γ_z`.
    pub fn boundary_domain(mesh: &TriMesh<T>, exclusion: &ExclusionTable) -> Self {
        let gamma = mesh.boundary_weights();
        let outer = (0..mesh.n_vertices())
            .filter(|&z| mesh.boundary_vertex[z])
            .map(|z| (z, gamma[z]))
            .collect();
        Self::build(mesh, exclusion, outer, &fine_triangles(mesh))
    }

    /// General rule on the triangle set `tris`. Working-mesh triangles follow the exclusion
    /// table; a coarse triangle closer to the outer node than twice its diameter is replaced by its
    /// admissible working-mesh triangles.
    pub fn build(
        mesh: &TriMesh<T>,
        exclusion: &ExclusionTable,
        outer: Vec<(usize, T)>,
        tris: &[QuadTriangle<T>],
    ) -> Self {
        let third = T::one() / T::lit(3.0);
        let nv = mesh.n_vertices();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for (k, t) in tris.iter().enumerate() {
            for &n in &t.nodes {
                adj[n].push(k);
            }
        }
        let support: Vec<(usize, T)> = (0..nv)
            .filter(|&n| !adj[n].is_empty())
            .map(|n| (n, adj[n].iter().fold(T::zero(), |acc, &k| acc + tris[k].area * third)))
            .collect();

        let spread = if tris.iter().all(|t| t.fine.len() == 1) {
            Vec::new()
        } else {
            (0..nv).map(|n| spread_of(mesh, tris, &adj[n], n)).collect()
        };

        // coarse triangles are tested geometrically, working-mesh ones through the table
        let fine_index: Vec<Option<usize>> = tris
            .iter()
            .map(|t| (t.fine.len() == 1 && mesh.triangles[t.fine[0]] == t.nodes).then(|| t.fine[0]))
            .collect();
        let mut fine_owner = vec![usize::MAX; mesh.n_triangles()];
        for (k, f) in fine_index.iter().enumerate() {
            if let Some(f) = f {
                fine_owner[*f] = k;
            }
        }
        let coarse: Vec<usize> = (0..tris.len()).filter(|&k| fine_index[k].is_none()).collect();
        let radius = mesh.h_min * T::lit(0.5);
        // a coarse triangle is only used from at least twice its diameter away
        let coarse_reach: Vec<T> = coarse
            .iter()
            .map(|&k| {
                let c = &tris[k].corners;
                let diam = norm2(sub2(c[0], c[1])).max(norm2(sub2(c[1], c[2]))).max(norm2(sub2(c[2], c[0])));
                (diam * T::lit(2.0)).max(radius)
            })
            .collect();

        let overrides = outer
            .iter()
            .map(|&(z, _)| {
                let mut near: Vec<usize> = exclusion.excluded(z).iter().map(|&t| fine_owner[t]).filter(|&k| k != usize::MAX).collect();
                let images: Vec<P2<T>> = match &mesh.periodicity {
                    Some(p) => p.images(mesh.vertices[z]).to_vec(),
                    None => vec![mesh.vertices[z]],
                };
                for (&k, &reach) in coarse.iter().zip(&coarse_reach) {
                    if images.iter().any(|&p| point_triangle_distance(p, &tris[k].corners) < reach) {
                        near.push(k);
                    }
                }
                near.sort_unstable();
                near.dedup();
                if near.is_empty() {
                    return Vec::new();
                }
                let mut extra: Vec<usize> = Vec::new();
                for &k in &near {
                    if fine_index[k].is_none() {
                        extra.extend(tris[k].fine.iter().copied().filter(|&f| exclusion.is_admissible(z, f)));
                    }
                }
                let mut touched: Vec<usize> = near.iter().flat_map(|&k| tris[k].nodes).collect();
                touched.extend(extra.iter().flat_map(|&f| mesh.triangles[f]));
                touched.sort_unstable();
                touched.dedup();
                touched
                    .into_iter()
                    .map(|n| {
                        let mut w = adj[n]
                            .iter()
                            .filter(|k| near.binary_search(k).is_err())
                            .fold(T::zero(), |acc, &k| acc + tris[k].area * third);
                        for &f in &extra {
                            if mesh.triangles[f].contains(&n) {
                                w += mesh.areas[f] * third;
                            }
                        }
                        (n, w)
                    })
                    .collect()
            })
            .collect();
        PairQuadrature { outer, support, overrides, spread }
    }

    /// Visits the inner `(node, weight)` pairs of outer entry `k` in node order, skipping zero
    /// weights.
    #[inline]
    /// The flag tells whether the weight is an override.
    pub fn for_each_inner(&self, k: usize, mut f: impl FnMut(usize, T, bool)) {
        let ov = &self.overrides[k];
        let (mut i, mut j) = (0, 0);
        while i < self.support.len() || j < ov.len() {
            let (n, w, o) = if j < ov.len() && (i >= self.support.len() || ov[j].0 <= self.support[i].0) {
                if i < self.support.len() && self.support[i].0 == ov[j].0 {
                    i += 1;
                }
                j += 1;
                (ov[j - 1].0, ov[j - 1].1, true)
            } else {
                i += 1;
                (self.support[i - 1].0, self.support[i - 1].1, false)
            };
            if w != T::zero() {
                f(n, w, o);
            }
        }
    }

    /// Number of inner pairs visited by one sweep.
    pub fn pair_count(&self) -> u64 {
        let mut c = 0u64;
        for k in 0..self.outer.len() {
            self.for_each_inner(k, |n, _, _| {
                if n != self.outer[k].0 {
                    c += 1;
                }
            });
        }
        c
    }
}

/// P1 sharing of node `n` over the working-mesh nodes of the coarse triangles containing it,
/// normalized to unit sum. `None` when `n` only lies on working-mesh triangles.
fn spread_of<T: Real>(mesh: &TriMesh<T>, tris: &[QuadTriangle<T>], adj: &[usize], n: usize) -> Option<Vec<(usize, T)>> {
    if adj.iter().all(|&k| tris[k].fine.len() == 1) {
        return None;
    }
    let third = T::one() / T::lit(3.0);
    let mut out: Vec<(usize, T)> = Vec::new();
    for &k in adj {
        let t = &tris[k];
        if t.fine.len() == 1 {
            out.push((n, t.area * third));
            continue;
        }
        let v = t.nodes.iter().position(|&m| m == n).unwrap();
        let c = &t.corners;
        let det = cross2(sub2(c[1], c[0]), sub2(c[2], c[0]));
        let (a, b) = (c[(v + 1) % 3], c[(v + 2) % 3]);
        for &f in &t.fine {
            for i in 0..3 {
                let p = mesh.corners[f][i];
                let lambda = cross2(sub2(a, p), sub2(b, p)) / det;
                if lambda > T::zero() {
                    out.push((mesh.triangles[f][i], mesh.areas[f] * third * lambda));
                }
            }
        }
    }
    out.sort_by_key(|e| e.0);
    let mut merged: Vec<(usize, T)> = Vec::new();
    for (m, w) in out {
        match merged.last_mut() {
            Some(last) if last.0 == m => last.1 += w,
            _ => merged.push((m, w)),
        }
    }
    let total: T = merged.iter().map(|e| e.1).sum();
    merged.iter_mut().for_each(|e| e.1 /= total);
    Some(merged)
}

pub(crate) fn fine_triangles<T: Real>(mesh: &TriMesh<T>) -> Vec<QuadTriangle<T>> {
    (0..mesh.n_triangles())
        .map(|t| QuadTriangle {
            nodes: mesh.triangles[t],
            area: mesh.areas[t],
            corners: mesh.corners[t],
            fine: vec![t],
        })
        .collect()
}
