use std::collections::HashMap;

use super::TriMesh;
use crate::error::{Error, Result};
use crate::geom::{midpoint2, P2};
use crate::scalar::Real;

/// Result of one red refinement step.
#[derive(Debug, Clone)]
pub struct Refinement<T> {
    pub mesh: TriMesh<T>,
    /// Parent triangle of every fine triangle.
    pub parent: Vec<usize>,
    /// The four children of every coarse triangle.
    pub children: Vec<[usize; 4]>,
    /// Coarse vertex index -> fine vertex index.
    pub embed: Vec<usize>,
    /// For fine vertices created on a coarse side: the coarse side endpoints.
    pub midpoint_of: Vec<Option<[usize; 2]>>,
}

/// Splits every triangle into four congruent children through its side midpoints.
pub fn red_refine<T: Real>(mesh: &TriMesh<T>) -> Result<(TriMesh<T>, Vec<usize>)> {
    let r = red_refine_detailed(mesh)?;
    Ok((r.mesh, r.parent))
}

pub fn red_refine_detailed<T: Real>(mesh: &TriMesh<T>) -> Result<Refinement<T>> {
    let tol = mesh.coordinate_tolerance();
    let nv = mesh.n_vertices();
    let mut vertices: Vec<P2<T>> = mesh.vertices.clone();
    let mut midpoint_of: Vec<Option<[usize; 2]>> = vec![None; nv];
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    let mut corners = Vec::with_capacity(4 * mesh.n_triangles());
    let mut parent = Vec::with_capacity(4 * mesh.n_triangles());
    let mut children = Vec::with_capacity(mesh.n_triangles());

    for (t, tri) in mesh.triangles.iter().enumerate() {
        let c = mesh.corners[t];
        let mut m = [0usize; 3];
        let mut mp = [[T::zero(); 2]; 3];
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let p = midpoint2(c[i], c[(i + 1) % 3]);
            mp[i] = p;
            m[i] = *mid.entry(key).or_insert_with(|| {
                let q = match &mesh.periodicity {
                    Some(per) => per.wrap(p, tol).0,
                    None => p,
                };
                vertices.push(q);
                midpoint_of.push(Some([key.0, key.1]));
                vertices.len() - 1
            });
        }
        // m[0] on (v0,v1), m[1] on (v1,v2), m[2] on (v2,v0)
        let first = triangles.len();
        triangles.push([tri[0], m[0], m[2]]);
        corners.push([c[0], mp[0], mp[2]]);
        triangles.push([m[0], tri[1], m[1]]);
        corners.push([mp[0], c[1], mp[1]]);
        triangles.push([m[2], m[1], tri[2]]);
        corners.push([mp[2], mp[1], c[2]]);
        triangles.push([m[0], m[1], m[2]]);
        corners.push([mp[0], mp[1], mp[2]]);
        parent.extend([t; 4]);
        children.push([first, first + 1, first + 2, first + 3]);
    }
    let fine = TriMesh::from_parts(vertices, triangles, Some(corners), mesh.periodicity, mesh.hhat * T::lit(0.5))?;
    Ok(Refinement { mesh: fine, parent, children, embed: (0..nv).collect(), midpoint_of })
}

/// Nested triangulations obtained by repeated red refinement, coarsest first.
#[derive(Debug, Clone)]
pub struct RefinementHierarchy<T> {
    pub levels: Vec<TriMesh<T>>,
    /// `steps[l]` refines `levels[l]` into `levels[l + 1]` (its `mesh` field is left empty).
    pub steps: Vec<RefinementStep>,
}

#[derive(Debug, Clone)]
pub struct RefinementStep {
    pub parent: Vec<usize>,
    pub children: Vec<[usize; 4]>,
    pub embed: Vec<usize>,
    pub midpoint_of: Vec<Option<[usize; 2]>>,
}

impl<T: Real> RefinementHierarchy<T> {
    /// `n_levels` meshes starting from `coarsest`.
    pub fn build(coarsest: TriMesh<T>, n_levels: usize) -> Result<Self> {
        if n_levels == 0 {
            return Err(Error::Parameter("hierarchy needs at least one level".into()));
        }
        let mut levels = vec![coarsest];
        let mut steps = Vec::new();
        while levels.len() < n_levels {
            let r = red_refine_detailed(levels.last().unwrap())?;
            steps.push(RefinementStep {
                parent: r.parent,
                children: r.children,
                embed: r.embed,
                midpoint_of: r.midpoint_of,
            });
            levels.push(r.mesh);
        }
        Ok(RefinementHierarchy { levels, steps })
    }

    /// Like [`build`](Self::build), but renumbers the finest level to coincide with `target`
    /// (same vertex and triangle indices), which must be geometrically identical to it.
    pub fn build_onto(coarsest: TriMesh<T>, n_levels: usize, target: &TriMesh<T>) -> Result<Self> {
        let mut h = Self::build(coarsest, n_levels)?;
        let fine = h.levels.last().unwrap();
        let vperm = vertex_permutation(fine, target)?;
        let tperm = triangle_permutation(fine, target, &vperm)?;
        if let Some(step) = h.steps.last_mut() {
            for e in step.embed.iter_mut() {
                *e = vperm[*e];
            }
            let mut mids = vec![None; target.n_vertices()];
            for (v, m) in step.midpoint_of.iter().enumerate() {
                mids[vperm[v]] = *m;
            }
            step.midpoint_of = mids;
            let mut parent = vec![0; target.n_triangles()];
            for (t, &p) in step.parent.iter().enumerate() {
                parent[tperm[t]] = p;
            }
            step.parent = parent;
            for ch in step.children.iter_mut() {
                for c in ch.iter_mut() {
                    *c = tperm[*c];
                }
            }
        }
        *h.levels.last_mut().unwrap() = target.clone();
        Ok(h)
    }

    pub fn finest(&self) -> &TriMesh<T> {
        self.levels.last().unwrap()
    }

    /// P1 prolongation of nodal values from `level` to `level + 1`: coarse vertices keep their
    /// values, new side midpoints receive the average of the side endpoints.
    pub fn prolongate<const D: usize>(&self, level: usize, coarse: &[[T; D]]) -> Result<Vec<[T; D]>> {
        let step = self
            .steps
            .get(level)
            .ok_or_else(|| Error::NotNested(format!("no refinement below level {level}")))?;
        if coarse.len() != self.levels[level].n_vertices() {
            return Err(Error::NotNested(format!(
                "expected {} coarse values, got {}",
                self.levels[level].n_vertices(),
                coarse.len()
            )));
        }
        let nf = self.levels[level + 1].n_vertices();
        let mut out = vec![[T::zero(); D]; nf];
        let mut set = vec![false; nf];
        for (v, &f) in step.embed.iter().enumerate() {
            out[f] = coarse[v];
            set[f] = true;
        }
        let half = T::lit(0.5);
        for (f, m) in step.midpoint_of.iter().enumerate() {
            if let Some([a, b]) = *m {
                for d in 0..D {
                    out[f][d] = half * (coarse[a][d] + coarse[b][d]);
                }
                set[f] = true;
            }
        }
        if set.iter().any(|s| !s) {
            return Err(Error::NotNested("fine vertex without coarse ancestor".into()));
        }
        Ok(out)
    }
}

fn coord_key<T: Real>(p: P2<T>, h: T) -> (i64, i64) {
    let s = T::lit(64.0) / h;
    ((p[0] * s).round().to_f64_lossy() as i64, (p[1] * s).round().to_f64_lossy() as i64)
}

/// For every vertex of `a`, the index of the vertex of `b` at the same reference position.
pub fn vertex_permutation<T: Real>(a: &TriMesh<T>, b: &TriMesh<T>) -> Result<Vec<usize>> {
    if a.n_vertices() != b.n_vertices() {
        return Err(Error::NotNested(format!("vertex counts differ: {} vs {}", a.n_vertices(), b.n_vertices())));
    }
    let h = a.hhat.min(b.hhat);
    let index: HashMap<(i64, i64), usize> = b.vertices.iter().enumerate().map(|(i, &p)| (coord_key(p, h), i)).collect();
    a.vertices
        .iter()
        .map(|&p| index.get(&coord_key(p, h)).copied().ok_or_else(|| Error::NotNested("vertex not found".into())))
        .collect()
}

fn triangle_permutation<T: Real>(a: &TriMesh<T>, b: &TriMesh<T>, vperm: &[usize]) -> Result<Vec<usize>> {
    let key = |t: [usize; 3]| {
        let mut k = t;
        k.sort_unstable();
        k
    };
    let index: HashMap<[usize; 3], usize> = b.triangles.iter().enumerate().map(|(i, &t)| (key(t), i)).collect();
    a.triangles
        .iter()
        .map(|t| {
            index
                .get(&key(t.map(|v| vperm[v])))
                .copied()
                .ok_or_else(|| Error::NotNested("triangle not found".into()))
        })
        .collect()
}
