use rayon::prelude::*;

use super::quadrature::{PairQuadrature, QuadTriangle};
use crate::error::{Error, Result};
use crate::geom::{cross3, dot3, norm2, sub2, sub3, P2, V3};
use crate::mesh::{ExclusionTable, RefinementHierarchy};
use crate::scalar::Real;

/// Mixed-level triangle set chosen by the greedy refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalSelection {
    /// `(level, triangle)` pairs, sorted.
    pub triangles: Vec<(usize, usize)>,
    /// Refinement rounds actually performed.
    pub rounds: usize,
}

/// Builds the inner quadrature on a coarsened mesh.
///
/// Starting from all triangles of level `L − levels`, each round ranks the current triangles by
/// `(|T|/3) Σ_{z̃∈T} ψ(z̃)` with `ψ(z̃) = Σ_z β_z r(y(z), y(z̃))^{-q}` and red-refines the smallest
/// set of largest contributors that reaches the fraction `sigma` of the total. Coarse triangles
/// near an outer vertex are resolved on the working mesh, so the near field is always exact.
pub fn hierarchical_quadrature<T: Real>(
    hierarchy: &RefinementHierarchy<T>,
    exclusion: &ExclusionTable,
    y: &[T],
    q: f64,
    sigma: f64,
    levels: usize,
) -> Result<(PairQuadrature<T>, HierarchicalSelection)> {
    let n_lev = hierarchy.levels.len();
    if levels == 0 || levels > n_lev {
        return Err(Error::Parameter(format!("{levels} levels requested, hierarchy has {n_lev}")));
    }
    let fine = hierarchy.finest();
    if y.len() != 9 * fine.n_vertices() {
        return Err(Error::LayoutMismatch { expected: 9 * fine.n_vertices(), got: y.len() });
    }
    let top = n_lev - 1;
    let start = n_lev - levels;

    // vertex ids of every level on the working mesh
    let mut to_fine: Vec<Vec<usize>> = vec![(0..fine.n_vertices()).collect()];
    for l in (start..top).rev() {
        let next = to_fine.last().unwrap();
        to_fine.push(hierarchy.steps[l].embed.iter().map(|&v| next[v]).collect());
    }
    to_fine.reverse();
    let node_map = |l: usize| &to_fine[l - start];

    let beta = fine.lumped_weights();
    let radius = fine.h_min * T::lit(0.5);
    let qt = T::lit(q);
    let pos = |n: usize| -> V3<T> { [y[9 * n], y[9 * n + 3], y[9 * n + 6]] };
    let normal = |n: usize| -> V3<T> {
        cross3([y[9 * n + 1], y[9 * n + 4], y[9 * n + 7]], [y[9 * n + 2], y[9 * n + 5], y[9 * n + 8]])
    };
    let ref_dist = |a: P2<T>, b: P2<T>| -> T {
        match &fine.periodicity {
            Some(p) => p.images(a).iter().map(|&i| norm2(sub2(i, b))).fold(T::infinity(), T::min),
            None => norm2(sub2(a, b)),
        }
    };
    let psi = |n: usize| -> T {
        let yn = pos(n);
        let mut s = T::zero();
        for z in 0..fine.n_vertices() {
            if z == n || ref_dist(fine.vertices[z], fine.vertices[n]) < radius {
                continue;
            }
            let d = sub3(pos(z), yn);
            let d2 = dot3(d, d);
            if d2 > T::zero() {
                s += beta[z] * (T::lit(2.0) * dot3(normal(z), d).abs() / d2).powf(qt);
            }
        }
        s
    };

    let third = T::one() / T::lit(3.0);
    let mut current: Vec<(usize, usize)> = (0..hierarchy.levels[start].n_triangles()).map(|t| (start, t)).collect();
    let mut rounds = 0;
    for _ in 1..levels {
        let mut nodes: Vec<usize> = current
            .iter()
            .filter(|&&(l, _)| l < top)
            .flat_map(|&(l, t)| hierarchy.levels[l].triangles[t].map(|v| node_map(l)[v]))
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        let values: Vec<T> = nodes.par_iter().map(|&n| psi(n)).collect();
        let value_of = |n: usize| values[nodes.binary_search(&n).unwrap()];
        let mut ranked: Vec<(usize, T)> = current
            .iter()
            .enumerate()
            .filter(|(_, &(l, _))| l < top)
            .map(|(k, &(l, t))| {
                let m = &hierarchy.levels[l];
                let c = m.areas[t] * third * m.triangles[t].iter().map(|&v| value_of(node_map(l)[v])).sum::<T>();
                (k, c)
            })
            .collect();
        if ranked.is_empty() {
            break;
        }
        let total: T = ranked.iter().map(|r| r.1).sum();
        let selected: Vec<usize> = if sigma >= 1.0 {
            ranked.iter().map(|r| r.0).collect()
        } else {
            if !(total > T::zero()) {
                break;
            }
            ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
            let target = T::lit(sigma) * total;
            let mut acc = T::zero();
            let mut sel = Vec::new();
            for (k, c) in ranked {
                if acc >= target {
                    break;
                }
                acc += c;
                sel.push(k);
            }
            sel
        };
        let mut refine = vec![false; current.len()];
        for k in selected {
            refine[k] = true;
        }
        let mut next = Vec::with_capacity(current.len() + 3 * refine.len());
        for (k, &(l, t)) in current.iter().enumerate() {
            if refine[k] {
                next.extend(hierarchy.steps[l].children[t].iter().map(|&c| (l + 1, c)));
            } else {
                next.push((l, t));
            }
        }
        current = next;
        rounds += 1;
    }
    current.sort_unstable();

    let descendants = |l: usize, t: usize| -> Vec<usize> {
        let mut set = vec![t];
        for lev in l..top {
            set = set.iter().flat_map(|&s| hierarchy.steps[lev].children[s]).collect();
        }
        set.sort_unstable();
        set
    };
    let tris: Vec<QuadTriangle<T>> = current
        .iter()
        .map(|&(l, t)| {
            let m = &hierarchy.levels[l];
            QuadTriangle {
                nodes: m.triangles[t].map(|v| node_map(l)[v]),
                area: m.areas[t],
                corners: m.corners[t],
                fine: descendants(l, t),
            }
        })
        .collect();
    let outer = beta.into_iter().enumerate().collect();
    let quad = PairQuadrature::build(fine, exclusion, outer, &tris);
    Ok((quad, HierarchicalSelection { triangles: current, rounds }))
}
