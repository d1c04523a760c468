//! Exact self-intersection test of the deformed P1 surface.

use rayon::prelude::*;
use robust::{orient2d, orient3d, Coord, Coord3D};

use crate::geom::V3;
use crate::mesh::TriMesh;

fn o3(a: V3<f64>, b: V3<f64>, c: V3<f64>, d: V3<f64>) -> f64 {
    let p = |v: V3<f64>| Coord3D { x: v[0], y: v[1], z: v[2] };
    orient3d(p(a), p(b), p(c), p(d))
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

type P = [f64; 2];

fn o2(a: P, b: P, c: P) -> i8 {
    sign(orient2d(Coord { x: a[0], y: a[1] }, Coord { x: b[0], y: b[1] }, Coord { x: c[0], y: c[1] }))
}

fn on_segment(a: P, b: P, p: P) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_meet(a: P, b: P, c: P, d: P) -> bool {
    let (d1, d2, d3, d4) = (o2(c, d, a), o2(c, d, b), o2(a, b, c), o2(a, b, d));
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    (d1 == 0 && on_segment(c, d, a))
        || (d2 == 0 && on_segment(c, d, b))
        || (d3 == 0 && on_segment(a, b, c))
        || (d4 == 0 && on_segment(a, b, d))
}

fn inside(t: [P; 3], p: P) -> bool {
    let s = [o2(t[0], t[1], p), o2(t[1], t[2], p), o2(t[2], t[0], p)];
    s.iter().all(|&v| v >= 0) || s.iter().all(|&v| v <= 0)
}

fn coplanar_intersect(a: [V3<f64>; 3], b: [V3<f64>; 3]) -> bool {
    // drop the coordinate for which the first triangle keeps a nonzero area
    let Some(axis) = (0..3).rev().find(|&ax| {
        let pr = a.map(|v| drop_axis(v, ax));
        o2(pr[0], pr[1], pr[2]) != 0
    }) else {
        return false;
    };
    let pa = a.map(|v| drop_axis(v, axis));
    let pb = b.map(|v| drop_axis(v, axis));
    for i in 0..3 {
        for j in 0..3 {
            if segments_meet(pa[i], pa[(i + 1) % 3], pb[j], pb[(j + 1) % 3]) {
                return true;
            }
        }
    }
    inside(pa, pb[0]) || inside(pb, pa[0])
}

/// Segment lying in the plane of `t`.
fn planar_segment_hits(t: [V3<f64>; 3], s: [V3<f64>; 2]) -> bool {
    let Some(axis) = (0..3).rev().find(|&ax| {
        let pr = t.map(|v| drop_axis(v, ax));
        o2(pr[0], pr[1], pr[2]) != 0
    }) else {
        return false;
    };
    let pt = t.map(|v| drop_axis(v, axis));
    let ps = s.map(|v| drop_axis(v, axis));
    (0..3).any(|i| segments_meet(ps[0], ps[1], pt[i], pt[(i + 1) % 3])) || inside(pt, ps[0])
}

fn drop_axis(v: V3<f64>, axis: usize) -> P {
    match axis {
        0 => [v[1], v[2]],
        1 => [v[2], v[0]],
        _ => [v[0], v[1]],
    }
}

fn segment_hits_triangle(s: [V3<f64>; 2], t: [V3<f64>; 3]) -> bool {
    let sa = sign(o3(t[0], t[1], t[2], s[0]));
    let sb = sign(o3(t[0], t[1], t[2], s[1]));
    if sa * sb > 0 || (sa == 0 && sb == 0) {
        return false;
    }
    let e = [
        sign(o3(s[0], s[1], t[0], t[1])),
        sign(o3(s[0], s[1], t[1], t[2])),
        sign(o3(s[0], s[1], t[2], t[0])),
    ];
    e.iter().all(|&v| v >= 0) || e.iter().all(|&v| v <= 0)
}

/// Closed intersection test of two triangles; touching counts as intersecting.
pub fn triangles_intersect(a: [V3<f64>; 3], b: [V3<f64>; 3]) -> bool {
    let da = b.map(|v| sign(o3(a[0], a[1], a[2], v)));
    if da.iter().all(|&s| s > 0) || da.iter().all(|&s| s < 0) {
        return false;
    }
    let db = a.map(|v| sign(o3(b[0], b[1], b[2], v)));
    if db.iter().all(|&s| s > 0) || db.iter().all(|&s| s < 0) {
        return false;
    }
    if da.iter().all(|&s| s == 0) {
        return coplanar_intersect(a, b);
    }
    // the intersection segment of non-coplanar triangles ends on an edge of one of them
    (0..3).any(|i| segment_hits_triangle([a[i], a[(i + 1) % 3]], b))
        || (0..3).any(|i| segment_hits_triangle([b[i], b[(i + 1) % 3]], a))
        || (0..3).any(|i| da[i] == 0 && da[(i + 1) % 3] == 0 && planar_segment_hits(a, [b[i], b[(i + 1) % 3]]))
        || (0..3).any(|i| db[i] == 0 && db[(i + 1) % 3] == 0 && planar_segment_hits(b, [a[i], a[(i + 1) % 3]]))
}

/// Pairs `(s, t)`, `s < t`, of deformed triangles sharing no vertex that intersect.
///
/// An empty result means the P1 interpolant of `positions` is injective up to shared vertices.
pub fn check_injectivity(mesh: &TriMesh<f64>, positions: &[V3<f64>]) -> Vec<(usize, usize)> {
    let tris: Vec<[V3<f64>; 3]> = mesh.triangles.iter().map(|t| t.map(|v| positions[v])).collect();
    let boxes: Vec<([f64; 3], [f64; 3])> = tris
        .iter()
        .map(|t| {
            let mut lo = t[0];
            let mut hi = t[0];
            for v in &t[1..] {
                for c in 0..3 {
                    lo[c] = lo[c].min(v[c]);
                    hi[c] = hi[c].max(v[c]);
                }
            }
            (lo, hi)
        })
        .collect();
    let mut order: Vec<usize> = (0..tris.len()).collect();
    order.sort_by(|&a, &b| boxes[a].0[0].total_cmp(&boxes[b].0[0]).then(a.cmp(&b)));
    let mut hits: Vec<(usize, usize)> = order
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, &s)| {
            let (lo, hi) = boxes[s];
            let tri_s = mesh.triangles[s];
            let tris = &tris;
            let boxes = &boxes;
            order[k + 1..]
                .iter()
                .take_while(move |&&t| boxes[t].0[0] <= hi[0])
                .filter(move |&&t| {
                    let (l2, h2) = boxes[t];
                    (1..3).all(|c| l2[c] <= hi[c] && h2[c] >= lo[c])
                        && !mesh.triangles[t].iter().any(|v| tri_s.contains(v))
                        && triangles_intersect(tris[s], tris[t])
                })
                .map(move |&t| (s.min(t), s.max(t)))
        })
        .collect();
    hits.sort_unstable();
    hits
}
