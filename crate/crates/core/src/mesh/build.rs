use std::collections::HashMap;

use super::{Periodicity, TriMesh};
use crate::error::{Error, Result};
use crate::geom::P2;
use crate::scalar::Real;

/// Orientation of the diagonal splitting each grid square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diagonal {
    /// Bottom-left to top-right.
    #[default]
    Rising,
    /// Top-left to bottom-right.
    Falling,
}

fn cell_count<T: Real>(len: T, hhat: T, what: &str) -> Result<usize> {
    if !(hhat > T::zero()) {
        return Err(Error::Sizing(format!("grid size must be positive, got {hhat}")));
    }
    let n = (len / hhat).to_f64_lossy();
    let r = n.round();
    if r < 1.0 || (n - r).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::Sizing(format!("{what} length {len} is not an integer multiple of {hhat}")));
    }
    Ok(r as usize)
}

fn split_cell(c: [usize; 4], diag: Diagonal) -> [[usize; 3]; 2] {
    // c = [v00, v10, v11, v01]
    match diag {
        Diagonal::Rising => [[c[0], c[1], c[2]], [c[0], c[2], c[3]]],
        Diagonal::Falling => [[c[0], c[1], c[3]], [c[1], c[2], c[3]]],
    }
}

/// Halved squares over the grid cells `(i, j)` of the box starting at `origin` for which
/// `keep(i, j)` holds. Unused grid points are dropped.
fn masked_grid<T: Real>(
    origin: P2<T>,
    nx: usize,
    ny: usize,
    hhat: T,
    diag: Diagonal,
    keep: impl Fn(usize, usize) -> bool,
) -> Result<TriMesh<T>> {
    let point = |i: usize, j: usize| [origin[0] + T::lit(i as f64) * hhat, origin[1] + T::lit(j as f64) * hhat];
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut used = vec![false; (nx + 1) * (ny + 1)];
    for j in 0..ny {
        for i in 0..nx {
            if keep(i, j) {
                for (a, b) in [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)] {
                    used[b * (nx + 1) + a] = true;
                }
            }
        }
    }
    let mut vertices = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            if used[j * (nx + 1) + i] {
                index.insert((i, j), vertices.len());
                vertices.push(point(i, j));
            }
        }
    }
    let mut triangles = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if keep(i, j) {
                let c = [index[&(i, j)], index[&(i + 1, j)], index[&(i + 1, j + 1)], index[&(i, j + 1)]];
                triangles.extend(split_cell(c, diag));
            }
        }
    }
    if triangles.is_empty() {
        return Err(Error::Sizing("no grid cells selected".into()));
    }
    TriMesh::from_parts(vertices, triangles, None, None, hhat)
}

/// Uniform halved-square triangulation of `x_range × y_range` with square side `hhat`.
pub fn build_halved_squares<T: Real>(
    x_range: (T, T),
    y_range: (T, T),
    hhat: T,
    diagonal: Diagonal,
) -> Result<TriMesh<T>> {
    let nx = cell_count(x_range.1 - x_range.0, hhat, "x")?;
    let ny = cell_count(y_range.1 - y_range.0, hhat, "y")?;
    masked_grid([x_range.0, y_range.0], nx, ny, hhat, diagonal, |_, _| true)
}

/// Halved squares on `(-5, 5) × (-2, 2) \ [-4, 4] × [-1, 1]`.
pub fn build_oshape<T: Real>(hhat: T) -> Result<TriMesh<T>> {
    let per_unit = cell_count(T::one(), hhat, "unit")?;
    let (nx, ny) = (10 * per_unit, 4 * per_unit);
    let (hole_x, hole_y) = ((per_unit, 9 * per_unit), (per_unit, 3 * per_unit));
    masked_grid([T::lit(-5.0), T::lit(-2.0)], nx, ny, hhat, Diagonal::Rising, |i, j| {
        !(i >= hole_x.0 && i < hole_x.1 && j >= hole_y.0 && j < hole_y.1)
    })
}

/// Closed strip `(0, length) × y_range` whose short ends are glued, optionally with a flip
/// `(length, s) ~ (0, y0 + y1 - s)`.
pub fn build_periodic_strip<T: Real>(
    length: T,
    y_range: (T, T),
    hhat: T,
    flip: bool,
    diagonal: Diagonal,
) -> Result<TriMesh<T>> {
    let nx = cell_count(length, hhat, "x")?;
    let ny = cell_count(y_range.1 - y_range.0, hhat, "y")?;
    if nx < 3 {
        return Err(Error::Sizing("periodic strip needs at least three cells along its length".into()));
    }
    let node = |i: usize, j: usize| -> usize {
        if i == nx {
            let jj = if flip { ny - j } else { j };
            jj * nx
        } else {
            j * nx + i
        }
    };
    let point = |i: usize, j: usize| [T::lit(i as f64) * hhat, y_range.0 + T::lit(j as f64) * hhat];
    let mut vertices = Vec::with_capacity(nx * (ny + 1));
    for j in 0..=ny {
        for i in 0..nx {
            vertices.push(point(i, j));
        }
    }
    let mut triangles = Vec::new();
    let mut corners = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let ids = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let c = ids.map(|(a, b)| node(a, b));
            let p = ids.map(|(a, b)| point(a, b));
            let local = split_cell([0, 1, 2, 3], diagonal);
            for tri in local {
                triangles.push([c[tri[0]], c[tri[1]], c[tri[2]]]);
                corners.push([p[tri[0]], p[tri[1]], p[tri[2]]]);
            }
        }
    }
    let per = Periodicity { x0: T::zero(), length, y_range, flip };
    TriMesh::from_parts(vertices, triangles, Some(corners), Some(per), hhat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_counts() {
        let m = build_halved_squares::<f64>((-5.0, 5.0), (0.0, 1.0), 0.25, Diagonal::Rising).unwrap();
        assert_eq!(m.n_triangles(), 320);
        assert_eq!(m.n_vertices(), 205);
        let m = build_halved_squares::<f64>((-5.0, 5.0), (0.0, 1.0), 1.0 / 16.0, Diagonal::Rising).unwrap();
        assert_eq!(m.n_triangles(), 5120);
        let m = build_halved_squares::<f64>((0.0, 1.0), (0.0, 1.0), 1.0, Diagonal::Rising).unwrap();
        assert_eq!((m.n_triangles(), m.n_vertices()), (2, 4));
    }

    #[test]
    fn oshape_counts() {
        assert_eq!(build_oshape::<f64>(1.0).unwrap().n_triangles(), 48);
        assert_eq!(build_oshape::<f64>(0.25).unwrap().n_triangles(), 768);
        assert_eq!(build_oshape::<f64>(1.0 / 16.0).unwrap().n_triangles(), 12288);
    }

    #[test]
    fn non_divisible_range_rejected() {
        let r = build_halved_squares::<f64>((0.0, 1.0), (0.0, 1.0), 0.3, Diagonal::Rising);
        assert!(matches!(r, Err(Error::Sizing(_))));
        assert!(matches!(build_oshape::<f64>(0.3), Err(Error::Sizing(_))));
        assert!(build_halved_squares::<f64>((0.0, 1.0), (0.0, 1.0), 0.0, Diagonal::Rising).is_err());
    }

    #[test]
    fn h_min_is_square_diagonal() {
        let m = build_halved_squares::<f64>((0.0, 2.0), (0.0, 1.0), 0.125, Diagonal::Falling).unwrap();
        assert!((m.h_min - 0.125 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn periodic_strip_is_closed() {
        let m = build_periodic_strip::<f64>(50.0, (0.0, 1.0), 0.125, true, Diagonal::Rising).unwrap();
        assert_eq!(m.n_triangles(), 6400);
        assert_eq!(m.n_vertices(), 400 * 9);
        // only the long edges remain on the boundary
        let bl = m.boundary_length();
        assert!((bl - 100.0).abs() < 1e-9, "{bl}");
        assert!((m.area() - 50.0).abs() < 1e-9);
        assert_eq!(m.gluing.len(), 9);
        // flipped gluing pairs (50, s) with (0, 1 - s)
        for g in &m.gluing {
            assert!(g.flip);
            assert!((m.vertices[g.node][1] - (1.0 - g.image[1])).abs() < 1e-12);
        }
    }
}
