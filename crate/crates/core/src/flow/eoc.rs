use crate::error::{Error, Result};
use crate::geom::V3;
use crate::mesh::{RefinementHierarchy, TriMesh};

/// `‖I_h a − I_h b‖_{L²}` of two nodal vector fields on the same mesh, exact for P1.
pub fn p1_l2_distance(mesh: &TriMesh<f64>, a: &[V3<f64>], b: &[V3<f64>]) -> f64 {
    let mut s = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let mut sum_sq = 0.0;
        let mut total = [0.0; 3];
        for &v in tri {
            for c in 0..3 {
                let d = a[v][c] - b[v][c];
                sum_sq += d * d;
                total[c] += d;
            }
        }
        s += mesh.areas[t] / 12.0 * (sum_sq + total.iter().map(|x| x * x).sum::<f64>());
    }
    s.sqrt()
}

/// `log₂(‖I_h y_h − I_{h/2} y_{h/2}‖ / ‖I_{h/2} y_{h/2} − I_{h/4} y_{h/4}‖)` for nodal
/// positions on levels `level`, `level + 1`, `level + 2` of the hierarchy.
pub fn eoc(hierarchy: &RefinementHierarchy<f64>, level: usize, positions: [&[V3<f64>]; 3]) -> Result<f64> {
    if level + 2 >= hierarchy.levels.len() {
        return Err(Error::NotNested(format!("levels {level}..{} not in hierarchy", level + 2)));
    }
    for (i, p) in positions.iter().enumerate() {
        if p.len() != hierarchy.levels[level + i].n_vertices() {
            return Err(Error::LayoutMismatch { expected: hierarchy.levels[level + i].n_vertices(), got: p.len() });
        }
    }
    let c1 = hierarchy.prolongate(level, positions[0])?;
    let e1 = p1_l2_distance(&hierarchy.levels[level + 1], &c1, positions[1]);
    let c2 = hierarchy.prolongate(level + 1, positions[1])?;
    let e2 = p1_l2_distance(&hierarchy.levels[level + 2], &c2, positions[2]);
    if !(e2 > 0.0) || !(e1 > 0.0) {
        return Err(Error::UndefinedOrder(format!("differences {e1:e} and {e2:e}")));
    }
    Ok((e1 / e2).log2())
}
