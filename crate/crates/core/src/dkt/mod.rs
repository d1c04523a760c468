//! Discrete Kirchhoff triangles: the discrete gradient, the bending operator and nodal dof
//! bookkeeping for deformations.

mod element;
mod layout;
mod reduced_cubic;
mod sdkt;

pub use element::{midpoint_rule, LocalDkt, SIDES};
pub use layout::{DeformationState, DofKind, DofLayout};
pub use reduced_cubic::ReducedCubic;
pub use sdkt::{load_vector, lumped_product, BlockSparse, DiscreteGradientMap, SdktOperator};

use crate::geom::P2;
use crate::mesh::TriMesh;
use crate::scalar::Real;

/// Seven point rule exact for quintics, as `(barycentric point, weight / |T|)`.
pub fn quadrature_degree5<T: Real>() -> Vec<([T; 3], T)> {
    let mut q = vec![([T::lit(1.0 / 3.0); 3], T::lit(0.225))];
    for (a, b, w) in [
        (0.059_715_871_789_769_8, 0.470_142_064_105_115_1, 0.132_394_152_788_506_2),
        (0.797_426_985_353_087_3, 0.101_286_507_323_456_3, 0.125_939_180_544_827_1),
    ] {
        let (a, b, w) = (T::lit(a), T::lit(b), T::lit(w));
        q.push(([a, b, b], w));
        q.push(([b, a, b], w));
        q.push(([b, b, a], w));
    }
    q
}

/// Nodal interpolation of a scalar field into the three-per-node layout.
pub fn interpolate_scalar<T: Real>(mesh: &TriMesh<T>, f: impl Fn(P2<T>) -> (T, P2<T>)) -> Vec<T> {
    let mut w = Vec::with_capacity(3 * mesh.n_vertices());
    for &p in &mesh.vertices {
        let (v, g) = f(p);
        w.extend_from_slice(&[v, g[0], g[1]]);
    }
    w
}

/// `(‖∇_h w_h − ∇w‖, ‖∇∇_h w_h − D²w‖)` in `L²(ω)`.
///
/// `grad` and `hess` are the exact derivatives; `hess` returns `[∂₁₁, ∂₁₂, ∂₂₁, ∂₂₂]`.
pub fn dkt_error_norms<T: Real>(
    mesh: &TriMesh<T>,
    map: &DiscreteGradientMap<T>,
    w: &[T],
    grad: impl Fn(P2<T>) -> P2<T>,
    hess: impl Fn(P2<T>) -> [T; 4],
) -> (T, T) {
    let quad = quadrature_degree5::<T>();
    let (mut eg, mut eh) = (T::zero(), T::zero());
    for (t, c) in mesh.corners.iter().enumerate() {
        let e = &map.elements[t];
        let local = map.gather_scalar(t, w);
        for (l, wq) in &quad {
            let x = [0, 1].map(|d| l[0] * c[0][d] + l[1] * c[1][d] + l[2] * c[2][d]);
            let g = e.gradient_rows(*l).map(|r| dot9(&r, &local));
            let h = e.hessian_rows(*l).map(|r| dot9(&r, &local));
            let (gx, hx) = (grad(x), hess(x));
            let weight = *wq * e.area;
            eg += weight * ((g[0] - gx[0]).powi(2) + (g[1] - gx[1]).powi(2));
            eh += weight * (0..4).map(|k| (h[k] - hx[k]).powi(2)).sum::<T>();
        }
    }
    (eg.sqrt(), eh.sqrt())
}

/// `(‖∇∇_h w‖, ‖D² w_h‖)` with `w_h` the piecewise reduced cubic of the nodal data.
pub fn hessian_norms<T: Real>(mesh: &TriMesh<T>, map: &DiscreteGradientMap<T>, w: &[T]) -> (T, T) {
    let quad = quadrature_degree5::<T>();
    let (mut a, mut b) = (T::zero(), T::zero());
    for (t, c) in mesh.corners.iter().enumerate() {
        let e = &map.elements[t];
        let local = map.gather_scalar(t, w);
        let cubic = ReducedCubic::new(c, &local).expect("nondegenerate triangle");
        for (l, wq) in &quad {
            let x = [0, 1].map(|d| l[0] * c[0][d] + l[1] * c[1][d] + l[2] * c[2][d]);
            let h = e.hessian_rows(*l).map(|r| dot9(&r, &local));
            let hc = cubic.hessian(x);
            let weight = *wq * e.area;
            a += weight * h.iter().map(|v| *v * *v).sum::<T>();
            b += weight * hc.iter().map(|v| *v * *v).sum::<T>();
        }
    }
    (a.sqrt(), b.sqrt())
}

#[inline]
pub(crate) fn dot9<T: Real>(a: &[T; 9], b: &[T; 9]) -> T {
    let mut s = T::zero();
    for k in 0..9 {
        s += a[k] * b[k];
    }
    s
}
