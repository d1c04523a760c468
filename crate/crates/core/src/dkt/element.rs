//! Local DKT operators on a single triangle.
//!
//! Local scalar dofs are ordered vertex-major as `[w, ∂₁w, ∂₂w]` (9 entries). The discrete
//! gradient is a P2 vector field with nodes at the three vertices followed by the midpoints of
//! the sides `(0,1)`, `(1,2)`, `(2,0)`; its 12 local coefficients are `[θ_x, θ_y]` per node.

use crate::geom::{cross2, norm2, sub2, P2};
use crate::scalar::Real;

pub const SIDES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Barycentric coordinates of the side midpoints, used as the 3-point quadrature rule.
pub fn midpoint_rule<T: Real>() -> [[T; 3]; 3] {
    let (h, z) = (T::lit(0.5), T::zero());
    [[h, h, z], [z, h, h], [h, z, h]]
}

#[derive(Debug, Clone)]
pub struct LocalDkt<T> {
    pub area: T,
    /// Gradients of the barycentric coordinates.
    pub grad_lambda: [P2<T>; 3],
    /// `θ = gradient_map · w` for the 12 P2 coefficients of the discrete gradient.
    pub gradient_map: [[T; 9]; 12],
}

impl<T: Real> LocalDkt<T> {
    /// Returns `None` for a degenerate triangle.
    pub fn new(c: &[P2<T>; 3]) -> Option<Self> {
        let two_area = cross2(sub2(c[1], c[0]), sub2(c[2], c[0]));
        if !(two_area > T::zero()) {
            return None;
        }
        let grad_lambda = [0, 1, 2].map(|i| {
            let (a, b) = (c[(i + 1) % 3], c[(i + 2) % 3]);
            [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area]
        });

        let mut g = [[T::zero(); 9]; 12];
        for i in 0..3 {
            g[2 * i][3 * i + 1] = T::one();
            g[2 * i + 1][3 * i + 2] = T::one();
        }
        let (quarter, half, three_halves) = (T::lit(0.25), T::lit(0.5), T::lit(1.5));
        for (s, &(a, b)) in SIDES.iter().enumerate() {
            let d = sub2(c[b], c[a]);
            let len = norm2(d);
            let t = [d[0] / len, d[1] / len];
            let n = [-t[1], t[0]];
            let node = 3 + s;
            for comp in 0..2 {
                let row = &mut g[2 * node + comp];
                // tangential part: cubic Hermite edge trace, derivative at the midpoint
                row[3 * a] -= t[comp] * three_halves / len;
                row[3 * b] += t[comp] * three_halves / len;
                for k in 0..2 {
                    let tang = -quarter * t[comp] * t[k];
                    let norm = half * n[comp] * n[k];
                    row[3 * a + 1 + k] += tang + norm;
                    row[3 * b + 1 + k] += tang + norm;
                }
            }
        }
        Some(LocalDkt { area: half * two_area, grad_lambda, gradient_map: g })
    }

    /// Gradients of the six P2 basis functions at barycentric point `l`.
    pub fn p2_basis_gradients(&self, l: [T; 3]) -> [P2<T>; 6] {
        let gl = &self.grad_lambda;
        let (one, four) = (T::one(), T::lit(4.0));
        let mut out = [[T::zero(); 2]; 6];
        for i in 0..3 {
            let f = four * l[i] - one;
            out[i] = [f * gl[i][0], f * gl[i][1]];
        }
        for (s, &(a, b)) in SIDES.iter().enumerate() {
            out[3 + s] = [0, 1].map(|d| four * (l[a] * gl[b][d] + l[b] * gl[a][d]));
        }
        out
    }

    /// Values of the six P2 basis functions at barycentric point `l`.
    pub fn p2_basis_values(l: [T; 3]) -> [T; 6] {
        let (one, two, four) = (T::one(), T::lit(2.0), T::lit(4.0));
        [
            l[0] * (two * l[0] - one),
            l[1] * (two * l[1] - one),
            l[2] * (two * l[2] - one),
            four * l[0] * l[1],
            four * l[1] * l[2],
            four * l[2] * l[0],
        ]
    }

    /// Rows mapping local dofs to `∇∇_h w` at `l`, entries ordered `(∂₁θ₁, ∂₂θ₁, ∂₁θ₂, ∂₂θ₂)`.
    pub fn hessian_rows(&self, l: [T; 3]) -> [[T; 9]; 4] {
        let bg = self.p2_basis_gradients(l);
        let mut h = [[T::zero(); 9]; 4];
        for comp in 0..2 {
            for dir in 0..2 {
                let row = &mut h[2 * comp + dir];
                for (node, grad) in bg.iter().enumerate() {
                    let f = grad[dir];
                    if f != T::zero() {
                        for k in 0..9 {
                            row[k] += f * self.gradient_map[2 * node + comp][k];
                        }
                    }
                }
            }
        }
        h
    }

    /// Rows mapping local dofs to `∇_h w` at `l`.
    pub fn gradient_rows(&self, l: [T; 3]) -> [[T; 9]; 2] {
        let phi = Self::p2_basis_values(l);
        let mut out = [[T::zero(); 9]; 2];
        for comp in 0..2 {
            for node in 0..6 {
                for k in 0..9 {
                    out[comp][k] += phi[node] * self.gradient_map[2 * node + comp][k];
                }
            }
        }
        out
    }

    /// Row mapping local dofs to `div ∇_h w` at vertex `i` (element-wise value).
    pub fn divergence_row(&self, i: usize) -> [T; 9] {
        let mut l = [T::zero(); 3];
        l[i] = T::one();
        let h = self.hessian_rows(l);
        let mut out = [T::zero(); 9];
        for k in 0..9 {
            out[k] = h[0][k] + h[3][k];
        }
        out
    }

    /// Local stiffness `∫_T ∇∇_h v : ∇∇_h w`, exact by the side-midpoint rule.
    pub fn stiffness(&self) -> [[T; 9]; 9] {
        let w = self.area / T::lit(3.0);
        let mut s = [[T::zero(); 9]; 9];
        for l in midpoint_rule::<T>() {
            let h = self.hessian_rows(l);
            for row in &h {
                for a in 0..9 {
                    let ra = w * row[a];
                    if ra != T::zero() {
                        for b in 0..9 {
                            s[a][b] += ra * row[b];
                        }
                    }
                }
            }
        }
        s
    }
}
