use crate::geom::{dense_solve, P2};
use crate::scalar::Real;

/// Reduced cubic Hermite element determined by values and gradients at the vertices.
///
/// The centroid value is eliminated by
/// `p(x_T) = ⅓ Σ p(z) + ⅙ Σ ∇p(z)·(x_T − z)`.
/// Stored as monomial coefficients in coordinates relative to the centroid.
#[derive(Debug, Clone)]
pub struct ReducedCubic<T> {
    centroid: P2<T>,
    coef: [T; 10],
}

fn monomials<T: Real>(d: P2<T>) -> [T; 10] {
    let (x, y) = (d[0], d[1]);
    [T::one(), x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y]
}

fn monomial_gradients<T: Real>(d: P2<T>) -> [[T; 10]; 2] {
    let (x, y) = (d[0], d[1]);
    let (z, o, two, three) = (T::zero(), T::one(), T::lit(2.0), T::lit(3.0));
    [
        [z, o, z, two * x, y, z, three * x * x, two * x * y, y * y, z],
        [z, z, o, z, x, two * y, z, x * x, two * x * y, three * y * y],
    ]
}

impl<T: Real> ReducedCubic<T> {
    /// `dofs` are `[w, ∂₁w, ∂₂w]` per vertex. Returns `None` for degenerate input.
    pub fn new(corners: &[P2<T>; 3], dofs: &[T; 9]) -> Option<Self> {
        let third = T::one() / T::lit(3.0);
        let centroid = [0, 1].map(|d| (corners[0][d] + corners[1][d] + corners[2][d]) * third);
        let rel = corners.map(|c| [c[0] - centroid[0], c[1] - centroid[1]]);
        let mut a = Vec::with_capacity(10);
        let mut b = Vec::with_capacity(10);
        for i in 0..3 {
            a.push(monomials(rel[i]).to_vec());
            b.push(dofs[3 * i]);
            let g = monomial_gradients(rel[i]);
            a.push(g[0].to_vec());
            b.push(dofs[3 * i + 1]);
            a.push(g[1].to_vec());
            b.push(dofs[3 * i + 2]);
        }
        // centroid condition, linear in the coefficients
        let sixth = T::one() / T::lit(6.0);
        let mut row = monomials([T::zero(), T::zero()]).to_vec();
        for r in &rel {
            let m = monomials(*r);
            let g = monomial_gradients(*r);
            for k in 0..10 {
                row[k] -= third * m[k] + sixth * (g[0][k] * (-r[0]) + g[1][k] * (-r[1]));
            }
        }
        a.push(row);
        b.push(T::zero());
        dense_solve(&mut a, &mut b)?;
        let mut coef = [T::zero(); 10];
        coef.copy_from_slice(&b);
        Some(ReducedCubic { centroid, coef })
    }

    pub fn value(&self, x: P2<T>) -> T {
        let m = monomials([x[0] - self.centroid[0], x[1] - self.centroid[1]]);
        (0..10).map(|k| m[k] * self.coef[k]).sum()
    }

    /// `[∂₁₁, ∂₁₂, ∂₂₁, ∂₂₂]` at `x`.
    pub fn hessian(&self, x: P2<T>) -> [T; 4] {
        let (dx, dy) = (x[0] - self.centroid[0], x[1] - self.centroid[1]);
        let c = &self.coef;
        let (two, six) = (T::lit(2.0), T::lit(6.0));
        let h11 = two * c[3] + six * c[6] * dx + two * c[7] * dy;
        let h12 = c[4] + two * c[7] * dx + two * c[8] * dy;
        let h22 = two * c[5] + two * c[8] * dx + six * c[9] * dy;
        [h11, h12, h12, h22]
    }
}
