//! Discrete single-layer and bilayer bending energies, their first variations and the
//! nodal isometry error.

use rayon::prelude::*;

use crate::dkt::{dot9, DiscreteGradientMap, SdktOperator};
use crate::error::{Error, Result};
use crate::geom::{cross3, dot3, V3};
use crate::mesh::TriMesh;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlateModel {
    Single,
    Bilayer,
}

#[derive(Debug, Clone)]
pub struct BendingParams<T> {
    pub model: PlateModel,
    /// Material mismatch of the bilayer, zero for a single layer.
    pub alpha: T,
    /// Constant body force.
    pub force: V3<T>,
    /// `|ω|`.
    pub area: T,
}

impl<T: Real> BendingParams<T> {
    pub fn single(force: V3<T>, area: T) -> Self {
        BendingParams { model: PlateModel::Single, alpha: T::zero(), force, area }
    }

    pub fn bilayer(alpha: T, force: V3<T>, area: T) -> Self {
        BendingParams { model: PlateModel::Bilayer, alpha, force, area }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.model {
            PlateModel::Single => self.alpha == T::zero(),
            PlateModel::Bilayer => self.alpha > T::zero(),
        };
        if !ok || !self.force.iter().all(|f| f.is_finite()) {
            return Err(Error::Parameter(format!("invalid bending parameters: {self:?}")));
        }
        Ok(())
    }

    /// Lumped load vector of the body force.
    pub fn load(&self, lumped: &[T]) -> Vec<T> {
        let mut b = vec![T::zero(); 9 * lumped.len()];
        for (z, &w) in lumped.iter().enumerate() {
            for c in 0..3 {
                b[9 * z + 3 * c] = w * self.force[c];
            }
        }
        b
    }
}

/// Parts of the discrete energy. `total` is their sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyReport<T> {
    pub total: T,
    pub bending: T,
    /// `Σ_T (|T|/3) Σ_z Δ_h y · (∂₁y × ∂₂y)`, entering the total with factor `−α`.
    pub cross_term: T,
    /// `α² |ω|`.
    pub constant: T,
    /// `(f, y)_h`, entering the total with a minus sign.
    pub force: T,
    /// `ρ · TP_h`.
    pub tp: T,
    pub delta_iso: T,
}

impl<T: Real> EnergyReport<T> {
    /// Adds the weighted self-avoidance contribution.
    pub fn with_tp(mut self, rho_tp: T) -> Self {
        self.tp = rho_tp;
        self.total += rho_tp;
        self
    }
}

fn check_len<T>(y: &[T], n_nodes: usize) -> Result<()> {
    if y.len() != 9 * n_nodes {
        return Err(Error::LayoutMismatch { expected: 9 * n_nodes, got: y.len() });
    }
    Ok(())
}

/// Element-local gradient frame `[∂₁y, ∂₂y]` of corner `i` on triangle `t`.
fn local_frame<T: Real>(map: &DiscreteGradientMap<T>, t: usize, i: usize, y: &[T]) -> [V3<T>; 2] {
    let z = map.triangles[t][i];
    let s = map.signs[t][3 * i + 2];
    let f1 = [0, 1, 2].map(|c| y[9 * z + 3 * c + 1]);
    let f2 = [0, 1, 2].map(|c| s * y[9 * z + 3 * c + 2]);
    [f1, f2]
}

fn element_laplacians<T: Real>(map: &DiscreteGradientMap<T>, t: usize, y: &[T]) -> [V3<T>; 3] {
    let local = [0, 1, 2].map(|c| map.gather(t, y, c));
    [0, 1, 2].map(|i| {
        let d = map.elements[t].divergence_row(i);
        [0, 1, 2].map(|c| dot9(&d, &local[c]))
    })
}

/// The bilayer cross term `Σ_T (|T|/3) Σ_{z∈T} (div ∇_h y)(z)|_T · (∂₁y(z) × ∂₂y(z))`.
pub fn bilayer_cross_term<T: Real>(map: &DiscreteGradientMap<T>, y: &[T]) -> T {
    let third = T::one() / T::lit(3.0);
    let parts: Vec<T> = (0..map.elements.len())
        .into_par_iter()
        .map(|t| {
            let lap = element_laplacians(map, t, y);
            let w = map.elements[t].area * third;
            (0..3)
                .map(|i| {
                    let [f1, f2] = local_frame(map, t, i, y);
                    w * dot3(lap[i], cross3(f1, f2))
                })
                .sum()
        })
        .collect();
    parts.into_iter().sum()
}

/// First variation of [`bilayer_cross_term`] as a full dof vector.
pub fn bilayer_cross_gradient<T: Real>(map: &DiscreteGradientMap<T>, y: &[T]) -> Vec<T> {
    let third = T::one() / T::lit(3.0);
    let mut g = vec![T::zero(); y.len()];
    for t in 0..map.elements.len() {
        let e = &map.elements[t];
        let lap = element_laplacians(map, t, y);
        let w = e.area * third;
        let mut local = [[T::zero(); 9]; 3];
        for i in 0..3 {
            let [f1, f2] = local_frame(map, t, i, y);
            let nu = cross3(f1, f2);
            let d = e.divergence_row(i);
            let a1 = cross3(f2, lap[i]);
            let a2 = cross3(lap[i], f1);
            for c in 0..3 {
                for k in 0..9 {
                    local[c][k] += w * d[k] * nu[c];
                }
                local[c][3 * i + 1] += w * a1[c];
                local[c][3 * i + 2] += w * a2[c];
            }
        }
        for c in 0..3 {
            map.scatter(t, &local[c], c, &mut g);
        }
    }
    g
}

/// The discrete energy without the self-avoidance term.
pub fn bending_energy<T: Real>(
    y: &[T],
    params: &BendingParams<T>,
    sdkt: &SdktOperator<T>,
    mesh: &TriMesh<T>,
) -> Result<EnergyReport<T>> {
    check_len(y, sdkt.n_nodes())?;
    let bending = sdkt.bending_energy(y);
    let (cross_term, constant) = match params.model {
        PlateModel::Single => (T::zero(), T::zero()),
        PlateModel::Bilayer => (bilayer_cross_term(&sdkt.map, y), params.alpha * params.alpha * params.area),
    };
    let mut force = T::zero();
    for (z, &w) in sdkt.lumped.iter().enumerate() {
        for c in 0..3 {
            force += w * params.force[c] * y[9 * z + 3 * c];
        }
    }
    let total = bending - params.alpha * cross_term + constant - force;
    Ok(EnergyReport {
        total,
        bending,
        cross_term,
        constant,
        force,
        tp: T::zero(),
        delta_iso: delta_iso(y, mesh),
    })
}

/// Right-hand side `−S y + b_f + α v_bil − ρ ∇TP_h`.
///
/// `tp_gradient` is the gradient of the unweighted potential, or `None` when `ρ = 0`.
pub fn bending_rhs<T: Real>(
    y: &[T],
    params: &BendingParams<T>,
    sdkt: &SdktOperator<T>,
    rho: T,
    tp_gradient: Option<&[T]>,
) -> Result<Vec<T>> {
    check_len(y, sdkt.n_nodes())?;
    let mut b = sdkt.apply(y);
    b.iter_mut().for_each(|v| *v = -*v);
    for (z, &w) in sdkt.lumped.iter().enumerate() {
        for c in 0..3 {
            b[9 * z + 3 * c] += w * params.force[c];
        }
    }
    if params.model == PlateModel::Bilayer {
        let v = bilayer_cross_gradient(&sdkt.map, y);
        for (bi, vi) in b.iter_mut().zip(v) {
            *bi += params.alpha * vi;
        }
    }
    if let Some(g) = tp_gradient {
        check_len(g, sdkt.n_nodes())?;
        for (bi, &gi) in b.iter_mut().zip(g) {
            *bi -= rho * gi;
        }
    }
    Ok(b)
}

/// Frobenius norm of `∇y(z)ᵀ∇y(z) − I₂` at node `z`.
pub fn nodal_iso_violation<T: Real>(y: &[T], z: usize) -> T {
    let f1: V3<T> = [0, 1, 2].map(|c| y[9 * z + 3 * c + 1]);
    let f2: V3<T> = [0, 1, 2].map(|c| y[9 * z + 3 * c + 2]);
    let g11 = dot3(f1, f1) - T::one();
    let g12 = dot3(f1, f2);
    let g22 = dot3(f2, f2) - T::one();
    (g11 * g11 + T::lit(2.0) * g12 * g12 + g22 * g22).sqrt()
}

/// Largest nodal isometry violation over all vertices.
pub fn delta_iso<T: Real>(y: &[T], _mesh: &TriMesh<T>) -> T {
    (0..y.len() / 9).map(|z| nodal_iso_violation(y, z)).fold(T::zero(), T::max)
}
