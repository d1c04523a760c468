//! Discretized tangent-point self-avoidance potential.
//!
//! For nodal positions `y`, unnormalized normals `ν = ∂₁y × ∂₂y` and `d = y(z) − y(z̃)`
//! the pair density is `r^{-q} = (2|ν·d| / |d|²)^q` and
//! `TP_h = 2^{-q}/q · Σ_z W_z Σ_z̃ w_z(z̃) r^{-q}` with the weights of a [`PairQuadrature`].

mod hierarchical;
mod quadrature;

pub use hierarchical::{hierarchical_quadrature, HierarchicalSelection};
pub use quadrature::{PairQuadrature, QuadTriangle};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{add3, cross3, dot3, scale3, sub3, V3};
use crate::scalar::Real;

/// Outer vertices handled by one parallel work unit; fixes the summation order.
pub const OUTER_BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TpVariant {
    Full,
    BoundaryDomain,
    /// Greedy coarsening of the inner integral with threshold `sigma` over `levels` levels.
    Hierarchical { sigma: f64, levels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpParams {
    pub q: f64,
    pub rho: f64,
    pub variant: TpVariant,
}

impl TpParams {
    pub fn new(q: f64, rho: f64) -> Self {
        TpParams { q, rho, variant: TpVariant::Full }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q >= 2.0) || !(self.rho >= 0.0) {
            return Err(Error::Parameter(format!("tangent-point parameters out of range: {self:?}")));
        }
        if let TpVariant::Hierarchical { sigma, levels } = self.variant {
            if !(sigma > 0.0 && sigma <= 1.0) || levels == 0 {
                return Err(Error::Parameter(format!("hierarchical threshold {sigma} / levels {levels}")));
            }
        }
        Ok(())
    }
}

/// Radius of the sphere through `p̃` tangent to the plane `ν^⊥` at `p`.
///
/// Infinite when `p̃ − p` lies in the tangent plane.
pub fn tp_radius<T: Real>(p: V3<T>, p_tilde: V3<T>, nu: V3<T>) -> Result<T> {
    let d = sub3(p, p_tilde);
    let d2 = dot3(d, d);
    if d2 == T::zero() {
        return Err(Error::Parameter("coincident points in tangent-point radius".into()));
    }
    let t = dot3(nu, d).abs();
    if t == T::zero() {
        return Ok(T::infinity());
    }
    Ok(d2 / (T::lit(2.0) * t))
}

/// `r^{-q}` computed without forming the radius.
pub fn tp_pair_density<T: Real>(d: V3<T>, nu: V3<T>, q: T) -> T {
    let d2 = dot3(d, d);
    (T::lit(2.0) * dot3(nu, d).abs() / d2).powf(q)
}

/// Which outputs of [`assemble`] to compute.
#[derive(Debug, Clone, Copy, Default)]
pub struct TpRequest {
    pub gradient: bool,
    pub density: bool,
    pub force: bool,
}

impl TpRequest {
    pub const ENERGY: TpRequest = TpRequest { gradient: false, density: false, force: false };
    pub const GRADIENT: TpRequest = TpRequest { gradient: true, density: false, force: false };
    pub const ALL: TpRequest = TpRequest { gradient: true, density: true, force: true };
}

#[derive(Debug, Clone, Default)]
pub struct TpAssembly<T> {
    /// `TP_h` without the factor `ρ`.
    pub energy: T,
    /// Gradient with respect to all dofs (empty unless requested).
    pub gradient: Vec<T>,
    /// Nodal density `tp_y(z)`; zero at nodes that are not outer nodes.
    pub density: Vec<T>,
    /// Visualization field `f_tp(z)`.
    pub force: Vec<V3<T>>,
    pub pairs: u64,
}

struct BlockOut<T> {
    energy: T,
    /// `(node, value-dof gradient)` written once per outer node.
    own: Vec<(usize, [T; 9])>,
    /// Inner value contributions, three per node.
    inner: Vec<T>,
    /// Inner contributions on nodes that represent coarse triangles.
    spread: Vec<T>,
    density: Vec<(usize, T)>,
    force: Vec<(usize, V3<T>)>,
    pairs: u64,
}

fn pow_abs<T: Real>(x: T, q: T, qi: Option<i32>) -> T {
    match qi {
        Some(k) => x.powi(k),
        None => x.powf(q),
    }
}

/// Evaluates the potential and the requested derived quantities.
///
/// Work is split into fixed blocks of [`OUTER_BLOCK`] outer vertices whose partial results are
/// merged in block order, so results do not depend on the number of worker threads.
pub fn assemble<T: Real>(quad: &PairQuadrature<T>, y: &[T], q: f64, req: TpRequest) -> Result<TpAssembly<T>> {
    let n_nodes = y.len() / 9;
    let qt = T::lit(q);
    let qi = (q.fract() == 0.0 && q.abs() < 64.0).then_some(q as i32);
    let qm1i = qi.map(|k| k - 1);
    let qm1 = qt - T::one();
    let two = T::lit(2.0);
    let prefactor = two.powf(-qt) / qt;
    let pos = |n: usize| -> V3<T> { [y[9 * n], y[9 * n + 3], y[9 * n + 6]] };
    let frame = |n: usize| -> [V3<T>; 2] {
        [[y[9 * n + 1], y[9 * n + 4], y[9 * n + 7]], [y[9 * n + 2], y[9 * n + 5], y[9 * n + 8]]]
    };

    let n_blocks = quad.outer.len().div_ceil(OUTER_BLOCK);
    let chunk = (rayon::current_num_threads() * 2).max(1);
    let mut out = TpAssembly {
        energy: T::zero(),
        gradient: if req.gradient { vec![T::zero(); y.len()] } else { Vec::new() },
        density: if req.density { vec![T::zero(); n_nodes] } else { Vec::new() },
        force: if req.force { vec![[T::zero(); 3]; n_nodes] } else { Vec::new() },
        pairs: 0,
    };

    let run_block = |b: usize| -> Result<BlockOut<T>> {
        let mut bo = BlockOut {
            energy: T::zero(),
            own: Vec::new(),
            inner: if req.gradient { vec![T::zero(); 3 * n_nodes] } else { Vec::new() },
            spread: if req.gradient && !quad.spread.is_empty() { vec![T::zero(); 3 * n_nodes] } else { Vec::new() },
            density: Vec::new(),
            force: Vec::new(),
            pairs: 0,
        };
        let range = b * OUTER_BLOCK..((b + 1) * OUTER_BLOCK).min(quad.outer.len());
        for k in range {
            let (z, wz) = quad.outer[k];
            let yz = pos(z);
            let [f1, f2] = frame(z);
            let nu = cross3(f1, f2);
            let mut sum = T::zero();
            let mut a = [T::zero(); 3];
            let mut vz = [T::zero(); 3];
            let mut force = [T::zero(); 3];
            let mut err = None;
            quad.for_each_inner(k, |n, w, overridden| {
                if n == z || err.is_some() {
                    return;
                }
                bo.pairs += 1;
                let d = sub3(yz, pos(n));
                let d2 = dot3(d, d);
                if d2 == T::zero() {
                    err = Some(Error::Intersection(z, n));
                    return;
                }
                let t = dot3(nu, d);
                let at = t.abs();
                if req.force {
                    for i in 0..3 {
                        force[i] += w * nu[i] * d[i].abs() / d2;
                    }
                }
                if at == T::zero() {
                    return;
                }
                sum += w * pow_abs(two * at / d2, qt, qi);
                if req.gradient {
                    // |t|^{q-1} / |d|^{2q+2}
                    let r = pow_abs(at, qm1, qm1i) / pow_abs(d2, qt + T::one(), qi.map(|k| k + 1));
                    let coef = wz * w * r;
                    let s = t.sign0();
                    a = add3(a, scale3(coef * s * d2, d));
                    let v = sub3(scale3(s * d2, nu), scale3(two * at, d));
                    let v = scale3(coef, v);
                    vz = add3(vz, v);
                    let acc = if overridden || quad.spread.is_empty() || quad.spread[n].is_none() {
                        &mut bo.inner
                    } else {
                        &mut bo.spread
                    };
                    for c in 0..3 {
                        acc[3 * n + c] -= v[c];
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            bo.energy += wz * sum;
            if req.density {
                bo.density.push((z, prefactor * sum));
            }
            if req.force {
                bo.force.push((z, force));
            }
            if req.gradient {
                let g1 = cross3(f2, a);
                let g2 = cross3(a, f1);
                let mut g = [T::zero(); 9];
                for c in 0..3 {
                    g[3 * c] = vz[c];
                    g[3 * c + 1] = g1[c];
                    g[3 * c + 2] = g2[c];
                }
                bo.own.push((z, g));
            }
        }
        Ok(bo)
    };

    let mut spread = if req.gradient && !quad.spread.is_empty() { vec![T::zero(); 3 * n_nodes] } else { Vec::new() };
    let mut b0 = 0;
    while b0 < n_blocks {
        let b1 = (b0 + chunk).min(n_blocks);
        let parts: Vec<Result<BlockOut<T>>> = (b0..b1).into_par_iter().map(run_block).collect();
        for part in parts {
            let bo = part?;
            out.energy += bo.energy;
            out.pairs += bo.pairs;
            for (z, g) in bo.own {
                for k in 0..9 {
                    out.gradient[9 * z + k] += g[k];
                }
            }
            if req.gradient {
                for n in 0..n_nodes {
                    for c in 0..3 {
                        out.gradient[9 * n + 3 * c] += bo.inner[3 * n + c];
                    }
                }
            }
            for (acc, v) in spread.iter_mut().zip(&bo.spread) {
                *acc += *v;
            }
            for (z, v) in bo.density {
                out.density[z] = v;
            }
            for (z, f) in bo.force {
                out.force[z] = f;
            }
        }
        b0 = b1;
    }
    for (n, share) in quad.spread.iter().enumerate() {
        if let (Some(share), true) = (share, req.gradient) {
            for &(m, f) in share {
                for c in 0..3 {
                    out.gradient[9 * m + 3 * c] += f * spread[3 * n + c];
                }
            }
        }
    }
    out.energy *= prefactor;
    Ok(out)
}

/// `TP_h` and the nodal density.
pub fn tp_energy<T: Real>(quad: &PairQuadrature<T>, y: &[T], q: f64) -> Result<(T, Vec<T>)> {
    let a = assemble(quad, y, q, TpRequest { density: true, ..TpRequest::ENERGY })?;
    Ok((a.energy, a.density))
}

/// Gradient of `TP_h` with respect to all dofs.
pub fn tp_gradient<T: Real>(quad: &PairQuadrature<T>, y: &[T], q: f64) -> Result<Vec<T>> {
    Ok(assemble(quad, y, q, TpRequest::GRADIENT)?.gradient)
}

/// Nodal pseudo-force `f_tp`, for visualization only.
pub fn tp_force_field<T: Real>(quad: &PairQuadrature<T>, y: &[T], q: f64) -> Result<Vec<V3<T>>> {
    Ok(assemble(quad, y, q, TpRequest { force: true, ..TpRequest::ENERGY })?.force)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_identities() {
        assert_eq!(tp_radius([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]).unwrap(), f64::INFINITY);
        assert!((tp_radius::<f64>([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]).unwrap() - 1.0).abs() <= 1e-12);
        let r0 = 2.5;
        for k in 1..20 {
            let th = k as f64 * std::f64::consts::PI / 20.0;
            let r = tp_radius([r0, 0.0, 0.0], [r0 * th.cos(), r0 * th.sin(), 0.0], [1.0, 0.0, 0.0]).unwrap();
            assert!((r - r0).abs() <= 1e-12 * r0, "{r}");
        }
        assert!(tp_radius([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [0.0, 0.0, 1.0]).is_err());
        let d = tp_pair_density::<f64>([0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 5.0);
        assert!((d - 32.0).abs() < 1e-12);
    }
}
