//! Self-test suite behind `plateflow check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dkt::{DeformationState, SdktOperator};
use crate::energy::{bending_energy, bending_rhs, bilayer_cross_gradient, bilayer_cross_term, BendingParams};
use crate::error::Result;
use crate::mesh::{build_halved_squares, exclusion_table, Diagonal, TriMesh};
use crate::tangent_point::{tp_energy, tp_gradient, tp_radius, PairQuadrature};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    /// Worst observed error.
    pub error: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

fn eight_triangles() -> Result<TriMesh<f64>> {
    build_halved_squares((0.0, 1.0), (0.0, 1.0), 0.5, Diagonal::Rising)
}

fn near_isometric(mesh: &TriMesh<f64>, amp: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut y = DeformationState::interpolate(mesh, |x| ([x[0], x[1], 0.0], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])).coeffs;
    for v in &mut y {
        *v += amp * rng.random_range(-1.0..1.0);
    }
    y
}

/// Largest relative error of directional derivatives against central differences.
fn directional_check(
    trials: usize,
    seed: u64,
    h: f64,
    floor: f64,
    mut sample: impl FnMut(&mut ChaCha8Rng) -> Result<Vec<f64>>,
    mut value: impl FnMut(&[f64]) -> Result<f64>,
    mut gradient: impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let y = sample(&mut rng)?;
        let g = gradient(&y)?;
        let dir: Vec<f64> = (0..y.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let an: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let shifted = |s: f64| -> Vec<f64> { y.iter().zip(&dir).map(|(a, b)| a + s * h * b).collect() };
        let fd = (value(&shifted(1.0))? - value(&shifted(-1.0))?) / (2.0 * h);
        worst = worst.max((an - fd).abs() / an.abs().max(floor));
    }
    Ok(worst)
}

/// Tangent-point gradient against central differences on 8 triangles, 20 directions.
pub fn tp_gradient_check() -> Result<CheckResult> {
    let mesh = eight_triangles()?;
    let quad = PairQuadrature::full(&mesh, &exclusion_table(&mesh));
    let q = 5.0;
    let error = directional_check(
        20,
        17,
        1e-6,
        1e-8,
        |rng| Ok(near_isometric(&mesh, 0.1, rng)),
        |y| Ok(tp_energy(&quad, y, q)?.0),
        |y| tp_gradient(&quad, y, q),
    )?;
    Ok(CheckResult { name: "tangent-point gradient", error, tolerance: 1e-6 })
}

/// Bilayer cross-term variation against central differences on 8 triangles, 20 directions.
pub fn bilayer_gradient_check() -> Result<CheckResult> {
    let mesh = eight_triangles()?;
    let s = SdktOperator::assemble(&mesh)?;
    let error = directional_check(
        20,
        5,
        1e-5,
        1e-3,
        |rng| Ok(near_isometric(&mesh, 0.2, rng)),
        |y| Ok(bilayer_cross_term(&s.map, y)),
        |y| Ok(bilayer_cross_gradient(&s.map, y)),
    )?;
    Ok(CheckResult { name: "bilayer cross-term variation", error, tolerance: 1e-6 })
}

/// Right-hand side against the negative energy gradient (bilayer, loaded).
pub fn rhs_check() -> Result<CheckResult> {
    let mesh = eight_triangles()?;
    let s = SdktOperator::assemble(&mesh)?;
    let params = BendingParams::bilayer(0.6, [0.1, -0.2, 0.3], mesh.area());
    let error = directional_check(
        10,
        23,
        1e-5,
        1e-3,
        |rng| Ok(near_isometric(&mesh, 0.2, rng)),
        |y| Ok(bending_energy(y, &params, &s, &mesh)?.total),
        |y| Ok(bending_rhs(y, &params, &s, 0.0, None)?.into_iter().map(|v| -v).collect()),
    )?;
    Ok(CheckResult { name: "flow right-hand side", error, tolerance: 1e-6 })
}

/// Tangent-point radius of spheres, cylinders and planes.
pub fn radius_check() -> Result<CheckResult> {
    let mut error = 0.0f64;
    let r0 = 2.5;
    for k in 1..20 {
        let th = k as f64 * std::f64::consts::PI / 20.0;
        // sphere of radius r0 through the origin with normal e3
        let phi = 0.37 * k as f64;
        let p_tilde = [r0 * th.sin() * phi.cos(), r0 * th.sin() * phi.sin(), r0 - r0 * th.cos()];
        error = error.max((tp_radius([0.0; 3], p_tilde, [0.0, 0.0, 1.0])? - r0).abs());
        // cylinder of radius r0 around the x1 axis, point in the cross-section of the origin
        let in_section = [0.0, r0 * th.sin(), r0 - r0 * th.cos()];
        error = error.max((tp_radius([0.0; 3], in_section, [0.0, 0.0, 1.0])? - r0).abs());
        let flat = tp_radius([0.0; 3], [th, 1.0 - th, 0.0], [0.0, 0.0, 1.0])?;
        if flat != f64::INFINITY {
            error = f64::INFINITY;
        }
    }
    Ok(CheckResult { name: "tangent-point radius identities", error, tolerance: 1e-12 })
}

/// Runs every check in a fixed order.
pub fn run_checks() -> Result<Vec<CheckResult>> {
    Ok(vec![tp_gradient_check()?, bilayer_gradient_check()?, rhs_check()?, radius_check()?])
}
