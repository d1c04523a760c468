use plateflow_core::dkt::{DeformationState, SdktOperator};
use plateflow_core::energy::{
    bending_energy, bending_rhs, bilayer_cross_gradient, bilayer_cross_term, delta_iso, BendingParams, PlateModel,
};
use plateflow_core::mesh::{build_halved_squares, Diagonal, TriMesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn flat(mesh: &TriMesh<f64>) -> DeformationState<f64> {
    DeformationState::interpolate(mesh, |x| ([x[0], x[1], 0.0], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
}

fn perturbed(mesh: &TriMesh<f64>, amp: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = flat(mesh).coeffs;
    for v in &mut y {
        *v += amp * rng.random_range(-1.0..1.0);
    }
    y
}

fn eight_triangles() -> TriMesh<f64> {
    build_halved_squares::<f64>((0.0, 1.0), (0.0, 1.0), 0.5, Diagonal::Rising).unwrap()
}

#[test]
fn flat_states() {
    let mesh = build_halved_squares::<f64>((0.0, 2.0), (0.0, 1.0), 0.25, Diagonal::Rising).unwrap();
    let s = SdktOperator::assemble(&mesh).unwrap();
    let y = flat(&mesh);
    let single = bending_energy(&y.coeffs, &BendingParams::single([0.0; 3], 2.0), &s, &mesh).unwrap();
    assert!(single.total.abs() < 1e-12 && single.delta_iso == 0.0);
    let bil = bending_energy(&y.coeffs, &BendingParams::bilayer(1.0, [0.0; 3], 2.0), &s, &mesh).unwrap();
    assert!(bil.cross_term.abs() < 1e-12);
    assert!((bil.total - 2.0).abs() < 1e-12);
    let b = bending_rhs(&y.coeffs, &BendingParams::single([0.0; 3], 2.0), &s, 0.0, None).unwrap();
    assert!(b.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn body_force_load_is_lumped() {
    let mesh = build_halved_squares::<f64>((0.0, 2.0), (0.0, 1.0), 0.25, Diagonal::Rising).unwrap();
    let s = SdktOperator::assemble(&mesh).unwrap();
    let y = flat(&mesh);
    let cf = 1e-2;
    let b = bending_rhs(&y.coeffs, &BendingParams::single([0.0, 0.0, cf], 2.0), &s, 0.0, None).unwrap();
    for z in 0..mesh.n_vertices() {
        for k in 0..9 {
            let expect = if k == 6 { cf * s.lumped[z] } else { 0.0 };
            assert!((b[9 * z + k] - expect).abs() < 1e-12);
        }
    }
}

#[test]
fn report_parts_sum_to_total() {
    let mesh = eight_triangles();
    let s = SdktOperator::assemble(&mesh).unwrap();
    let y = perturbed(&mesh, 0.1, 3);
    let r = bending_energy(&y, &BendingParams::bilayer(0.75, [0.0, 0.0, 0.3], 1.0), &s, &mesh).unwrap();
    let sum = r.bending - 0.75 * r.cross_term + r.constant - r.force + r.tp;
    assert!((sum - r.total).abs() <= 1e-12 * r.total.abs().max(1.0));
}

#[test]
fn cross_term_variation_matches_finite_differences() {
    let mesh = eight_triangles();
    let s = SdktOperator::assemble(&mesh).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..20 {
        let y = perturbed(&mesh, 0.2, 100 + trial);
        let g = bilayer_cross_gradient(&s.map, &y);
        let dir: Vec<f64> = (0..y.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let analytic: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let h = 1e-5;
        let shifted = |sgn: f64| -> Vec<f64> { y.iter().zip(&dir).map(|(a, b)| a + sgn * h * b).collect() };
        let fd = (bilayer_cross_term(&s.map, &shifted(1.0)) - bilayer_cross_term(&s.map, &shifted(-1.0))) / (2.0 * h);
        let rel = (analytic - fd).abs() / analytic.abs().max(1e-3);
        assert!(rel <= 1e-6, "trial {trial}: {analytic} vs {fd}");
    }
}

#[test]
fn rhs_is_negative_energy_gradient() {
    let mesh = eight_triangles();
    let s = SdktOperator::assemble(&mesh).unwrap();
    let params = BendingParams::bilayer(1.0, [0.1, -0.2, 0.5], 1.0);
    let y = perturbed(&mesh, 0.15, 9);
    let b = bending_rhs(&y, &params, &s, 0.0, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dir: Vec<f64> = (0..y.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let h = 1e-5;
    let e = |sgn: f64| {
        let yy: Vec<f64> = y.iter().zip(&dir).map(|(a, b)| a + sgn * h * b).collect();
        bending_energy(&yy, &params, &s, &mesh).unwrap().total
    };
    let fd = (e(1.0) - e(-1.0)) / (2.0 * h);
    let an: f64 = -b.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>();
    assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{fd} {an}");
}

#[test]
fn frame_indifference() {
    let mesh = eight_triangles();
    let s = SdktOperator::assemble(&mesh).unwrap();
    let y = perturbed(&mesh, 0.2, 21);
    let (a, b, c) = (0.3f64, -1.1f64, 0.7f64);
    // rotation from Euler angles
    let rz = [[a.cos(), -a.sin(), 0.0], [a.sin(), a.cos(), 0.0], [0.0, 0.0, 1.0]];
    let ry = [[b.cos(), 0.0, b.sin()], [0.0, 1.0, 0.0], [-b.sin(), 0.0, b.cos()]];
    let rx = [[1.0, 0.0, 0.0], [0.0, c.cos(), -c.sin()], [0.0, c.sin(), c.cos()]];
    let mul = |p: [[f64; 3]; 3], q: [[f64; 3]; 3]| {
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = (0..3).map(|k| p[i][k] * q[k][j]).sum();
            }
        }
        r
    };
    let q = mul(mul(rz, ry), rx);
    let shift = [1.5, -2.0, 0.25];
    let mut yq = vec![0.0; y.len()];
    for n in 0..mesh.n_vertices() {
        for k in 0..3 {
            for i in 0..3 {
                yq[9 * n + 3 * i + k] = (0..3).map(|j| q[i][j] * y[9 * n + 3 * j + k]).sum::<f64>() + if k == 0 { shift[i] } else { 0.0 };
            }
        }
    }
    for params in [BendingParams::single([0.0; 3], 1.0), BendingParams::bilayer(1.0, [0.0; 3], 1.0)] {
        let e0 = bending_energy(&y, &params, &s, &mesh).unwrap().total;
        let e1 = bending_energy(&yq, &params, &s, &mesh).unwrap().total;
        assert!((e0 - e1).abs() <= 1e-10 * e0.abs().max(1.0), "{e0} {e1}");
    }
}

#[test]
fn zero_mismatch_bilayer_is_single_layer() {
    let mesh = eight_triangles();
    let s = SdktOperator::assemble(&mesh).unwrap();
    let y = perturbed(&mesh, 0.2, 4);
    let single = BendingParams::single([0.0, 0.0, 1.0], 1.0);
    let bil = BendingParams { model: PlateModel::Bilayer, alpha: 0.0, ..single.clone() };
    assert!(bil.validate().is_err());
    let a = bending_energy(&y, &single, &s, &mesh).unwrap().total;
    let b = bending_energy(&y, &bil, &s, &mesh).unwrap().total;
    assert_eq!(a, b);
    let ra = bending_rhs(&y, &single, &s, 0.0, None).unwrap();
    let rb = bending_rhs(&y, &bil, &s, 0.0, None).unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn isometry_violation() {
    let mesh = eight_triangles();
    let mut y = flat(&mesh);
    assert_eq!(delta_iso(&y.coeffs, &mesh), 0.0);
    y.set_gradient(3, [[1.1, 0.0, 0.0], [0.0, 1.0, 0.0]]);
    assert!((delta_iso(&y.coeffs, &mesh) - 0.21).abs() < 1e-14);
    // Frobenius norm over all entries, off-diagonal ones counted twice
    y.set_gradient(3, [[1.0, 0.0, 0.0], [0.1, 1.0, 0.0]]);
    assert!((delta_iso(&y.coeffs, &mesh) - 0.0201f64.sqrt()).abs() < 1e-14);
}
