use plateflow_core::dkt::{
    dkt_error_norms, hessian_norms, interpolate_scalar, DeformationState, SdktOperator,
};
use plateflow_core::mesh::{build_halved_squares, build_periodic_strip, Diagonal, TriMesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn unit_square(h: f64) -> TriMesh<f64> {
    build_halved_squares::<f64>((0.0, 1.0), (0.0, 1.0), h, Diagonal::Rising).unwrap()
}

fn stretched(mesh: &TriMesh<f64>, sx: f64) -> TriMesh<f64> {
    let v = mesh.vertices.iter().map(|p| [sx * p[0], p[1]]).collect();
    TriMesh::from_parts(v, mesh.triangles.clone(), None, None, mesh.hhat).unwrap()
}

fn cylinder(mesh: &TriMesh<f64>) -> DeformationState<f64> {
    DeformationState::interpolate(mesh, |x| {
        ([x[0].sin(), x[1], x[0].cos()], [[x[0].cos(), 0.0, -x[0].sin()], [0.0, 1.0, 0.0]])
    })
}

#[test]
fn cylinder_bending_energy_converges_to_pi() {
    let mut errs = Vec::new();
    for n in [8, 16, 32] {
        let mesh = stretched(&unit_square(1.0 / n as f64), 2.0 * PI);
        let s = SdktOperator::assemble(&mesh).unwrap();
        let e = s.bending_energy(&cylinder(&mesh).coeffs);
        errs.push((e - PI).abs());
    }
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
    assert!(errs[2] < 1e-2 * PI, "{errs:?}");
}

#[test]
fn elementwise_and_matrix_energies_agree() {
    let mesh = stretched(&unit_square(0.25), 2.0 * PI);
    let s = SdktOperator::assemble(&mesh).unwrap();
    let y = cylinder(&mesh).coeffs;
    let (a, b) = (s.bending_energy(&y), s.bending_energy_elementwise(&y));
    assert!((a - b).abs() <= 1e-12 * a);
}

#[test]
fn convergence_rates_for_smooth_field() {
    let w = |p: [f64; 2]| (p[0].sin() * p[1].cos(), [p[0].cos() * p[1].cos(), -p[0].sin() * p[1].sin()]);
    let grad = |p: [f64; 2]| w(p).1;
    let hess = |p: [f64; 2]| {
        let (s1, c1, s2, c2) = (p[0].sin(), p[0].cos(), p[1].sin(), p[1].cos());
        [-s1 * c2, -c1 * s2, -c1 * s2, -s1 * c2]
    };
    let mut eg = Vec::new();
    let mut eh = Vec::new();
    for h in [0.25, 0.125, 0.0625] {
        let mesh = unit_square(h);
        let s = SdktOperator::assemble(&mesh).unwrap();
        let wh = interpolate_scalar(&mesh, w);
        let (a, b) = dkt_error_norms(&mesh, &s.map, &wh, grad, hess);
        eg.push(a);
        eh.push(b);
    }
    for k in 0..2 {
        let rg = (eg[k] / eg[k + 1]).log2();
        let rh = (eh[k] / eh[k + 1]).log2();
        assert!(rg >= 1.9, "gradient rate {rg}");
        assert!(rh >= 0.9, "hessian rate {rh}");
    }
}

#[test]
fn quadratic_fields_are_exact_on_meshes() {
    for diag in [Diagonal::Rising, Diagonal::Falling] {
        let mesh = build_halved_squares::<f64>((-1.0, 1.0), (0.0, 1.0), 0.25, diag).unwrap();
        let s = SdktOperator::assemble(&mesh).unwrap();
        let w = |p: [f64; 2]| {
            (
                0.3 * p[0] * p[0] - 0.7 * p[0] * p[1] + 1.1 * p[1] * p[1] + p[0],
                [0.6 * p[0] - 0.7 * p[1] + 1.0, -0.7 * p[0] + 2.2 * p[1]],
            )
        };
        let wh = interpolate_scalar(&mesh, w);
        let (eg, eh) = dkt_error_norms(&mesh, &s.map, &wh, |p| w(p).1, |_| [0.6, -0.7, -0.7, 2.2]);
        assert!(eg < 1e-10 && eh < 1e-10, "{eg} {eh}");
    }
}

#[test]
fn operator_is_symmetric_semidefinite_and_kills_affine_fields() {
    let mesh = build_halved_squares::<f64>((0.0, 2.0), (0.0, 1.0), 0.5, Diagonal::Rising).unwrap();
    let s = SdktOperator::assemble(&mesh).unwrap();
    let d = s.matrix.to_dense_scalar();
    let n = d.len();
    for i in 0..n {
        for j in 0..n {
            assert!((d[i][j] - d[j][i]).abs() <= 1e-12 * (1.0 + d[i][i].abs()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sx = s.matrix.apply_scalar(&x);
        let q: f64 = sx.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!(q >= -1e-12);
    }
    let aff = interpolate_scalar(&mesh, |p| (2.0 - p[0] + 3.0 * p[1], [-1.0, 3.0]));
    assert!(s.matrix.apply_scalar(&aff).iter().all(|v| v.abs() < 1e-11));
}

#[test]
fn clamped_operator_is_positive_definite() {
    let mesh = build_halved_squares::<f64>((0.0, 2.0), (0.0, 1.0), 0.5, Diagonal::Rising).unwrap();
    let s = SdktOperator::assemble(&mesh).unwrap();
    let d = s.matrix.to_dense_scalar();
    let free: Vec<usize> = (0..d.len()).filter(|&i| mesh.vertices[i / 3][0] > 1e-12).collect();
    let m = free.len();
    // Cholesky of the restriction; fails on a nonpositive pivot
    let mut l = vec![vec![0.0; m]; m];
    let mut min_pivot = f64::INFINITY;
    for i in 0..m {
        for j in 0..=i {
            let mut v = d[free[i]][free[j]];
            for k in 0..j {
                v -= l[i][k] * l[j][k];
            }
            if i == j {
                min_pivot = min_pivot.min(v);
                assert!(v > 0.0, "nonpositive pivot {v} at {i}");
                l[i][i] = v.sqrt();
            } else {
                l[i][j] = v / l[j][j];
            }
        }
    }
    assert!(min_pivot > 1e-8);
}

#[test]
fn energy_does_not_depend_on_numbering() {
    let mesh = build_halved_squares::<f64>((0.0, 2.0), (0.0, 1.0), 0.25, Diagonal::Falling).unwrap();
    let y = DeformationState::interpolate(&mesh, |x| {
        ([x[0].sin(), x[1] + 0.1 * x[0] * x[1], x[0].cos()], [[x[0].cos(), 0.1 * x[1], -x[0].sin()], [0.0, 1.0 + 0.1 * x[0], 0.0]])
    });
    let e0 = SdktOperator::assemble(&mesh).unwrap().bending_energy(&y.coeffs);

    let nv = mesh.n_vertices();
    let perm: Vec<usize> = (0..nv).map(|i| (i * 7 + 3) % nv).collect();
    assert!(nv % 7 != 0);
    let mut inv = vec![0; nv];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    let verts: Vec<[f64; 2]> = (0..nv).map(|k| mesh.vertices[inv[k]]).collect();
    let mut tris: Vec<[usize; 3]> = mesh.triangles.iter().map(|t| [perm[t[1]], perm[t[2]], perm[t[0]]]).collect();
    tris.reverse();
    let m2 = TriMesh::from_parts(verts, tris, None, None, mesh.hhat).unwrap();
    let mut y2 = DeformationState::zeros(nv);
    for n in 0..nv {
        y2.set_position(perm[n], y.position(n));
        y2.set_gradient(perm[n], y.gradient(n));
    }
    let e1 = SdktOperator::assemble(&m2).unwrap().bending_energy(&y2.coeffs);
    assert!((e0 - e1).abs() <= 1e-12 * e0, "{e0} {e1}");
}

#[test]
fn discrete_hessian_norm_is_equivalent_to_reduced_cubic_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for h in [0.25, 0.125] {
        let mesh = unit_square(h);
        let s = SdktOperator::assemble(&mesh).unwrap();
        for _ in 0..20 {
            let w: Vec<f64> = (0..3 * mesh.n_vertices())
                .map(|i| if i % 3 == 0 { rng.random_range(-1.0..1.0) * h } else { rng.random_range(-1.0..1.0) })
                .collect();
            let (a, b) = hessian_norms(&mesh, &s.map, &w);
            lo = lo.min(a / b);
            hi = hi.max(a / b);
        }
    }
    assert!(lo > 0.2 && hi < 5.0, "ratio range [{lo}, {hi}]");
}

#[test]
fn moebius_strip_matches_open_strip() {
    // a field compatible with the flipped gluing has the same energy as on the cut-open strip
    let len = 4.0;
    let th = |x: f64| PI * x / len;
    let field = |x: [f64; 2]| {
        let (c, sn, dth) = (th(x[0]).cos(), th(x[0]).sin(), PI / len);
        let k = 2.0 * PI / len;
        (
            [(k * x[0]).sin(), x[1] * c, x[1] * sn],
            [[k * (k * x[0]).cos(), -x[1] * sn * dth, x[1] * c * dth], [0.0, c, sn]],
        )
    };
    let mesh = build_periodic_strip::<f64>(len, (-0.5, 0.5), 0.25, true, Diagonal::Rising).unwrap();
    let e = SdktOperator::assemble(&mesh).unwrap().bending_energy(&DeformationState::interpolate(&mesh, field).coeffs);
    let open = build_halved_squares::<f64>((0.0, len), (-0.5, 0.5), 0.25, Diagonal::Rising).unwrap();
    let eo = SdktOperator::assemble(&open).unwrap().bending_energy(&DeformationState::interpolate(&open, field).coeffs);
    assert!(e > 0.0 && (e - eo).abs() <= 1e-10 * eo, "{e} {eo}");
}
