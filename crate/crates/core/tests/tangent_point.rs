use plateflow_core::dkt::DeformationState;
use plateflow_core::mesh::{build_halved_squares, build_periodic_strip, exclusion_table, Diagonal, RefinementHierarchy, TriMesh};
use plateflow_core::tangent_point::{
    assemble, hierarchical_quadrature, tp_energy, tp_force_field, tp_gradient, tp_pair_density, PairQuadrature, TpRequest,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rolled(mesh: &TriMesh<f64>, r: f64) -> DeformationState<f64> {
    DeformationState::interpolate(mesh, |x| {
        let a = x[0] / r;
        ([r * a.sin(), x[1], r * (1.0 - a.cos())], [[a.cos(), 0.0, a.sin()], [0.0, 1.0, 0.0]])
    })
}

fn strip() -> TriMesh<f64> {
    build_halved_squares::<f64>((0.0, 4.0), (0.0, 1.0), 0.25, Diagonal::Rising).unwrap()
}

fn noisy(y: &[f64], amp: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    y.iter().map(|v| v + amp * rng.random_range(-1.0..1.0)).collect()
}

/// Two unit squares side by side in the reference plane.
fn two_patches() -> TriMesh<f64> {
    let a = build_halved_squares::<f64>((0.0, 1.0), (0.0, 1.0), 0.25, Diagonal::Rising).unwrap();
    let n = a.n_vertices();
    let mut v = a.vertices.clone();
    v.extend(a.vertices.iter().map(|p| [p[0] + 2.0, p[1]]));
    let mut t = a.triangles.clone();
    t.extend(a.triangles.iter().map(|tr| tr.map(|i| i + n)));
    TriMesh::from_parts(v, t, None, None, 0.25).unwrap()
}

/// Left patch at height 0 with normal `-e₃`, right patch at height `d` with normal `+e₃`.
fn separated(mesh: &TriMesh<f64>, d: f64) -> DeformationState<f64> {
    DeformationState::interpolate(mesh, |x| {
        if x[0] < 1.5 {
            ([x[0], 1.0 - x[1], 0.0], [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
        } else {
            ([x[0] - 2.0, x[1], d], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        }
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn flat_state_has_no_potential() {
    let mesh = strip();
    let quad = PairQuadrature::full(&mesh, &exclusion_table(&mesh));
    let y = DeformationState::interpolate(&mesh, |x| ([x[0], x[1], 0.0], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]));
    let a = assemble(&quad, &y.coeffs, 5.0, TpRequest::ALL).unwrap();
    assert_eq!(a.energy, 0.0);
    assert!(a.gradient.iter().all(|&g| g == 0.0));
    assert!(a.force.iter().all(|f| f.iter().all(|&c| c == 0.0)));
}

#[test]
fn energy_matches_brute_force_double_sum() {
    let mesh = strip();
    let ex = exclusion_table(&mesh);
    let quad = PairQuadrature::full(&mesh, &ex);
    let y = rolled(&mesh, 0.8);
    let q = 5.0;
    let (e, density) = tp_energy(&quad, &y.coeffs, q).unwrap();
    let beta = mesh.lumped_weights();
    let mut oracle = 0.0;
    for z in 0..mesh.n_vertices() {
        let mut inner = 0.0;
        for t in ex.admissible(z) {
            for &zt in &mesh.triangles[t] {
                let d: Vec<f64> = (0..3).map(|c| y.position(z)[c] - y.position(zt)[c]).collect();
                inner += mesh.areas[t] / 3.0 * tp_pair_density([d[0], d[1], d[2]], y.normal(z), q);
            }
        }
        let dz = inner * 2f64.powf(-q) / q;
        assert!((dz - density[z]).abs() <= 1e-12 * dz.max(1e-300) + 1e-300);
        oracle += beta[z] * inner;
    }
    oracle *= 2f64.powf(-q) / q;
    assert!(e > 0.0 && (e - oracle).abs() <= 1e-12 * oracle, "{e} {oracle}");
}

#[test]
fn gradient_matches_finite_differences() {
    let mesh = build_halved_squares::<f64>((0.0, 1.0), (0.0, 1.0), 0.5, Diagonal::Rising).unwrap();
    assert_eq!(mesh.n_triangles(), 8);
    let quad = PairQuadrature::full(&mesh, &exclusion_table(&mesh));
    let base = DeformationState::interpolate(&mesh, |x| ([x[0], x[1], 0.0], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]));
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..20 {
        let y = noisy(&base.coeffs, 0.1, trial);
        let g = tp_gradient(&quad, &y, 5.0).unwrap();
        let dir: Vec<f64> = (0..y.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let an = dot(&g, &dir);
        let h = 1e-6;
        let shifted = |s: f64| -> Vec<f64> { y.iter().zip(&dir).map(|(a, b)| a + s * h * b).collect() };
        let fd = (tp_energy(&quad, &shifted(1.0), 5.0).unwrap().0 - tp_energy(&quad, &shifted(-1.0), 5.0).unwrap().0) / (2.0 * h);
        let rel = (an - fd).abs() / an.abs().max(1e-8);
        assert!(rel <= 1e-6, "trial {trial}: {an} vs {fd}");
    }
}

#[test]
fn euclidean_invariance() {
    let mesh = strip();
    let quad = PairQuadrature::full(&mesh, &exclusion_table(&mesh));
    let y = noisy(&rolled(&mesh, 0.8).coeffs, 0.01, 3);
    let (e0, _) = tp_energy(&quad, &y, 5.0).unwrap();
    let (s, c) = (0.6f64.sin(), 0.6f64.cos());
    let mut yq = y.clone();
    for n in 0..mesh.n_vertices() {
        for k in 0..3 {
            let (a, b) = (y[9 * n + k], y[9 * n + 3 + k]);
            yq[9 * n + k] = c * a - s * b + if k == 0 { 3.0 } else { 0.0 };
            yq[9 * n + 3 + k] = s * a + c * b;
            if k == 0 {
                yq[9 * n + 6] += -1.0;
            }
        }
    }
    let (e1, _) = tp_energy(&quad, &yq, 5.0).unwrap();
    assert!((e0 - e1).abs() <= 1e-10 * e0, "{e0} {e1}");
    let g = tp_gradient(&quad, &y, 5.0).unwrap();
    let gnorm = dot(&g, &g).sqrt();
    for c in 0..3 {
        let t: f64 = (0..mesh.n_vertices()).map(|n| g[9 * n + 3 * c]).sum();
        assert!(t.abs() <= 1e-10 * gnorm, "translation {c}: {t}");
    }
}

#[test]
fn potential_decreases_with_separation() {
    let mesh = two_patches();
    let quad = PairQuadrature::full(&mesh, &exclusion_table(&mesh));
    let values: Vec<f64> =
        [0.25, 0.5, 1.0, 1.5, 2.0].iter().map(|&d| tp_energy(&quad, &separated(&mesh, d).coeffs, 5.0).unwrap().0).collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
}

#[test]
fn pseudo_force_points_along_outward_normals() {
    let mesh = two_patches();
    let quad = PairQuadrature::full(&mesh, &exclusion_table(&mesh));
    let f = tp_force_field(&quad, &separated(&mesh, 0.5).coeffs, 5.0).unwrap();
    for (n, p) in mesh.vertices.iter().enumerate() {
        if p[0] < 1.5 {
            assert!(f[n][2] < 0.0);
        } else {
            assert!(f[n][2] > 0.0);
        }
    }
    // far field: magnitude decays like 1/d
    let ds = [8.0, 16.0, 32.0, 64.0];
    let mags: Vec<f64> = ds
        .iter()
        .map(|&d| {
            let f = tp_force_field(&quad, &separated(&mesh, d).coeffs, 5.0).unwrap();
            f.iter().map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()).sum::<f64>()
        })
        .collect();
    let xs: Vec<f64> = ds.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = mags.iter().map(|m| m.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope + 1.0).abs() <= 0.1, "slope {slope}");
}

#[test]
fn pair_counts_scale_with_outer_set() {
    let mesh = strip();
    let ex = exclusion_table(&mesh);
    let full = PairQuadrature::full(&mesh, &ex);
    let bd = PairQuadrature::boundary_domain(&mesh, &ex);
    let v = mesh.n_vertices() as f64;
    let b = mesh.boundary_vertex.iter().filter(|&&x| x).count() as f64;
    let (pf, pb) = (full.pair_count() as f64, bd.pair_count() as f64);
    assert!((pf / (v * v) - 1.0).abs() <= 0.2, "{pf} vs {}", v * v);
    assert!((pb / (b * v) - 1.0).abs() <= 0.2, "{pb} vs {}", b * v);
    let y = rolled(&mesh, 0.8);
    let a = assemble(&full, &y.coeffs, 5.0, TpRequest::ENERGY).unwrap();
    assert_eq!(a.pairs, full.pair_count());
}

#[test]
fn boundary_domain_variant() {
    let mesh = strip();
    let ex = exclusion_table(&mesh);
    let bd = PairQuadrature::boundary_domain(&mesh, &ex);
    let flat = DeformationState::interpolate(&mesh, |x| ([x[0], x[1], 0.0], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]));
    assert_eq!(tp_energy(&bd, &flat.coeffs, 5.0).unwrap().0, 0.0);
    let y = noisy(&rolled(&mesh, 0.8).coeffs, 0.01, 8);
    let (eb, _) = tp_energy(&bd, &y, 5.0).unwrap();
    let (ef, _) = tp_energy(&PairQuadrature::full(&mesh, &ex), &y, 5.0).unwrap();
    assert!(eb.is_finite() && eb > 0.0);
    let ratio = mesh.boundary_length() / mesh.area();
    assert!(eb <= ef * ratio * 10.0, "{eb} {ef}");
    let g = tp_gradient(&bd, &y, 5.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dir: Vec<f64> = (0..y.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let h = 1e-6;
    let e = |s: f64| tp_energy(&bd, &y.iter().zip(&dir).map(|(a, b)| a + s * h * b).collect::<Vec<_>>(), 5.0).unwrap().0;
    let fd = (e(1.0) - e(-1.0)) / (2.0 * h);
    let an = dot(&g, &dir);
    assert!((an - fd).abs() <= 1e-6 * an.abs(), "{an} {fd}");
}

#[test]
fn periodic_strip_potential_is_finite() {
    let mesh = build_periodic_strip::<f64>(8.0, (0.0, 1.0), 0.5, true, Diagonal::Rising).unwrap();
    let quad = PairQuadrature::full(&mesh, &exclusion_table(&mesh));
    let r = 8.0 / (2.0 * std::f64::consts::PI);
    // ring with a half twist of the cross section
    let y = DeformationState::interpolate(&mesh, |x| {
        let a = x[0] / r;
        let b = 0.5 * a;
        let s = x[1] - 0.5;
        let (ca, sa, cb, sb) = (a.cos(), a.sin(), b.cos(), b.sin());
        let radial = [ca, sa, 0.0];
        let w = [radial[0] * cb, radial[1] * cb, sb];
        let pos = [r * ca + s * w[0], r * sa + s * w[1], s * w[2]];
        let d1 = [-sa, ca, 0.0];
        (pos, [d1, w])
    });
    let (e, _) = tp_energy(&quad, &y.coeffs, 5.0).unwrap();
    assert!(e.is_finite() && e > 0.0);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let mesh = build_halved_squares::<f64>((0.0, 4.0), (0.0, 2.0), 0.125, Diagonal::Rising).unwrap();
    let quad = PairQuadrature::full(&mesh, &exclusion_table(&mesh));
    let y = noisy(&rolled(&mesh, 0.8).coeffs, 0.01, 5);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| assemble(&quad, &y, 5.0, TpRequest::ALL).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.energy.to_bits(), b.energy.to_bits());
    assert!(a.gradient.iter().zip(&b.gradient).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn hierarchical_quadrature_full_threshold_is_exact() {
    let coarse = build_halved_squares::<f64>((0.0, 4.0), (0.0, 1.0), 0.5, Diagonal::Rising).unwrap();
    let h = RefinementHierarchy::build(coarse, 3).unwrap();
    let mesh = h.finest().clone();
    let ex = exclusion_table(&mesh);
    let y = noisy(&rolled(&mesh, 0.8).coeffs, 0.005, 1);
    let full = assemble(&PairQuadrature::full(&mesh, &ex), &y, 5.0, TpRequest::GRADIENT).unwrap();
    let (quad, sel) = hierarchical_quadrature(&h, &ex, &y, 5.0, 1.0, 3).unwrap();
    assert_eq!(sel.rounds, 2);
    assert!(sel.triangles.iter().all(|&(l, _)| l == 2));
    let hier = assemble(&quad, &y, 5.0, TpRequest::GRADIENT).unwrap();
    assert_eq!(full.energy.to_bits(), hier.energy.to_bits());
    assert!(full.gradient.iter().zip(&hier.gradient).all(|(a, b)| a.to_bits() == b.to_bits()));

    let (quad, sel) = hierarchical_quadrature(&h, &ex, &y, 5.0, 0.9, 3).unwrap();
    assert!(sel.triangles.iter().any(|&(l, _)| l < 2));
    let approx = assemble(&quad, &y, 5.0, TpRequest::GRADIENT).unwrap();
    let diff: Vec<f64> = approx.gradient.iter().zip(&full.gradient).map(|(a, b)| a - b).collect();
    let rel = (dot(&diff, &diff) / dot(&full.gradient, &full.gradient)).sqrt();
    assert!(rel <= 0.05, "relative gradient deviation {rel}");
}

#[test]
fn flat_state_hierarchical_returns_coarse_set() {
    let coarse = build_halved_squares::<f64>((0.0, 2.0), (0.0, 1.0), 0.5, Diagonal::Rising).unwrap();
    let h = RefinementHierarchy::build(coarse, 2).unwrap();
    let mesh = h.finest().clone();
    let ex = exclusion_table(&mesh);
    let y = DeformationState::interpolate(&mesh, |x| ([x[0], x[1], 0.0], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]));
    let (quad, sel) = hierarchical_quadrature(&h, &ex, &y.coeffs, 5.0, 0.9, 2).unwrap();
    assert_eq!(sel.rounds, 0);
    assert_eq!(assemble(&quad, &y.coeffs, 5.0, TpRequest::ENERGY).unwrap().energy, 0.0);
}
