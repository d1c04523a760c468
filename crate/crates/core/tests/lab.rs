use std::path::{Path, PathBuf};

use clap::Parser;
use plateflow_core::energy::delta_iso;
use plateflow_core::flow::SolverKind;
use plateflow_core::geom::V3;
use plateflow_core::lab::cli::{resolve, thread_count, Cli, Command, THREADS_ENV};
use plateflow_core::lab::output::vtu_string;
use plateflow_core::lab::scenario::{RELAX_STEPS, STRIP_LOAD};
use plateflow_core::lab::{
    build_scenario, check_injectivity, read_csv, run_scenario, triangles_intersect, FrameFields, Overrides,
    RunOptions, RunSettings, ScenarioName, CSV_HEADER,
};
use plateflow_core::dkt::SdktOperator;
use plateflow_core::Error;
use proptest::prelude::*;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("plateflow-lab-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn scenario_catalog_parameters() {
    let s = build_scenario(ScenarioName::CompressedStrip, Some(2), &Overrides::default()).unwrap();
    assert_eq!(s.mesh.n_triangles(), 320);
    assert_eq!(s.flow.tau, 1.0 / 40.0);
    assert_eq!(s.tp.rho, 0.125);
    assert_eq!(s.tp.q, 5.0);
    assert_eq!(s.bending.force, [0.0, 0.0, STRIP_LOAD]);
    assert_eq!(s.flow.relax.map(|r| r.iterations), Some(RELAX_STEPS));

    let c = build_scenario(ScenarioName::CoilingBilayerShort, None, &Overrides::default()).unwrap();
    assert!((c.flow.tau - 0.0125).abs() < 1e-15);
    assert!((c.tp.rho - 0.000625).abs() < 1e-15);
    assert_eq!(c.tp.q, 8.0);
    assert_eq!(c.bending.alpha, 1.0);

    let r = build_scenario(ScenarioName::ClosedRibbon, None, &Overrides::default()).unwrap();
    assert_eq!(r.level, 3);
    assert_eq!(r.mesh.n_triangles(), 6400);
}

#[test]
fn overrides_take_priority() {
    let o = Overrides { tau: Some(0.01), beta: Some(1.5), q: Some(4.0), ..Default::default() };
    let s = build_scenario(ScenarioName::TwistedStrip, Some(2), &o).unwrap();
    assert_eq!(s.flow.tau, 0.01);
    assert!((s.tp.rho - 0.125f64.powf(1.5)).abs() < 1e-15);
    assert_eq!(s.tp.q, 4.0);
    let o = Overrides { rho: Some(0.3), beta: Some(1.5), relax_iters: Some(7), ..Default::default() };
    let s = build_scenario(ScenarioName::TwistedStrip, Some(2), &o).unwrap();
    assert_eq!(s.tp.rho, 0.3);
    assert_eq!(s.flow.relax.unwrap().iterations, 7);
}

#[test]
fn initial_states_satisfy_constraints() {
    for name in [
        ScenarioName::CompressedStrip,
        ScenarioName::TwistedStrip,
        ScenarioName::OshapeBilayer,
        ScenarioName::CoilingBilayerShort,
    ] {
        let s = build_scenario(name, Some(1), &Overrides::default()).unwrap();
        let d = delta_iso(&s.initial.coeffs, &s.mesh);
        assert!(d <= 1e-12, "{name}: {d}");
    }
    let s = build_scenario(ScenarioName::TwistedStrip, Some(2), &Overrides::default()).unwrap();
    let clamped = s.clamped_nodes();
    assert!(!clamped.is_empty());
    for &z in &clamped {
        let x = s.mesh.vertices[z];
        assert_eq!(x[0].abs(), 5.0);
        let p = s.initial.position(z);
        assert!((p[0] - 0.1 * x[0]).abs() < 1e-15);
    }
}

#[test]
fn unknown_scenario_is_rejected() {
    assert!(matches!("pancake".parse::<ScenarioName>(), Err(Error::UnknownScenario(_))));
    for name in ScenarioName::ALL {
        assert_eq!(name.as_str().parse::<ScenarioName>().unwrap(), name);
    }
}

#[test]
fn flat_state_is_injective_and_has_no_potential() {
    let s = build_scenario(ScenarioName::CompressedStrip, Some(1), &Overrides::default()).unwrap();
    let pos = s.initial.positions();
    assert!(check_injectivity(&s.mesh, &pos).is_empty());
    let sdkt = SdktOperator::assemble(&s.mesh).unwrap();
    let problem = s.problem(&sdkt, s.tp_setup().unwrap());
    let fields = FrameFields::evaluate(&problem, &s.initial).unwrap();
    assert!(fields.tp_density.iter().all(|&v| v == 0.0));
    let vtu = vtu_string(&s.mesh, &pos, &fields);
    for tag in ["tp_density", "f_tp", "iso_violation", "Float64"] {
        assert!(vtu.contains(tag), "missing {tag}");
    }
}

#[test]
fn folded_sheet_is_reported() {
    let s = build_scenario(ScenarioName::CompressedStrip, Some(1), &Overrides::default()).unwrap();
    // fold the strip flat onto itself around x1 = 0
    let pos: Vec<V3<f64>> = s
        .mesh
        .vertices
        .iter()
        .map(|x| if x[0] > 0.0 { [-x[0], x[1], 0.0] } else { [x[0], x[1], 0.0] })
        .collect();
    assert!(!check_injectivity(&s.mesh, &pos).is_empty());
}

#[test]
fn known_triangle_pairs() {
    let t = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    let piercing = [[0.2, 0.2, -1.0], [0.2, 0.2, 1.0], [0.5, 0.5, 1.0]];
    let above = [[0.2, 0.2, 0.5], [0.6, 0.2, 0.5], [0.2, 0.6, 0.7]];
    let coplanar_overlap = [[0.2, 0.2, 0.0], [1.2, 0.2, 0.0], [0.2, 1.2, 0.0]];
    let coplanar_apart = [[2.0, 2.0, 0.0], [3.0, 2.0, 0.0], [2.0, 3.0, 0.0]];
    assert!(triangles_intersect(t, piercing));
    assert!(!triangles_intersect(t, above));
    assert!(triangles_intersect(t, coplanar_overlap));
    assert!(!triangles_intersect(t, coplanar_apart));
}

fn point() -> impl Strategy<Value = V3<f64>> {
    prop::array::uniform3(-1.0f64..1.0)
}

proptest! {
    #[test]
    fn intersection_is_symmetric(a in prop::array::uniform3(point()), b in prop::array::uniform3(point())) {
        let hit = triangles_intersect(a, b);
        prop_assert_eq!(hit, triangles_intersect(b, a));
        prop_assert_eq!(hit, triangles_intersect([a[1], a[2], a[0]], [b[2], b[1], b[0]]));
    }
}

fn short_run(dir: &Path, record_every: usize, wall: bool) -> plateflow_core::lab::RunArtifacts {
    let o = Overrides { max_iter: Some(30), record_every: Some(record_every), ..Default::default() };
    let s = build_scenario(ScenarioName::CompressedStrip, Some(1), &o).unwrap();
    let mut opts = RunOptions::new();
    opts.out = Some(dir.to_path_buf());
    opts.vtu_every = Some(10);
    opts.record_wall_time = wall;
    run_scenario(&s, &opts).unwrap()
}

#[test]
fn csv_log_round_trips() {
    let dir = scratch("csv");
    let run = short_run(&dir, 7, true);
    let csv = run.csv.unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    let rows = read_csv(&csv).unwrap();
    let n = run.outcome.iterations;
    assert_eq!(rows.len(), n.div_ceil(7) + 1);
    for (a, b) in rows.iter().zip(&run.outcome.log.rows) {
        assert_eq!(a.k, b.k);
        assert_eq!(a.energy.to_bits(), b.energy.to_bits());
        assert_eq!(a.tp.to_bits(), b.tp.to_bits());
        assert_eq!(a.dt_norm.to_bits(), b.dt_norm.to_bits());
        assert_eq!(a.wall_ms.to_bits(), b.wall_ms.to_bits());
    }
    let pvd = std::fs::read_to_string(run.pvd.unwrap()).unwrap();
    assert_eq!(pvd.matches("<DataSet").count(), run.vtu.len());
    assert!(run.summary_file.unwrap().exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn logs_are_reproducible_without_wall_time() {
    let (d1, d2) = (scratch("rep1"), scratch("rep2"));
    let a = short_run(&d1, 5, false);
    let b = short_run(&d2, 5, false);
    let read = |p: Option<PathBuf>| std::fs::read(p.unwrap()).unwrap();
    assert_eq!(read(a.csv), read(b.csv));
    assert_eq!(read(a.vtu.last().cloned()), read(b.vtu.last().cloned()));
    let _ = std::fs::remove_dir_all(&d1);
    let _ = std::fs::remove_dir_all(&d2);
}

#[test]
fn config_file_parsing() {
    let text = "# strip run\nscenario = twisted_strip\nlevel=3\ntau = 0.01 # smaller\nsolver = nullspace\ntp-variant = hier\n";
    let s = RunSettings::parse_str(text, Path::new("x.cfg")).unwrap();
    assert_eq!(s.scenario.as_deref(), Some("twisted_strip"));
    assert_eq!(s.level, Some(3));
    assert_eq!(s.tau, Some(0.01));
    assert_eq!(s.tp_variant.as_deref(), Some("hier"));
    let err = RunSettings::parse_str("level = 2\ncolour = red\n", Path::new("x.cfg")).unwrap_err();
    assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
    assert!(RunSettings::parse_str("level = two\n", Path::new("x.cfg")).is_err());
}

#[test]
fn command_line_overrides_config() {
    let dir = scratch("cfg");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "scenario = twisted_strip\nlevel = 1\nq = 6\nsolver = nullspace\n").unwrap();
    let cli = Cli::try_parse_from([
        "plateflow",
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--level",
        "2",
        "--beta",
        "1.5",
        "--tp-variant",
        "hier",
    ])
    .unwrap();
    let Command::Run(args) = cli.command else { panic!("expected run") };
    let settings = args.settings().unwrap();
    let (name, level, o, opts) = resolve(&settings).unwrap();
    assert_eq!(name, ScenarioName::TwistedStrip);
    assert_eq!(level, Some(2));
    assert_eq!(o.q, Some(6.0));
    assert_eq!(o.beta, Some(1.5));
    assert_eq!(o.solver, Some(SolverKind::NullSpace));
    assert!(matches!(o.variant, Some(plateflow_core::tangent_point::TpVariant::Hierarchical { .. })));
    assert!(opts.out.is_none());
    assert!(Cli::try_parse_from(["plateflow", "run", "--solver"]).is_err());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn thread_count_falls_back_to_environment() {
    std::env::set_var(THREADS_ENV, "3");
    assert_eq!(thread_count(None).unwrap(), Some(3));
    assert_eq!(thread_count(Some(2)).unwrap(), Some(2));
    std::env::set_var(THREADS_ENV, "many");
    assert!(thread_count(None).is_err());
    std::env::remove_var(THREADS_ENV);
    assert_eq!(thread_count(None).unwrap(), None);
}
