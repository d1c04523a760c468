use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use super::injectivity::check_injectivity;
use super::output::{write_csv, FrameFields, VtuSeries};
use super::scenario::{build_scenario, Overrides, Scenario, ScenarioName};
use crate::dkt::{DeformationState, SdktOperator};
use crate::error::{Error, Result};
use crate::flow::{eoc, run_flow, FlowEvent, FlowOutcome};
use crate::geom::V3;
use crate::mesh::{vertex_permutation, RefinementHierarchy};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output directory; nothing is written when absent.
    pub out: Option<PathBuf>,
    /// Write a VTU frame for recorded rows with `k` a multiple of this (initial and final
    /// frames are always written).
    pub vtu_every: Option<usize>,
    pub record_wall_time: bool,
    pub dual_check_every: Option<usize>,
    /// Run the injectivity oracle on every recorded state.
    pub check_every_record: bool,
}

impl RunOptions {
    pub fn new() -> Self {
        RunOptions { record_wall_time: true, ..Default::default() }
    }
}

/// Final quantities of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub scenario: ScenarioName,
    pub level: u32,
    pub triangles: usize,
    pub iterations: usize,
    pub relax_iterations: usize,
    pub converged: bool,
    pub energy: f64,
    pub bending: f64,
    pub tp: f64,
    pub delta_iso: f64,
    pub intersections: usize,
    /// Recorded steps whose state failed the injectivity check (when checked).
    pub non_injective_records: usize,
    pub incircle_radius: Option<f64>,
    pub wall_seconds: f64,
}

impl Summary {
    pub fn injective(&self) -> bool {
        self.intersections == 0
    }

    /// Relaxation and flow steps together.
    pub fn total_iterations(&self) -> usize {
        self.iterations + self.relax_iterations
    }

    pub fn line(&self) -> String {
        format!(
            "{} k={} N={} E_h={:.6} TP_h={:.6} delta_iso={:.6} converged={} injective={}",
            self.scenario,
            self.level,
            self.total_iterations(),
            self.energy,
            self.tp,
            self.delta_iso,
            self.converged,
            self.injective()
        )
    }

    /// `key = value` record, same syntax as config files.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario = {}", self.scenario);
        let _ = writeln!(s, "level = {}", self.level);
        let _ = writeln!(s, "triangles = {}", self.triangles);
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "relax_iterations = {}", self.relax_iterations);
        let _ = writeln!(s, "converged = {}", self.converged);
        let _ = writeln!(s, "E_h = {:.16e}", self.energy);
        let _ = writeln!(s, "E_bend = {:.16e}", self.bending);
        let _ = writeln!(s, "TP_h = {:.16e}", self.tp);
        let _ = writeln!(s, "delta_iso = {:.16e}", self.delta_iso);
        let _ = writeln!(s, "injective = {}", self.injective());
        let _ = writeln!(s, "intersecting_pairs = {}", self.intersections);
        if let Some(r) = self.incircle_radius {
            let _ = writeln!(s, "# largest circle inscribed in the projected mid-line, enclosed by the curve");
            let _ = writeln!(s, "incircle_radius = {r:.16e}");
        }
        let _ = writeln!(s, "wall_seconds = {:.3}", self.wall_seconds);
        s
    }
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub summary: Summary,
    pub outcome: FlowOutcome,
    pub csv: Option<PathBuf>,
    pub pvd: Option<PathBuf>,
    pub vtu: Vec<PathBuf>,
    pub summary_file: Option<PathBuf>,
}

fn is_coiling(name: ScenarioName) -> bool {
    matches!(name, ScenarioName::CoilingBilayerShort | ScenarioName::CoilingBilayerLong)
}

/// Runs the flow for `scenario`, writes artifacts to `opts.out` and checks the final state.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<RunArtifacts> {
    let start = Instant::now();
    let sdkt = SdktOperator::assemble(&scenario.mesh)?;
    let problem = scenario.problem(&sdkt, scenario.tp_setup()?);
    let mut config = scenario.flow.clone();
    config.record_wall_time = opts.record_wall_time;
    config.dual_check_every = opts.dual_check_every;

    if let Some(dir) = &opts.out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut series = opts.out.as_ref().map(|d| VtuSeries::new(d, scenario.name.as_str()));
    let mut non_injective = 0;
    let mut last_written = None;
    let outcome = run_flow(&problem, scenario.initial.clone(), &config, |event| {
        let FlowEvent::Recorded { row, state } = event;
        if opts.check_every_record && !check_injectivity(&scenario.mesh, &state.positions()).is_empty() {
            non_injective += 1;
        }
        if let Some(series) = series.as_mut() {
            if row.k == 0 || opts.vtu_every.is_some_and(|n| n > 0 && row.k % n == 0) {
                let fields = FrameFields::evaluate(&problem, state)?;
                series.push(row.k, &scenario.mesh, &state.positions(), &fields)?;
                last_written = Some(row.k);
            }
        }
        Ok(())
    })?;

    let positions = outcome.state.positions();
    let intersections = check_injectivity(&scenario.mesh, &positions).len();
    let last = *outcome.log.rows.last().expect("log has an initial row");
    let incircle_radius = if is_coiling(scenario.name) { incircle_radius(scenario, &outcome.state) } else { None };
    let mut artifacts = RunArtifacts {
        summary: Summary {
            scenario: scenario.name,
            level: scenario.level,
            triangles: scenario.mesh.n_triangles(),
            iterations: outcome.iterations,
            relax_iterations: outcome.relax_iterations,
            converged: outcome.converged,
            energy: last.energy,
            bending: last.bending,
            tp: last.tp,
            delta_iso: last.delta_iso,
            intersections,
            non_injective_records: non_injective,
            incircle_radius,
            wall_seconds: start.elapsed().as_secs_f64(),
        },
        outcome,
        csv: None,
        pvd: None,
        vtu: Vec::new(),
        summary_file: None,
    };
    if let (Some(dir), Some(mut series)) = (&opts.out, series) {
        if last_written != Some(artifacts.outcome.iterations) {
            let fields = FrameFields::evaluate(&problem, &artifacts.outcome.state)?;
            series.push(artifacts.outcome.iterations, &scenario.mesh, &positions, &fields)?;
        }
        artifacts.pvd = Some(series.write_pvd()?);
        artifacts.vtu = series.frames.iter().map(|(_, p)| p.clone()).collect();
        let csv = dir.join(format!("{}.csv", scenario.name));
        write_csv(&csv, &artifacts.outcome.log.rows)?;
        artifacts.csv = Some(csv);
        let summary = dir.join(format!("{}_summary.txt", scenario.name));
        fs::write(&summary, artifacts.summary.to_record()).map_err(|e| Error::io(&summary, e))?;
        artifacts.summary_file = Some(summary);
    }
    Ok(artifacts)
}

/// Radius of the largest circle inscribed in the coiled mid-line, projected along `e₂`.
///
/// Candidate centers must be wound around by the curve at least once; `None` if no point is.
pub fn incircle_radius(scenario: &Scenario, y: &DeformationState<f64>) -> Option<f64> {
    let mut line: Vec<(f64, [f64; 2])> = scenario
        .mesh
        .vertices
        .iter()
        .enumerate()
        .filter(|(_, x)| (x[1] - 0.5).abs() < 1e-9)
        .map(|(z, x)| {
            let p = y.position(z);
            (x[0], [p[0], p[2]])
        })
        .collect();
    line.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pts: Vec<[f64; 2]> = line.into_iter().map(|(_, p)| p).collect();
    largest_enclosed_circle(&pts)
}

fn seg_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l2 = dx * dx + dy * dy;
    let t = if l2 > 0.0 { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0) } else { 0.0 };
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

fn winding_angle(p: [f64; 2], pts: &[[f64; 2]]) -> f64 {
    pts.windows(2)
        .map(|w| {
            let a = (w[0][1] - p[1]).atan2(w[0][0] - p[0]);
            let b = (w[1][1] - p[1]).atan2(w[1][0] - p[0]);
            let mut d = b - a;
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            d
        })
        .sum()
}

/// Largest empty circle centered at a point the polyline winds around at least once.
pub fn largest_enclosed_circle(pts: &[[f64; 2]]) -> Option<f64> {
    if pts.len() < 3 {
        return None;
    }
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for p in pts {
        for c in 0..2 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    let dist = |p: [f64; 2]| pts.windows(2).map(|w| seg_dist(p, w[0], w[1])).fold(f64::INFINITY, f64::min);
    let enclosed = |p: [f64; 2]| winding_angle(p, pts).abs() >= 2.0 * std::f64::consts::PI - 1e-6;
    let n = 120;
    let mut best: Option<([f64; 2], f64)> = None;
    for i in 0..=n {
        for j in 0..=n {
            let p = [
                lo[0] + (hi[0] - lo[0]) * i as f64 / n as f64,
                lo[1] + (hi[1] - lo[1]) * j as f64 / n as f64,
            ];
            let d = dist(p);
            if best.is_none_or(|(_, b)| d > b) && enclosed(p) {
                best = Some((p, d));
            }
        }
    }
    // local pattern search around the best grid point
    let (mut c, mut r) = best?;
    let mut step = (hi[0] - lo[0]).max(hi[1] - lo[1]) / n as f64;
    while step > 1e-6 * (1.0 + r) {
        let mut moved = false;
        for d in [[step, 0.0], [-step, 0.0], [0.0, step], [0.0, -step]] {
            let p = [c[0] + d[0], c[1] + d[1]];
            let dp = dist(p);
            if dp > r && enclosed(p) {
                (c, r, moved) = (p, dp, true);
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    Some(r)
}

/// Converged states on levels `level..level+2` and the resulting convergence order.
pub fn eoc_chain(
    name: ScenarioName,
    level: u32,
    overrides: &Overrides,
    opts: &RunOptions,
) -> Result<(f64, Vec<Summary>)> {
    let mut scenarios = Vec::with_capacity(3);
    let mut summaries = Vec::with_capacity(3);
    let mut states = Vec::with_capacity(3);
    for l in level..level + 3 {
        let sc = build_scenario(name, Some(l), overrides)?;
        let mut o = opts.clone();
        o.out = opts.out.as_ref().map(|d| d.join(format!("level{l}")));
        let run = run_scenario(&sc, &o)?;
        summaries.push(run.summary);
        states.push(run.outcome.state);
        scenarios.push(sc);
    }
    let coarse = scenarios[0].domain.mesh(scenarios[0].hhat)?;
    let hierarchy = RefinementHierarchy::build(coarse, 3)?;
    let mut positions: Vec<Vec<V3<f64>>> = Vec::with_capacity(3);
    for (i, (sc, y)) in scenarios.iter().zip(&states).enumerate() {
        let perm = vertex_permutation(&hierarchy.levels[i], &sc.mesh)?;
        positions.push(perm.iter().map(|&v| y.position(v)).collect());
    }
    let rate = eoc(&hierarchy, 0, [&positions[0], &positions[1], &positions[2]])?;
    if let Some(dir) = &opts.out {
        let path = dir.join(format!("{name}_eoc.txt"));
        fs::write(&path, format!("levels = {}..{}\neoc = {rate:.16e}\n", level, level + 2)).map_err(|e| Error::io(&path, e))?;
    }
    Ok((rate, summaries))
}
