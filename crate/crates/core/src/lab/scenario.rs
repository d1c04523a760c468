use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::dkt::{DeformationState, DofLayout, SdktOperator};
use crate::energy::BendingParams;
use crate::error::{Error, Result};
use crate::flow::{FlowConfig, FlowProblem, RelaxConfig, SolverKind, TpSetup};
use crate::geom::{P2, V3};
use crate::mesh::{
    build_halved_squares, build_oshape, build_periodic_strip, exclusion_table, Diagonal, RefinementHierarchy, TriMesh,
};
use crate::tangent_point::{PairQuadrature, TpParams, TpVariant};

/// Compression factor of the strip examples.
pub const COMPRESSION: f64 = 0.1;
/// Vertical load of the strip examples, breaking the up/down symmetry.
pub const STRIP_LOAD: f64 = 1e-6;
/// Number of half twists of the closed ribbon.
pub const RIBBON_TWISTS: usize = 5;
/// Steps of the `ρ = 0` warm start used by the strip and closed-loop scenarios.
pub const RELAX_STEPS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioName {
    CompressedStrip,
    TwistedStrip,
    ClosedRibbon,
    Trefoil,
    OshapeBilayer,
    CoilingBilayerShort,
    CoilingBilayerLong,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 7] = [
        ScenarioName::CompressedStrip,
        ScenarioName::TwistedStrip,
        ScenarioName::ClosedRibbon,
        ScenarioName::Trefoil,
        ScenarioName::OshapeBilayer,
        ScenarioName::CoilingBilayerShort,
        ScenarioName::CoilingBilayerLong,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::CompressedStrip => "compressed_strip",
            ScenarioName::TwistedStrip => "twisted_strip",
            ScenarioName::ClosedRibbon => "closed_ribbon",
            ScenarioName::Trefoil => "trefoil",
            ScenarioName::OshapeBilayer => "oshape_bilayer",
            ScenarioName::CoilingBilayerShort => "coiling_bilayer_short",
            ScenarioName::CoilingBilayerLong => "coiling_bilayer_long",
        }
    }

    /// Refinement level used when none is given.
    pub fn default_level(self) -> u32 {
        match self {
            ScenarioName::ClosedRibbon | ScenarioName::OshapeBilayer => 3,
            ScenarioName::Trefoil => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

/// Reference domain of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Rect { x: (f64, f64), y: (f64, f64) },
    OShape,
    /// `(0, length) × (0, 1)` with glued short ends.
    Closed { length: f64, flip: bool },
}

impl Domain {
    pub fn mesh(&self, hhat: f64) -> Result<TriMesh<f64>> {
        match *self {
            Domain::Rect { x, y } => build_halved_squares(x, y, hhat, Diagonal::Rising),
            Domain::OShape => build_oshape(hhat),
            Domain::Closed { length, flip } => build_periodic_strip(length, (0.0, 1.0), hhat, flip, Diagonal::Rising),
        }
    }
}

/// Parameter overrides applied on top of a scenario's defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub tau: Option<f64>,
    pub rho: Option<f64>,
    /// `ρ = (ĥ/2)^β`; ignored when `rho` is set.
    pub beta: Option<f64>,
    pub q: Option<f64>,
    pub eps_stop: Option<f64>,
    pub max_iter: Option<usize>,
    pub relax_iters: Option<usize>,
    pub relax_threshold: Option<f64>,
    pub solver: Option<SolverKind>,
    pub variant: Option<TpVariant>,
    pub record_every: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: ScenarioName,
    pub level: u32,
    pub hhat: f64,
    pub domain: Domain,
    pub mesh: TriMesh<f64>,
    pub layout: DofLayout,
    pub initial: DeformationState<f64>,
    pub bending: BendingParams<f64>,
    pub tp: TpParams,
    pub flow: FlowConfig,
}

type Init = Box<dyn Fn(P2<f64>) -> (V3<f64>, [V3<f64>; 2])>;

fn identity_frame() -> [V3<f64>; 2] {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
}

fn twisted_strip_data(x: P2<f64>) -> (V3<f64>, [V3<f64>; 2]) {
    // ruled surface rotating the cross-section by π along the strip, with the unit frame
    // (e₁, rotated e₂) as gradient dofs
    let theta = PI * (x[0] + 5.0) / 10.0;
    let (s, c) = theta.sin_cos();
    let r = x[1] - 0.5;
    ([COMPRESSION * x[0], 0.5 + r * c, r * s], [[1.0, 0.0, 0.0], [0.0, c, s]])
}

fn twisted_strip_boundary(x: P2<f64>) -> (V3<f64>, [V3<f64>; 2]) {
    let sign = if x[0] > 0.0 { 1.0 } else { -1.0 };
    let y2 = if sign > 0.0 { 1.0 - x[1] } else { x[1] };
    ([COMPRESSION * x[0], y2, 0.0], [[1.0, 0.0, 0.0], [0.0, -sign, 0.0]])
}

fn ribbon_data(x: P2<f64>) -> (V3<f64>, [V3<f64>; 2]) {
    let a = 2.0 * PI * x[0] / 50.0;
    let b = RIBBON_TWISTS as f64 * PI * x[0] / 50.0;
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let y = [6.0 * ca + sb * ca, 6.0 * sa + sb * sa, (x[1] - 0.5) * cb];
    (y, [[-sa, ca, 0.0], [ca * sb, sa * sb, cb]])
}

/// Trefoil centerline on `[0, 50]` and its derivative.
pub fn trefoil_curve(t: f64) -> (V3<f64>, V3<f64>) {
    let (a, b) = (6.0 * PI / 50.0, 4.0 * PI / 50.0);
    let (sa, ca) = (a * t).sin_cos();
    let (sb, cb) = (b * t).sin_cos();
    let u = [(3.0 + ca) * cb, (3.0 + ca) * sb, sa];
    let du = [-a * sa * cb - b * (3.0 + ca) * sb, -a * sa * sb + b * (3.0 + ca) * cb, a * ca];
    (u, du)
}

fn trefoil_data(x: P2<f64>) -> (V3<f64>, [V3<f64>; 2]) {
    let (u, du) = trefoil_curve(x[0]);
    // unit first column keeps the nodal frame orthonormal
    let eta = (du[0] * du[0] + du[1] * du[1]).powf(-0.5);
    ([u[0], u[1], u[2] + x[1]], [[eta * du[0], eta * du[1], 0.0], [0.0, 0.0, 1.0]])
}

fn clamped_data(x: P2<f64>) -> (V3<f64>, [V3<f64>; 2]) {
    ([x[0], x[1], 0.0], identity_frame())
}

fn compressed_data(x: P2<f64>) -> (V3<f64>, [V3<f64>; 2]) {
    ([COMPRESSION * x[0], x[1], 0.0], identity_frame())
}

fn on(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

fn within(a: f64, lo: f64, hi: f64) -> bool {
    a > lo - 1e-9 && a < hi + 1e-9
}

/// Builds a scenario at refinement level `level` (`ĥ = 2^{-level}`).
pub fn build_scenario(name: ScenarioName, level: Option<u32>, overrides: &Overrides) -> Result<Scenario> {
    let level = level.unwrap_or(name.default_level());
    if level > 12 {
        return Err(Error::Parameter(format!("refinement level {level} too large")));
    }
    let hhat = 0.5f64.powi(level as i32);
    let strip = Domain::Rect { x: (-5.0, 5.0), y: (0.0, 1.0) };
    let ends = |p: P2<f64>| on(p[0].abs(), 5.0);
    let zero = [0.0; 3];
    let load = [0.0, 0.0, STRIP_LOAD];
    // (domain, Dirichlet predicate, initial, Dirichlet data, model, force, tau, rho, q, relax, pin)
    type Dirichlet = Option<Box<dyn Fn(P2<f64>) -> bool>>;
    let (domain, dirichlet, init, data, alpha, force, tau, rho, q, relax): (
        Domain,
        Dirichlet,
        Init,
        Init,
        Option<f64>,
        V3<f64>,
        f64,
        f64,
        f64,
        bool,
    ) = match name {
        ScenarioName::CompressedStrip => (
            strip,
            Some(Box::new(ends)),
            Box::new(compressed_data),
            Box::new(compressed_data),
            None,
            load,
            hhat / 10.0,
            hhat / 2.0,
            5.0,
            true,
        ),
        ScenarioName::TwistedStrip => (
            strip,
            Some(Box::new(ends)),
            Box::new(twisted_strip_data),
            Box::new(twisted_strip_boundary),
            None,
            load,
            hhat / 10.0,
            hhat / 2.0,
            5.0,
            true,
        ),
        ScenarioName::ClosedRibbon => (
            Domain::Closed { length: 50.0, flip: RIBBON_TWISTS % 2 == 1 },
            None,
            Box::new(ribbon_data),
            Box::new(ribbon_data),
            None,
            zero,
            hhat / 10.0,
            hhat,
            5.0,
            true,
        ),
        ScenarioName::Trefoil => (
            Domain::Closed { length: 50.0, flip: false },
            None,
            Box::new(trefoil_data),
            Box::new(trefoil_data),
            None,
            zero,
            hhat / 50.0,
            hhat / 2.0,
            5.0,
            true,
        ),
        ScenarioName::OshapeBilayer => (
            Domain::OShape,
            Some(Box::new(|p: P2<f64>| {
                (on(p[0], -5.0) && within(p[1], -2.0, -1.0)) || (on(p[1], -2.0) && within(p[0], -5.0, -4.0))
            })),
            Box::new(clamped_data),
            Box::new(clamped_data),
            Some(0.75),
            zero,
            hhat,
            hhat,
            5.0,
            false,
        ),
        ScenarioName::CoilingBilayerShort | ScenarioName::CoilingBilayerLong => {
            let len = if name == ScenarioName::CoilingBilayerShort { 10.0 } else { 20.0 };
            (
                Domain::Rect { x: (0.0, len), y: (0.0, 1.0) },
                Some(Box::new(|p: P2<f64>| on(p[0], 0.0))),
                Box::new(clamped_data),
                Box::new(clamped_data),
                Some(1.0),
                zero,
                hhat / 20.0,
                hhat / 400.0,
                8.0,
                false,
            )
        }
    };

    let mesh = domain.mesh(hhat)?;
    let clamped: Vec<usize> = match &dirichlet {
        Some(pred) => mesh.vertices_where(pred),
        None => Vec::new(),
    };
    let mut layout = DofLayout::new(mesh.n_vertices()).with_clamped(&clamped);
    if clamped.is_empty() {
        // rigid translations are the only zero modes left without Dirichlet data
        layout = layout.with_pinned_position(0);
    }
    let mut initial = DeformationState::interpolate(&mesh, |x| init(x));
    for &z in &clamped {
        let (y, g) = data(mesh.vertices[z]);
        initial.set_position(z, y);
        initial.set_gradient(z, g);
    }

    let area = mesh.area();
    let bending = match alpha {
        Some(a) => BendingParams::bilayer(a, force, area),
        None => BendingParams::single(force, area),
    };
    let rho = match (overrides.rho, overrides.beta) {
        (Some(r), _) => r,
        (None, Some(beta)) => (hhat / 2.0).powf(beta),
        (None, None) => rho,
    };
    let mut tp = TpParams::new(overrides.q.unwrap_or(q), rho);
    tp.variant = overrides.variant.unwrap_or(TpVariant::Full);
    tp.validate()?;

    let mut flow = FlowConfig::new(overrides.tau.unwrap_or(tau));
    if let Some(e) = overrides.eps_stop {
        flow.eps_stop = e;
    }
    if let Some(m) = overrides.max_iter {
        flow.max_iter = m;
    }
    if relax {
        flow.relax = Some(RelaxConfig { iterations: RELAX_STEPS, threshold: 0.0 });
    }
    if let Some(n) = overrides.relax_iters {
        flow.relax = (n > 0).then_some(RelaxConfig { iterations: n, threshold: 10.0 * flow.eps_stop });
    }
    if let (Some(t), Some(relax)) = (overrides.relax_threshold, flow.relax.as_mut()) {
        relax.threshold = t;
    }
    if let Some(s) = overrides.solver {
        flow.solver = s;
    }
    if let Some(r) = overrides.record_every {
        flow.record_every = r;
    }
    flow.validate()?;
    Ok(Scenario { name, level, hhat, domain, mesh, layout, initial, bending, tp, flow })
}

impl Scenario {
    /// Indices of clamped vertices.
    pub fn clamped_nodes(&self) -> Vec<usize> {
        (0..self.mesh.n_vertices()).filter(|&z| self.layout.is_clamped(z)).collect()
    }

    /// Inner quadrature matching the configured variant.
    pub fn tp_setup(&self) -> Result<TpSetup> {
        let exclusion = exclusion_table(&self.mesh);
        Ok(match self.tp.variant {
            TpVariant::Full => TpSetup::Fixed(PairQuadrature::full(&self.mesh, &exclusion)),
            TpVariant::BoundaryDomain => TpSetup::Fixed(PairQuadrature::boundary_domain(&self.mesh, &exclusion)),
            TpVariant::Hierarchical { sigma, levels } => {
                let coarse_hhat = self.hhat * 2f64.powi(levels as i32 - 1);
                let coarse = self.domain.mesh(coarse_hhat)?;
                let hierarchy = RefinementHierarchy::build_onto(coarse, levels, &self.mesh)?;
                TpSetup::Hierarchical { hierarchy: Box::new(hierarchy), exclusion, sigma, levels }
            }
        })
    }

    /// Borrows the pieces of the scenario as a flow problem.
    pub fn problem<'a>(&'a self, sdkt: &'a SdktOperator<f64>, tp_setup: TpSetup) -> FlowProblem<'a> {
        FlowProblem {
            mesh: &self.mesh,
            sdkt,
            layout: &self.layout,
            bending: self.bending.clone(),
            tp: self.tp,
            tp_setup,
        }
    }
}
