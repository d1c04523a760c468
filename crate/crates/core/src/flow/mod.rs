//! Semi-implicit gradient flow constrained to the linearized nodal isometry condition.
//!
//! Each step solves `(1+τ)(d, w)_* = −(∇∇_h y, ∇∇_h w) + (f, w)_h + α v_bil(w) − ρ TP'_h[y; w]`
//! for `d` in the kernel of the linearized constraint and sets `y ← y + τ d`.

mod constraints;
mod eoc;
mod solver;

pub use constraints::{gradient_dof, local_kernel, ConstraintMatrix, NullSpaceBasis};
pub use eoc::{eoc, p1_l2_distance};
pub use solver::{FlowSolver, SolverKind, StepSolution};

use std::time::Instant;

use crate::dkt::{DeformationState, DofLayout, SdktOperator};
use crate::energy::{bending_energy, bending_rhs, BendingParams, EnergyReport};
use crate::error::{Error, Result};
use crate::mesh::{ExclusionTable, RefinementHierarchy, TriMesh};
use crate::tangent_point::{assemble, hierarchical_quadrature, PairQuadrature, TpParams, TpRequest};

/// Warm-start phase run with `ρ = 0` before the full flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxConfig {
    pub iterations: usize,
    /// Stop the phase once `‖d_t y‖_*` drops below this value.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub tau: f64,
    pub eps_stop: f64,
    pub max_iter: usize,
    pub relax: Option<RelaxConfig>,
    pub solver: SolverKind,
    pub record_every: usize,
    /// When false the wall-time column is written as zero, making logs reproducible.
    pub record_wall_time: bool,
    /// Solve every n-th step with both solvers and log their relative difference.
    pub dual_check_every: Option<usize>,
}

impl FlowConfig {
    pub fn new(tau: f64) -> Self {
        FlowConfig {
            tau,
            eps_stop: 1e-3,
            max_iter: 100_000,
            relax: None,
            solver: SolverKind::Saddle,
            record_every: 1,
            record_wall_time: true,
            dual_check_every: None,
        }
    }

    /// Default warm start: 100 steps or `‖d_t y‖_* < 10 ε_stop`.
    pub fn with_default_relaxation(mut self) -> Self {
        self.relax = Some(RelaxConfig { iterations: 100, threshold: 10.0 * self.eps_stop });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !(self.eps_stop > 0.0) || self.record_every == 0 {
            return Err(Error::Parameter(format!("invalid flow configuration: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogRow {
    pub k: usize,
    /// `E_h` including `ρ TP_h`.
    pub energy: f64,
    /// `E_h` without the self-avoidance term.
    pub bending: f64,
    /// Unweighted `TP_h`.
    pub tp: f64,
    pub delta_iso: f64,
    /// `‖d_t y^k‖_*`; zero for the initial row.
    pub dt_norm: f64,
    pub wall_ms: f64,
    /// `max |A^{k-1} d_t y^k|`.
    pub constraint_residual: f64,
    /// Relative `‖·‖_*` difference of the two solvers when checked at this step.
    pub dual_gap: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationLog {
    pub rows: Vec<LogRow>,
    /// `E_h[y^k]` after every step, starting with the initial state.
    pub energies: Vec<f64>,
    pub dual_gaps: Vec<(usize, f64)>,
    pub max_constraint_residual: f64,
}

/// How the inner tangent-point rule is obtained.
#[derive(Debug, Clone)]
pub enum TpSetup {
    /// No self-avoidance term.
    None,
    /// Fixed rule (full or boundary-domain).
    Fixed(PairQuadrature<f64>),
    /// Greedily coarsened rule rebuilt from the current state every step.
    Hierarchical { hierarchy: Box<RefinementHierarchy<f64>>, exclusion: ExclusionTable, sigma: f64, levels: usize },
}

/// Everything the flow needs apart from the state.
pub struct FlowProblem<'a> {
    pub mesh: &'a TriMesh<f64>,
    pub sdkt: &'a SdktOperator<f64>,
    pub layout: &'a DofLayout,
    pub bending: BendingParams<f64>,
    pub tp: TpParams,
    pub tp_setup: TpSetup,
}

/// Energy report and optional potential gradient at one state.
pub struct Evaluation {
    pub report: EnergyReport<f64>,
    pub tp: f64,
    pub tp_gradient: Option<Vec<f64>>,
}

impl FlowProblem<'_> {
    /// Inner rule for the state `y`, rebuilt for the hierarchical setup.
    pub fn quadrature(&self, y: &[f64]) -> Result<Option<PairQuadrature<f64>>> {
        Ok(match &self.tp_setup {
            TpSetup::None => None,
            TpSetup::Fixed(q) => Some(q.clone()),
            TpSetup::Hierarchical { hierarchy, exclusion, sigma, levels } => {
                Some(hierarchical_quadrature(hierarchy, exclusion, y, self.tp.q, *sigma, *levels)?.0)
            }
        })
    }

    /// Evaluates the energy; `rho` overrides the potential weight, `gradient` requests `∇TP_h`.
    pub fn evaluate(&self, y: &[f64], rho: f64, gradient: bool) -> Result<Evaluation> {
        let report = bending_energy(y, &self.bending, self.sdkt, self.mesh)?;
        let quad = match (&self.tp_setup, rho > 0.0) {
            (TpSetup::Fixed(q), _) => Some(std::borrow::Cow::Borrowed(q)),
            (TpSetup::Hierarchical { .. }, true) => self.quadrature(y)?.map(std::borrow::Cow::Owned),
            _ => None,
        };
        let Some(quad) = quad else {
            return Ok(Evaluation { report, tp: 0.0, tp_gradient: None });
        };
        let want = if gradient && rho > 0.0 { TpRequest::GRADIENT } else { TpRequest::ENERGY };
        let (tp, tp_gradient) = match assemble(&quad, y, self.tp.q, want) {
            Ok(a) => (a.energy, gradient.then_some(a.gradient).filter(|g| !g.is_empty())),
            // without the potential in the dynamics, a coincident pair only affects the report
            Err(Error::Intersection(..)) if rho == 0.0 => (f64::INFINITY, None),
            Err(e) => return Err(e),
        };
        Ok(Evaluation { report: report.with_tp(rho * tp), tp, tp_gradient })
    }

    /// `‖w‖_* = (wᵀ S w)^{1/2}`.
    pub fn star_norm(&self, w: &[f64]) -> f64 {
        let sw = self.sdkt.apply(w);
        sw.iter().zip(w).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }
}

/// Final state and diagnostics of [`run_flow`].
#[derive(Debug, Clone)]
pub struct FlowOutcome {
    pub state: DeformationState<f64>,
    pub log: IterationLog,
    /// Steps of the main phase.
    pub iterations: usize,
    pub relax_iterations: usize,
    pub converged: bool,
    pub final_report: EnergyReport<f64>,
    pub final_tp: f64,
}

/// Events passed to the observer of [`run_flow`].
pub enum FlowEvent<'a> {
    Recorded { row: &'a LogRow, state: &'a DeformationState<f64> },
}

/// One constrained step at `y` with potential weight `rho`.
pub fn flow_step(
    problem: &FlowProblem<'_>,
    solver: &mut FlowSolver,
    y: &[f64],
    eval: &Evaluation,
    rho: f64,
    kind: SolverKind,
    tau: f64,
) -> Result<StepSolution> {
    let b = bending_rhs(y, &problem.bending, problem.sdkt, rho, eval.tp_gradient.as_deref())?;
    solver.solve(kind, problem.sdkt, y, &b, tau)
}

/// Runs the optional relaxation phase and then the flow until `‖d_t y‖_* < ε_stop` or
/// `max_iter` steps.
pub fn run_flow(
    problem: &FlowProblem<'_>,
    initial: DeformationState<f64>,
    config: &FlowConfig,
    mut observer: impl FnMut(FlowEvent<'_>) -> Result<()>,
) -> Result<FlowOutcome> {
    config.validate()?;
    problem.tp.validate()?;
    if initial.coeffs.len() != problem.layout.n_dofs() {
        return Err(Error::LayoutMismatch { expected: problem.layout.n_dofs(), got: initial.coeffs.len() });
    }
    let mut solver = FlowSolver::new(problem.sdkt, problem.layout);
    let mut y = initial;
    let tau = config.tau;

    let mut relax_iterations = 0;
    if let Some(relax) = config.relax {
        for _ in 0..relax.iterations {
            let eval = problem.evaluate(&y.coeffs, 0.0, false)?;
            let step = flow_step(problem, &mut solver, &y.coeffs, &eval, 0.0, config.solver, tau)?;
            y.axpy(tau, &step.d);
            relax_iterations += 1;
            if problem.star_norm(&step.d) < relax.threshold {
                break;
            }
        }
    }

    let rho = problem.tp.rho;
    let start = Instant::now();
    let wall = || if config.record_wall_time { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    let mut log = IterationLog::default();
    let mut eval = problem.evaluate(&y.coeffs, rho, true)?;
    let row = |k: usize, ev: &Evaluation, dt: f64, res: f64, gap: Option<f64>, ms: f64| LogRow {
        k,
        energy: ev.report.total,
        bending: ev.report.total - ev.report.tp,
        tp: ev.tp,
        delta_iso: ev.report.delta_iso,
        dt_norm: dt,
        wall_ms: ms,
        constraint_residual: res,
        dual_gap: gap,
    };
    let r0 = row(0, &eval, 0.0, 0.0, None, wall());
    log.energies.push(r0.energy);
    observer(FlowEvent::Recorded { row: &r0, state: &y })?;
    log.rows.push(r0);

    let mut k = 0;
    let mut converged = false;
    while k < config.max_iter {
        k += 1;
        let b = bending_rhs(&y.coeffs, &problem.bending, problem.sdkt, rho, eval.tp_gradient.as_deref())?;
        let step = solver.solve(config.solver, problem.sdkt, &y.coeffs, &b, tau)?;
        let dt_norm = problem.star_norm(&step.d);
        let residual = ConstraintMatrix::build(&y.coeffs, problem.layout)?
            .apply(&step.d)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        log.max_constraint_residual = log.max_constraint_residual.max(residual);
        let gap = match config.dual_check_every {
            Some(n) if n > 0 && k % n == 0 => {
                let other = match config.solver {
                    SolverKind::Saddle => SolverKind::NullSpace,
                    SolverKind::NullSpace => SolverKind::Saddle,
                };
                let alt = solver.solve(other, problem.sdkt, &y.coeffs, &b, tau)?;
                let diff: Vec<f64> = step.d.iter().zip(&alt.d).map(|(a, b)| a - b).collect();
                let g = problem.star_norm(&diff) / dt_norm.max(f64::MIN_POSITIVE);
                log.dual_gaps.push((k, g));
                Some(g)
            }
            _ => None,
        };
        y.axpy(tau, &step.d);
        eval = problem.evaluate(&y.coeffs, rho, true)?;
        if !eval.report.total.is_finite() || y.coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { iteration: k });
        }
        log.energies.push(eval.report.total);
        converged = dt_norm < config.eps_stop;
        if k % config.record_every == 0 || converged || k == config.max_iter {
            let r = row(k, &eval, dt_norm, residual, gap, wall());
            observer(FlowEvent::Recorded { row: &r, state: &y })?;
            log.rows.push(r);
        }
        if converged {
            break;
        }
    }
    Ok(FlowOutcome {
        state: y,
        log,
        iterations: k,
        relax_iterations,
        converged,
        final_report: eval.report,
        final_tp: eval.tp,
    })
}
