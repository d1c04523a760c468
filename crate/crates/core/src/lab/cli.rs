//! `plateflow run|check|eoc`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::check::run_checks;
use super::config::RunSettings;
use super::run::{eoc_chain, run_scenario, RunOptions};
use super::scenario::{build_scenario, Overrides, ScenarioName};
use crate::error::{Error, Result};
use crate::flow::SolverKind;
use crate::tangent_point::TpVariant;

/// Environment variable consulted when `--threads` is not given.
pub const THREADS_ENV: &str = "PLATEFLOW_THREADS";

#[derive(Debug, Parser)]
#[command(name = "plateflow", version, about = "Self-avoiding isometric bending of Kirchhoff plates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the gradient flow for one scenario.
    Run(RunArgs),
    /// Finite-difference and identity self-tests.
    Check {
        #[arg(value_enum, default_value_t = CheckSuite::Gradients)]
        suite: CheckSuite,
    },
    /// Convergence order from runs on three nested levels.
    Eoc {
        #[command(flatten)]
        args: RunArgs,
        /// Use the fine level chains (k = 3, 4, 5); takes hours.
        #[arg(long)]
        long: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckSuite {
    Gradients,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Full,
    Boundary,
    Hier,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// compressed_strip, twisted_strip, closed_ribbon, trefoil, oshape_bilayer,
    /// coiling_bilayer_short or coiling_bilayer_long
    #[arg(long)]
    pub scenario: Option<String>,
    /// Refinement level k, ĥ = 2^-k.
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Tangent-point weight; overrides --beta.
    #[arg(long)]
    pub rho: Option<f64>,
    /// ρ = (ĥ/2)^β.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub eps_stop: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Relaxation steps at ρ = 0 before the flow (0 disables).
    #[arg(long)]
    pub relax_iters: Option<usize>,
    /// End the relaxation once ‖d_t y‖_* drops below this (0 runs all steps).
    #[arg(long)]
    pub relax_threshold: Option<f64>,
    #[arg(long, value_parser = ["saddle", "nullspace"])]
    pub solver: Option<String>,
    #[arg(long, value_enum)]
    pub tp_variant: Option<VariantArg>,
    /// Threshold of the hierarchical quadrature.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub hier_levels: Option<usize>,
    /// Worker threads (falls back to PLATEFLOW_THREADS).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key = value file with the same settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Log every N-th step.
    #[arg(long)]
    pub record_every: Option<usize>,
    /// Write a VTU frame every N-th step.
    #[arg(long)]
    pub vtu_every: Option<usize>,
    /// Compare both solvers every N-th step.
    #[arg(long)]
    pub dual_check_every: Option<usize>,
    /// Write zero wall times so that logs are reproducible.
    #[arg(long)]
    pub no_wall_time: bool,
}

impl RunArgs {
    pub fn settings(&self) -> Result<RunSettings> {
        let cli = RunSettings {
            scenario: self.scenario.clone(),
            level: self.level,
            tau: self.tau,
            rho: self.rho,
            beta: self.beta,
            q: self.q,
            eps_stop: self.eps_stop,
            max_iter: self.max_iter,
            relax_iters: self.relax_iters,
            relax_threshold: self.relax_threshold,
            solver: self.solver.clone(),
            tp_variant: self.tp_variant.map(|v| {
                match v {
                    VariantArg::Full => "full",
                    VariantArg::Boundary => "boundary",
                    VariantArg::Hier => "hier",
                }
                .to_string()
            }),
            sigma: self.sigma,
            hier_levels: self.hier_levels,
            threads: self.threads,
            out: self.out.clone(),
            record_every: self.record_every,
            vtu_every: self.vtu_every,
            dual_check_every: self.dual_check_every,
        };
        Ok(match &self.config {
            Some(path) => cli.or(RunSettings::load(path)?),
            None => cli,
        })
    }
}

/// Scenario, level, overrides and options described by `s`.
pub fn resolve(s: &RunSettings) -> Result<(ScenarioName, Option<u32>, Overrides, RunOptions)> {
    let name: ScenarioName = s
        .scenario
        .as_deref()
        .ok_or_else(|| Error::Parameter("--scenario is required".into()))?
        .parse()?;
    let variant = match s.tp_variant.as_deref() {
        None => None,
        Some("full") => Some(TpVariant::Full),
        Some("boundary") => Some(TpVariant::BoundaryDomain),
        Some("hier") => Some(TpVariant::Hierarchical { sigma: s.sigma.unwrap_or(0.9), levels: s.hier_levels.unwrap_or(3) }),
        Some(other) => return Err(Error::Parameter(format!("unknown tangent-point variant `{other}`"))),
    };
    let overrides = Overrides {
        tau: s.tau,
        rho: s.rho,
        beta: s.beta,
        q: s.q,
        eps_stop: s.eps_stop,
        max_iter: s.max_iter,
        relax_iters: s.relax_iters,
        relax_threshold: s.relax_threshold,
        solver: s.solver.as_deref().map(str::parse::<SolverKind>).transpose()?,
        variant,
        record_every: s.record_every,
    };
    let mut opts = RunOptions::new();
    opts.out = s.out.clone();
    opts.vtu_every = Some(s.vtu_every.unwrap_or(100));
    opts.dual_check_every = s.dual_check_every;
    Ok((name, s.level, overrides, opts))
}

/// `--threads`, then `PLATEFLOW_THREADS`, then all cores.
pub fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| Error::Parameter(format!("{THREADS_ENV}=`{v}`: {e}"))),
        Err(_) => Ok(None),
    }
}

fn init_threads(n: Option<usize>) -> Result<()> {
    faer::set_global_parallelism(faer::Par::Seq);
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::Parameter("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(args) => {
            let s = args.settings()?;
            init_threads(thread_count(s.threads)?)?;
            let (name, level, overrides, mut opts) = resolve(&s)?;
            opts.record_wall_time = !args.no_wall_time;
            let scenario = build_scenario(name, level, &overrides)?;
            let run = run_scenario(&scenario, &opts)?;
            println!("{}", run.summary.line());
            if let Some(r) = run.summary.incircle_radius {
                println!("incircle radius {r:.4}");
            }
            if let Some(dir) = &opts.out {
                println!("artifacts in {}", dir.display());
            }
            Ok(true)
        }
        Command::Check { suite } => {
            let mut ok = true;
            let checks = run_checks()?;
            let n = if suite == CheckSuite::All { checks.len() } else { 2 };
            for c in checks.into_iter().take(n) {
                let verdict = if c.passed() { "PASS" } else { "FAIL" };
                println!("{verdict} {}: error {:.3e} (tolerance {:.0e})", c.name, c.error, c.tolerance);
                ok &= c.passed();
            }
            Ok(ok)
        }
        Command::Eoc { args, long } => {
            let s = args.settings()?;
            init_threads(thread_count(s.threads)?)?;
            let (name, level, overrides, mut opts) = resolve(&s)?;
            opts.record_wall_time = !args.no_wall_time;
            let level = if long { level.unwrap_or(3) } else { level.unwrap_or(1) };
            let (rate, summaries) = eoc_chain(name, level, &overrides, &opts)?;
            for s in &summaries {
                println!("{}", s.line());
            }
            println!("EOC {rate:.4} (levels {}..{})", level, level + 2);
            Ok(true)
        }
    }
}

/// Parses `argv`, runs the command and maps the outcome to an exit code.
pub fn run_cli<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
