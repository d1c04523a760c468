//! Line-based `key = value` run configuration mirroring the command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Every setting a run accepts; `None` means "not given".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSettings {
    pub scenario: Option<String>,
    pub level: Option<u32>,
    pub tau: Option<f64>,
    pub rho: Option<f64>,
    pub beta: Option<f64>,
    pub q: Option<f64>,
    pub eps_stop: Option<f64>,
    pub max_iter: Option<usize>,
    pub relax_iters: Option<usize>,
    pub relax_threshold: Option<f64>,
    pub solver: Option<String>,
    pub tp_variant: Option<String>,
    pub sigma: Option<f64>,
    pub hier_levels: Option<usize>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub record_every: Option<usize>,
    pub vtu_every: Option<usize>,
    pub dual_check_every: Option<usize>,
}

impl RunSettings {
    /// Fills every unset field from `other`.
    pub fn or(mut self, other: RunSettings) -> RunSettings {
        macro_rules! fill {
            ($($f:ident),*) => { $( if self.$f.is_none() { self.$f = other.$f; } )* };
        }
        fill!(
            scenario, level, tau, rho, beta, q, eps_stop, max_iter, relax_iters, relax_threshold, solver, tp_variant, sigma,
            hier_levels, threads, out, record_every, vtu_every, dual_check_every
        );
        self
    }

    pub fn parse_str(text: &str, path: &Path) -> Result<RunSettings> {
        let mut s = RunSettings::default();
        for (i, raw) in text.lines().enumerate() {
            let err = |msg: String| Error::Config { path: path.to_path_buf(), line: i + 1, msg };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<Option<T>, String>
            where
                T::Err: std::fmt::Display,
            {
                v.parse::<T>().map(Some).map_err(|e| format!("`{v}`: {e}"))
            }
            let r: std::result::Result<(), String> = (|| {
                match key.as_str() {
                    "scenario" => s.scenario = Some(value.to_string()),
                    "level" => s.level = num(value)?,
                    "tau" => s.tau = num(value)?,
                    "rho" => s.rho = num(value)?,
                    "beta" => s.beta = num(value)?,
                    "q" => s.q = num(value)?,
                    "eps_stop" => s.eps_stop = num(value)?,
                    "max_iter" => s.max_iter = num(value)?,
                    "relax_iters" => s.relax_iters = num(value)?,
                    "relax_threshold" => s.relax_threshold = num(value)?,
                    "solver" => s.solver = Some(value.to_string()),
                    "tp_variant" => s.tp_variant = Some(value.to_string()),
                    "sigma" => s.sigma = num(value)?,
                    "hier_levels" => s.hier_levels = num(value)?,
                    "threads" => s.threads = num(value)?,
                    "out" => s.out = Some(PathBuf::from(value)),
                    "record_every" => s.record_every = num(value)?,
                    "vtu_every" => s.vtu_every = num(value)?,
                    "dual_check_every" => s.dual_check_every = num(value)?,
                    other => return Err(format!("unknown key `{other}`")),
                }
                Ok(())
            })();
            r.map_err(err)?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<RunSettings> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunSettings::parse_str(&text, path)
    }
}
