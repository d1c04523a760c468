//! Scenario catalog, command-line surface, output writers and the injectivity oracle.

pub mod check;
pub mod cli;
pub mod config;
pub mod injectivity;
pub mod output;
pub mod run;
pub mod scenario;

pub use check::{run_checks, CheckResult};
pub use cli::run_cli;
pub use config::RunSettings;
pub use injectivity::{check_injectivity, triangles_intersect};
pub use output::{read_csv, write_csv, FrameFields, VtuSeries, CSV_HEADER};
pub use run::{eoc_chain, incircle_radius, run_scenario, RunArtifacts, RunOptions, Summary};
pub use scenario::{build_scenario, Domain, Overrides, Scenario, ScenarioName};
