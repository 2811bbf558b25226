//! Studies, configuration and file output around `gopt-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod study;

pub use config::{parse_config, parse_config_with_overrides, render, Command, Format, RunConfig};
pub use error::{Error, Result};
pub use study::{
    compare_domains, run_convergence_study, run_convergence_study_against, solve_reference,
    ConvergenceReport, DomainComparison, DomainSetup, Level, Problem, Reference,
};
