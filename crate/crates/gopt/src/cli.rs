//! Command dispatch for the `gopt` binary.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use gopt_core::{interpolate_quadratic, iteration_profile, Method};
use serde_json::json;

use crate::config::{parse_config_with_overrides, Command, Format, RunConfig, SCHEMA};
use crate::error::{Error, Result};
use crate::output::{Cell, Report, Table};
use crate::study::{compare_domains, run_convergence_study, solve_reference, ConvergenceReport, DomainComparison};

#[derive(Debug, Parser)]
#[command(name = "gopt", version, about = "Finite-difference pricing under volatility uncertainty", after_long_help = SCHEMA)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,

    /// TOML run configuration.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,

    /// Override a config key, e.g. `--set market.rate=0.05`. Repeatable.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    /// Output file (stdout when absent).
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(short, long, global = true)]
    pub format: Option<FormatArg>,

    #[arg(short, long, global = true)]
    pub method: Option<MethodArg>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum CliCommand {
    /// Price at the target spot on a single grid.
    Price,
    /// Refinement ladder against a fine implicit reference.
    Converge,
    /// Explicit schemes in S and ln S at their minimum stable step counts.
    CompareDomains,
    /// Picard sweeps per time step of an implicit run.
    Iterations,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    #[value(name = "explicit_x", alias = "explicit-x")]
    ExplicitX,
    #[value(name = "implicit_x", alias = "implicit-x")]
    ImplicitX,
    #[value(name = "explicit_s", alias = "explicit-s")]
    ExplicitS,
}

impl Cli {
    /// Folds the file, the `--set` overrides and the dedicated flags into one
    /// validated config. Dedicated flags win.
    pub fn resolve(&self) -> Result<RunConfig> {
        let source = match &self.config {
            Some(path) => fs::read_to_string(path).map_err(|source| Error::Read {
                path: path.clone(),
                source,
            })?,
            None => String::new(),
        };
        let mut overrides = self.overrides.clone();
        let command = match self.command {
            CliCommand::Price => "price",
            CliCommand::Converge => "converge",
            CliCommand::CompareDomains => "compare-domains",
            CliCommand::Iterations => "iterations",
        };
        overrides.push(format!("command=\"{command}\""));
        if let Some(p) = &self.output {
            overrides.push(format!("output.path={}", toml::Value::String(p.display().to_string())));
        }
        if let Some(f) = self.format {
            let f = match f {
                FormatArg::Csv => "csv",
                FormatArg::Json => "json",
            };
            overrides.push(format!("output.format=\"{f}\""));
        }
        if let Some(m) = self.method {
            let m = match m {
                MethodArg::ExplicitX => "explicit_x",
                MethodArg::ImplicitX => "implicit_x",
                MethodArg::ExplicitS => "explicit_s",
            };
            overrides.push(format!("scheme.method=\"{m}\""));
        }
        parse_config_with_overrides(&source, &overrides)
    }
}

/// Runs the configured command and returns its table.
pub fn run(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    match config.command {
        Command::Price => price(config),
        Command::Converge => converge(config),
        Command::CompareDomains => domains(config),
        Command::Iterations => iterations(config),
    }
}

/// Writes a report to the configured destination.
pub fn write_report(config: &RunConfig, report: &Report) -> Result<()> {
    let text = match config.output.format {
        Format::Csv => report.table.to_csv_string()?,
        Format::Json => report.to_json_string(),
    };
    match &config.output.path {
        Some(path) => fs::write(path, text).map_err(|e| Error::Write(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Write(e.to_string())),
    }
}

fn meta(config: &RunConfig, extra: serde_json::Value) -> serde_json::Value {
    let mut m = json!({
        "command": config.command,
        "config": config,
    });
    if let (Some(obj), serde_json::Value::Object(extra)) = (m.as_object_mut(), extra) {
        obj.extend(extra);
    }
    m
}

fn price(config: &RunConfig) -> Result<Report> {
    let (payoff, params) = (config.payoff_spec()?, config.market_params()?);
    let grid = config.grid_spec()?;
    let cfg = config.scheme_config()?.with_storage(gopt_core::LevelStorage::Final);
    let start = Instant::now();
    let sol = gopt_core::solve(&payoff, &params, &grid, &cfg)?;
    let cpu = start.elapsed().as_secs_f64();
    if let Some(v) = sol.mesh_violation {
        eprintln!("warning: mesh condition violated: {v}");
    }
    let value = interpolate_quadratic(sol.terminal(), &grid, config.target_coordinate())?;
    let picard = iteration_profile(&sol).ok();

    let mut t = Table::new(vec![
        "method",
        "timesteps",
        "nodes",
        "x_min",
        "x_max",
        "h",
        "dt",
        "spot",
        "value",
        "explicit_lower_ok",
        "upper_ok",
        "min_timesteps",
        "mean_picard_iters",
        "max_picard_iters",
        "cpu_seconds",
    ]);
    t.push(vec![
        Cell::Text(method_name(cfg.method).into()),
        Cell::Int(grid.steps),
        Cell::Int(grid.len()),
        Cell::Num(grid.x_min),
        Cell::Num(grid.x_max),
        Cell::Sci(grid.h()),
        Cell::Sci(grid.dt()),
        Cell::Num(config.target.spot),
        Cell::Num(value),
        Cell::Bool(sol.mesh.explicit_lower_ok),
        Cell::Bool(sol.mesh.upper_ok),
        Cell::Int(sol.mesh.min_timesteps),
        Cell::opt_fixed(picard.as_ref().map(|p| p.mean), 4),
        picard.as_ref().map_or(Cell::Empty, |p| Cell::Int(p.max)),
        Cell::Fixed(cpu, 6),
    ]);
    Ok(Report {
        meta: meta(config, json!({ "mesh": sol.mesh })),
        table: t,
    })
}

pub fn convergence_table(report: &ConvergenceReport) -> Table {
    let mut t = Table::new(vec![
        "timesteps",
        "nodes",
        "linf_error",
        "rate",
        "cpu_seconds",
        "value_at_target",
        "value_diff",
        "mean_picard_iters",
    ]);
    for l in &report.levels {
        t.push(vec![
            Cell::Int(l.timesteps),
            Cell::Int(l.nodes),
            Cell::Sci(l.linf_error),
            Cell::opt_fixed(l.rate, 4),
            Cell::Fixed(l.cpu_seconds, 6),
            Cell::Num(l.value_at_target),
            Cell::Sci(l.value_diff),
            Cell::opt_fixed(l.mean_picard_iters, 4),
        ]);
    }
    t
}

fn converge(config: &RunConfig) -> Result<Report> {
    let problem = config.problem()?;
    let report = run_convergence_study(
        &problem,
        &config.ladder()?,
        &config.scheme_config()?,
        config.reference_level(),
    )?;
    Ok(Report {
        meta: meta(config, json!({ "reference": report.reference })),
        table: convergence_table(&report),
    })
}

pub fn comparison_table(cmp: &DomainComparison) -> Table {
    let mut t = Table::new(vec!["intervals", "quantity", "without_log", "with_log"]);
    for row in &cmp.rows {
        let (a, b) = (&row.without_log, &row.with_log);
        let m = row.intervals;
        t.push(vec![Cell::Int(m), Cell::Text("spatial_step_size".into()), Cell::Sci(a.h), Cell::Sci(b.h)]);
        t.push(vec![
            Cell::Int(m),
            Cell::Text("minimum_time_step".into()),
            Cell::Int(a.min_timesteps),
            Cell::Int(b.min_timesteps),
        ]);
        t.push(vec![Cell::Int(m), Cell::Text("numerical_solution".into()), Cell::Num(a.value), Cell::Num(b.value)]);
        t.push(vec![
            Cell::Int(m),
            Cell::Text("relative_error".into()),
            Cell::Sci(a.relative_error),
            Cell::Sci(b.relative_error),
        ]);
        t.push(vec![
            Cell::Int(m),
            Cell::Text("cpu_time".into()),
            Cell::Fixed(a.cpu_seconds, 6),
            Cell::Fixed(b.cpu_seconds, 6),
        ]);
    }
    t
}

fn domains(config: &RunConfig) -> Result<Report> {
    let setup = config.domain_setup()?;
    let reference = solve_reference(&setup.log_problem(), config.reference_level())?;
    let cmp = compare_domains(&setup, &config.grid.m_list, &reference)?;
    let ratios: Vec<f64> = cmp.rows.iter().map(|r| r.timestep_ratio()).collect();
    Ok(Report {
        meta: meta(
            config,
            json!({ "reference_value": cmp.reference_value, "timestep_ratio": ratios }),
        ),
        table: comparison_table(&cmp),
    })
}

fn iterations(config: &RunConfig) -> Result<Report> {
    let (payoff, params) = (config.payoff_spec()?, config.market_params()?);
    let grid = config.grid_spec()?;
    let cfg = config.scheme_config()?.with_storage(gopt_core::LevelStorage::Final);
    let sol = gopt_core::solve(&payoff, &params, &grid, &cfg)?;
    let profile = iteration_profile(&sol)?;
    let mut t = Table::new(vec!["step", "iterations"]);
    for (n, &k) in profile.counts.iter().enumerate() {
        t.push(vec![Cell::Int(n + 1), Cell::Int(k)]);
    }
    Ok(Report {
        meta: meta(config, json!({ "mean": profile.mean, "max": profile.max })),
        table: t,
    })
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::ExplicitX => "explicit_x",
        Method::ImplicitX => "implicit_x",
        Method::ExplicitS => "explicit_s",
    }
}

/// Entry point of the binary; returns the process exit status.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let result = cli.resolve().and_then(|config| {
        let report = run(&config)?;
        write_report(&config, &report)
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn argument_table_is_consistent() {
        Cli::command().debug_assert();
    }
}
