//! Grid-refinement studies and the price-domain vs log-domain comparison.

use std::time::Instant;

use gopt_core::{
    build_grid, check_explicit_mesh, check_s_domain_mesh, interpolate_quadratic, iteration_profile,
    linf_error, observed_rate, GridSpec, LevelStorage, MarketParams, Method, PayoffSpec,
    SchemeConfig, Solution,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One grid of a refinement ladder, counted in intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub steps: usize,
    pub intervals: usize,
}

impl Level {
    pub const fn new(steps: usize, intervals: usize) -> Self {
        Level { steps, intervals }
    }
}

/// Payoff, market and log-domain truncation shared by every level of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub payoff: PayoffSpec,
    pub params: MarketParams,
    pub x_min: f64,
    pub x_max: f64,
    /// Evaluation point in the coordinates of the solved domain.
    pub target: f64,
}

impl Problem {
    fn grid(&self, level: Level) -> Result<GridSpec> {
        Ok(build_grid(
            self.x_min,
            self.x_max,
            level.intervals,
            level.steps,
            self.params.maturity,
        )?)
    }
}

/// A fine implicit solution used as the exact answer.
#[derive(Debug, Clone)]
pub struct Reference {
    pub level: Level,
    pub value: f64,
    pub mean_picard_iters: f64,
    pub solution: Solution,
}

pub fn solve_reference(problem: &Problem, level: Level) -> Result<Reference> {
    let cfg = SchemeConfig::new(Method::ImplicitX).with_storage(LevelStorage::Final);
    let grid = problem.grid(level).map_err(as_reference)?;
    let solution =
        gopt_core::solve(&problem.payoff, &problem.params, &grid, &cfg).map_err(Error::Reference)?;
    let value = interpolate_quadratic(solution.terminal(), &solution.grid, problem.target)
        .map_err(Error::Reference)?;
    let mean_picard_iters = iteration_profile(&solution).map_err(Error::Reference)?.mean;
    Ok(Reference {
        level,
        value,
        mean_picard_iters,
        solution,
    })
}

fn as_reference(e: Error) -> Error {
    match e {
        Error::Numerics(e) => Error::Reference(e),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub timesteps: usize,
    /// Spatial nodes, i.e. intervals + 1.
    pub nodes: usize,
    pub linf_error: f64,
    pub rate: Option<f64>,
    pub cpu_seconds: f64,
    pub value_at_target: f64,
    pub value_diff: f64,
    pub mean_picard_iters: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub value: f64,
    pub timesteps: usize,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub method: Method,
    pub levels: Vec<LevelRecord>,
    pub reference: ReferenceRecord,
}

impl ConvergenceReport {
    pub fn rates(&self) -> Vec<f64> {
        self.levels.iter().filter_map(|l| l.rate).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.linf_error).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.value_at_target).collect()
    }
}

/// Solves the reference on `reference` and runs the ladder against it.
pub fn run_convergence_study(
    problem: &Problem,
    ladder: &[Level],
    cfg: &SchemeConfig,
    reference: Level,
) -> Result<ConvergenceReport> {
    check_ladder(ladder, reference)?;
    let reference = solve_reference(problem, reference)?;
    run_convergence_study_against(problem, ladder, cfg, &reference)
}

/// Runs the ladder against an already solved reference.
pub fn run_convergence_study_against(
    problem: &Problem,
    ladder: &[Level],
    cfg: &SchemeConfig,
    reference: &Reference,
) -> Result<ConvergenceReport> {
    check_ladder(ladder, reference.level)?;
    if cfg.method != Method::ExplicitX && cfg.method != Method::ImplicitX {
        return Err(Error::Ladder(
            "convergence studies run in the log domain (explicit_x or implicit_x)".into(),
        ));
    }
    let cfg = cfg.with_storage(LevelStorage::Final);
    let mut levels: Vec<LevelRecord> = Vec::with_capacity(ladder.len());
    for (k, &level) in ladder.iter().enumerate() {
        let at_level = |source| Error::Level {
            level: k,
            steps: level.steps,
            intervals: level.intervals,
            source,
        };
        let grid = problem.grid(level).map_err(|e| match e {
            Error::Numerics(e) => at_level(e),
            other => other,
        })?;
        let start = Instant::now();
        let solution = gopt_core::solve(&problem.payoff, &problem.params, &grid, &cfg).map_err(at_level)?;
        let cpu_seconds = start.elapsed().as_secs_f64();

        let linf = linf_error(&solution, &reference.solution).map_err(at_level)?;
        let value = interpolate_quadratic(solution.terminal(), &grid, problem.target).map_err(at_level)?;
        let rate = levels.last().and_then(|prev| {
            let ratio = level.intervals as f64 / (prev.nodes - 1) as f64;
            observed_rate(prev.linf_error, linf, ratio).ok()
        });
        let mean_picard_iters = iteration_profile(&solution).ok().map(|p| p.mean);
        levels.push(LevelRecord {
            timesteps: level.steps,
            nodes: level.intervals + 1,
            linf_error: linf,
            rate,
            cpu_seconds,
            value_at_target: value,
            value_diff: (value - reference.value).abs(),
            mean_picard_iters,
        });
    }
    Ok(ConvergenceReport {
        method: cfg.method,
        levels,
        reference: ReferenceRecord {
            value: reference.value,
            timesteps: reference.level.steps,
            nodes: reference.level.intervals + 1,
        },
    })
}

fn check_ladder(ladder: &[Level], reference: Level) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::Ladder("at least one level is required".into()));
    }
    if ladder.windows(2).any(|w| w[1].intervals <= w[0].intervals) {
        return Err(Error::Ladder("spatial intervals must strictly increase along the ladder".into()));
    }
    let finest = ladder.iter().map(|l| l.intervals).max().unwrap_or(0);
    let most_steps = ladder.iter().map(|l| l.steps).max().unwrap_or(0);
    if reference.intervals < finest || reference.steps < most_steps {
        return Err(Error::Ladder("the reference grid must be at least as fine as every level".into()));
    }
    Ok(())
}

/// Inputs of the price-domain vs log-domain comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSetup {
    pub payoff: PayoffSpec,
    pub params: MarketParams,
    pub s_min: f64,
    pub s_max: f64,
    pub spot: f64,
}

impl DomainSetup {
    pub fn new(payoff: PayoffSpec, params: MarketParams, s_min: f64, s_max: f64, spot: f64) -> Result<Self> {
        if !(s_min > 0.0 && s_min < s_max && s_max.is_finite()) {
            return Err(Error::invalid("grid.s_min", "need 0 < s_min < s_max"));
        }
        if !(spot >= s_min && spot <= s_max) {
            return Err(Error::invalid("target.spot", "must lie in [s_min, s_max]"));
        }
        Ok(DomainSetup {
            payoff,
            params,
            s_min,
            s_max,
            spot,
        })
    }

    /// The same problem on `[ln s_min, ln s_max]`, evaluated at `ln spot`.
    pub fn log_problem(&self) -> Problem {
        Problem {
            payoff: self.payoff.clone(),
            params: self.params,
            x_min: self.s_min.ln(),
            x_max: self.s_max.ln(),
            target: self.spot.ln(),
        }
    }
}

/// One explicit run at the smallest admissible number of time steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainRun {
    pub h: f64,
    pub min_timesteps: usize,
    pub value: f64,
    pub relative_error: f64,
    pub cpu_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainRow {
    pub intervals: usize,
    pub without_log: DomainRun,
    pub with_log: DomainRun,
}

impl DomainRow {
    /// Time steps needed in the price domain per step needed in the log domain.
    pub fn timestep_ratio(&self) -> f64 {
        self.without_log.min_timesteps as f64 / self.with_log.min_timesteps as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainComparison {
    pub s_min: f64,
    pub s_max: f64,
    pub spot: f64,
    pub reference_value: f64,
    pub rows: Vec<DomainRow>,
}

/// Explicit schemes in `S` and in `ln S` on matching truncations and equal
/// node counts, each at its minimum stable number of time steps.
///
/// `reference` must solve `setup.log_problem()`.
pub fn compare_domains(
    setup: &DomainSetup,
    intervals: &[usize],
    reference: &Reference,
) -> Result<DomainComparison> {
    let problem = setup.log_problem();
    let (s_min, s_max, spot) = (setup.s_min, setup.s_max, setup.spot);
    let ref_grid = &reference.solution.grid;
    let tol = 1e-12 * (problem.x_max - problem.x_min);
    if (ref_grid.x_min - problem.x_min).abs() > tol || (ref_grid.x_max - problem.x_max).abs() > tol {
        return Err(gopt_core::Error::GridMismatch("reference covers a different domain").into());
    }
    let maturity = problem.params.maturity;
    let cfg_x = SchemeConfig::new(Method::ExplicitX).with_storage(LevelStorage::Final);
    let cfg_s = SchemeConfig::new(Method::ExplicitS).with_storage(LevelStorage::Final);

    let mut rows = Vec::with_capacity(intervals.len());
    for &m in intervals {
        let probe_x = build_grid(problem.x_min, problem.x_max, m, 1, maturity)?;
        let probe_s = build_grid(s_min, s_max, m, 1, maturity)?;
        let n_x = check_explicit_mesh(&probe_x, &problem.params).min_timesteps;
        let n_s = check_s_domain_mesh(&probe_s, &problem.params)?.min_timesteps;

        let grid_x = build_grid(problem.x_min, problem.x_max, m, n_x, maturity)?;
        let grid_s = build_grid(s_min, s_max, m, n_s, maturity)?;
        let run = |grid: &GridSpec, cfg: &SchemeConfig, at: f64| -> Result<DomainRun> {
            let start = Instant::now();
            let sol = gopt_core::solve(&problem.payoff, &problem.params, grid, cfg)?;
            let cpu_seconds = start.elapsed().as_secs_f64();
            let value = interpolate_quadratic(sol.terminal(), grid, at)?;
            Ok(DomainRun {
                h: grid.h(),
                min_timesteps: grid.steps,
                value,
                relative_error: ((value - reference.value) / reference.value).abs(),
                cpu_seconds,
            })
        };
        rows.push(DomainRow {
            intervals: m,
            without_log: run(&grid_s, &cfg_s, spot)?,
            with_log: run(&grid_x, &cfg_x, problem.target)?,
        });
    }
    Ok(DomainComparison {
        s_min,
        s_max,
        spot,
        reference_value: reference.value,
        rows,
    })
}
