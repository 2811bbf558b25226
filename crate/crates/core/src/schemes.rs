//! Time steppers for the truncated G-Black-Scholes problem.
//!
//! All schemes march forward in reversed time `t ← T − t`, so level 0 holds
//! the payoff and level `N` the price today. With `Σ` chosen nodewise from
//! the band by [`sigma_star`](crate::model::sigma_star):
//!
//! * [`Method::ExplicitX`] advances `V_t = rV_X − rV + ½Σ²(V_XX − V_X)` with
//!   the spatial terms at level `n` and the discount term at level `n+1`.
//! * [`Method::ImplicitX`] takes every term at level `n+1` and resolves the
//!   nonlinearity by Picard iteration: `Σ` is frozen on the current iterate,
//!   the resulting tridiagonal system is solved, and the sweep repeats until
//!   successive iterates agree to `picard_tol` in the sup norm.
//! * [`Method::ExplicitS`] is the explicit scheme for the untransformed
//!   equation `U_t = rSU_S − rU + ½Σ²S²U_SS` on a price grid.
//!
//! The left node obeys `V_t = −rV` (discounted as `V/(1 + rΔt)` per step) and
//! the right node is pinned to the payoff's [`RightBoundary`] rule.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, MeshViolation, Result};
use crate::grid::{check_explicit_mesh, check_s_domain_mesh, GridSpec, MeshReport};
use crate::model::{payoff_on_grid, Domain, EffectiveBand, MarketParams, PayoffSpec, RightBoundary};
use crate::tridiag;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    ExplicitX,
    ImplicitX,
    ExplicitS,
}

impl Method {
    pub fn domain(self) -> Domain {
        match self {
            Method::ExplicitX | Method::ImplicitX => Domain::LogPrice,
            Method::ExplicitS => Domain::Price,
        }
    }

    pub fn is_implicit(self) -> bool {
        self == Method::ImplicitX
    }
}

/// What [`solve`] does when the grid violates the scheme's mesh conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MeshEnforcement {
    /// Refuse to run.
    Error,
    /// Run, and record the violation in [`Solution::mesh_violation`].
    Warn,
    /// Run silently.
    Ignore,
}

/// Which time levels a [`Solution`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum LevelStorage {
    /// Every level `0..=N`.
    All,
    /// Only the payoff level and the final level.
    Final,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SchemeConfig {
    pub method: Method,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub enforce_mesh_conditions: MeshEnforcement,
    pub storage: LevelStorage,
}

impl SchemeConfig {
    pub const DEFAULT_PICARD_TOL: f64 = 1e-6;
    pub const DEFAULT_PICARD_MAX_ITERS: usize = 100;

    pub fn new(method: Method) -> Self {
        SchemeConfig {
            method,
            picard_tol: Self::DEFAULT_PICARD_TOL,
            picard_max_iters: Self::DEFAULT_PICARD_MAX_ITERS,
            enforce_mesh_conditions: MeshEnforcement::Error,
            storage: LevelStorage::All,
        }
    }

    pub fn with_enforcement(mut self, enforcement: MeshEnforcement) -> Self {
        self.enforce_mesh_conditions = enforcement;
        self
    }

    pub fn with_storage(mut self, storage: LevelStorage) -> Self {
        self.storage = storage;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.picard_tol.is_finite() && self.picard_tol > 0.0) {
            return Err(Error::invalid("scheme.picard_tol", "must be finite and positive"));
        }
        if self.picard_max_iters < 1 {
            return Err(Error::invalid("scheme.picard_max_iters", "must be at least 1"));
        }
        Ok(())
    }
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self::new(Method::ImplicitX)
    }
}

/// Result of [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub grid: GridSpec,
    pub method: Method,
    /// Stored time levels, each with `grid.len()` entries.
    pub levels: Vec<Vec<f64>>,
    /// Time index of each entry of `levels`.
    pub level_steps: Vec<usize>,
    /// `‖V^n‖_∞` for every `n = 0..=N`, whatever the storage policy.
    pub sup_norms: Vec<f64>,
    /// Right-boundary values `φ^n` for `n = 1..=N`.
    pub boundary_values: Vec<f64>,
    /// Picard sweeps per time step; empty for explicit methods.
    pub picard_counts: Vec<usize>,
    pub mesh: MeshReport,
    /// Set when the grid violates the mesh conditions and enforcement is
    /// [`MeshEnforcement::Warn`].
    pub mesh_violation: Option<MeshViolation>,
}

impl Solution {
    pub fn initial(&self) -> &[f64] {
        &self.levels[0]
    }

    /// Values at reversed time `T`, i.e. today's prices.
    pub fn terminal(&self) -> &[f64] {
        self.levels.last().expect("solution has at least two levels")
    }

    pub fn level(&self, n: usize) -> Option<&[f64]> {
        self.level_steps
            .iter()
            .position(|&s| s == n)
            .map(|k| self.levels[k].as_slice())
    }

    /// `max(‖V^0‖_∞, max_n |φ^n|)`, the bound on every level when the scheme
    /// is monotone.
    pub fn stability_bound(&self) -> f64 {
        self.boundary_values
            .iter()
            .fold(self.sup_norms[0], |acc, b| acc.max(b.abs()))
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Per-run constants shared by every step.
struct StepContext {
    h: f64,
    dt: f64,
    rate: f64,
    band: EffectiveBand,
    s_right: f64,
    right: RightBoundary,
    /// Node coordinates, needed by the price-domain scheme.
    nodes: Vec<f64>,
}

impl StepContext {
    fn new(grid: &GridSpec, params: &MarketParams, payoff: &PayoffSpec, domain: Domain) -> Self {
        let s_right = match domain {
            Domain::LogPrice => libm::exp(grid.x_max),
            Domain::Price => grid.x_max,
        };
        StepContext {
            h: grid.h(),
            dt: grid.dt(),
            rate: params.rate,
            band: params.effective_band(),
            s_right,
            right: payoff.right_boundary,
            nodes: match domain {
                Domain::Price => grid.nodes(),
                Domain::LogPrice => Vec::new(),
            },
        }
    }

    #[inline]
    fn right_value(&self, step: usize) -> f64 {
        self.right.value(step, self.dt, self.rate, self.s_right)
    }
}

fn check_level(v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::invalid("level", "length must equal the number of grid nodes"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("level"));
    }
    Ok(())
}

fn check_finite(v: &[f64], step: usize) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(node) => Err(Error::Divergence { step, node }),
        None => Ok(()),
    }
}

fn explicit_x_into(ctx: &StepContext, vn: &[f64], n: usize, out: &mut [f64]) -> Result<()> {
    let m = vn.len() - 1;
    let (h, dt, r) = (ctx.h, ctx.dt, ctx.rate);
    let inv_2h = 1.0 / (2.0 * h);
    let inv_h2 = 1.0 / (h * h);
    let discount = 1.0 / (1.0 + r * dt);

    out[0] = vn[0] * discount;
    for i in 1..m {
        let (left, mid, right) = (vn[i - 1], vn[i], vn[i + 1]);
        let d1 = (right - left) * inv_2h;
        let d2 = (right - 2.0 * mid + left) * inv_h2;
        let w = d2 - d1;
        let sigma = ctx.band.select(w);
        out[i] = (mid + dt * (r * d1 + 0.5 * sigma * sigma * w)) * discount;
    }
    out[m] = ctx.right_value(n + 1);
    check_finite(out, n + 1)
}

fn explicit_s_into(ctx: &StepContext, un: &[f64], n: usize, out: &mut [f64]) -> Result<()> {
    let m = un.len() - 1;
    let (h, dt, r) = (ctx.h, ctx.dt, ctx.rate);
    let inv_2h = 1.0 / (2.0 * h);
    let inv_h2 = 1.0 / (h * h);
    let discount = 1.0 / (1.0 + r * dt);

    out[0] = un[0] * discount;
    for i in 1..m {
        let s = ctx.nodes[i];
        let (left, mid, right) = (un[i - 1], un[i], un[i + 1]);
        let d1 = (right - left) * inv_2h;
        let d2 = (right - 2.0 * mid + left) * inv_h2;
        let sigma = ctx.band.select(d2);
        out[i] = (mid + dt * (r * s * d1 + 0.5 * s * s * sigma * sigma * d2)) * discount;
    }
    out[m] = ctx.right_value(n + 1);
    check_finite(out, n + 1)
}

/// Tridiagonal row coefficients of the implicit scheme for one `Σ`.
#[derive(Clone, Copy)]
struct ImplicitRow {
    sub: f64,
    diag: f64,
    sup: f64,
}

impl ImplicitRow {
    fn new(sigma: f64, h: f64, dt: f64, r: f64) -> Self {
        let s2 = sigma * sigma;
        let diffusion = s2 / (2.0 * h * h);
        let advection = r / (2.0 * h);
        let drift = s2 / (4.0 * h);
        ImplicitRow {
            sub: -(diffusion - advection + drift),
            diag: 1.0 / dt + r + s2 / (h * h),
            sup: -(diffusion + advection - drift),
        }
    }
}

/// Buffers reused across implicit steps.
struct PicardWorkspace {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
    iterate: Vec<f64>,
    next: Vec<f64>,
    low_row: ImplicitRow,
    high_row: ImplicitRow,
}

impl PicardWorkspace {
    fn new(ctx: &StepContext, len: usize) -> Self {
        PicardWorkspace {
            sub: vec![0.0; len],
            diag: vec![0.0; len],
            sup: vec![0.0; len],
            rhs: vec![0.0; len],
            scratch: vec![0.0; len],
            iterate: vec![0.0; len],
            next: vec![0.0; len],
            low_row: ImplicitRow::new(ctx.band.low, ctx.h, ctx.dt, ctx.rate),
            high_row: ImplicitRow::new(ctx.band.high, ctx.h, ctx.dt, ctx.rate),
        }
    }
}

/// One implicit step. Returns the number of Picard sweeps; the converged
/// level is left in `out`. `observer` sees every iterate `V^{n+1,k}`, `k ≥ 1`.
fn implicit_x_into<F>(
    ctx: &StepContext,
    ws: &mut PicardWorkspace,
    vn: &[f64],
    n: usize,
    cfg: &SchemeConfig,
    out: &mut [f64],
    mut observer: F,
) -> Result<usize>
where
    F: FnMut(usize, &[f64]),
{
    let m = vn.len() - 1;
    let (h, dt, r) = (ctx.h, ctx.dt, ctx.rate);
    let inv_2h = 1.0 / (2.0 * h);
    let inv_h2 = 1.0 / (h * h);
    let inv_dt = 1.0 / dt;

    // Rows that do not depend on the iterate.
    ws.sub[0] = 0.0;
    ws.diag[0] = inv_dt + r;
    ws.sup[0] = 0.0;
    ws.rhs[0] = vn[0] * inv_dt;
    for i in 1..m {
        ws.rhs[i] = vn[i] * inv_dt;
    }
    ws.sub[m] = 0.0;
    ws.diag[m] = 1.0;
    ws.sup[m] = 0.0;
    ws.rhs[m] = ctx.right_value(n + 1);

    ws.iterate.copy_from_slice(vn);
    let mut increment = f64::INFINITY;
    for sweep in 1..=cfg.picard_max_iters {
        {
            let v = &ws.iterate;
            for i in 1..m {
                let d1 = (v[i + 1] - v[i - 1]) * inv_2h;
                let d2 = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * inv_h2;
                let row = if d2 - d1 >= 0.0 {
                    ws.high_row
                } else {
                    ws.low_row
                };
                ws.sub[i] = row.sub;
                ws.diag[i] = row.diag;
                ws.sup[i] = row.sup;
            }
        }
        tridiag::solve(
            &ws.sub,
            &ws.diag,
            &ws.sup,
            &ws.rhs,
            &mut ws.scratch,
            &mut ws.next,
        )?;
        check_finite(&ws.next, n + 1)?;
        increment = ws
            .iterate
            .iter()
            .zip(&ws.next)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()));
        core::mem::swap(&mut ws.iterate, &mut ws.next);
        observer(sweep, &ws.iterate);
        if increment < cfg.picard_tol {
            out.copy_from_slice(&ws.iterate);
            return Ok(sweep);
        }
    }
    Err(Error::PicardNotConverged {
        step: n + 1,
        iterations: cfg.picard_max_iters,
        increment,
    })
}

/// One explicit log-domain step from level `n` to `n + 1`.
pub fn explicit_step_x(
    vn: &[f64],
    n: usize,
    grid: &GridSpec,
    params: &MarketParams,
    payoff: &PayoffSpec,
) -> Result<Vec<f64>> {
    check_level(vn, grid.len())?;
    let ctx = StepContext::new(grid, params, payoff, Domain::LogPrice);
    let mut out = vec![0.0; vn.len()];
    explicit_x_into(&ctx, vn, n, &mut out)?;
    Ok(out)
}

/// One explicit price-domain step from level `n` to `n + 1`. Grid nodes are
/// prices.
pub fn explicit_step_s(
    un: &[f64],
    n: usize,
    grid: &GridSpec,
    params: &MarketParams,
    payoff: &PayoffSpec,
) -> Result<Vec<f64>> {
    check_level(un, grid.len())?;
    let ctx = StepContext::new(grid, params, payoff, Domain::Price);
    let mut out = vec![0.0; un.len()];
    explicit_s_into(&ctx, un, n, &mut out)?;
    Ok(out)
}

/// One implicit log-domain step; returns the new level and the number of
/// Picard sweeps it took.
pub fn implicit_step_x(
    vn: &[f64],
    n: usize,
    grid: &GridSpec,
    params: &MarketParams,
    payoff: &PayoffSpec,
    cfg: &SchemeConfig,
) -> Result<(Vec<f64>, usize)> {
    implicit_step_x_observed(vn, n, grid, params, payoff, cfg, |_, _| {})
}

/// [`implicit_step_x`], calling `observer(k, V^{n+1,k})` after every sweep.
pub fn implicit_step_x_observed<F>(
    vn: &[f64],
    n: usize,
    grid: &GridSpec,
    params: &MarketParams,
    payoff: &PayoffSpec,
    cfg: &SchemeConfig,
    observer: F,
) -> Result<(Vec<f64>, usize)>
where
    F: FnMut(usize, &[f64]),
{
    check_level(vn, grid.len())?;
    cfg.validate()?;
    let ctx = StepContext::new(grid, params, payoff, Domain::LogPrice);
    let mut ws = PicardWorkspace::new(&ctx, vn.len());
    let mut out = vec![0.0; vn.len()];
    let sweeps = implicit_x_into(&ctx, &mut ws, vn, n, cfg, &mut out, observer)?;
    Ok((out, sweeps))
}

/// Marches the payoff through all `N` steps of the configured method.
pub fn solve(
    payoff: &PayoffSpec,
    params: &MarketParams,
    grid: &GridSpec,
    cfg: &SchemeConfig,
) -> Result<Solution> {
    params.validate()?;
    payoff.validate()?;
    cfg.validate()?;
    let grid = crate::grid::build_grid(
        grid.x_min,
        grid.x_max,
        grid.intervals,
        grid.steps,
        grid.maturity,
    )?;
    if (grid.maturity - params.maturity).abs() > 1e-12 * params.maturity {
        return Err(Error::GridMismatch("grid maturity differs from market maturity"));
    }

    let domain = cfg.method.domain();
    let mesh = match domain {
        Domain::LogPrice => check_explicit_mesh(&grid, params),
        Domain::Price => check_s_domain_mesh(&grid, params)?,
    };
    let violation = if cfg.method.is_implicit() {
        mesh.upper_violation()
    } else {
        mesh.explicit_violation()
    };
    let mesh_violation = match (violation, cfg.enforce_mesh_conditions) {
        (Some(v), MeshEnforcement::Error) => return Err(Error::Mesh(v)),
        (Some(v), MeshEnforcement::Warn) => Some(v),
        _ => None,
    };

    let initial = payoff_on_grid(payoff, &grid.nodes(), domain)?;
    let ctx = StepContext::new(&grid, params, payoff, domain);
    let steps = grid.steps;
    let keep_all = cfg.storage == LevelStorage::All;

    let mut levels = Vec::with_capacity(if keep_all { steps + 1 } else { 2 });
    let mut sup_norms = Vec::with_capacity(steps + 1);
    let mut boundary_values = Vec::with_capacity(steps);
    let mut picard_counts = Vec::new();
    sup_norms.push(sup_norm(&initial));

    let mut current = initial.clone();
    let mut next = vec![0.0; current.len()];
    let mut workspace = cfg
        .method
        .is_implicit()
        .then(|| PicardWorkspace::new(&ctx, current.len()));
    levels.push(initial);

    for n in 0..steps {
        match cfg.method {
            Method::ExplicitX => explicit_x_into(&ctx, &current, n, &mut next)?,
            Method::ExplicitS => explicit_s_into(&ctx, &current, n, &mut next)?,
            Method::ImplicitX => {
                let ws = workspace.as_mut().expect("workspace allocated for implicit runs");
                let sweeps = implicit_x_into(&ctx, ws, &current, n, cfg, &mut next, |_, _| {})?;
                picard_counts.push(sweeps);
            }
        }
        core::mem::swap(&mut current, &mut next);
        sup_norms.push(sup_norm(&current));
        boundary_values.push(current[current.len() - 1]);
        if keep_all {
            levels.push(current.clone());
        }
    }
    if !keep_all {
        levels.push(current);
    }
    let level_steps = if keep_all {
        (0..=steps).collect()
    } else {
        vec![0, steps]
    };

    Ok(Solution {
        grid,
        method: cfg.method,
        levels,
        level_steps,
        sup_norms,
        boundary_values,
        picard_counts,
        mesh,
        mesh_violation,
    })
}
