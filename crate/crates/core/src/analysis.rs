//! Post-processing of solutions: target-point interpolation, error norms,
//! observed convergence rates and inner-iteration statistics.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::schemes::Solution;

/// Quadratic Lagrange interpolation of one time level at `x0`.
///
/// Uses the three consecutive nodes centred on the node nearest to `x0`,
/// shifted inward at either end of the grid.
pub fn interpolate_quadratic(level: &[f64], grid: &GridSpec, x0: f64) -> Result<f64> {
    if level.len() != grid.len() {
        return Err(Error::invalid("level", "length must equal the number of grid nodes"));
    }
    if !(x0 >= grid.x_min && x0 <= grid.x_max) {
        return Err(Error::OutOfRange {
            x: x0,
            lo: grid.x_min,
            hi: grid.x_max,
        });
    }
    let nearest = libm::round((x0 - grid.x_min) / grid.h()) as usize;
    let centre = nearest.clamp(1, grid.intervals - 1);
    let (x_l, x_c, x_r) = (grid.node(centre - 1), grid.node(centre), grid.node(centre + 1));
    let (v_l, v_c, v_r) = (level[centre - 1], level[centre], level[centre + 1]);

    let w_l = (x0 - x_c) * (x0 - x_r) / ((x_l - x_c) * (x_l - x_r));
    let w_c = (x0 - x_l) * (x0 - x_r) / ((x_c - x_l) * (x_c - x_r));
    let w_r = (x0 - x_l) * (x0 - x_c) / ((x_r - x_l) * (x_r - x_c));
    Ok(w_l * v_l + w_c * v_c + w_r * v_r)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Largest absolute difference between the final levels of two solutions
/// over the nodes the two grids share.
///
/// Both grids must cover the same domain and horizon. Node `i` of a grid with
/// `M` intervals coincides with node `j` of one with `M'` intervals when
/// `i/M = j/M'`, so the shared nodes are every `M/g`-th node of the first
/// grid, with `g = gcd(M, M')`. Power-of-two refinements share every
/// candidate node; other ladders share a regular subset. Grids sharing no
/// interior node are rejected.
pub fn linf_error(candidate: &Solution, reference: &Solution) -> Result<f64> {
    let (a, b) = (&candidate.grid, &reference.grid);
    let tol = 1e-12 * (a.x_max - a.x_min);
    if (a.x_min - b.x_min).abs() > tol || (a.x_max - b.x_max).abs() > tol {
        return Err(Error::GridMismatch("solutions cover different domains"));
    }
    if (a.maturity - b.maturity).abs() > 1e-12 * a.maturity {
        return Err(Error::GridMismatch("solutions end at different times"));
    }
    let shared = gcd(a.intervals, b.intervals);
    if shared < 2 {
        return Err(Error::GridMismatch("grids share no interior node"));
    }
    let (stride_a, stride_b) = (a.intervals / shared, b.intervals / shared);
    let (va, vb) = (candidate.terminal(), reference.terminal());
    Ok((0..=shared).fold(0.0, |acc, k| {
        acc.max((va[k * stride_a] - vb[k * stride_b]).abs())
    }))
}

/// Observed order `ln(e_coarse / e_fine) / ln(ratio)`.
pub fn observed_rate(e_coarse: f64, e_fine: f64, ratio: f64) -> Result<f64> {
    if !(e_coarse.is_finite() && e_coarse > 0.0 && e_fine.is_finite() && e_fine > 0.0) {
        return Err(Error::invalid("error", "errors must be finite and positive"));
    }
    if !(ratio.is_finite() && ratio > 1.0) {
        return Err(Error::invalid("refinement_ratio", "must exceed 1"));
    }
    Ok(libm::log(e_coarse / e_fine) / libm::log(ratio))
}

/// Picard sweeps per time step of an implicit run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationProfile {
    pub counts: Vec<usize>,
    pub mean: f64,
    pub max: usize,
}

pub fn iteration_profile(solution: &Solution) -> Result<IterationProfile> {
    if !solution.method.is_implicit() {
        return Err(Error::NotApplicable("explicit solutions have no inner iterations"));
    }
    let counts = solution.picard_counts.clone();
    let total: usize = counts.iter().sum();
    let mean = if counts.is_empty() {
        0.0
    } else {
        total as f64 / counts.len() as f64
    };
    let max = counts.iter().copied().max().unwrap_or(0);
    Ok(IterationProfile { counts, mean, max })
}
