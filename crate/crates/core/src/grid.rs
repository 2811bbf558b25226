//! Uniform space-time lattices, difference operators and mesh-ratio checks.

use alloc::vec::Vec;

use crate::error::{Error, MeshViolation, Result};
use crate::model::{Domain, MarketParams};

/// Relative slack applied to the non-strict mesh inequalities, so that an
/// exact tie is not lost to rounding in `√Δt` or `h`.
const TIE_SLACK: f64 = 1e-12;

/// Uniform lattice on `[x_min, x_max] × [0, T]` with `intervals + 1` nodes
/// and `steps` time steps.
///
/// The node coordinate is log-price for the log-domain schemes and price for
/// the price-domain scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub intervals: usize,
    pub steps: usize,
    pub maturity: f64,
}

impl GridSpec {
    #[inline]
    pub fn h(&self) -> f64 {
        (self.x_max - self.x_min) / self.intervals as f64
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.maturity / self.steps as f64
    }

    /// Number of nodes, `intervals + 1`.
    #[inline]
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.x_max
        } else {
            self.x_min + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }
}

pub fn build_grid(
    x_min: f64,
    x_max: f64,
    intervals: usize,
    steps: usize,
    maturity: f64,
) -> Result<GridSpec> {
    if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
        return Err(Error::invalid("grid.x_min", "domain must be finite with x_min < x_max"));
    }
    if intervals < 2 {
        return Err(Error::invalid("grid.intervals", "need at least 2 intervals"));
    }
    if steps < 1 {
        return Err(Error::invalid("grid.steps", "need at least 1 time step"));
    }
    if !(maturity.is_finite() && maturity > 0.0) {
        return Err(Error::invalid("grid.maturity", "must be finite and positive"));
    }
    Ok(GridSpec {
        x_min,
        x_max,
        intervals,
        steps,
        maturity,
    })
}

fn check_interior(v: &[f64], i: usize) -> Result<()> {
    if i == 0 || i + 1 >= v.len() {
        return Err(Error::BoundaryIndex {
            index: i,
            len: v.len(),
        });
    }
    Ok(())
}

/// Central first difference `(V[i+1] − V[i−1]) / 2h`.
pub fn first_diff(v: &[f64], i: usize, h: f64) -> Result<f64> {
    check_interior(v, i)?;
    Ok((v[i + 1] - v[i - 1]) / (2.0 * h))
}

/// Central second difference `(V[i+1] − 2V[i] + V[i−1]) / h²`.
pub fn second_diff(v: &[f64], i: usize, h: f64) -> Result<f64> {
    check_interior(v, i)?;
    Ok((v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h))
}

/// Outcome of the mesh-ratio checks for one grid.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeshReport {
    pub domain: Domain,
    pub h: f64,
    pub dt: f64,
    /// Left side of the explicit lower bound: `Σ_high·√Δt`, times `S_max` in
    /// the price domain.
    pub lower_lhs: f64,
    /// Largest admissible `h`; infinite when the bound is vacuous.
    pub h_max: f64,
    pub explicit_lower_ok: bool,
    pub upper_ok: bool,
    /// Smallest step count satisfying the explicit lower bound.
    pub min_timesteps: usize,
}

impl MeshReport {
    /// Violations relevant to the explicit schemes (both bounds).
    pub fn explicit_violation(&self) -> Option<MeshViolation> {
        if !self.explicit_lower_ok {
            return Some(match self.domain {
                Domain::LogPrice => MeshViolation::ExplicitLower {
                    lhs: self.lower_lhs,
                    h: self.h,
                },
                Domain::Price => MeshViolation::PriceLower {
                    lhs: self.lower_lhs,
                    h: self.h,
                },
            });
        }
        self.upper_violation()
    }

    /// Violation of the upper bound on `h`, the only condition the implicit
    /// scheme needs.
    pub fn upper_violation(&self) -> Option<MeshViolation> {
        if self.upper_ok {
            return None;
        }
        Some(match self.domain {
            Domain::LogPrice => MeshViolation::Upper {
                h: self.h,
                bound: self.h_max,
            },
            Domain::Price => MeshViolation::PriceUpper {
                h: self.h,
                bound: self.h_max,
            },
        })
    }
}

/// `⌈x⌉`, except that values within rounding of an integer keep that integer.
fn ceil_keep_ties(x: f64) -> usize {
    let nearest = libm::round(x);
    let n = if (x - nearest).abs() <= TIE_SLACK * nearest.abs().max(1.0) {
        nearest
    } else {
        libm::ceil(x)
    };
    (n as usize).max(1)
}

/// Mesh conditions of the log-domain schemes:
/// `Σ_high·√Δt ≤ h ≤ 2Σ_low² / max(2r − Σ_low², Σ_high² − 2r)`.
pub fn check_explicit_mesh(grid: &GridSpec, params: &MarketParams) -> MeshReport {
    let band = params.effective_band();
    let (h, dt) = (grid.h(), grid.dt());
    let (low2, high2) = (band.low * band.low, band.high * band.high);
    let r = params.rate;

    let denom = (2.0 * r - low2).max(high2 - 2.0 * r);
    let h_max = if denom > 0.0 {
        2.0 * low2 / denom
    } else {
        f64::INFINITY
    };
    let lower_lhs = band.high * libm::sqrt(dt);

    MeshReport {
        domain: Domain::LogPrice,
        h,
        dt,
        lower_lhs,
        h_max,
        explicit_lower_ok: lower_lhs <= h * (1.0 + TIE_SLACK),
        upper_ok: h <= h_max,
        min_timesteps: ceil_keep_ties(grid.maturity * high2 / (h * h)),
    }
}

/// Mesh conditions of the price-domain explicit scheme:
/// `S_max·Σ_high·√Δt ≤ h_s ≤ S_min·Σ_low² / r`. Grid nodes are prices.
pub fn check_s_domain_mesh(grid: &GridSpec, params: &MarketParams) -> Result<MeshReport> {
    if !(grid.x_min > 0.0) {
        return Err(Error::invalid("grid.x_min", "price-domain grid needs S_min > 0"));
    }
    let band = params.effective_band();
    let (h, dt) = (grid.h(), grid.dt());
    let (s_min, s_max) = (grid.x_min, grid.x_max);
    let r = params.rate;

    let h_max = if r > 0.0 {
        s_min * band.low * band.low / r
    } else {
        f64::INFINITY
    };
    let lower_lhs = s_max * band.high * libm::sqrt(dt);
    let m = grid.intervals as f64;
    let width = s_max - s_min;
    let min_steps =
        grid.maturity * s_max * s_max * band.high * band.high * m * m / (width * width);

    Ok(MeshReport {
        domain: Domain::Price,
        h,
        dt,
        lower_lhs,
        h_max,
        explicit_lower_ok: lower_lhs <= h * (1.0 + TIE_SLACK),
        upper_ok: h <= h_max,
        min_timesteps: ceil_keep_ties(min_steps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> MarketParams {
        MarketParams::new(0.1, 1.0, 0.15, 0.25, 0.25).unwrap()
    }

    #[test]
    fn build_grid_examples() {
        let g = build_grid(libm::log(50.0), libm::log(150.0), 200, 1, 0.25).unwrap();
        assert!((g.h() - libm::log(3.0) / 200.0).abs() < 1e-15);
        assert!((g.h() - 5.493e-3).abs() < 1e-6);

        let g = build_grid(-1.0, 1.0, 2, 1, 1.0).unwrap();
        assert_eq!(g.nodes(), [-1.0, 0.0, 1.0]);

        let g = build_grid(libm::log(50.0), libm::log(150.0), 160, 1, 0.25).unwrap();
        assert!((g.h() - 6.866e-3).abs() < 1e-6);
    }

    #[test]
    fn build_grid_rejects_degenerate() {
        assert!(build_grid(1.0, 1.0, 10, 10, 1.0).is_err());
        assert!(build_grid(0.0, 1.0, 1, 10, 1.0).is_err());
        assert!(build_grid(0.0, 1.0, 10, 0, 1.0).is_err());
        assert!(build_grid(0.0, f64::NAN, 10, 1, 1.0).is_err());
    }

    #[test]
    fn difference_examples() {
        assert_eq!(first_diff(&[0.0, 1.0, 2.0], 1, 1.0).unwrap(), 1.0);
        assert_eq!(first_diff(&[0.0, 0.0, 0.0], 1, 0.3).unwrap(), 0.0);
        assert_eq!(first_diff(&[1.0, 4.0, 9.0], 1, 1.0).unwrap(), 4.0);
        assert_eq!(second_diff(&[1.0, 4.0, 9.0], 1, 1.0).unwrap(), 2.0);
        assert_eq!(second_diff(&[3.0, 3.0, 3.0], 1, 0.1).unwrap(), 0.0);
        assert_eq!(second_diff(&[0.0, 1.0, 8.0], 1, 1.0).unwrap(), 6.0);
        assert!(first_diff(&[0.0, 1.0, 2.0], 0, 1.0).is_err());
        assert!(second_diff(&[0.0, 1.0, 2.0], 2, 1.0).is_err());
    }

    #[test]
    fn differences_exact_on_polynomials() {
        for &h in &[1.0, 0.1, 0.01] {
            let lin: Vec<f64> = (0..6).map(|i| 3.0 - 2.0 * (i as f64 * h)).collect();
            let quad: Vec<f64> = (0..6)
                .map(|i| {
                    let x = i as f64 * h;
                    1.0 + 0.5 * x - 1.5 * x * x
                })
                .collect();
            for i in 1..5 {
                let x = i as f64 * h;
                assert!((first_diff(&lin, i, h).unwrap() + 2.0).abs() < 1e-12 / h);
                assert!(second_diff(&lin, i, h).unwrap().abs() < 1e-12 / (h * h));
                assert!((first_diff(&quad, i, h).unwrap() - (0.5 - 3.0 * x)).abs() < 1e-12 / h);
                assert!((second_diff(&quad, i, h).unwrap() + 3.0).abs() < 1e-12 / (h * h));
            }
        }
    }

    #[test]
    fn log_domain_minimum_timesteps() {
        let (lo, hi) = (libm::log(50.0), libm::log(150.0));
        for (m, expected) in [(200, 518), (400, 2072), (800, 8286)] {
            let g = build_grid(lo, hi, m, 1, 0.25).unwrap();
            let rep = check_explicit_mesh(&g, &params());
            assert_eq!(rep.min_timesteps, expected, "M = {m}");
            assert!(rep.upper_ok);
        }
    }

    #[test]
    fn upper_bound_arithmetic() {
        let g = build_grid(libm::log(50.0), libm::log(150.0), 200, 518, 0.25).unwrap();
        let rep = check_explicit_mesh(&g, &params());
        assert!((rep.h_max - 0.045 / 0.1775).abs() < 1e-14);
        assert!(rep.upper_ok && rep.explicit_lower_ok);

        let coarse = build_grid(-10.0, 10.0, 20, 518, 0.25).unwrap();
        let rep = check_explicit_mesh(&coarse, &params());
        assert!(!rep.upper_ok);
        assert!(matches!(rep.upper_violation(), Some(MeshViolation::Upper { .. })));
    }

    #[test]
    fn upper_bound_vacuous_when_denominator_nonpositive() {
        // Collapsed band with 2r = Σ²: both candidates vanish.
        let p = MarketParams::new(0.125, 1.0, 0.5, 0.5, 1.0).unwrap();
        let g = build_grid(-10.0, 10.0, 4, 1, 1.0).unwrap();
        let rep = check_explicit_mesh(&g, &p);
        assert!(rep.h_max.is_infinite() && rep.upper_ok);
    }

    #[test]
    fn price_domain_minimum_timesteps() {
        for (m, expected) in [(200, 1407), (400, 5625), (800, 22500)] {
            let g = build_grid(50.0, 150.0, m, expected, 0.25).unwrap();
            let rep = check_s_domain_mesh(&g, &params()).unwrap();
            assert_eq!(rep.min_timesteps, expected, "M = {m}");
            assert!(rep.explicit_lower_ok && rep.upper_ok, "M = {m}");
        }
        let g = build_grid(0.0, 150.0, 10, 1, 0.25).unwrap();
        assert!(check_s_domain_mesh(&g, &params()).is_err());
    }

    #[test]
    fn violated_lower_bound_is_reported() {
        let g = build_grid(50.0, 150.0, 200, 1406, 0.25).unwrap();
        let rep = check_s_domain_mesh(&g, &params()).unwrap();
        assert!(!rep.explicit_lower_ok);
        assert!(matches!(rep.explicit_violation(), Some(MeshViolation::PriceLower { .. })));
    }

    #[test]
    fn constraint_ratio() {
        let (s_min, s_max) = (50.0f64, 150.0f64);
        let lw = libm::log(s_max) - libm::log(s_min);
        let ratio = s_max * s_max * lw * lw / ((s_max - s_min) * (s_max - s_min));
        assert!((ratio - 2.7155).abs() < 1e-3, "{ratio}");
    }

    proptest::proptest! {
        #[test]
        fn min_timesteps_is_minimal(m in 2usize..2000, width in 0.05f64..20.0, t in 0.01f64..2.0,
                                    high in 0.05f64..1.0) {
            let p = MarketParams::new(0.05, 1.0, high * 0.5, high, t).unwrap();
            let g = build_grid(-width / 2.0, width / 2.0, m, 1, t).unwrap();
            let n = check_explicit_mesh(&g, &p).min_timesteps;
            let h = g.h();
            let slack = 1.0 + 1e-12;
            proptest::prop_assert!(high * libm::sqrt(t / n as f64) <= h * slack);
            if n > 1 {
                proptest::prop_assert!(high * libm::sqrt(t / (n - 1) as f64) > h / slack);
            }
        }
    }
}
