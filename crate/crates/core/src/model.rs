//! Market data, contracts, the optimal-volatility selector and the classical
//! Black-Scholes closed form.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Market parameters of the G-Black-Scholes model.
///
/// The diffusion term is `½·σ²·Σ²` with `Σ` ranging over the band
/// `[sigma_low, sigma_high]`. The schemes only ever see the product `σΣ`, see
/// [`MarketParams::effective_band`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MarketParams {
    pub rate: f64,
    pub sigma: f64,
    pub sigma_low: f64,
    pub sigma_high: f64,
    pub maturity: f64,
}

impl MarketParams {
    pub fn new(
        rate: f64,
        sigma: f64,
        sigma_low: f64,
        sigma_high: f64,
        maturity: f64,
    ) -> Result<Self> {
        let params = MarketParams {
            rate,
            sigma,
            sigma_low,
            sigma_high,
            maturity,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rate.is_finite() || self.rate < 0.0 {
            return Err(Error::invalid("rate", "must be finite and nonnegative"));
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::invalid("sigma", "must be finite and positive"));
        }
        if !self.sigma_low.is_finite() || self.sigma_low <= 0.0 {
            return Err(Error::invalid("sigma_band", "lower end must be finite and positive"));
        }
        if !self.sigma_high.is_finite() || self.sigma_high < self.sigma_low {
            return Err(Error::invalid(
                "sigma_band",
                "upper end must be finite and not below the lower end",
            ));
        }
        if !self.maturity.is_finite() || self.maturity <= 0.0 {
            return Err(Error::invalid("maturity", "must be finite and positive"));
        }
        Ok(())
    }

    /// The band `(σ·Σ_low, σ·Σ_high)` actually used by the schemes.
    pub fn effective_band(&self) -> EffectiveBand {
        EffectiveBand {
            low: self.sigma * self.sigma_low,
            high: self.sigma * self.sigma_high,
        }
    }
}

/// Volatility band with the reference volatility folded in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveBand {
    pub low: f64,
    pub high: f64,
}

impl EffectiveBand {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low.is_finite() && low > 0.0) {
            return Err(Error::invalid("sigma_band", "lower end must be finite and positive"));
        }
        if !(high.is_finite() && high >= low) {
            return Err(Error::invalid(
                "sigma_band",
                "upper end must be finite and not below the lower end",
            ));
        }
        Ok(EffectiveBand { low, high })
    }

    #[inline]
    pub(crate) fn select(&self, w: f64) -> f64 {
        if w >= 0.0 {
            self.high
        } else {
            self.low
        }
    }
}

/// Volatility attaining the supremum of `Σ²·w` over the band.
///
/// `w` is the discrete proxy for `V_XX − V_X` in the log domain (or `U_SS` in
/// the price domain). The switch is closed on the upper branch: `w = 0` picks
/// `band.high`.
pub fn sigma_star(w: f64, band: EffectiveBand) -> Result<f64> {
    if !w.is_finite() {
        return Err(Error::NonFinite("w"));
    }
    Ok(band.select(w))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum OptionKind {
    Call,
    Put,
}

/// Standard normal CDF, via `erfc` to keep the lower tail accurate.
fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * core::f64::consts::FRAC_1_SQRT_2)
}

/// Black-Scholes price of a European call or put with constant volatility.
pub fn bs_closed_form(
    kind: OptionKind,
    spot: f64,
    strike: f64,
    rate: f64,
    vol: f64,
    maturity: f64,
) -> Result<f64> {
    for (name, value) in [
        ("spot", spot),
        ("strike", strike),
        ("vol", vol),
        ("maturity", maturity),
    ] {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::invalid(name, "must be finite and positive"));
        }
    }
    if !rate.is_finite() {
        return Err(Error::NonFinite("rate"));
    }
    let sd = vol * libm::sqrt(maturity);
    let d1 = (libm::log(spot / strike) + (rate + 0.5 * vol * vol) * maturity) / sd;
    let d2 = d1 - sd;
    let discounted_strike = strike * libm::exp(-rate * maturity);
    let price = match kind {
        OptionKind::Call => spot * norm_cdf(d1) - discounted_strike * norm_cdf(d2),
        OptionKind::Put => discounted_strike * norm_cdf(-d2) - spot * norm_cdf(-d1),
    };
    Ok(price.max(0.0))
}

/// Contract payoff.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "lowercase"))]
pub enum PayoffKind {
    /// `max(S−K1,0) − 2·max(S−Km,0) + max(S−K2,0)` with `Km = (K1+K2)/2`.
    Butterfly { k1: f64, km: f64, k2: f64 },
    /// `1` if `S ≥ K`, else `0`.
    Digital { strike: f64 },
    Call { strike: f64 },
    Put { strike: f64 },
    /// Payoff values given directly on the grid nodes.
    Tabulated { values: Vec<f64> },
}

/// Dirichlet value imposed at the right end of the truncated domain.
///
/// Evaluated at reversed time `t = n·Δt`; `s_right` is the price at the right
/// boundary (`e^{x_max}` in the log domain).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "rule", content = "value", rename_all = "snake_case"))]
pub enum RightBoundary {
    Zero,
    /// `c·e^{−rt}`.
    Discounted(f64),
    /// `c / (1 + rΔt)^n`, the discounting the left boundary applies.
    StepDiscounted(f64),
    /// `S_right − K·e^{−rt}`, the deep in-the-money call asymptote.
    Forward(f64),
}

impl RightBoundary {
    pub fn value(&self, step: usize, dt: f64, rate: f64, s_right: f64) -> f64 {
        let t = step as f64 * dt;
        match *self {
            RightBoundary::Zero => 0.0,
            RightBoundary::Discounted(c) => c * libm::exp(-rate * t),
            RightBoundary::StepDiscounted(c) => c / libm::pow(1.0 + rate * dt, step as f64),
            RightBoundary::Forward(strike) => s_right - strike * libm::exp(-rate * t),
        }
    }

    fn is_finite(&self) -> bool {
        match *self {
            RightBoundary::Zero => true,
            RightBoundary::Discounted(c)
            | RightBoundary::StepDiscounted(c)
            | RightBoundary::Forward(c) => c.is_finite(),
        }
    }
}

/// A payoff together with its right-boundary rule.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PayoffSpec {
    pub kind: PayoffKind,
    pub right_boundary: RightBoundary,
}

impl PayoffSpec {
    /// Butterfly on `[k1, k2]`; the value vanishes as `S → ∞`.
    pub fn butterfly(k1: f64, k2: f64) -> Result<Self> {
        Self::new(
            PayoffKind::Butterfly {
                k1,
                km: 0.5 * (k1 + k2),
                k2,
            },
            RightBoundary::Zero,
        )
    }

    /// Digital call; the value tends to the discounted unit as `S → ∞`.
    pub fn digital(strike: f64) -> Result<Self> {
        Self::new(PayoffKind::Digital { strike }, RightBoundary::Discounted(1.0))
    }

    pub fn call(strike: f64) -> Result<Self> {
        Self::new(PayoffKind::Call { strike }, RightBoundary::Forward(strike))
    }

    pub fn put(strike: f64) -> Result<Self> {
        Self::new(PayoffKind::Put { strike }, RightBoundary::Zero)
    }

    /// Nodal payoff values; the right boundary holds the last value, discounted.
    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        let last = values.last().copied().unwrap_or(0.0);
        Self::new(PayoffKind::Tabulated { values }, RightBoundary::Discounted(last))
    }

    pub fn new(kind: PayoffKind, right_boundary: RightBoundary) -> Result<Self> {
        let spec = PayoffSpec {
            kind,
            right_boundary,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            PayoffKind::Butterfly { k1, km, k2 } => {
                if !(k1.is_finite() && k2.is_finite() && *k1 < *k2) {
                    return Err(Error::invalid("payoff.k1", "butterfly requires finite k1 < k2"));
                }
                let mid = 0.5 * (k1 + k2);
                if (km - mid).abs() > 1e-12 * mid.abs().max(1.0) {
                    return Err(Error::invalid("payoff.km", "must equal (k1 + k2) / 2"));
                }
            }
            PayoffKind::Digital { strike }
            | PayoffKind::Call { strike }
            | PayoffKind::Put { strike } => {
                if !(strike.is_finite() && *strike > 0.0) {
                    return Err(Error::invalid("payoff.strike", "must be finite and positive"));
                }
            }
            PayoffKind::Tabulated { values } => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("payoff.values", "must all be finite"));
                }
            }
        }
        if !self.right_boundary.is_finite() {
            return Err(Error::invalid("payoff.right_boundary", "must be finite"));
        }
        Ok(())
    }

    /// Payoff at price `s`. `log_s`, when given, is `ln s` and is used for the
    /// digital threshold so that a node placed at `ln K` counts as in the money.
    fn at_price(&self, s: f64, log_s: Option<f64>) -> f64 {
        match self.kind {
            // The linear pieces cancel outside the wings; return the exact zero.
            PayoffKind::Butterfly { k1, km, k2 } if s > k1 && s < k2 => {
                (s - k1) - 2.0 * (s - km).max(0.0)
            }
            PayoffKind::Butterfly { .. } => 0.0,
            PayoffKind::Digital { strike } => {
                let itm = match log_s {
                    Some(x) => x >= libm::log(strike),
                    None => s >= strike,
                };
                if itm {
                    1.0
                } else {
                    0.0
                }
            }
            PayoffKind::Call { strike } => (s - strike).max(0.0),
            PayoffKind::Put { strike } => (strike - s).max(0.0),
            PayoffKind::Tabulated { .. } => unreachable!("tabulated payoffs are read directly"),
        }
    }
}

/// Coordinate of the grid nodes: price `S` or log-price `X = ln S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Domain {
    Price,
    LogPrice,
}

/// Evaluates the payoff at each node. Log-price nodes are exponentiated first.
pub fn payoff_on_grid(payoff: &PayoffSpec, nodes: &[f64], domain: Domain) -> Result<Vec<f64>> {
    if nodes.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("nodes", "must be strictly increasing"));
    }
    if let PayoffKind::Tabulated { values } = &payoff.kind {
        if values.len() != nodes.len() {
            return Err(Error::invalid(
                "payoff.values",
                "length must equal the number of grid nodes",
            ));
        }
        return Ok(values.clone());
    }
    let out = nodes
        .iter()
        .map(|&node| match domain {
            Domain::Price => payoff.at_price(node, None),
            Domain::LogPrice => payoff.at_price(libm::exp(node), Some(node)),
        })
        .collect();
    Ok(out)
}
