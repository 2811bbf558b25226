//! Run configuration: a TOML document with sections `market`, `payoff`,
//! `grid`, `scheme`, `target` and `output`, plus `key.path=value` overrides.

use std::path::PathBuf;

use gopt_core::{
    build_grid, GridSpec, MarketParams, MeshEnforcement, Method, PayoffKind, PayoffSpec,
    RightBoundary, SchemeConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::study::{DomainSetup, Level, Problem};

/// Documented schema, shown by `--help`.
pub const SCHEMA: &str = "\
CONFIG KEYS (TOML; override any of them with --set key.path=value)
  command                  price | converge | compare-domains | iterations (the subcommand wins)
  [market]
    rate                   risk-free rate r (required)
    sigma                  volatility scale applied to the band, default 1
    sigma_low              lower band edge (required)
    sigma_high             upper band edge, >= sigma_low (required)
    maturity               T > 0 (required)
  [payoff]
    type                   butterfly | digital | call | put
    k1, k2, km             butterfly strikes; km defaults to (k1+k2)/2
    strike                 digital, call and put strike
  [grid]
    x_min, x_max           truncation in the coordinates of the method:
                           ln S for explicit_x/implicit_x (default -10, 10), S for explicit_s (default 50, 150)
    steps, intervals       time steps N and spatial intervals M (price, iterations)
    ladder                 converge levels as [[N, M], ...]
    reference              converge reference grid [N, M], default [16384, 20480]
    s_min, s_max           compare-domains price truncation, default 50, 150
    m_list                 compare-domains interval counts, default [200, 400, 800]
  [scheme]
    method                 explicit_x | implicit_x | explicit_s, default implicit_x
    picard_tol             Picard increment tolerance, default 1e-6
    picard_max_iters       Picard sweep cap, default 100
    enforce_mesh_conditions  error | warn | ignore, default error
  [target]
    spot                   evaluation price S0, default 100
  [output]
    path                   output file, stdout when absent
    format                 csv | json, default csv
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    #[default]
    Price,
    Converge,
    CompareDomains,
    Iterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Command,
    pub market: MarketSection,
    pub payoff: PayoffSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub target: TargetSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    pub rate: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    pub sigma_low: f64,
    pub sigma_high: f64,
    pub maturity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum PayoffSection {
    Butterfly {
        k1: f64,
        k2: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        km: Option<f64>,
    },
    Digital {
        strike: f64,
    },
    Call {
        strike: f64,
    },
    Put {
        strike: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<[usize; 2]>>,
    #[serde(default = "default_reference")]
    pub reference: [usize; 2],
    #[serde(default = "default_s_min")]
    pub s_min: f64,
    #[serde(default = "default_s_max")]
    pub s_max: f64,
    #[serde(default = "default_m_list")]
    pub m_list: Vec<usize>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            x_min: None,
            x_max: None,
            steps: None,
            intervals: None,
            ladder: None,
            reference: default_reference(),
            s_min: default_s_min(),
            s_max: default_s_max(),
            m_list: default_m_list(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_picard_max_iters")]
    pub picard_max_iters: usize,
    #[serde(default = "default_enforcement")]
    pub enforce_mesh_conditions: MeshEnforcement,
}

impl Default for SchemeSection {
    fn default() -> Self {
        SchemeSection {
            method: default_method(),
            picard_tol: default_picard_tol(),
            picard_max_iters: default_picard_max_iters(),
            enforce_mesh_conditions: default_enforcement(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    #[serde(default = "default_spot")]
    pub spot: f64,
}

impl Default for TargetSection {
    fn default() -> Self {
        TargetSection { spot: default_spot() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

fn one() -> f64 {
    1.0
}
fn default_reference() -> [usize; 2] {
    [16384, 20480]
}
fn default_s_min() -> f64 {
    50.0
}
fn default_s_max() -> f64 {
    150.0
}
fn default_m_list() -> Vec<usize> {
    vec![200, 400, 800]
}
fn default_method() -> Method {
    Method::ImplicitX
}
fn default_picard_tol() -> f64 {
    1e-6
}
fn default_picard_max_iters() -> usize {
    100
}
fn default_enforcement() -> MeshEnforcement {
    MeshEnforcement::Error
}
fn default_spot() -> f64 {
    100.0
}

/// Parses and validates a configuration document.
pub fn parse_config(source: &str) -> Result<RunConfig> {
    let config: RunConfig = toml::from_str(source).map_err(|e| Error::ConfigParse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Parses a document, applies `key.path=value` overrides, then validates.
pub fn parse_config_with_overrides(source: &str, overrides: &[String]) -> Result<RunConfig> {
    if overrides.is_empty() {
        return parse_config(source);
    }
    let mut doc: toml::Table = source
        .parse()
        .map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let config: RunConfig = doc
        .try_into()
        .map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Sets `key.path=value` in a document. The value is read as a TOML value and
/// falls back to a plain string.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::ConfigParse(format!("override `{assignment}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').map(str::trim).collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::ConfigParse(format!("override `{assignment}` has an empty key")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));

    let (last, parents) = keys.split_last().expect("at least one key");
    let mut table = doc;
    for key in parents {
        let entry = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::ConfigParse(format!("override `{assignment}`: `{key}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// Serializes a configuration back to TOML.
pub fn render(config: &RunConfig) -> String {
    toml::to_string(config).expect("configurations always serialize")
}

impl RunConfig {
    /// Re-validates every section, naming the offending key on failure.
    pub fn validate(&self) -> Result<()> {
        self.market_params()?;
        self.payoff_spec()?;
        self.scheme_config()?;
        if !(self.target.spot.is_finite() && self.target.spot > 0.0) {
            return Err(Error::invalid("target.spot", "must be positive and finite"));
        }
        let g = &self.grid;
        if let (Some(lo), Some(hi)) = (g.x_min, g.x_max) {
            if !(lo < hi) {
                return Err(Error::invalid("grid.x_min", "must be below grid.x_max"));
            }
        }
        if g.steps == Some(0) {
            return Err(Error::invalid("grid.steps", "must be at least 1"));
        }
        if matches!(g.intervals, Some(m) if m < 2) {
            return Err(Error::invalid("grid.intervals", "must be at least 2"));
        }
        if let Some(ladder) = &g.ladder {
            if ladder.iter().any(|&[n, m]| n == 0 || m < 2) {
                return Err(Error::invalid("grid.ladder", "levels need N >= 1 and M >= 2"));
            }
        }
        if g.reference[0] == 0 || g.reference[1] < 2 {
            return Err(Error::invalid("grid.reference", "needs N >= 1 and M >= 2"));
        }
        if !(g.s_min > 0.0 && g.s_min < g.s_max && g.s_max.is_finite()) {
            return Err(Error::invalid("grid.s_min", "need 0 < s_min < s_max"));
        }
        if g.m_list.iter().any(|&m| m < 2) {
            return Err(Error::invalid("grid.m_list", "entries must be at least 2"));
        }
        Ok(())
    }

    pub fn market_params(&self) -> Result<MarketParams> {
        let m = &self.market;
        MarketParams::new(m.rate, m.sigma, m.sigma_low, m.sigma_high, m.maturity)
            .map_err(|e| field_error("market", e))
    }

    pub fn payoff_spec(&self) -> Result<PayoffSpec> {
        let spec = match self.payoff {
            PayoffSection::Butterfly { k1, k2, km: None } => PayoffSpec::butterfly(k1, k2),
            PayoffSection::Butterfly { k1, k2, km: Some(km) } => {
                PayoffSpec::new(PayoffKind::Butterfly { k1, km, k2 }, RightBoundary::Zero)
            }
            PayoffSection::Digital { strike } => PayoffSpec::digital(strike),
            PayoffSection::Call { strike } => PayoffSpec::call(strike),
            PayoffSection::Put { strike } => PayoffSpec::put(strike),
        };
        spec.map_err(|e| field_error("payoff", e))
    }

    pub fn scheme_config(&self) -> Result<SchemeConfig> {
        let s = &self.scheme;
        let cfg = SchemeConfig {
            picard_tol: s.picard_tol,
            picard_max_iters: s.picard_max_iters,
            ..SchemeConfig::new(s.method).with_enforcement(s.enforce_mesh_conditions)
        };
        cfg.validate().map_err(|e| field_error("scheme", e))?;
        Ok(cfg)
    }

    /// Truncation in the coordinates of the configured method.
    pub fn domain(&self) -> (f64, f64) {
        let (lo, hi) = match self.scheme.method {
            Method::ExplicitS => (self.grid.s_min, self.grid.s_max),
            _ => (-10.0, 10.0),
        };
        (self.grid.x_min.unwrap_or(lo), self.grid.x_max.unwrap_or(hi))
    }

    /// Evaluation point in the coordinates of the configured method.
    pub fn target_coordinate(&self) -> f64 {
        match self.scheme.method {
            Method::ExplicitS => self.target.spot,
            _ => self.target.spot.ln(),
        }
    }

    /// Single-run grid for `price` and `iterations`.
    pub fn grid_spec(&self) -> Result<GridSpec> {
        let steps = self
            .grid
            .steps
            .ok_or_else(|| Error::invalid("grid.steps", "required for this command"))?;
        let intervals = self
            .grid
            .intervals
            .ok_or_else(|| Error::invalid("grid.intervals", "required for this command"))?;
        let (lo, hi) = self.domain();
        build_grid(lo, hi, intervals, steps, self.market.maturity).map_err(|e| field_error("grid", e))
    }

    pub fn problem(&self) -> Result<Problem> {
        let (x_min, x_max) = self.domain();
        Ok(Problem {
            payoff: self.payoff_spec()?,
            params: self.market_params()?,
            x_min,
            x_max,
            target: self.target_coordinate(),
        })
    }

    pub fn ladder(&self) -> Result<Vec<Level>> {
        let ladder = self
            .grid
            .ladder
            .as_ref()
            .ok_or_else(|| Error::invalid("grid.ladder", "required for converge"))?;
        Ok(ladder.iter().map(|&[n, m]| Level::new(n, m)).collect())
    }

    pub fn reference_level(&self) -> Level {
        Level::new(self.grid.reference[0], self.grid.reference[1])
    }

    pub fn domain_setup(&self) -> Result<DomainSetup> {
        DomainSetup::new(
            self.payoff_spec()?,
            self.market_params()?,
            self.grid.s_min,
            self.grid.s_max,
            self.target.spot,
        )
    }
}

fn field_error(section: &str, e: gopt_core::Error) -> Error {
    match e {
        gopt_core::Error::InvalidParameter { field, reason } => {
            Error::invalid(format!("{section}.{field}"), reason)
        }
        gopt_core::Error::NonFinite(field) => Error::invalid(format!("{section}.{field}"), "must be finite"),
        other => Error::invalid(section, other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[market]
rate = 0.1
sigma_low = 0.15
sigma_high = 0.25
maturity = 0.25

[payoff]
type = "butterfly"
k1 = 90.0
k2 = 110.0

[scheme]
method = "implicit_x"
"#;

    #[test]
    fn minimal_butterfly() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.command, Command::Price);
        assert_eq!(c.scheme.picard_tol, 1e-6);
        assert_eq!(c.scheme.picard_max_iters, 100);
        assert_eq!(c.market.sigma, 1.0);
        assert_eq!(c.target.spot, 100.0);
        assert_eq!(c.domain(), (-10.0, 10.0));
        assert!((c.target_coordinate() - 2.0 * 10f64.ln()).abs() < 1e-15);
        assert_eq!(c.payoff_spec().unwrap(), PayoffSpec::butterfly(90.0, 110.0).unwrap());
    }

    #[test]
    fn reversed_band_names_field() {
        let src = MINIMAL.replace("sigma_low = 0.15", "sigma_low = 0.35");
        let err = parse_config(&src).unwrap_err();
        assert!(err.to_string().contains("sigma_band"), "{err}");
        assert_eq!(err.kind(), "invalid");
    }

    #[test]
    fn unknown_key_is_named() {
        let src = MINIMAL.replace("maturity = 0.25", "maturity = 0.25\nvolatility = 0.2");
        let err = parse_config(&src).unwrap_err();
        assert!(err.to_string().contains("volatility"), "{err}");
        let src = MINIMAL.replace("k2 = 110.0", "k2 = 110.0\nk3 = 1.0");
        assert!(parse_config(&src).unwrap_err().to_string().contains("k3"));
    }

    #[test]
    fn parse_error_has_position() {
        let err = parse_config("[market]\nrate = = 1\n").unwrap_err();
        assert_eq!(err.kind(), "parse");
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn overrides() {
        let c = parse_config_with_overrides(
            MINIMAL,
            &[
                "market.rate=0.05".into(),
                "grid.ladder=[[16,160],[64,320]]".into(),
                "output.path=out.csv".into(),
                "command=converge".into(),
                "scheme.method=explicit_x".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.market.rate, 0.05);
        assert_eq!(c.command, Command::Converge);
        assert_eq!(c.scheme.method, Method::ExplicitX);
        assert_eq!(c.grid.ladder, Some(vec![[16, 160], [64, 320]]));
        assert_eq!(c.output.path, Some(PathBuf::from("out.csv")));
        assert!(parse_config_with_overrides(MINIMAL, &["market.bogus=1".into()]).is_err());
        assert!(parse_config_with_overrides(MINIMAL, &["market".into()]).is_err());
    }

    #[test]
    fn render_round_trip() {
        let mut c = parse_config(MINIMAL).unwrap();
        c.grid.ladder = Some(vec![[16, 160], [64, 320]]);
        c.output.path = Some("x.json".into());
        c.output.format = Format::Json;
        assert_eq!(parse_config(&render(&c)).unwrap(), c);
    }
}
