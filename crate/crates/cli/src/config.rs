//! JSON run configuration.
//!
//! ```json
//! { "t0": 0, "y0": 0.5, "phi": {"type": "power", "exponent": 2},
//!   "f": {"poly": [1]}, "g": {"poly": [0]}, "gauge": {"type": "unit"},
//!   "N": 30, "grid": {"min": -0.5, "max": 0.5, "count": 21},
//!   "oracle": "rk", "tol": 1e-8 }
//! ```
//!
//! Only `y0` and `phi` are required. Polynomials are coefficient arrays,
//! lowest degree first.

use std::path::PathBuf;

use carleman_core::{resolve_gauge, ExampleId, Gauge, PhiSpec, ProblemSpec, TaylorPoly};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

pub const DEFAULT_N: usize = 30;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_GRID_COUNT: usize = 21;
pub const DEFAULT_GRID_HALF_WIDTH: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
#[error("config error at {path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    #[serde(default)]
    t0: f64,
    y0: f64,
    phi: Value,
    f: Option<PolyDoc>,
    g: Option<PolyDoc>,
    gauge: Option<Value>,
    #[serde(rename = "N")]
    n: Option<usize>,
    grid: Option<GridDoc>,
    oracle: Option<OracleDoc>,
    tol: Option<f64>,
}

// Tagged objects are dispatched by hand: serde's internally tagged enums
// buffer their content and lose the path of nested errors.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerDoc {
    exponent: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmptyDoc {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoeffsDoc {
    coeffs: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesDoc {
    coeffs: Vec<f64>,
    center: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomGaugeDoc {
    a: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyDoc {
    poly: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDoc {
    min: f64,
    max: f64,
    count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum OracleDoc {
    Rk,
    Ex1,
    Ex2,
    Ex3,
    Ex4,
    None,
}

/// Reference used to judge the series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleSel {
    ClosedForm(ExampleId),
    Rk,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outputs {
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec<f64>,
    pub gauge: Gauge<f64>,
    pub n: usize,
    pub grid: Grid,
    pub tol: f64,
    pub oracle: OracleSel,
    pub outputs: Outputs,
}

impl RunConfig {
    /// Re-checks the invariants after command-line overrides.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n < 2 {
            return Err(ConfigError::at(
                "$.N",
                format!("N = {} must be >= 2", self.n),
            ));
        }
        if self.grid.count < 2 {
            return Err(ConfigError::at(
                "$.grid.count",
                "grid needs at least 2 points",
            ));
        }
        if !(self.grid.min.is_finite()
            && self.grid.max.is_finite()
            && self.grid.min < self.grid.max)
        {
            return Err(ConfigError::at("$.grid", "grid needs finite min < max"));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(ConfigError::at("$.tol", "tolerance must be positive"));
        }
        if let Gauge::Custom(a) = &self.gauge {
            if let Some(j) = a.iter().position(|x| *x == 0.0 || !x.is_finite()) {
                return Err(ConfigError::at(
                    format!("$.gauge.a[{j}]"),
                    "invalid gauge: entries must be finite and nonzero",
                ));
            }
        }
        resolve_gauge(&self.gauge, self.n)
            .map_err(|e| ConfigError::at("$.gauge", e.to_string()))?;
        Ok(())
    }
}

fn poly(doc: Option<PolyDoc>, t0: f64, path: &str) -> Result<Option<TaylorPoly<f64>>, ConfigError> {
    doc.map(|d| TaylorPoly::new(t0, d.poly).map_err(|e| ConfigError::at(path, e.to_string())))
        .transpose()
}

fn json_path(prefix: &str, inner: &serde_path_to_error::Path) -> String {
    let inner = inner.to_string();
    if inner == "." {
        prefix.to_string()
    } else {
        format!("{prefix}.{inner}")
    }
}

fn from_value<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value)
        .map_err(|e| ConfigError::at(json_path(prefix, e.path()), e.into_inner().to_string()))
}

/// Splits `{"type": tag, ...}` into the tag and the remaining object.
fn split_tag(value: Value, prefix: &str) -> Result<(String, Value), ConfigError> {
    let Value::Object(mut map) = value else {
        return Err(ConfigError::at(
            prefix,
            "expected an object with a \"type\" field",
        ));
    };
    match map.remove("type") {
        Some(Value::String(tag)) => Ok((tag, Value::Object(map))),
        Some(_) => Err(ConfigError::at(
            format!("{prefix}.type"),
            "expected a string",
        )),
        None => Err(ConfigError::at(prefix, "missing field `type`")),
    }
}

fn parse_phi(value: Value, y0: f64) -> Result<PhiSpec<f64>, ConfigError> {
    const P: &str = "$.phi";
    let (tag, rest) = split_tag(value, P)?;
    let spec =
        match tag.as_str() {
            "power" => PhiSpec::power(from_value::<PowerDoc>(rest, P)?.exponent),
            "exponential" => {
                from_value::<EmptyDoc>(rest, P)?;
                Ok(PhiSpec::Exponential)
            }
            "polynomial" => PhiSpec::polynomial(from_value::<CoeffsDoc>(rest, P)?.coeffs),
            "series" => {
                let d: SeriesDoc = from_value(rest, P)?;
                PhiSpec::series_at(d.center.unwrap_or(y0), d.coeffs)
            }
            other => return Err(ConfigError::at(
                "$.phi.type",
                format!(
                    "unknown variant `{other}`, expected power, exponential, polynomial or series"
                ),
            )),
        };
    spec.map_err(|e| ConfigError::at(P, e.to_string()))
}

fn parse_gauge(value: Value) -> Result<Gauge<f64>, ConfigError> {
    const P: &str = "$.gauge";
    let (tag, rest) = split_tag(value, P)?;
    let unit = |rest| from_value::<EmptyDoc>(rest, P);
    Ok(match tag.as_str() {
        "unit" => unit(rest).map(|_| Gauge::Unit)?,
        "paper-power" => unit(rest).map(|_| Gauge::PaperPower)?,
        "paper-exp" => unit(rest).map(|_| Gauge::PaperExp)?,
        "custom" => Gauge::Custom(from_value::<CustomGaugeDoc>(rest, P)?.a),
        other => {
            return Err(ConfigError::at(
                "$.gauge.type",
                format!(
                    "unknown variant `{other}`, expected unit, paper-power, paper-exp or custom"
                ),
            ))
        }
    })
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &[u8]) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_slice(text);
    let doc: ConfigDoc = serde_path_to_error::deserialize(de)
        .map_err(|e| ConfigError::at(json_path("$", e.path()), e.into_inner().to_string()))?;

    let phi = parse_phi(doc.phi, doc.y0)?;
    let f = poly(doc.f, doc.t0, "$.f.poly")?;
    let g = poly(doc.g, doc.t0, "$.g.poly")?;
    let problem = ProblemSpec::new(doc.t0, doc.y0, phi, f, g)
        .map_err(|e| ConfigError::at("$", e.to_string()))?;

    let gauge = doc
        .gauge
        .map(parse_gauge)
        .transpose()?
        .unwrap_or(Gauge::Unit);
    let grid = doc.grid.map_or(
        Grid {
            min: doc.t0 - DEFAULT_GRID_HALF_WIDTH,
            max: doc.t0 + DEFAULT_GRID_HALF_WIDTH,
            count: DEFAULT_GRID_COUNT,
        },
        |g| Grid {
            min: g.min,
            max: g.max,
            count: g.count,
        },
    );
    let oracle = match doc.oracle.unwrap_or(OracleDoc::Rk) {
        OracleDoc::Rk => OracleSel::Rk,
        OracleDoc::None => OracleSel::None,
        OracleDoc::Ex1 => OracleSel::ClosedForm(ExampleId::Ex1LinearForced),
        OracleDoc::Ex2 => OracleSel::ClosedForm(ExampleId::Ex2Quadratic),
        OracleDoc::Ex3 => OracleSel::ClosedForm(ExampleId::Ex3Exponential),
        OracleDoc::Ex4 => OracleSel::ClosedForm(ExampleId::Ex4QuadraticTimesT),
    };
    let cfg = RunConfig {
        problem,
        gauge,
        n: doc.n.unwrap_or(DEFAULT_N),
        grid,
        tol: doc.tol.unwrap_or(DEFAULT_TOL),
        oracle,
        outputs: Outputs::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}
