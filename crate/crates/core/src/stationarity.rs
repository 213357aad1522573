//! Augmented Dickey-Fuller testing and the difference-until-stationary
//! transform.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnalysisConfig, TimeSeries};
use crate::ols::fit_ols;

const LAGGED_LEVEL: &str = "Y(-1)";

/// Smallest regression size the response surface is defined for.
pub const MIN_SURFACE_OBSERVATIONS: usize = 10;

static SHIPPED_TABLE: &str = include_str!("../data/adf_critical_values.txt");

/// Deterministic terms of the test regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdfSpec {
    None,
    #[default]
    Constant,
    /// Constant plus linear trend.
    Trend,
}

impl AdfSpec {
    fn deterministic_terms(self) -> usize {
        match self {
            AdfSpec::None => 0,
            AdfSpec::Constant => 1,
            AdfSpec::Trend => 2,
        }
    }
}

impl fmt::Display for AdfSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdfSpec::None => "none",
            AdfSpec::Constant => "constant",
            AdfSpec::Trend => "trend",
        })
    }
}

impl FromStr for AdfSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "nc" => Ok(AdfSpec::None),
            "constant" | "c" => Ok(AdfSpec::Constant),
            "trend" | "ct" | "constant+trend" => Ok(AdfSpec::Trend),
            other => Err(Error::Config(format!("unknown ADF spec `{other}`"))),
        }
    }
}

/// Significance level of a critical value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum CriticalLevel {
    #[serde(rename = "1%")]
    One,
    #[serde(rename = "5%")]
    Five,
    #[default]
    #[serde(rename = "10%")]
    Ten,
}

impl CriticalLevel {
    pub fn percent(self) -> u32 {
        match self {
            CriticalLevel::One => 1,
            CriticalLevel::Five => 5,
            CriticalLevel::Ten => 10,
        }
    }

    pub const ALL: [CriticalLevel; 3] = [CriticalLevel::One, CriticalLevel::Five, CriticalLevel::Ten];
}

impl fmt::Display for CriticalLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}%", self.percent())
    }
}

impl FromStr for CriticalLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().trim_end_matches('%') {
            "1" => Ok(CriticalLevel::One),
            "5" => Ok(CriticalLevel::Five),
            "10" => Ok(CriticalLevel::Ten),
            other => Err(Error::Config(format!(
                "unsupported critical level `{other}`, expected 1, 5 or 10"
            ))),
        }
    }
}

/// One row of the response-surface table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub spec: AdfSpec,
    pub level: CriticalLevel,
    pub b_inf: f64,
    pub b1: f64,
    pub b2: f64,
}

impl SurfaceRow {
    pub fn at(&self, n: usize) -> f64 {
        let n = n as f64;
        self.b_inf + self.b1 / n + self.b2 / (n * n)
    }
}

/// A parsed critical-value table.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalValueTable {
    pub version: u32,
    pub rows: Vec<SurfaceRow>,
}

impl CriticalValueTable {
    /// Parses the whitespace-separated `spec level b_inf b1 b2` format.
    /// `#` starts a comment; a `version N` line is required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut version = None;
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i as u64 + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let err = |column: usize, message: String| Error::Parse {
                line: line_no,
                column,
                message,
            };
            if fields[0] == "version" {
                let v = fields
                    .get(1)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| err(2, "expected an integer version".into()))?;
                version = Some(v);
                continue;
            }
            if fields.len() != 5 {
                return Err(err(1, format!("expected 5 fields, found {}", fields.len())));
            }
            let spec = fields[0].parse().map_err(|e: Error| err(1, e.to_string()))?;
            let level = fields[1].parse().map_err(|e: Error| err(2, e.to_string()))?;
            let mut coef = [0.0; 3];
            for (j, c) in coef.iter_mut().enumerate() {
                *c = fields[2 + j]
                    .parse()
                    .map_err(|_| err(3 + j, format!("bad coefficient `{}`", fields[2 + j])))?;
            }
            rows.push(SurfaceRow {
                spec,
                level,
                b_inf: coef[0],
                b1: coef[1],
                b2: coef[2],
            });
        }
        let version = version.ok_or_else(|| Error::Parse {
            line: 0,
            column: 0,
            message: "critical value table has no version line".into(),
        })?;
        Ok(CriticalValueTable { version, rows })
    }

    pub fn row(&self, spec: AdfSpec, level: CriticalLevel) -> Result<&SurfaceRow> {
        self.rows
            .iter()
            .find(|r| r.spec == spec && r.level == level)
            .ok_or_else(|| Error::Config(format!("no critical values for spec {spec} at {level}")))
    }
}

/// The table compiled into the crate.
pub fn shipped_table() -> &'static CriticalValueTable {
    static TABLE: OnceLock<CriticalValueTable> = OnceLock::new();
    TABLE.get_or_init(|| CriticalValueTable::parse(SHIPPED_TABLE).expect("shipped table parses"))
}

/// Finite-sample Dickey-Fuller critical value for a regression with
/// `n_effective` observations.
pub fn mackinnon_critical_values(
    n_effective: usize,
    spec: AdfSpec,
    level: CriticalLevel,
) -> Result<f64> {
    if n_effective < MIN_SURFACE_OBSERVATIONS {
        return Err(Error::InsufficientObservations {
            needed: MIN_SURFACE_OBSERVATIONS - 1,
            got: n_effective,
        });
    }
    Ok(shipped_table().row(spec, level)?.at(n_effective))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub one: f64,
    pub five: f64,
    pub ten: f64,
}

impl CriticalValues {
    pub fn at(&self, level: CriticalLevel) -> f64 {
        match level {
            CriticalLevel::One => self.one,
            CriticalLevel::Five => self.five,
            CriticalLevel::Ten => self.ten,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    /// t-ratio on the lagged level.
    pub statistic: f64,
    pub critical_values: CriticalValues,
    pub spec: AdfSpec,
    pub lags: usize,
    pub n_effective: usize,
    pub level: CriticalLevel,
    pub reject_unit_root: bool,
}

impl AdfResult {
    /// Left-tail decision rule.
    pub fn decide(statistic: f64, critical_value: f64) -> bool {
        statistic < critical_value
    }
}

/// Runs `Δy_t = det + ρ·y_{t−1} + Σ φ_i·Δy_{t−i} + ε_t` and reports the
/// t-ratio on `ρ`.
///
/// Samples shorter than the response surface's domain are compared against
/// the critical value at its smallest supported size.
pub fn adf_test(
    series: &TimeSeries,
    spec: AdfSpec,
    lags: usize,
    level: CriticalLevel,
) -> Result<AdfResult> {
    let y = series.values();
    let n = y.len();
    let params = 1 + lags + spec.deterministic_terms();
    let n_effective = n.saturating_sub(1 + lags);
    if n_effective <= params {
        return Err(Error::InsufficientObservations {
            needed: params + 1 + lags,
            got: n,
        });
    }
    if y.iter().all(|v| *v == y[0]) {
        return Err(Error::DegenerateSeries(format!(
            "`{}` is constant",
            series.label()
        )));
    }

    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    // Rows are indexed by the position t of Δy_t in `dy`, t = lags..n−1.
    let rows = lags..dy.len();
    let response = TimeSeries::with_frequency(
        format!("D({})", series.label()),
        series.start().advance(series.frequency(), 1 + lags as i64),
        series.frequency(),
        dy[rows.clone()].to_vec(),
    )?;
    let lagged_level: Vec<f64> = rows.clone().map(|t| y[t]).collect();
    let lag_diffs: Vec<(String, Vec<f64>)> = (1..=lags)
        .map(|i| (format!("D(Y(-{i}))"), rows.clone().map(|t| dy[t - i]).collect()))
        .collect();
    let trend: Vec<f64> = rows.clone().map(|t| (t + 1) as f64).collect();

    let mut regressors: Vec<(&str, &[f64])> = vec![(LAGGED_LEVEL, &lagged_level)];
    regressors.extend(lag_diffs.iter().map(|(n, v)| (n.as_str(), v.as_slice())));
    if spec == AdfSpec::Trend {
        regressors.push(("@TREND", &trend));
    }

    let fit = fit_ols(&regressors, &response, spec != AdfSpec::None)?;
    let statistic = fit
        .coefficient(LAGGED_LEVEL)
        .and_then(|c| c.t_statistic)
        .ok_or_else(|| {
            Error::DegenerateSeries(format!(
                "test regression for `{}` fits exactly",
                series.label()
            ))
        })?;

    let surface_n = n_effective.max(MIN_SURFACE_OBSERVATIONS);
    let critical_values = CriticalValues {
        one: mackinnon_critical_values(surface_n, spec, CriticalLevel::One)?,
        five: mackinnon_critical_values(surface_n, spec, CriticalLevel::Five)?,
        ten: mackinnon_critical_values(surface_n, spec, CriticalLevel::Ten)?,
    };
    Ok(AdfResult {
        statistic,
        critical_values,
        spec,
        lags,
        n_effective,
        level,
        reject_unit_root: AdfResult::decide(statistic, critical_values.at(level)),
    })
}

/// Per-variable outcome of the stationarity screen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityRecord {
    pub variable: String,
    pub initially_stationary: bool,
    pub diff_order_applied: u32,
    /// False when the differencing budget ran out before the test rejected.
    pub resolved: bool,
    pub passes: Vec<AdfResult>,
}

/// Tests, and differences while the unit root is not rejected, up to
/// `config.max_diff_order` times.
pub fn ensure_stationary(
    series: &TimeSeries,
    config: &AnalysisConfig,
) -> Result<(TimeSeries, StationarityRecord)> {
    let mut current = series.clone();
    let mut passes = Vec::new();
    let mut applied = 0;
    let resolved = loop {
        let result = adf_test(&current, config.adf_spec, config.adf_lags, config.adf_level)?;
        let reject = result.reject_unit_root;
        passes.push(result);
        if reject {
            break true;
        }
        if applied >= config.max_diff_order {
            break false;
        }
        current = current.difference()?;
        applied += 1;
    };
    let record = StationarityRecord {
        variable: series.label().to_string(),
        initially_stationary: passes[0].reject_unit_root,
        diff_order_applied: applied,
        resolved,
        passes,
    };
    Ok((current, record))
}
