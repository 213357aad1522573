//! Domain types shared across the crate: calendar periods, series, segmented
//! datasets and the analysis configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::Sign;
use crate::error::{Error, Result};
use crate::stationarity::{AdfSpec, CriticalLevel};

/// A calendar month, stored as a month ordinal (`year * 12 + month - 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Period(i64);

impl Period {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Config(format!("month {month} out of range 1..=12")));
        }
        Ok(Period(year as i64 * 12 + month as i64 - 1))
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12) as i32
    }

    pub fn month(self) -> u32 {
        (self.0.rem_euclid(12) + 1) as u32
    }

    pub fn ordinal(self) -> i64 {
        self.0
    }

    pub fn advance(self, frequency: Frequency, steps: i64) -> Period {
        Period(self.0 + frequency.months() * steps)
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

impl FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("malformed period `{s}`, expected YYYY-MM"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        Period::new(year, month).map_err(|_| bad())
    }
}

impl Serialize for Period {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Period {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Spacing between consecutive observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    #[default]
    Monthly,
    Quarterly,
    Annual,
}

impl Frequency {
    pub fn months(self) -> i64 {
        match self {
            Frequency::Monthly => 1,
            Frequency::Quarterly => 3,
            Frequency::Annual => 12,
        }
    }
}

/// An equally spaced real-valued series that remembers how many times it has
/// been first-differenced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    label: String,
    start: Period,
    frequency: Frequency,
    values: Vec<f64>,
    diff_order: u32,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, start: Period, values: Vec<f64>) -> Result<Self> {
        Self::with_frequency(label, start, Frequency::Monthly, values)
    }

    pub fn with_frequency(
        label: impl Into<String>,
        start: Period,
        frequency: Frequency,
        values: Vec<f64>,
    ) -> Result<Self> {
        let label = label.into();
        if values.is_empty() {
            return Err(Error::DegenerateSeries(format!("`{label}` is empty")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::DegenerateSeries(format!(
                "`{label}` has a non-finite value at index {i}"
            )));
        }
        Ok(TimeSeries {
            label,
            start,
            frequency,
            values,
            diff_order: 0,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn start(&self) -> Period {
        self.start
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn diff_order(&self) -> u32 {
        self.diff_order
    }

    pub fn end(&self) -> Period {
        self.start.advance(self.frequency, self.values.len() as i64 - 1)
    }

    /// First difference: `out[t] = values[t + 1] - values[t]`.
    pub fn difference(&self) -> Result<TimeSeries> {
        if self.values.len() < 2 {
            return Err(Error::DegenerateSeries(format!(
                "`{}` has {} observation(s); differencing needs at least 2",
                self.label,
                self.values.len()
            )));
        }
        Ok(TimeSeries {
            label: self.label.clone(),
            start: self.start.advance(self.frequency, 1),
            frequency: self.frequency,
            values: self.values.windows(2).map(|w| w[1] - w[0]).collect(),
            diff_order: self.diff_order + 1,
        })
    }

    /// Differences `times` times in a row.
    pub fn difference_n(&self, times: u32) -> Result<TimeSeries> {
        let mut out = self.clone();
        for _ in 0..times {
            out = out.difference()?;
        }
        Ok(out)
    }
}

/// A way of partitioning visitors, e.g. by traffic source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentDimension {
    name: String,
    levels: Vec<String>,
}

impl SegmentDimension {
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        levels: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let name = name.into();
        let levels: Vec<String> = levels.into_iter().map(Into::into).collect();
        if levels.len() < 2 {
            return Err(Error::Config(format!(
                "dimension `{name}` needs at least 2 levels, got {}",
                levels.len()
            )));
        }
        for (i, l) in levels.iter().enumerate() {
            if levels[..i].contains(l) {
                return Err(Error::Config(format!(
                    "dimension `{name}` lists level `{l}` twice"
                )));
            }
        }
        Ok(SegmentDimension { name, levels })
    }

    pub fn source() -> Self {
        Self::new("source", ["search", "direct", "referral"]).expect("static levels")
    }

    pub fn speed() -> Self {
        Self::new("speed", ["unknown", "dsl", "cable", "t1", "dialup", "oc3"])
            .expect("static levels")
    }

    pub fn visitor_type() -> Self {
        Self::new("type", ["new", "returning"]).expect("static levels")
    }

    pub fn defaults() -> Vec<Self> {
        vec![Self::source(), Self::speed(), Self::visitor_type()]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }
}

/// Visits and page views of one level, as raw counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCounts {
    pub level: String,
    pub visits: Vec<i64>,
    pub pageviews: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionCounts {
    pub name: String,
    pub levels: Vec<LevelCounts>,
}

impl DimensionCounts {
    pub fn dimension(&self) -> Result<SegmentDimension> {
        SegmentDimension::new(self.name.clone(), self.levels.iter().map(|l| l.level.clone()))
    }

    pub fn level(&self, name: &str) -> Option<&LevelCounts> {
        self.levels.iter().find(|l| l.level == name)
    }
}

/// Per-period visit and page-view counts for every level of every dimension,
/// plus total page views.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedDataset {
    start: Period,
    frequency: Frequency,
    dimensions: Vec<DimensionCounts>,
    total_pageviews: Vec<i64>,
}

impl SegmentedDataset {
    /// Builds a dataset. Only shape is checked here (equal lengths, unique
    /// names); additivity is the job of [`validate_dataset`].
    pub fn new(
        start: Period,
        frequency: Frequency,
        dimensions: Vec<DimensionCounts>,
        total_pageviews: Vec<i64>,
    ) -> Result<Self> {
        let n = total_pageviews.len();
        if n == 0 {
            return Err(Error::DegenerateSeries("dataset has no periods".into()));
        }
        if dimensions.is_empty() {
            return Err(Error::Config("dataset has no dimensions".into()));
        }
        for (i, d) in dimensions.iter().enumerate() {
            if dimensions[..i].iter().any(|o| o.name == d.name) {
                return Err(Error::Config(format!("dimension `{}` appears twice", d.name)));
            }
            d.dimension()?;
            for l in &d.levels {
                if l.visits.len() != n || l.pageviews.len() != n {
                    return Err(Error::Config(format!(
                        "series for {}/{} have {}/{} values, expected {n}",
                        d.name,
                        l.level,
                        l.visits.len(),
                        l.pageviews.len()
                    )));
                }
            }
        }
        Ok(SegmentedDataset {
            start,
            frequency,
            dimensions,
            total_pageviews,
        })
    }

    /// Builds a dataset whose total page views are the level sum of the first
    /// dimension.
    pub fn from_dimensions(
        start: Period,
        frequency: Frequency,
        dimensions: Vec<DimensionCounts>,
    ) -> Result<Self> {
        let first = dimensions
            .first()
            .ok_or_else(|| Error::Config("dataset has no dimensions".into()))?;
        let n = first.levels.first().map_or(0, |l| l.pageviews.len());
        let totals = (0..n)
            .map(|t| first.levels.iter().map(|l| l.pageviews[t]).sum())
            .collect();
        Self::new(start, frequency, dimensions, totals)
    }

    pub fn len(&self) -> usize {
        self.total_pageviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total_pageviews.is_empty()
    }

    pub fn start(&self) -> Period {
        self.start
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn periods(&self) -> Vec<Period> {
        (0..self.len() as i64)
            .map(|i| self.start.advance(self.frequency, i))
            .collect()
    }

    pub fn end(&self) -> Period {
        self.start.advance(self.frequency, self.len() as i64 - 1)
    }

    pub fn dimensions(&self) -> &[DimensionCounts] {
        &self.dimensions
    }

    pub fn dimension(&self, name: &str) -> Result<&DimensionCounts> {
        self.dimensions
            .iter()
            .find(|d| d.name == name)
            .ok_or_else(|| Error::Config(format!("dimension `{name}` not in dataset")))
    }

    pub fn total_pageviews(&self) -> &[i64] {
        &self.total_pageviews
    }

    fn level(&self, dimension: &str, level: &str) -> Result<&LevelCounts> {
        self.dimension(dimension)?
            .level(level)
            .ok_or_else(|| Error::Config(format!("level `{level}` not in dimension `{dimension}`")))
    }

    fn series(&self, label: String, counts: &[i64]) -> Result<TimeSeries> {
        TimeSeries::with_frequency(
            label,
            self.start,
            self.frequency,
            counts.iter().map(|&c| c as f64).collect(),
        )
    }

    pub fn visits(&self, dimension: &str, level: &str) -> Result<TimeSeries> {
        let l = self.level(dimension, level)?;
        self.series(format!("{dimension}/{level} visits"), &l.visits)
    }

    pub fn pageviews(&self, dimension: &str, level: &str) -> Result<TimeSeries> {
        let l = self.level(dimension, level)?;
        self.series(format!("{dimension}/{level} pageviews"), &l.pageviews)
    }

    pub fn total_pageview_series(&self) -> Result<TimeSeries> {
        self.series("PAGEVIEWS".into(), &self.total_pageviews)
    }

    /// Per-period visit totals of a dimension.
    pub fn total_visits(&self, dimension: &str) -> Result<Vec<i64>> {
        let d = self.dimension(dimension)?;
        Ok((0..self.len())
            .map(|t| d.levels.iter().map(|l| l.visits[t]).sum())
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountField {
    Visits,
    Pageviews,
    TotalPageviews,
}

impl fmt::Display for CountField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountField::Visits => "visits",
            CountField::Pageviews => "pageviews",
            CountField::TotalPageviews => "total pageviews",
        })
    }
}

/// One broken dataset invariant, with its coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Level page views of a dimension do not add up to the total.
    Additivity {
        period: Period,
        dimension: String,
        level_sum: i64,
        total: i64,
    },
    /// A dimension partitions a different number of visits than the first one.
    VisitTotals {
        period: Period,
        dimension: String,
        visits: i64,
        reference_dimension: String,
        reference_visits: i64,
    },
    NegativeCount {
        period: Period,
        dimension: Option<String>,
        level: Option<String>,
        field: CountField,
        value: i64,
    },
}

impl Violation {
    pub fn period(&self) -> Period {
        match self {
            Violation::Additivity { period, .. }
            | Violation::VisitTotals { period, .. }
            | Violation::NegativeCount { period, .. } => *period,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Additivity {
                period,
                dimension,
                level_sum,
                total,
            } => write!(
                f,
                "{period} {dimension}: level page views sum to {level_sum}, total is {total}"
            ),
            Violation::VisitTotals {
                period,
                dimension,
                visits,
                reference_dimension,
                reference_visits,
            } => write!(
                f,
                "{period} {dimension}: {visits} visits, but {reference_dimension} has {reference_visits}"
            ),
            Violation::NegativeCount {
                period,
                dimension,
                level,
                field,
                value,
            } => {
                write!(f, "{period}")?;
                if let Some(d) = dimension {
                    write!(f, " {d}")?;
                }
                if let Some(l) = level {
                    write!(f, "/{l}")?;
                }
                write!(f, ": negative count {value} in {field}")
            }
        }
    }
}

/// Checks non-negativity, per-dimension page-view additivity and cross-dimension
/// visit agreement. Arithmetic is exact.
pub fn validate_dataset(dataset: &SegmentedDataset) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let periods = dataset.periods();
    for (t, &period) in periods.iter().enumerate() {
        if dataset.total_pageviews[t] < 0 {
            out.push(Violation::NegativeCount {
                period,
                dimension: None,
                level: None,
                field: CountField::TotalPageviews,
                value: dataset.total_pageviews[t],
            });
        }
        for d in &dataset.dimensions {
            for l in &d.levels {
                for (field, v) in [
                    (CountField::Visits, l.visits[t]),
                    (CountField::Pageviews, l.pageviews[t]),
                ] {
                    if v < 0 {
                        out.push(Violation::NegativeCount {
                            period,
                            dimension: Some(d.name.clone()),
                            level: Some(l.level.clone()),
                            field,
                            value: v,
                        });
                    }
                }
            }
        }
    }
    for (t, &period) in periods.iter().enumerate() {
        let total = dataset.total_pageviews[t];
        let mut reference: Option<(&str, i64)> = None;
        for d in &dataset.dimensions {
            let level_sum: i64 = d.levels.iter().map(|l| l.pageviews[t]).sum();
            if level_sum != total {
                out.push(Violation::Additivity {
                    period,
                    dimension: d.name.clone(),
                    level_sum,
                    total,
                });
            }
            let visits: i64 = d.levels.iter().map(|l| l.visits[t]).sum();
            match reference {
                None => reference = Some((&d.name, visits)),
                Some((name, reference_visits)) if reference_visits != visits => {
                    out.push(Violation::VisitTotals {
                        period,
                        dimension: d.name.clone(),
                        visits,
                        reference_dimension: name.to_string(),
                        reference_visits,
                    })
                }
                Some(_) => {}
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Knobs of a full analysis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub alpha: f64,
    pub r2_threshold: f64,
    pub max_diff_order: u32,
    pub adf_spec: AdfSpec,
    pub adf_lags: usize,
    pub adf_level: CriticalLevel,
    pub bg_lags: usize,
    /// Expected slope signs keyed by level name; unlisted levels expect positive.
    pub expected_signs: BTreeMap<String, Sign>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            alpha: 0.05,
            r2_threshold: 0.5,
            max_diff_order: 2,
            adf_spec: AdfSpec::Constant,
            adf_lags: 0,
            adf_level: CriticalLevel::Ten,
            bg_lags: 2,
            expected_signs: BTreeMap::new(),
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha {} not in (0, 1)", self.alpha)));
        }
        if !(self.r2_threshold > 0.0 && self.r2_threshold < 1.0) {
            return Err(Error::Config(format!(
                "r2 threshold {} not in (0, 1)",
                self.r2_threshold
            )));
        }
        if self.bg_lags == 0 {
            return Err(Error::Config("bg_lags must be positive".into()));
        }
        Ok(())
    }

    pub fn expected_sign(&self, level: &str) -> Sign {
        self.expected_signs
            .get(level)
            .copied()
            .unwrap_or(Sign::Positive)
    }
}
