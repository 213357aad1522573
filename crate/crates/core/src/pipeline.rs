//! Per-segment models, the composed total model and its seven-step
//! validation ledger.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    breusch_godfrey, breusch_pagan_godfrey, jarque_bera, sign_check, HeteroTestResult,
    LmTestResult, NormalityResult, SignCheckResult,
};
use crate::error::{Error, Result};
use crate::io::format_number;
use crate::model::{validate_dataset, AnalysisConfig, Period, SegmentDimension, SegmentedDataset, TimeSeries};
use crate::ols::{fit_ols, fit_restricted, RegressionResult};
use crate::stationarity::{ensure_stationary, StationarityRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedLevel {
    pub level: String,
    pub visits: TimeSeries,
    pub record: StationarityRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFit {
    pub level: String,
    pub fit: RegressionResult,
}

impl SegmentFit {
    pub fn slope(&self) -> f64 {
        self.fit
            .coefficient(&self.level)
            .map(|c| c.estimate)
            .expect("segment fit has its level's slope")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Waived,
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Waived => "waived",
            Verdict::NotApplicable => "n/a",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub verdict: Verdict,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub note: Option<String>,
}

impl StepOutcome {
    fn new(verdict: Verdict, statistic: Option<f64>, p_value: Option<f64>) -> Self {
        StepOutcome {
            verdict,
            statistic,
            p_value,
            note: None,
        }
    }

    fn not_applicable(reason: impl Into<String>) -> Self {
        StepOutcome {
            verdict: Verdict::NotApplicable,
            statistic: None,
            p_value: None,
            note: Some(reason.into()),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    Pass,
    /// Exactly one residual diagnostic (steps 5 to 7) failed; everything else held.
    FailWithNote,
    Fail,
}

impl fmt::Display for Overall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Overall::Pass => "pass",
            Overall::FailWithNote => "fail-with-note",
            Overall::Fail => "fail",
        })
    }
}

pub const STEP_NAMES: [&str; 7] = [
    "Regression fitted to data strongly",
    "Jointly significant",
    "Individually significant",
    "Coefficients follow expectation",
    "No serial correlation in the residual",
    "Homoscedasticity of the residual variance",
    "Residual normally distributed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationLedger {
    pub step1_fit: StepOutcome,
    pub step2_joint: StepOutcome,
    pub step3_individual: StepOutcome,
    pub step4_signs: StepOutcome,
    pub step5_no_serial: StepOutcome,
    pub step6_homoscedastic: StepOutcome,
    pub step7_normal: StepOutcome,
    pub overall: Overall,
    pub overall_note: Option<String>,
    pub serial: Option<LmTestResult>,
    pub heteroskedasticity: Option<HeteroTestResult>,
    pub normality: Option<NormalityResult>,
    pub signs: Vec<SignCheckResult>,
}

impl ValidationLedger {
    pub fn steps(&self) -> [&StepOutcome; 7] {
        [
            &self.step1_fit,
            &self.step2_joint,
            &self.step3_individual,
            &self.step4_signs,
            &self.step5_no_serial,
            &self.step6_homoscedastic,
            &self.step7_normal,
        ]
    }

    /// 1-based numbers of failed steps.
    pub fn failed_steps(&self) -> Vec<usize> {
        self.steps()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.verdict == Verdict::Fail)
            .map(|(i, _)| i + 1)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposedModel {
    pub dimension: String,
    /// Level name and slope carried over from its segment fit.
    pub slopes: Vec<(String, f64)>,
    /// Fixed-slope fit: only `C(1)` is estimated.
    pub intercept_fit: RegressionResult,
    /// Free-slope fit of the same regression, used for joint significance
    /// and heteroskedasticity. `None` when it could not be estimated.
    pub unrestricted_fit: Option<RegressionResult>,
    pub equation: String,
    pub ledger: ValidationLedger,
}

/// Runs every level's visits through the stationarity screen.
pub fn prepare_segment_series(
    dataset: &SegmentedDataset,
    dimension: &SegmentDimension,
    config: &AnalysisConfig,
) -> Result<Vec<PreparedLevel>> {
    dataset.dimension(dimension.name())?;
    dimension
        .levels()
        .iter()
        .map(|level| {
            let visits = dataset.visits(dimension.name(), level)?;
            let (visits, record) = ensure_stationary(&visits, config)?;
            Ok(PreparedLevel {
                level: level.clone(),
                visits,
                record,
            })
        })
        .collect()
}

/// Regresses each level's page views on its prepared visits. Page views are
/// differenced as often as the visits were.
pub fn fit_segment_models(
    dataset: &SegmentedDataset,
    dimension: &SegmentDimension,
    prepared: &[PreparedLevel],
) -> Result<Vec<SegmentFit>> {
    prepared
        .iter()
        .map(|p| {
            let pageviews = dataset
                .pageviews(dimension.name(), &p.level)?
                .difference_n(p.visits.diff_order())?;
            let fit = fit_ols(&[(p.level.as_str(), p.visits.values())], &pageviews, true)?;
            Ok(SegmentFit {
                level: p.level.clone(),
                fit,
            })
        })
        .collect()
}

/// Holds the segment slopes fixed and re-estimates one intercept for total
/// page views on the raw level visits, then validates the result.
pub fn compose_total_model(
    segment_fits: &[SegmentFit],
    dataset: &SegmentedDataset,
    dimension: &str,
    config: &AnalysisConfig,
) -> Result<ComposedModel> {
    if segment_fits.is_empty() {
        return Err(Error::Config(format!("no segment fits for `{dimension}`")));
    }
    let response = dataset.total_pageview_series()?;
    let visits: Vec<(String, Vec<f64>)> = segment_fits
        .iter()
        .map(|s| Ok((s.level.clone(), dataset.visits(dimension, &s.level)?.values().to_vec())))
        .collect::<Result<_>>()?;
    let regressors: Vec<(&str, &[f64])> = visits
        .iter()
        .map(|(n, v)| (n.as_str(), v.as_slice()))
        .collect();
    let slopes: Vec<(String, f64)> = segment_fits
        .iter()
        .map(|s| (s.level.clone(), s.slope()))
        .collect();
    let fixed: Vec<(&str, f64)> = slopes.iter().map(|(n, b)| (n.as_str(), *b)).collect();

    let intercept_fit = fit_restricted(&fixed, &regressors, &response)?;
    let unrestricted = fit_ols(&regressors, &response, true);
    let equation = render_equation(&slopes, intercept_fit.coefficients[0].estimate);
    let ledger = validate_model(&intercept_fit, unrestricted.as_ref(), segment_fits, config);

    Ok(ComposedModel {
        dimension: dimension.to_string(),
        slopes,
        intercept_fit,
        unrestricted_fit: unrestricted.ok(),
        equation,
        ledger,
    })
}

/// `PageViews = b1*level1 + b2*level2 + ... + C`
pub fn render_equation(slopes: &[(String, f64)], intercept: f64) -> String {
    let mut out = String::from("PageViews =");
    for (i, (name, b)) in slopes.iter().enumerate() {
        let sign = if *b < 0.0 { "-" } else { "+" };
        if i == 0 {
            out.push_str(&format!(" {}*{name}", format_number(*b)));
        } else {
            out.push_str(&format!(" {sign} {}*{name}", format_number(b.abs())));
        }
    }
    let sign = if intercept < 0.0 { "-" } else { "+" };
    out.push_str(&format!(" {sign} {}", format_number(intercept.abs())));
    out
}

/// Applies the seven checks. Verdicts depend only on the supplied fits and
/// `config`.
pub fn validate_model(
    composed: &RegressionResult,
    unrestricted: std::result::Result<&RegressionResult, &Error>,
    segment_fits: &[SegmentFit],
    config: &AnalysisConfig,
) -> ValidationLedger {
    let alpha = config.alpha;

    let differenced = segment_fits.iter().any(|s| s.fit.used_differenced_inputs);
    let r2 = composed.r_squared;
    let step1_fit = if r2 > config.r2_threshold {
        StepOutcome::new(Verdict::Pass, Some(r2), None)
    } else if differenced {
        StepOutcome::new(Verdict::Waived, Some(r2), None)
            .with_note("a segment model used differenced inputs")
    } else {
        StepOutcome::new(Verdict::Fail, Some(r2), None)
    };

    let step2_joint = match unrestricted {
        Ok(fit) => match &fit.f_test {
            Some(f) => StepOutcome::new(
                if f.p_value < alpha { Verdict::Pass } else { Verdict::Fail },
                f.statistic,
                Some(f.p_value),
            ),
            None => StepOutcome::not_applicable("unrestricted fit has no free slope"),
        },
        Err(e) => StepOutcome::not_applicable(format!("unrestricted fit failed: {e}")),
    };

    let slope_ps: Vec<Option<f64>> = segment_fits
        .iter()
        .flat_map(|s| s.fit.slopes().map(|c| c.p_value))
        .collect();
    let significant = slope_ps.iter().filter(|p| matches!(p, Some(p) if *p < alpha)).count();
    let share = significant as f64 / slope_ps.len().max(1) as f64;
    let step3_individual = StepOutcome::new(
        if 2 * significant > slope_ps.len() { Verdict::Pass } else { Verdict::Fail },
        Some(share),
        None,
    )
    .with_note(format!("{significant} of {} slopes significant", slope_ps.len()));

    let mut signs = Vec::new();
    let mut sign_error = None;
    for s in segment_fits {
        let expected = BTreeMap::from([(s.level.clone(), config.expected_sign(&s.level))]);
        match sign_check(&s.fit, &expected) {
            Ok(r) => signs.push(r),
            Err(e) => sign_error = Some(e),
        }
    }
    let step4_signs = match sign_error {
        Some(e) => StepOutcome::not_applicable(e.to_string()),
        None => {
            let pass = signs.iter().all(|s| s.pass);
            StepOutcome::new(if pass { Verdict::Pass } else { Verdict::Fail }, None, None)
        }
    };

    let diagnostic = |p: f64| if p >= alpha { Verdict::Pass } else { Verdict::Fail };

    let serial = breusch_godfrey(composed, config.bg_lags);
    let step5_no_serial = match &serial {
        Ok(bg) => StepOutcome::new(diagnostic(bg.chi2_p), Some(bg.obs_r_squared), Some(bg.chi2_p)),
        Err(e) => StepOutcome::not_applicable(e.to_string()),
    };

    let hetero = match unrestricted {
        Ok(fit) => breusch_pagan_godfrey(fit),
        Err(e) => Err(Error::Config(format!("unrestricted fit failed: {e}"))),
    };
    let step6_homoscedastic = match &hetero {
        Ok(h) => StepOutcome::new(diagnostic(h.chi2_p), Some(h.obs_r_squared), Some(h.chi2_p)),
        Err(e) => StepOutcome::not_applicable(e.to_string()),
    };

    let normality = jarque_bera(&composed.residuals);
    let step7_normal = match &normality {
        Ok(jb) => StepOutcome::new(diagnostic(jb.p), Some(jb.jb_statistic), Some(jb.p)),
        Err(e) => StepOutcome::not_applicable(e.to_string()),
    };

    let mut ledger = ValidationLedger {
        step1_fit,
        step2_joint,
        step3_individual,
        step4_signs,
        step5_no_serial,
        step6_homoscedastic,
        step7_normal,
        overall: Overall::Pass,
        overall_note: None,
        serial: serial.ok(),
        heteroskedasticity: hetero.ok(),
        normality: normality.ok(),
        signs,
    };
    let failed = ledger.failed_steps();
    (ledger.overall, ledger.overall_note) = match failed.as_slice() {
        [] => (Overall::Pass, None),
        [step] if *step >= 5 => (
            Overall::FailWithNote,
            Some(format!("good model except: {}", STEP_NAMES[step - 1].to_lowercase())),
        ),
        _ => (Overall::Fail, None),
    };
    ledger
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionAnalysis {
    pub dimension: String,
    pub levels: Vec<String>,
    pub stationarity: Vec<StationarityRecord>,
    pub segment_fits: Vec<SegmentFit>,
    pub composed: ComposedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DimensionOutcome {
    Analyzed(Box<DimensionAnalysis>),
    Failed { dimension: String, error: String },
}

impl DimensionOutcome {
    pub fn dimension(&self) -> &str {
        match self {
            DimensionOutcome::Analyzed(a) => &a.dimension,
            DimensionOutcome::Failed { dimension, .. } => dimension,
        }
    }

    pub fn analysis(&self) -> Option<&DimensionAnalysis> {
        match self {
            DimensionOutcome::Analyzed(a) => Some(a),
            DimensionOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub start: Period,
    pub end: Period,
    pub periods: usize,
    pub total_pageviews: i64,
    pub total_visits: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub dataset: DatasetSummary,
    pub config: AnalysisConfig,
    pub dimensions: Vec<DimensionOutcome>,
}

impl AnalysisReport {
    pub fn analysis(&self, dimension: &str) -> Option<&DimensionAnalysis> {
        self.dimensions
            .iter()
            .find(|d| d.dimension() == dimension)
            .and_then(DimensionOutcome::analysis)
    }
}

/// prepare → fit → compose → validate for one dimension.
pub fn analyze_dimension(
    dataset: &SegmentedDataset,
    dimension: &SegmentDimension,
    config: &AnalysisConfig,
) -> Result<DimensionAnalysis> {
    let prepared = prepare_segment_series(dataset, dimension, config)?;
    let segment_fits = fit_segment_models(dataset, dimension, &prepared)?;
    let composed = compose_total_model(&segment_fits, dataset, dimension.name(), config)?;
    Ok(DimensionAnalysis {
        dimension: dimension.name().to_string(),
        levels: dimension.levels().to_vec(),
        stationarity: prepared.into_iter().map(|p| p.record).collect(),
        segment_fits,
        composed,
    })
}

/// Analyzes the requested dimensions (all when `dimensions` is `None`).
/// Dimensions run concurrently; a failure in one is recorded in the report
/// and does not stop the others.
pub fn run_analysis(
    dataset: &SegmentedDataset,
    config: &AnalysisConfig,
    dimensions: Option<&[String]>,
) -> Result<AnalysisReport> {
    config.validate()?;
    validate_dataset(dataset).map_err(Error::Validation)?;

    let selected: Vec<SegmentDimension> = match dimensions {
        None => dataset
            .dimensions()
            .iter()
            .map(|d| d.dimension())
            .collect::<Result<_>>()?,
        Some(names) => names
            .iter()
            .map(|n| dataset.dimension(n)?.dimension())
            .collect::<Result<_>>()?,
    };

    let outcomes: Vec<DimensionOutcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = selected
            .iter()
            .map(|dim| scope.spawn(move || (dim.name(), analyze_dimension(dataset, dim, config))))
            .collect();
        handles
            .into_iter()
            .map(|h| match h.join().expect("dimension worker panicked") {
                (_, Ok(a)) => DimensionOutcome::Analyzed(Box::new(a)),
                (name, Err(e)) => DimensionOutcome::Failed {
                    dimension: name.to_string(),
                    error: e.to_string(),
                },
            })
            .collect()
    });

    let first = &dataset.dimensions()[0];
    Ok(AnalysisReport {
        dataset: DatasetSummary {
            start: dataset.start(),
            end: dataset.end(),
            periods: dataset.len(),
            total_pageviews: dataset.total_pageviews().iter().sum(),
            total_visits: dataset.total_visits(&first.name)?.iter().sum(),
        },
        config: config.clone(),
        dimensions: outcomes,
    })
}
