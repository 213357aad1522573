use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Period, SegmentedDataset};
use crate::ols::RegressionResult;
use crate::pipeline::{AnalysisReport, ComposedModel, DimensionAnalysis, DimensionOutcome, STEP_NAMES};

use super::{format_number, format_probability};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

pub fn render_report(report: &AnalysisReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))
        }
        ReportFormat::Text => Ok(render_text(report)),
    }
}

pub fn parse_report_json(text: &str) -> Result<AnalysisReport> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line() as u64,
        column: e.column(),
        message: e.to_string(),
    })
}

/// `period,actual_pageviews,fitted,residual` for the composed model.
pub fn emit_plot_data(model: &ComposedModel, dataset: &SegmentedDataset) -> String {
    let fit = &model.intercept_fit;
    let mut out = String::from("period,actual_pageviews,fitted,residual\n");
    for (((p, actual), fitted), resid) in dataset
        .periods()
        .iter()
        .zip(dataset.total_pageviews())
        .zip(&fit.fitted)
        .zip(&fit.residuals)
    {
        let _ = writeln!(out, "{p},{actual},{fitted},{resid}");
    }
    out
}

fn eviews_period(p: Period) -> String {
    format!("{}M{:02}", p.year(), p.month())
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), format_number)
}

fn opt_p(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), format_probability)
}

const RULE: &str =
    "==============================================================================";
const THIN: &str =
    "------------------------------------------------------------------------------";

fn render_text(report: &AnalysisReport) -> String {
    let mut out = String::new();
    let d = &report.dataset;
    let _ = writeln!(
        out,
        "Sample: {} {} ({} periods)",
        eviews_period(d.start),
        eviews_period(d.end),
        d.periods
    );
    let _ = writeln!(
        out,
        "Total page views: {}   Total visits: {}",
        d.total_pageviews, d.total_visits
    );
    let c = &report.config;
    let _ = writeln!(
        out,
        "alpha {}   R-squared threshold {}   ADF {} lags {} at {}   BG lags {}",
        c.alpha, c.r2_threshold, c.adf_spec, c.adf_lags, c.adf_level, c.bg_lags
    );
    for outcome in &report.dimensions {
        out.push('\n');
        out.push_str(RULE);
        out.push('\n');
        match outcome {
            DimensionOutcome::Analyzed(a) => render_dimension(&mut out, a),
            DimensionOutcome::Failed { dimension, error } => {
                let _ = writeln!(out, "Dimension: {dimension}");
                let _ = writeln!(out, "Analysis failed: {error}");
            }
        }
    }
    out
}

fn render_dimension(out: &mut String, a: &DimensionAnalysis) {
    let _ = writeln!(out, "Dimension: {}", a.dimension);
    out.push_str(THIN);
    out.push('\n');

    let _ = writeln!(out, "Unit root tests (ADF)");
    let _ = writeln!(
        out,
        "{:<26}{:>14}{:>14}  {:<12}{:>12}",
        "Variable", "t-Statistic", "Critical", "Stationary", "Differenced"
    );
    for r in &a.stationarity {
        let first = &r.passes[0];
        let _ = writeln!(
            out,
            "{:<26}{:>14}{:>14}  {:<12}{:>12}",
            r.variable,
            format_number(first.statistic),
            format_number(first.critical_values.at(first.level)),
            if r.initially_stationary { "yes" } else { "no" },
            r.diff_order_applied
        );
        for (i, p) in r.passes.iter().enumerate().skip(1) {
            let _ = writeln!(
                out,
                "{:<26}{:>14}{:>14}  {:<12}",
                format!("  D{i}"),
                format_number(p.statistic),
                format_number(p.critical_values.at(p.level)),
                if p.reject_unit_root { "yes" } else { "no" }
            );
        }
        if !r.resolved {
            let _ = writeln!(out, "  unit root not rejected within the differencing limit");
        }
    }
    out.push('\n');

    let _ = writeln!(out, "Segment models");
    for s in &a.segment_fits {
        out.push('\n');
        render_regression(out, &s.fit);
    }
    out.push('\n');
    out.push_str(THIN);
    out.push('\n');

    let m = &a.composed;
    let _ = writeln!(out, "Composed model");
    let _ = writeln!(out, "{}", m.equation);
    out.push('\n');
    render_regression(out, &m.intercept_fit);
    if let Some(u) = &m.unrestricted_fit {
        out.push('\n');
        let _ = writeln!(out, "Unrestricted fit");
        render_regression(out, u);
    }
    out.push('\n');
    render_ledger(out, m);
}

fn pair(out: &mut String, left: (&str, String), right: Option<(&str, String)>) {
    match right {
        Some((rl, rv)) => {
            let _ = writeln!(out, "{:<22}{:>14}    {:<24}{:>14}", left.0, left.1, rl, rv);
        }
        None => {
            let _ = writeln!(out, "{:<22}{:>14}", left.0, left.1);
        }
    }
}

fn render_regression(out: &mut String, fit: &RegressionResult) {
    let _ = writeln!(out, "Dependent Variable: {}", fit.dependent);
    let _ = writeln!(out, "Method: Least Squares");
    if let Some((a, b)) = fit.sample {
        let _ = writeln!(out, "Sample: {} {}", eviews_period(a), eviews_period(b));
    }
    let _ = writeln!(out, "Included observations: {}", fit.n);
    for r in &fit.restrictions {
        let _ = writeln!(out, "Fixed slope: {} = {}", r.name, format_number(r.value));
    }
    let _ = writeln!(
        out,
        "{:<20}{:>14}{:>14}{:>14}{:>10}",
        "Variable", "Coefficient", "Std. Error", "t-Statistic", "Prob."
    );
    for c in &fit.coefficients {
        let _ = writeln!(
            out,
            "{:<20}{:>14}{:>14}{:>14}{:>10}",
            c.name,
            format_number(c.estimate),
            format_number(c.std_error),
            opt(c.t_statistic),
            opt_p(c.p_value)
        );
    }
    let s = &fit.summary;
    pair(
        out,
        ("R-squared", format_number(fit.r_squared)),
        Some(("Mean dependent var", format_number(s.mean_dependent))),
    );
    pair(
        out,
        ("Adjusted R-squared", format_number(fit.adjusted_r_squared)),
        Some(("S.D. dependent var", format_number(s.sd_dependent))),
    );
    pair(
        out,
        ("S.E. of regression", format_number(s.se_of_regression)),
        Some(("Akaike info criterion", opt(s.aic))),
    );
    pair(
        out,
        ("Sum squared resid", format_number(fit.sum_squared_resid)),
        Some(("Schwarz criterion", opt(s.schwarz))),
    );
    pair(
        out,
        ("Log likelihood", opt(s.log_likelihood)),
        Some(("Hannan-Quinn criter.", opt(s.hannan_quinn))),
    );
    match &fit.f_test {
        Some(f) => {
            pair(
                out,
                ("F-statistic", opt(f.statistic)),
                Some(("Durbin-Watson stat", opt(fit.durbin_watson))),
            );
            pair(out, ("Prob(F-statistic)", format_probability(f.p_value)), None);
        }
        None => pair(out, ("Durbin-Watson stat", opt(fit.durbin_watson)), None),
    }
}

fn render_ledger(out: &mut String, m: &ComposedModel) {
    let l = &m.ledger;
    if let Some(bg) = &l.serial {
        let _ = writeln!(out, "Breusch-Godfrey Serial Correlation LM Test ({} lags):", bg.lags);
        pair(
            out,
            ("F-statistic", format_number(bg.f_statistic)),
            Some((
                &format!("Prob. F({},{})", bg.f_df.0, bg.f_df.1),
                format_probability(bg.f_p),
            )),
        );
        pair(
            out,
            ("Obs*R-squared", format_number(bg.obs_r_squared)),
            Some((
                &format!("Prob. Chi-Square({})", bg.chi2_df),
                format_probability(bg.chi2_p),
            )),
        );
        out.push('\n');
    }
    if let Some(h) = &l.heteroskedasticity {
        let _ = writeln!(out, "Heteroskedasticity Test: Breusch-Pagan-Godfrey");
        pair(
            out,
            ("F-statistic", format_number(h.f_statistic)),
            Some((
                &format!("Prob. F({},{})", h.f_df.0, h.f_df.1),
                format_probability(h.f_p),
            )),
        );
        pair(
            out,
            ("Obs*R-squared", format_number(h.obs_r_squared)),
            Some((
                &format!("Prob. Chi-Square({})", h.chi2_df),
                format_probability(h.chi2_p),
            )),
        );
        pair(
            out,
            ("Scaled explained SS", format_number(h.scaled_explained_ss)),
            Some((
                &format!("Prob. Chi-Square({})", h.chi2_df),
                format_probability(h.scaled_p),
            )),
        );
        out.push('\n');
    }
    if let Some(jb) = &l.normality {
        let _ = writeln!(out, "Normality of residuals ({} observations)", jb.n);
        pair(
            out,
            ("Skewness", format_number(jb.skewness)),
            Some(("Kurtosis", format_number(jb.kurtosis))),
        );
        pair(
            out,
            ("Jarque-Bera", format_number(jb.jb_statistic)),
            Some(("Probability", format_probability(jb.p))),
        );
        out.push('\n');
    }

    let _ = writeln!(out, "Validation");
    for (i, (step, name)) in l.steps().iter().zip(STEP_NAMES).enumerate() {
        let mut line = format!("{:>2}. {:<44}{:<8}", i + 1, name, step.verdict.to_string());
        if let Some(s) = step.statistic {
            let _ = write!(line, " stat {}", format_number(s));
        }
        if let Some(p) = step.p_value {
            let _ = write!(line, " p {}", format_probability(p));
        }
        if let Some(n) = &step.note {
            let _ = write!(line, " ({n})");
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
    for s in l.signs.iter().flat_map(|r| &r.slopes) {
        let _ = writeln!(
            out,
            "    sign of {}: expected {}, estimate {}",
            s.name,
            s.expected,
            format_number(s.estimate)
        );
    }
    match &l.overall_note {
        Some(n) => {
            let _ = writeln!(out, "Overall: {} ({n})", l.overall);
        }
        None => {
            let _ = writeln!(out, "Overall: {}", l.overall);
        }
    }
}

/// Residual tests and the validation ledger of one composed model.
pub fn render_ledger_text(model: &ComposedModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", model.equation);
    out.push('\n');
    render_ledger(&mut out, model);
    out
}
