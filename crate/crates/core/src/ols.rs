//! Ordinary least squares with the summary block of a classic econometrics
//! package, plus the fixed-slope, free-intercept fit used by composed models.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Period, TimeSeries};
use crate::numerics::{f_sf, least_squares_solve, student_t_two_sided_p, DesignMatrix};

/// Name of the intercept row, as printed in the report tables.
pub const INTERCEPT: &str = "C(1)";

/// Residual sums of squares at or below this fraction of `Σy²` count as an exact fit.
const PERFECT_FIT_RATIO: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    /// `None` when the standard error is zero.
    pub t_statistic: Option<f64>,
    pub p_value: Option<f64>,
}

/// Likelihood-based and descriptive statistics that depend only on
/// `(n, k, SSR, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub se_of_regression: f64,
    /// `None` for exact fits, where the Gaussian likelihood is unbounded.
    pub log_likelihood: Option<f64>,
    pub aic: Option<f64>,
    pub schwarz: Option<f64>,
    pub hannan_quinn: Option<f64>,
    pub mean_dependent: f64,
    pub sd_dependent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FTest {
    /// `None` when the residual sum of squares is zero.
    pub statistic: Option<f64>,
    pub p_value: f64,
    pub df1: usize,
    pub df2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedSlope {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub dependent: String,
    pub sample: Option<(Period, Period)>,
    pub coefficients: Vec<Coefficient>,
    /// Slopes held fixed in a restricted fit; empty for plain OLS.
    pub restrictions: Vec<FixedSlope>,
    pub n: usize,
    pub k: usize,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub r_squared: f64,
    pub adjusted_r_squared: f64,
    pub sum_squared_resid: f64,
    pub summary: FitSummary,
    pub durbin_watson: Option<f64>,
    pub f_test: Option<FTest>,
    pub intercept_included: bool,
    pub used_differenced_inputs: bool,
    pub perfect_fit: bool,
    /// Regressors as estimated; the auxiliary regressions of the residual
    /// tests reuse them.
    pub design: DesignMatrix,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    /// Coefficients other than the intercept.
    pub fn slopes(&self) -> impl Iterator<Item = &Coefficient> {
        self.coefficients.iter().filter(|c| c.name != INTERCEPT)
    }

    pub fn dof(&self) -> usize {
        self.n - self.k
    }
}

/// Fits `response` on the named regressors by least squares.
pub fn fit_ols(
    regressors: &[(&str, &[f64])],
    response: &TimeSeries,
    include_intercept: bool,
) -> Result<RegressionResult> {
    let y = response.values();
    if regressors.is_empty() && !include_intercept {
        return Err(Error::Config("regression has no regressors".into()));
    }
    let design = if regressors.is_empty() {
        DesignMatrix::new(vec![INTERCEPT.into()], vec![vec![1.0; y.len()]])?
    } else {
        let d = DesignMatrix::new(
            regressors.iter().map(|(n, _)| n.to_string()).collect(),
            regressors.iter().map(|(_, v)| v.to_vec()).collect(),
        )?;
        if include_intercept {
            d.with_intercept(INTERCEPT)
        } else {
            d
        }
    };
    if design.n() != y.len() {
        return Err(Error::Config(format!(
            "regressors have {} rows, response has {}",
            design.n(),
            y.len()
        )));
    }
    require_variation(response)?;

    let ls = least_squares_solve(&design, y)?;
    let (n, k) = (design.n(), design.k());
    let mut fitted = design.mul_vec(&ls.beta);
    let mut residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let mut ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let perfect_fit = is_perfect(ssr, y);
    if perfect_fit {
        ssr = 0.0;
        residuals.iter_mut().for_each(|e| *e = 0.0);
        fitted = y.to_vec();
    }

    let sigma2 = ssr / (n - k) as f64;
    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let coefficients = design
        .column_names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let estimate = ls.beta[j];
            let std_error = (sigma2 * ls.xtx_inverse[j][j]).max(0.0).sqrt();
            let col_norm = design.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            coefficient(name, estimate, std_error, n - k, estimate.abs() * col_norm > 1e-9 * y_norm)
        })
        .collect::<Result<Vec<_>>>()?;

    let sst = centered_ss(y);
    let r_squared = 1.0 - ssr / sst;
    let adjusted_r_squared = 1.0 - (1.0 - r_squared) * (n - 1) as f64 / (n - k) as f64;

    let free_slopes = if include_intercept { k - 1 } else { k };
    let f_test = if free_slopes == 0 {
        None
    } else {
        let explained = if include_intercept {
            sst - ssr
        } else {
            y.iter().map(|v| v * v).sum::<f64>() - ssr
        };
        Some(f_test_from(explained, ssr, free_slopes, n - k)?)
    };

    let summary = summarize_fit(n, k, ssr, y)?;
    let durbin_watson = durbin_watson(&residuals).ok();

    Ok(RegressionResult {
        dependent: response.label().to_string(),
        sample: Some((response.start(), response.end())),
        coefficients,
        restrictions: Vec::new(),
        n,
        k,
        fitted,
        residuals,
        r_squared,
        adjusted_r_squared,
        sum_squared_resid: ssr,
        summary,
        durbin_watson,
        f_test,
        intercept_included: include_intercept || regressors.is_empty(),
        used_differenced_inputs: response.diff_order() > 0,
        perfect_fit,
        design,
    })
}

/// Fits `response = Σ slope_s · regressor_s + C(1)` with every slope held
/// fixed; only the intercept is estimated.
pub fn fit_restricted(
    fixed_slopes: &[(&str, f64)],
    regressors: &[(&str, &[f64])],
    response: &TimeSeries,
) -> Result<RegressionResult> {
    let y = response.values();
    let n = y.len();
    if n < 2 {
        return Err(Error::InsufficientObservations { needed: 1, got: n });
    }
    if fixed_slopes.len() != regressors.len() {
        return Err(Error::Config(format!(
            "{} fixed slopes for {} regressors",
            fixed_slopes.len(),
            regressors.len()
        )));
    }
    require_variation(response)?;

    let mut offset = vec![0.0; n];
    for (name, slope) in fixed_slopes {
        let (_, values) = regressors
            .iter()
            .find(|(r, _)| r == name)
            .ok_or_else(|| Error::Config(format!("no regressor named `{name}`")))?;
        if values.len() != n {
            return Err(Error::Config(format!(
                "regressor `{name}` has {} rows, response has {n}",
                values.len()
            )));
        }
        if !slope.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("regressor `{name}` is not finite")));
        }
        for (o, v) in offset.iter_mut().zip(values.iter()) {
            *o += slope * v;
        }
    }

    let adjusted: Vec<f64> = y.iter().zip(&offset).map(|(a, b)| a - b).collect();
    let intercept = mean(&adjusted);
    let mut residuals: Vec<f64> = adjusted.iter().map(|z| z - intercept).collect();
    let mut ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let perfect_fit = is_perfect(ssr, y);
    if perfect_fit {
        ssr = 0.0;
        residuals.iter_mut().for_each(|e| *e = 0.0);
    }
    let fitted: Vec<f64> = y.iter().zip(&residuals).map(|(a, e)| a - e).collect();

    let k = 1;
    let sigma2 = ssr / (n - k) as f64;
    let std_error = (sigma2 / n as f64).sqrt();
    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c = coefficient(
        INTERCEPT,
        intercept,
        std_error,
        n - k,
        intercept.abs() * (n as f64).sqrt() > 1e-9 * y_norm,
    )?;

    let sst = centered_ss(y);
    let r_squared = 1.0 - ssr / sst;
    let summary = summarize_fit(n, k, ssr, y)?;

    Ok(RegressionResult {
        dependent: response.label().to_string(),
        sample: Some((response.start(), response.end())),
        coefficients: vec![c],
        restrictions: fixed_slopes
            .iter()
            .map(|(name, value)| FixedSlope {
                name: name.to_string(),
                value: *value,
            })
            .collect(),
        n,
        k,
        fitted,
        residuals: residuals.clone(),
        r_squared,
        adjusted_r_squared: r_squared,
        sum_squared_resid: ssr,
        summary,
        durbin_watson: durbin_watson(&residuals).ok(),
        f_test: None,
        intercept_included: true,
        used_differenced_inputs: response.diff_order() > 0,
        perfect_fit,
        design: DesignMatrix::new(vec![INTERCEPT.into()], vec![vec![1.0; n]])?,
    })
}

/// Standard error, log-likelihood and information criteria from `(n, k, SSR)`.
///
/// The Gaussian log-likelihood is `−n/2 · (1 + ln 2π + ln(SSR/n))`; the
/// criteria are per-observation: `(−2LL + penalty) / n`.
pub fn summarize_fit(n: usize, k: usize, ssr: f64, response: &[f64]) -> Result<FitSummary> {
    if n <= k {
        return Err(Error::InsufficientObservations { needed: k, got: n });
    }
    if ssr.is_nan() || ssr < 0.0 {
        return Err(Error::Domain(ssr));
    }
    let nf = n as f64;
    let kf = k as f64;
    let (log_likelihood, aic, schwarz, hannan_quinn) = if ssr > 0.0 {
        let ll = -0.5 * nf * (1.0 + (2.0 * PI).ln() + (ssr / nf).ln());
        (
            Some(ll),
            Some((-2.0 * ll + 2.0 * kf) / nf),
            Some((-2.0 * ll + kf * nf.ln()) / nf),
            Some((-2.0 * ll + 2.0 * kf * nf.ln().ln()) / nf),
        )
    } else {
        (None, None, None, None)
    };
    let sd_dependent = if response.len() > 1 {
        (centered_ss(response) / (response.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(FitSummary {
        se_of_regression: (ssr / (n - k) as f64).sqrt(),
        log_likelihood,
        aic,
        schwarz,
        hannan_quinn,
        mean_dependent: mean(response),
        sd_dependent,
    })
}

/// `Σ(e_t − e_{t−1})² / Σ e_t²`.
pub fn durbin_watson(residuals: &[f64]) -> Result<f64> {
    if residuals.len() < 2 {
        return Err(Error::InsufficientObservations {
            needed: 1,
            got: residuals.len(),
        });
    }
    let denom: f64 = residuals.iter().map(|e| e * e).sum();
    if denom == 0.0 {
        return Err(Error::DegenerateResiduals("all residuals are zero".into()));
    }
    let num: f64 = residuals.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok(num / denom)
}

pub(crate) fn f_test_from(explained: f64, ssr: f64, df1: usize, df2: usize) -> Result<FTest> {
    let explained = explained.max(0.0);
    if ssr == 0.0 {
        return Ok(FTest {
            statistic: None,
            p_value: if explained > 0.0 { 0.0 } else { 1.0 },
            df1,
            df2,
        });
    }
    let statistic = (explained / df1 as f64) / (ssr / df2 as f64);
    Ok(FTest {
        statistic: Some(statistic),
        p_value: f_sf(statistic, df1, df2)?,
        df1,
        df2,
    })
}

fn coefficient(
    name: &str,
    estimate: f64,
    std_error: f64,
    dof: usize,
    material: bool,
) -> Result<Coefficient> {
    let (t_statistic, p_value) = if std_error > 0.0 {
        let t = estimate / std_error;
        (Some(t), Some(student_t_two_sided_p(t, dof)?))
    } else if material {
        (None, Some(0.0))
    } else {
        (None, None)
    };
    Ok(Coefficient {
        name: name.to_string(),
        estimate,
        std_error,
        t_statistic,
        p_value,
    })
}

fn require_variation(response: &TimeSeries) -> Result<()> {
    let v = response.values();
    if v.iter().all(|x| *x == v[0]) {
        return Err(Error::DegenerateSeries(format!(
            "response `{}` is constant",
            response.label()
        )));
    }
    Ok(())
}

fn is_perfect(ssr: f64, y: &[f64]) -> bool {
    ssr <= PERFECT_FIT_RATIO * y.iter().map(|v| v * v).sum::<f64>()
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub(crate) fn centered_ss(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum()
}
