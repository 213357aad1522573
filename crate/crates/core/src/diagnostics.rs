//! Residual diagnostics: serial correlation (Breusch-Godfrey LM),
//! heteroskedasticity (Breusch-Pagan-Godfrey), normality (Jarque-Bera) and
//! coefficient sign expectations.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{chi_square_sf, f_sf, least_squares_solve, DesignMatrix};
use crate::ols::{centered_ss, mean, RegressionResult, INTERCEPT};

/// Breusch-Godfrey serial-correlation LM test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmTestResult {
    pub f_statistic: f64,
    pub f_p: f64,
    pub f_df: (usize, usize),
    pub obs_r_squared: f64,
    pub chi2_p: f64,
    pub chi2_df: usize,
    pub lags: usize,
}

/// Breusch-Pagan-Godfrey heteroskedasticity test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroTestResult {
    pub f_statistic: f64,
    pub f_p: f64,
    pub f_df: (usize, usize),
    pub obs_r_squared: f64,
    pub chi2_p: f64,
    pub chi2_df: usize,
    pub scaled_explained_ss: f64,
    pub scaled_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityResult {
    pub n: usize,
    pub skewness: f64,
    /// Raw (not excess) kurtosis.
    pub kurtosis: f64,
    pub jb_statistic: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    /// Strict: zero matches neither sign.
    pub fn matches(self, value: f64) -> bool {
        match self {
            Sign::Positive => value > 0.0,
            Sign::Negative => value < 0.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Positive => "+",
            Sign::Negative => "-",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeSign {
    pub name: String,
    pub estimate: f64,
    pub expected: Sign,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignCheckResult {
    pub slopes: Vec<SlopeSign>,
    pub pass: bool,
}

struct AuxFit {
    ssr: f64,
    sst: f64,
}

impl AuxFit {
    fn r_squared(&self) -> f64 {
        if self.sst == 0.0 {
            0.0
        } else {
            (1.0 - self.ssr / self.sst).max(0.0)
        }
    }
}

fn aux_regression(design: &DesignMatrix, y: &[f64]) -> Result<AuxFit> {
    let ls = least_squares_solve(design, y)?;
    let fitted = design.mul_vec(&ls.beta);
    let ssr = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(AuxFit {
        ssr,
        sst: centered_ss(y),
    })
}

fn nonzero_residuals(residuals: &[f64]) -> Result<()> {
    if residuals.iter().all(|e| *e == 0.0) {
        Err(Error::DegenerateResiduals("all residuals are zero".into()))
    } else {
        Ok(())
    }
}

/// Regresses the residuals on the original regressors plus `lags` lagged
/// residuals (pre-sample lags set to zero, so all `n` rows are kept).
pub fn breusch_godfrey(fit: &RegressionResult, lags: usize) -> Result<LmTestResult> {
    if lags == 0 {
        return Err(Error::Config("Breusch-Godfrey needs at least one lag".into()));
    }
    let e = &fit.residuals;
    nonzero_residuals(e)?;
    let n = e.len();
    let k = fit.design.k();
    if n <= k + lags {
        return Err(Error::InsufficientObservations {
            needed: k + lags,
            got: n,
        });
    }

    let mut design = fit.design.clone();
    for j in 1..=lags {
        let lagged = (0..n).map(|t| if t >= j { e[t - j] } else { 0.0 }).collect();
        design.push_column(format!("RESID(-{j})"), lagged)?;
    }
    let unrestricted = aux_regression(&design, e)?;
    let restricted = aux_regression(&fit.design, e)?;
    if unrestricted.ssr == 0.0 {
        return Err(Error::DegenerateResiduals(
            "auxiliary regression fits the residuals exactly".into(),
        ));
    }

    let obs_r_squared = n as f64 * unrestricted.r_squared();
    let df2 = n - k - lags;
    let f_statistic = ((restricted.ssr - unrestricted.ssr).max(0.0) / lags as f64)
        / (unrestricted.ssr / df2 as f64);
    Ok(LmTestResult {
        f_statistic,
        f_p: f_sf(f_statistic, lags, df2)?,
        f_df: (lags, df2),
        obs_r_squared,
        chi2_p: chi_square_sf(obs_r_squared, lags)?,
        chi2_df: lags,
        lags,
    })
}

/// Regresses squared residuals on the fit's regressors (with an intercept).
pub fn breusch_pagan_godfrey(fit: &RegressionResult) -> Result<HeteroTestResult> {
    let e = &fit.residuals;
    nonzero_residuals(e)?;
    let n = e.len();
    let design = if fit.design.column_names().iter().any(|c| c == INTERCEPT) {
        fit.design.clone()
    } else {
        fit.design.clone().with_intercept(INTERCEPT)
    };
    let k = design.k();
    if k < 2 {
        return Err(Error::Config(
            "Breusch-Pagan-Godfrey needs at least one slope regressor".into(),
        ));
    }
    if n <= k {
        return Err(Error::InsufficientObservations { needed: k, got: n });
    }

    let e2: Vec<f64> = e.iter().map(|v| v * v).collect();
    let aux = aux_regression(&design, &e2)?;
    // Squared residuals that are all equal carry no information about the regressors.
    let flat = aux.sst <= 1e-24 * e2.iter().map(|v| v * v).sum::<f64>();
    let r2 = if flat { 0.0 } else { aux.r_squared() };
    let explained = if flat { 0.0 } else { (aux.sst - aux.ssr).max(0.0) };

    let df1 = k - 1;
    let df2 = n - k;
    let f_statistic = if r2 >= 1.0 {
        return Err(Error::DegenerateResiduals(
            "auxiliary regression fits the squared residuals exactly".into(),
        ));
    } else {
        (r2 / df1 as f64) / ((1.0 - r2) / df2 as f64)
    };
    let obs_r_squared = n as f64 * r2;
    let sigma2 = e2.iter().sum::<f64>() / n as f64;
    let scaled_explained_ss = explained / (2.0 * sigma2 * sigma2);

    Ok(HeteroTestResult {
        f_statistic,
        f_p: f_sf(f_statistic, df1, df2)?,
        f_df: (df1, df2),
        obs_r_squared,
        chi2_p: chi_square_sf(obs_r_squared, df1)?,
        chi2_df: df1,
        scaled_explained_ss,
        scaled_p: chi_square_sf(scaled_explained_ss, df1)?,
    })
}

/// `JB = n/6 · (S² + (K − 3)²/4)` with moments about the mean, divisor `n`.
pub fn jarque_bera(residuals: &[f64]) -> Result<NormalityResult> {
    let n = residuals.len();
    if n < 4 {
        return Err(Error::InsufficientObservations { needed: 3, got: n });
    }
    let m = mean(residuals);
    let nf = n as f64;
    let moment = |p: i32| residuals.iter().map(|e| (e - m).powi(p)).sum::<f64>() / nf;
    let m2 = moment(2);
    let scale = residuals.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    if m2 <= 1e-24 * scale * scale || m2 == 0.0 {
        return Err(Error::DegenerateResiduals("residuals have zero variance".into()));
    }
    let skewness = moment(3) / m2.powf(1.5);
    let kurtosis = moment(4) / (m2 * m2);
    let jb_statistic = nf / 6.0 * (skewness.powi(2) + (kurtosis - 3.0).powi(2) / 4.0);
    Ok(NormalityResult {
        n,
        skewness,
        kurtosis,
        jb_statistic,
        p: chi_square_sf(jb_statistic, 2)?,
    })
}

/// Compares coefficient signs with expectations. The intercept is only
/// checked when listed.
pub fn sign_check(
    fit: &RegressionResult,
    expected: &BTreeMap<String, Sign>,
) -> Result<SignCheckResult> {
    let slopes = expected
        .iter()
        .map(|(name, &sign)| {
            let c = fit
                .coefficient(name)
                .ok_or_else(|| Error::Config(format!("no coefficient named `{name}`")))?;
            Ok(SlopeSign {
                name: name.clone(),
                estimate: c.estimate,
                expected: sign,
                pass: sign.matches(c.estimate),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = slopes.iter().all(|s| s.pass);
    Ok(SignCheckResult { slopes, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TimeSeries;
    use crate::ols::fit_ols;

    fn ts(values: &[f64]) -> TimeSeries {
        TimeSeries::new("y", "2009-01".parse().unwrap(), values.to_vec()).unwrap()
    }

    #[test]
    fn jarque_bera_hand_moments() {
        let r = jarque_bera(&[-1.0, 1.0, -1.0, 1.0]).unwrap();
        assert!(r.skewness.abs() < 1e-15);
        assert!((r.kurtosis - 1.0).abs() < 1e-15);
        assert!((r.jb_statistic - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn jarque_bera_p_values() {
        for (jb, printed) in [(2.48, 0.29), (3.92, 0.14), (3.29, 0.19)] {
            let p = chi_square_sf(jb, 2).unwrap();
            assert!((p - printed).abs() < 0.005, "{jb}: {p}");
            assert!((p - (-jb / 2.0f64).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn jarque_bera_rejects_flat_residuals() {
        assert!(matches!(
            jarque_bera(&[2.0; 5]),
            Err(Error::DegenerateResiduals(_))
        ));
        assert!(jarque_bera(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn sign_rules() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let up = fit_ols(&[("referral", &x)], &ts(&[2.0, 3.9, 5.6, 7.3, 8.9]), true).unwrap();
        let down = fit_ols(&[("referral", &x)], &ts(&[5.0, 4.4, 4.1, 3.3, 3.0]), true).unwrap();
        let expect: BTreeMap<String, Sign> = [("referral".to_string(), Sign::Positive)].into();
        assert!(sign_check(&up, &expect).unwrap().pass);
        assert!(!sign_check(&down, &expect).unwrap().pass);
        assert!(!Sign::Positive.matches(0.0));
        assert!(!Sign::Negative.matches(0.0));
        let unknown: BTreeMap<String, Sign> = [("organic".to_string(), Sign::Positive)].into();
        assert!(matches!(sign_check(&up, &unknown), Err(Error::Config(_))));
    }

    #[test]
    fn zero_residuals_are_degenerate() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let fit = fit_ols(&[("x", &x)], &ts(&[3.0, 5.0, 7.0, 9.0, 11.0, 13.0]), true).unwrap();
        assert!(matches!(breusch_godfrey(&fit, 2), Err(Error::DegenerateResiduals(_))));
        assert!(matches!(breusch_pagan_godfrey(&fit), Err(Error::DegenerateResiduals(_))));
    }

    #[test]
    fn equal_squared_residuals_give_zero_statistic() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        // Residuals ±1 against the least-squares line: choose y = 2x + r with
        // r orthogonal to (1, x).
        let r = [1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0];
        let y: Vec<f64> = x.iter().zip(&r).map(|(a, b)| 2.0 * a + b).collect();
        let fit = fit_ols(&[("x", &x)], &ts(&y), true).unwrap();
        for (e, expect) in fit.residuals.iter().zip(&r) {
            assert!((e - expect).abs() < 1e-12);
        }
        let h = breusch_pagan_godfrey(&fit).unwrap();
        assert!(h.obs_r_squared.abs() < 1e-9);
        assert!(h.f_statistic.abs() < 1e-9);
    }

    #[test]
    fn restricted_fit_without_slopes_is_rejected_by_bpg() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let fit = crate::ols::fit_restricted(&[("x", 2.0)], &[("x", &x)], &ts(&[3.0, 5.5, 6.5, 9.0]))
            .unwrap();
        assert!(matches!(breusch_pagan_godfrey(&fit), Err(Error::Config(_))));
    }
}
