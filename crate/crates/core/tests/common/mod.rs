#![allow(dead_code)]

use pageview::synth::{SynthConfig, SynthDimension, SynthLevel, VisitProcess};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..k).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..k {
        let p = (c..k)
            .max_by(|&x, &y| m[x][c].abs().partial_cmp(&m[y][c].abs()).unwrap())
            .unwrap();
        m.swap(c, p);
        let d = m[c][c];
        for v in m[c].iter_mut() {
            *v /= d;
        }
        for r in 0..k {
            if r != c {
                let f = m[r][c];
                let pivot = m[c].clone();
                for (v, pv) in m[r].iter_mut().zip(pivot) {
                    *v -= f * pv;
                }
            }
        }
    }
    m.into_iter().map(|r| r[k..].to_vec()).collect()
}

pub struct OracleFit {
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub residuals: Vec<f64>,
    pub ssr: f64,
    pub r2: f64,
}

/// β = (X'X)⁻¹X'y from explicitly formed normal equations.
pub fn normal_equations(columns: &[Vec<f64>], y: &[f64]) -> OracleFit {
    let n = y.len();
    let k = columns.len();
    let xtx: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| (0..n).map(|t| columns[i][t] * columns[j][t]).sum()).collect())
        .collect();
    let xty: Vec<f64> = (0..k).map(|i| (0..n).map(|t| columns[i][t] * y[t]).sum()).collect();
    let inv = invert(&xtx);
    let beta: Vec<f64> = (0..k).map(|i| (0..k).map(|j| inv[i][j] * xty[j]).sum()).collect();
    let residuals: Vec<f64> = (0..n)
        .map(|t| y[t] - (0..k).map(|j| beta[j] * columns[j][t]).sum::<f64>())
        .collect();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let s2 = ssr / (n - k) as f64;
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    OracleFit {
        se: (0..k).map(|i| (s2 * inv[i][i]).sqrt()).collect(),
        beta,
        residuals,
        ssr,
        r2: 1.0 - ssr / sst,
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

pub fn random_walk(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng(seed);
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            x += normal(&mut r);
            x
        })
        .collect()
}

pub fn ar1(seed: u64, n: usize, phi: f64) -> Vec<f64> {
    let mut r = rng(seed);
    let mut x = normal(&mut r) / (1.0 - phi * phi).sqrt();
    let mut out = vec![x];
    for _ in 1..n {
        x = phi * x + normal(&mut r);
        out.push(x);
    }
    out
}

pub fn ar_level(name: &str, mean: f64, slope: f64, share: f64, noise_sd: f64) -> SynthLevel {
    SynthLevel {
        name: name.into(),
        visits: VisitProcess::Ar1 {
            mean,
            phi: 0.3,
            sd: mean * 0.15,
        },
        slope,
        intercept_share: share,
        noise_sd,
        noise_ar: 0.0,
    }
}

/// Visitor-type dataset with slopes 2.40 / 5.22; noise sd is `noise_share`
/// of each level's mean page views.
pub fn visitor_type_config(seed: u64, periods: usize, noise_share: f64) -> SynthConfig {
    let level = |name: &str, mean: f64, slope: f64, share: f64| {
        ar_level(name, mean, slope, share, noise_share * (slope * mean + share))
    };
    SynthConfig {
        seed,
        periods,
        start: "2008-06".parse().unwrap(),
        dimensions: vec![SynthDimension {
            name: "type".into(),
            levels: vec![
                level("new", 450.0, 2.40, 150.0),
                level("returning", 370.0, 5.22, 250.0),
            ],
        }],
    }
}

/// Three traffic sources whose page-view noise follows an AR(1) with `rho`.
pub fn sources_config(seed: u64, periods: usize, rho: f64) -> SynthConfig {
    let level = |name: &str, mean: f64, slope: f64| {
        let mut l = ar_level(name, mean, slope, 50.0, 0.05 * slope * mean);
        l.noise_ar = rho;
        l
    };
    SynthConfig {
        seed,
        periods,
        start: "2008-06".parse().unwrap(),
        dimensions: vec![SynthDimension {
            name: "source".into(),
            levels: vec![
                level("search", 420.0, 3.8),
                level("direct", 260.0, 4.6),
                level("referral", 140.0, 2.1),
            ],
        }],
    }
}

/// Compares OLS, BG and BPG against the normal-equation oracles on random
/// instances; returns a description of every mismatch.
pub fn oracle_mismatches(instances: u64, tol: f64) -> Vec<String> {
    use pageview::{breusch_godfrey, breusch_pagan_godfrey, fit_ols, TimeSeries};

    let mut bad = Vec::new();
    for seed in 0..instances {
        let mut r = rng(1000 + seed);
        let n = r.random_range(10..=30usize);
        let k = r.random_range(2..=4usize);
        let mut columns = vec![vec![1.0; n]];
        for _ in 1..k {
            let scale = 10f64.powf(r.random_range(-1.0..3.0));
            columns.push((0..n).map(|_| scale * normal(&mut r)).collect());
        }
        let beta: Vec<f64> = (0..k).map(|_| 5.0 * normal(&mut r)).collect();
        let y: Vec<f64> = (0..n)
            .map(|t| (0..k).map(|j| beta[j] * columns[j][t]).sum::<f64>() + normal(&mut r))
            .collect();

        let names: Vec<String> = (1..k).map(|j| format!("x{j}")).collect();
        let regressors: Vec<(&str, &[f64])> = names
            .iter()
            .zip(&columns[1..])
            .map(|(n, c)| (n.as_str(), c.as_slice()))
            .collect();
        let response = TimeSeries::new("y", "2008-06".parse().unwrap(), y.clone()).unwrap();
        let fit = fit_ols(&regressors, &response, true).unwrap();
        let oracle = normal_equations(&columns, &y);

        let mut check = |what: String, got: f64, want: f64| {
            if !rel_close(got, want, tol) {
                bad.push(format!("seed {seed} {what}: {got} vs {want}"));
            }
        };
        for j in 0..k {
            check(format!("beta[{j}]"), fit.coefficients[j].estimate, oracle.beta[j]);
            check(format!("se[{j}]"), fit.coefficients[j].std_error, oracle.se[j]);
        }

        let e = &oracle.residuals;
        let lags = 2;
        let mut aux = columns.clone();
        for j in 1..=lags {
            aux.push((0..n).map(|t| if t >= j { e[t - j] } else { 0.0 }).collect());
        }
        let u = normal_equations(&aux, e);
        let restricted_ssr = normal_equations(&columns, e).ssr;
        let bg_obs = n as f64 * u.r2;
        let bg_f = ((restricted_ssr - u.ssr) / lags as f64) / (u.ssr / (n - k - lags) as f64);
        let bg = breusch_godfrey(&fit, lags).unwrap();
        check("BG Obs*R2".into(), bg.obs_r_squared, bg_obs);
        check("BG F".into(), bg.f_statistic, bg_f);

        let e2: Vec<f64> = e.iter().map(|v| v * v).collect();
        let h = normal_equations(&columns, &e2);
        let bpg_obs = n as f64 * h.r2;
        let bpg_f = (h.r2 / (k - 1) as f64) / ((1.0 - h.r2) / (n - k) as f64);
        let mean2 = e2.iter().sum::<f64>() / n as f64;
        let sst2: f64 = e2.iter().map(|v| (v - mean2).powi(2)).sum();
        let scaled = (sst2 - h.ssr) / (2.0 * mean2 * mean2);
        let bpg = breusch_pagan_godfrey(&fit).unwrap();
        check("BPG Obs*R2".into(), bpg.obs_r_squared, bpg_obs);
        check("BPG F".into(), bpg.f_statistic, bpg_f);
        check("BPG scaled SS".into(), bpg.scaled_explained_ss, scaled);
    }
    bad
}

pub type Check = std::result::Result<(), String>;

pub fn series(values: Vec<f64>) -> pageview::TimeSeries {
    pageview::TimeSeries::new("y", "2008-06".parse().unwrap(), values).unwrap()
}

/// Regressors `x1..xk` (AR(0.5) paths) and a response with noise.
pub fn regression_instance(seed: u64, n: usize, k: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut r = rng(seed);
    let cols: Vec<Vec<f64>> = (0..k).map(|j| ar1(seed * 31 + j as u64, n, 0.5)).collect();
    let y = (0..n)
        .map(|t| 3.0 + cols.iter().enumerate().map(|(j, c)| (j as f64 + 1.5) * c[t]).sum::<f64>()
            + 2.0 * normal(&mut r))
        .collect();
    (cols, y)
}

fn names(k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("x{j}")).collect()
}

fn regressors<'a>(names: &'a [String], cols: &'a [Vec<f64>]) -> Vec<(&'a str, &'a [f64])> {
    names.iter().zip(cols).map(|(n, c)| (n.as_str(), c.as_slice())).collect()
}

pub fn check_adf_affine(y: &[f64], a: f64, b: f64) -> Check {
    use pageview::{adf_test, AdfSpec, CriticalLevel};
    let t = |v: Vec<f64>| adf_test(&series(v), AdfSpec::Constant, 1, CriticalLevel::Ten);
    let base = t(y.to_vec());
    let moved = t(y.iter().map(|v| a * v + b).collect());
    match (base, moved) {
        (Ok(p), Ok(q)) if (p.statistic - q.statistic).abs() <= 1e-8 => Ok(()),
        (Ok(p), Ok(q)) => Err(format!("ADF {} vs {}", p.statistic, q.statistic)),
        (Err(_), Err(_)) => Ok(()),
        (p, q) => Err(format!("ADF outcome differs: {p:?} vs {q:?}")),
    }
}

pub fn check_jb_affine(e: &[f64], a: f64, b: f64) -> Check {
    use pageview::jarque_bera;
    let p = jarque_bera(e).map_err(|x| x.to_string())?;
    let q = jarque_bera(&e.iter().map(|v| a * v + b).collect::<Vec<_>>())
        .map_err(|x| x.to_string())?;
    if (p.jb_statistic - q.jb_statistic).abs() <= 1e-10 * p.jb_statistic.max(1.0) {
        Ok(())
    } else {
        Err(format!("JB {} vs {}", p.jb_statistic, q.jb_statistic))
    }
}

pub fn check_bg_bpg_scaling(cols: &[Vec<f64>], y: &[f64], a: f64) -> Check {
    use pageview::{breusch_godfrey, breusch_pagan_godfrey, fit_ols};
    let names = names(cols.len());
    let regs = regressors(&names, cols);
    let f1 = fit_ols(&regs, &series(y.to_vec()), true).map_err(|e| e.to_string())?;
    let f2 = fit_ols(&regs, &series(y.iter().map(|v| a * v).collect()), true)
        .map_err(|e| e.to_string())?;
    let pairs = [
        (
            breusch_godfrey(&f1, 2).unwrap().obs_r_squared,
            breusch_godfrey(&f2, 2).unwrap().obs_r_squared,
        ),
        (
            breusch_godfrey(&f1, 2).unwrap().f_statistic,
            breusch_godfrey(&f2, 2).unwrap().f_statistic,
        ),
        (
            breusch_pagan_godfrey(&f1).unwrap().obs_r_squared,
            breusch_pagan_godfrey(&f2).unwrap().obs_r_squared,
        ),
        (
            breusch_pagan_godfrey(&f1).unwrap().scaled_explained_ss,
            breusch_pagan_godfrey(&f2).unwrap().scaled_explained_ss,
        ),
    ];
    for (p, q) in pairs {
        if !rel_close(p, q, 1e-8) && (p - q).abs() > 1e-12 {
            return Err(format!("BG/BPG {p} vs {q}"));
        }
    }
    Ok(())
}

pub fn check_restricted_r2(cols: &[Vec<f64>], y: &[f64], slopes: &[f64]) -> Check {
    use pageview::{fit_ols, fit_restricted};
    let names = names(cols.len());
    let regs = regressors(&names, cols);
    let fixed: Vec<(&str, f64)> = names.iter().map(|n| n.as_str()).zip(slopes.iter().copied()).collect();
    let free = fit_ols(&regs, &series(y.to_vec()), true).map_err(|e| e.to_string())?;
    let restricted = fit_restricted(&fixed, &regs, &series(y.to_vec())).map_err(|e| e.to_string())?;
    if restricted.r_squared <= free.r_squared + 1e-12 {
        Ok(())
    } else {
        Err(format!("restricted {} > free {}", restricted.r_squared, free.r_squared))
    }
}

pub fn check_dw_range(e: &[f64]) -> Check {
    match pageview::ols::durbin_watson(e) {
        Ok(d) if (0.0..=4.0).contains(&d) => Ok(()),
        Ok(d) => Err(format!("DW {d}")),
        Err(_) => Ok(()),
    }
}

pub fn check_ols_scaling(cols: &[Vec<f64>], y: &[f64], a: f64) -> Check {
    use pageview::fit_ols;
    let names = names(cols.len());
    let regs = regressors(&names, cols);
    let f1 = fit_ols(&regs, &series(y.to_vec()), true).map_err(|e| e.to_string())?;
    let f2 = fit_ols(&regs, &series(y.iter().map(|v| a * v).collect()), true)
        .map_err(|e| e.to_string())?;
    let tol = 1e-8;
    for (c1, c2) in f1.coefficients.iter().zip(&f2.coefficients) {
        if !rel_close(a * c1.estimate, c2.estimate, tol)
            || !rel_close(a * c1.std_error, c2.std_error, tol)
            || !rel_close(c1.t_statistic.unwrap(), c2.t_statistic.unwrap(), tol)
        {
            return Err(format!("coefficient {} not equivariant", c1.name));
        }
    }
    if !rel_close(a * a * f1.sum_squared_resid, f2.sum_squared_resid, tol)
        || (f1.r_squared - f2.r_squared).abs() > 1e-10
        || !rel_close(f1.durbin_watson.unwrap(), f2.durbin_watson.unwrap(), tol)
    {
        return Err("SSR/R²/DW not equivariant".into());
    }
    Ok(())
}

pub fn check_orthogonality(cols: &[Vec<f64>], y: &[f64]) -> Check {
    let names = names(cols.len());
    let regs = regressors(&names, cols);
    let fit = pageview::fit_ols(&regs, &series(y.to_vec()), true).map_err(|e| e.to_string())?;
    let e = &fit.residuals;
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in fit.design.columns() {
        let dot: f64 = e.iter().zip(x).map(|(a, b)| a * b).sum();
        if dot.abs() > 1e-8 * norm(e) * norm(x) {
            return Err(format!("residual·x = {dot}"));
        }
    }
    Ok(())
}

pub fn check_csv_roundtrip(seed: u64) -> Check {
    use pageview::io::{parse_dataset_str, write_dataset};
    let mut config = visitor_type_config(seed, 24, 0.05);
    config.dimensions.push(sources_config(seed, 24, 0.0).dimensions.remove(0));
    let data = pageview::synth::generate(&config).map_err(|e| e.to_string())?;
    let back = parse_dataset_str(&write_dataset(&data)).map_err(|e| e.to_string())?;
    if back == data {
        Ok(())
    } else {
        Err("round trip changed the dataset".into())
    }
}
