//! Seeded synthetic traffic with a known data-generating process.
//!
//! Visits of each level follow an AR(1) or a random walk with drift. Page
//! views are `round(slope · visits + intercept_share + noise)`, floored at the
//! visit count. The first dimension is the anchor: its levels define total
//! visits and total page views. Later dimensions split the anchor's visit
//! total by their own process draws and are reconciled to the anchor's
//! page-view total, so every generated dataset is additive.
//!
//! Randomness comes from ChaCha8 seeded with `seed` through
//! `SeedableRng::seed_from_u64`; draws are consumed in a fixed order
//! (dimension, then level, then visits before noise), so a seed names the
//! same dataset on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DimensionCounts, Frequency, LevelCounts, Period, SegmentedDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "process", rename_all = "snake_case")]
pub enum VisitProcess {
    /// `x_t = mean + phi·(x_{t−1} − mean) + sd·z_t`, started from the
    /// stationary distribution.
    Ar1 { mean: f64, phi: f64, sd: f64 },
    /// `x_t = x_{t−1} + drift + sd·z_t`.
    RandomWalk { start: f64, drift: f64, sd: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthLevel {
    pub name: String,
    pub visits: VisitProcess,
    pub slope: f64,
    #[serde(default)]
    pub intercept_share: f64,
    /// Marginal standard deviation of the page-view noise.
    #[serde(default)]
    pub noise_sd: f64,
    /// AR(1) coefficient of the page-view noise; 0 gives white noise.
    #[serde(default)]
    pub noise_ar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthDimension {
    pub name: String,
    pub levels: Vec<SynthLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub periods: usize,
    #[serde(default = "default_start")]
    pub start: Period,
    pub dimensions: Vec<SynthDimension>,
}

fn default_start() -> Period {
    Period::new(2008, 6).expect("valid period")
}

impl SynthConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line() as u64,
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.periods < 12 {
            return Err(Error::Config(format!(
                "periods must be at least 12, got {}",
                self.periods
            )));
        }
        if self.dimensions.is_empty() {
            return Err(Error::Config("no dimensions configured".into()));
        }
        for d in &self.dimensions {
            if d.levels.len() < 2 {
                return Err(Error::Config(format!(
                    "dimension `{}` needs at least 2 levels",
                    d.name
                )));
            }
            for l in &d.levels {
                let bad = |what: &str| {
                    Err(Error::Config(format!("{}/{}: {what}", d.name, l.name)))
                };
                match l.visits {
                    VisitProcess::Ar1 { mean, phi, sd } => {
                        if !(phi > -1.0 && phi < 1.0) {
                            return bad("AR coefficient must lie strictly inside (-1, 1)");
                        }
                        if !(sd >= 0.0) || !mean.is_finite() {
                            return bad("AR mean must be finite and sd non-negative");
                        }
                    }
                    VisitProcess::RandomWalk { start, drift, sd } => {
                        if !(sd >= 0.0) || !start.is_finite() || !drift.is_finite() {
                            return bad("random walk needs finite start/drift and sd >= 0");
                        }
                    }
                }
                if !(l.slope > 0.0) || !l.slope.is_finite() {
                    return bad("slope must be positive");
                }
                if !(l.noise_sd >= 0.0) || !l.noise_sd.is_finite() {
                    return bad("noise sd must be non-negative");
                }
                if !(l.noise_ar > -1.0 && l.noise_ar < 1.0) {
                    return bad("noise AR coefficient must lie strictly inside (-1, 1)");
                }
                if !l.intercept_share.is_finite() {
                    return bad("intercept share must be finite");
                }
            }
        }
        Ok(())
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn draw_process(process: &VisitProcess, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    match *process {
        VisitProcess::Ar1 { mean, phi, sd } => {
            let mut x = mean + sd / (1.0 - phi * phi).sqrt() * normal(rng);
            out.push(x);
            for _ in 1..n {
                x = mean + phi * (x - mean) + sd * normal(rng);
                out.push(x);
            }
        }
        VisitProcess::RandomWalk { start, drift, sd } => {
            let mut x = start;
            out.push(x);
            for _ in 1..n {
                x += drift + sd * normal(rng);
                out.push(x);
            }
        }
    }
    out
}

fn draw_noise(sd: f64, rho: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let innovation = sd * (1.0 - rho * rho).sqrt();
    let mut u = sd * normal(rng);
    let mut out = vec![u];
    for _ in 1..n {
        u = rho * u + innovation * normal(rng);
        out.push(u);
    }
    out
}

fn level_pageviews(level: &SynthLevel, visits: &[i64], noise: &[f64]) -> Vec<i64> {
    visits
        .iter()
        .zip(noise)
        .map(|(&v, e)| {
            let pv = (level.slope * v as f64 + level.intercept_share + e).round() as i64;
            pv.max(v)
        })
        .collect()
}

/// Splits `total` into non-negative integers proportional to `weights`
/// (largest remainder; ties go to the earlier index).
fn apportion(total: i64, weights: &[f64]) -> Vec<i64> {
    let clean: Vec<f64> = weights.iter().map(|w| w.max(0.0)).collect();
    let sum: f64 = clean.iter().sum();
    let weights: Vec<f64> = if sum > 0.0 {
        clean.iter().map(|w| w / sum).collect()
    } else {
        vec![1.0 / weights.len() as f64; weights.len()]
    };
    let quotas: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut out: Vec<i64> = quotas.iter().map(|q| q.floor() as i64).collect();
    let mut left = total - out.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..out.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left <= 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    out
}

/// Draws a dataset. The same config always yields the same dataset.
pub fn generate(config: &SynthConfig) -> Result<SegmentedDataset> {
    config.validate()?;
    let n = config.periods;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut dimensions = Vec::with_capacity(config.dimensions.len());
    let mut anchor_visits: Vec<i64> = Vec::new();
    let mut anchor_pageviews: Vec<i64> = Vec::new();

    for (d_index, dim) in config.dimensions.iter().enumerate() {
        let draws: Vec<(Vec<f64>, Vec<f64>)> = dim
            .levels
            .iter()
            .map(|l| {
                let path = draw_process(&l.visits, n, &mut rng);
                let noise = draw_noise(l.noise_sd, l.noise_ar, n, &mut rng);
                (path, noise)
            })
            .collect();

        let mut visits: Vec<Vec<i64>> = if d_index == 0 {
            draws
                .iter()
                .map(|(p, _)| p.iter().map(|x| x.round().max(0.0) as i64).collect())
                .collect()
        } else {
            let mut cols = vec![Vec::with_capacity(n); dim.levels.len()];
            for t in 0..n {
                let weights: Vec<f64> = draws.iter().map(|(p, _)| p[t]).collect();
                for (c, v) in cols.iter_mut().zip(apportion(anchor_visits[t], &weights)) {
                    c.push(v);
                }
            }
            cols
        };

        let mut pageviews: Vec<Vec<i64>> = dim
            .levels
            .iter()
            .zip(&visits)
            .zip(&draws)
            .map(|((l, v), (_, noise))| level_pageviews(l, v, noise))
            .collect();

        if d_index == 0 {
            anchor_visits = (0..n).map(|t| visits.iter().map(|v| v[t]).sum()).collect();
            anchor_pageviews = (0..n).map(|t| pageviews.iter().map(|p| p[t]).sum()).collect();
        } else {
            for t in 0..n {
                let excess: Vec<f64> = pageviews
                    .iter()
                    .zip(&visits)
                    .map(|(p, v)| (p[t] - v[t]) as f64)
                    .collect();
                let weights = if excess.iter().any(|e| *e > 0.0) {
                    excess
                } else {
                    visits.iter().map(|v| v[t] as f64).collect()
                };
                let target = anchor_pageviews[t] - anchor_visits[t];
                for ((p, v), extra) in pageviews
                    .iter_mut()
                    .zip(visits.iter())
                    .zip(apportion(target, &weights))
                {
                    p[t] = v[t] + extra;
                }
            }
        }

        dimensions.push(DimensionCounts {
            name: dim.name.clone(),
            levels: dim
                .levels
                .iter()
                .zip(visits.drain(..))
                .zip(pageviews.drain(..))
                .map(|((l, v), p)| LevelCounts {
                    level: l.name.clone(),
                    visits: v,
                    pageviews: p,
                })
                .collect(),
        });
    }

    SegmentedDataset::new(config.start, Frequency::Monthly, dimensions, anchor_pageviews)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_dataset;

    fn level(name: &str, process: VisitProcess, slope: f64, noise_sd: f64) -> SynthLevel {
        SynthLevel {
            name: name.into(),
            visits: process,
            slope,
            intercept_share: 50.0,
            noise_sd,
            noise_ar: 0.0,
        }
    }

    fn ar(mean: f64) -> VisitProcess {
        VisitProcess::Ar1 {
            mean,
            phi: 0.3,
            sd: mean * 0.1,
        }
    }

    fn three_dims(seed: u64) -> SynthConfig {
        SynthConfig {
            seed,
            periods: 36,
            start: default_start(),
            dimensions: vec![
                SynthDimension {
                    name: "source".into(),
                    levels: vec![
                        level("search", ar(300.0), 3.8, 40.0),
                        level("direct", ar(200.0), 4.2, 30.0),
                        level("referral", ar(100.0), 1.8, 10.0),
                    ],
                },
                SynthDimension {
                    name: "type".into(),
                    levels: vec![
                        level("new", ar(350.0), 2.4, 40.0),
                        level("returning", ar(250.0), 5.2, 40.0),
                    ],
                },
            ],
        }
    }

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(apportion(7, &[0.0, 0.0]), vec![4, 3]);
        assert_eq!(apportion(0, &[3.0, 1.0]), vec![0, 0]);
        assert_eq!(apportion(100, &[-5.0, 1.0, 3.0]), vec![0, 25, 75]);
    }

    #[test]
    fn generated_data_is_additive() {
        for seed in 0..20 {
            let d = generate(&three_dims(seed)).unwrap();
            assert_eq!(validate_dataset(&d), Ok(()), "seed {seed}");
            for dim in d.dimensions() {
                for l in &dim.levels {
                    assert!(l.visits.iter().zip(&l.pageviews).all(|(v, p)| p >= v));
                }
            }
        }
    }

    #[test]
    fn same_seed_same_dataset() {
        let a = generate(&three_dims(9)).unwrap();
        let b = generate(&three_dims(9)).unwrap();
        assert_eq!(a, b);
        let c = generate(&three_dims(10)).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.len(), c.len());
    }

    #[test]
    fn invalid_configs() {
        let mut c = three_dims(1);
        c.periods = 11;
        assert!(generate(&c).is_err());
        let mut c = three_dims(1);
        c.dimensions[0].levels[0].visits = VisitProcess::Ar1 {
            mean: 10.0,
            phi: 1.0,
            sd: 1.0,
        };
        assert!(generate(&c).is_err());
        let mut c = three_dims(1);
        c.dimensions[0].levels[0].slope = 0.0;
        assert!(generate(&c).is_err());
        let mut c = three_dims(1);
        c.dimensions[1].levels.pop();
        assert!(generate(&c).is_err());
    }

    #[test]
    fn json_config() {
        let text = r#"{
            "seed": 3, "periods": 24,
            "dimensions": [{"name": "type", "levels": [
                {"name": "new", "visits": {"process": "ar1", "mean": 400, "phi": 0.3, "sd": 30}, "slope": 2.4},
                {"name": "returning", "visits": {"process": "random_walk", "start": 300, "drift": 5, "sd": 20}, "slope": 5.22, "noise_sd": 25}
            ]}]
        }"#;
        let c = SynthConfig::from_json(text).unwrap();
        assert_eq!(c.start.to_string(), "2008-06");
        let d = generate(&c).unwrap();
        assert_eq!(d.len(), 24);
        assert!(SynthConfig::from_json("{\"seed\": 1,\n\"periods\": }").is_err());
    }
}
