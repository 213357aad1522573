//! CDFs behind every reported p-value, built on the regularized incomplete
//! gamma and beta functions.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 − P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x == f64::INFINITY {
        0.0
    } else if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_continued_fraction(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_continued_fraction(a: f64, x: f64) -> f64 {
    // Modified Lentz.
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_nan() {
        Err(Error::Domain(x))
    } else {
        Ok(())
    }
}

fn check_dof(dof: usize) -> Result<f64> {
    if dof == 0 {
        Err(Error::InvalidDof(0.0))
    } else {
        Ok(dof as f64)
    }
}

fn check_non_negative(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        Err(Error::Domain(x))
    } else {
        Ok(())
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    // Φ(x) = ½·erfc(−x/√2), erfc(z) = Q(½, z²) for z ≥ 0.
    let tail = 0.5 * gamma_q(0.5, 0.5 * x * x);
    if x >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Student-t CDF with `dof` degrees of freedom.
pub fn student_t_cdf(x: f64, dof: usize) -> Result<f64> {
    check_finite(x)?;
    let tail = 0.5 * student_t_two_sided_p(x, dof)?;
    Ok(if x >= 0.0 { 1.0 - tail } else { tail })
}

/// `P(|T| ≥ |x|)` computed without cancellation.
pub fn student_t_two_sided_p(x: f64, dof: usize) -> Result<f64> {
    check_finite(x)?;
    let v = check_dof(dof)?;
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(beta_inc(0.5 * v, 0.5, v / (v + x * x)))
}

/// Chi-square CDF.
pub fn chi_square_cdf(x: f64, dof: usize) -> Result<f64> {
    check_non_negative(x)?;
    let k = check_dof(dof)?;
    Ok(gamma_p(0.5 * k, 0.5 * x))
}

/// Chi-square upper tail `1 − CDF`.
pub fn chi_square_sf(x: f64, dof: usize) -> Result<f64> {
    check_non_negative(x)?;
    let k = check_dof(dof)?;
    Ok(gamma_q(0.5 * k, 0.5 * x))
}

/// F-distribution CDF.
pub fn f_cdf(x: f64, d1: usize, d2: usize) -> Result<f64> {
    check_non_negative(x)?;
    let (a, b) = (check_dof(d1)?, check_dof(d2)?);
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(beta_inc(0.5 * a, 0.5 * b, a * x / (a * x + b)))
}

/// F-distribution upper tail `1 − CDF`.
pub fn f_sf(x: f64, d1: usize, d2: usize) -> Result<f64> {
    check_non_negative(x)?;
    let (a, b) = (check_dof(d1)?, check_dof(d2)?);
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(beta_inc(0.5 * b, 0.5 * a, b / (b + a * x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule on a smooth integrand.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut s = f(a) + f(b);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.1) - 2.252_712_651_734_206).abs() < 1e-12);
    }

    #[test]
    fn normal_cdf_examples() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!(normal_cdf(8.0) > 1.0 - 1e-14);
        // Simpson oracle of the Gaussian density on [0, 1.959964].
        let density = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        let oracle = 0.5 + simpson(density, 0.0, 1.959_964, 2000);
        assert!((oracle - 0.975).abs() < 1e-6);
        assert!((normal_cdf(1.959_964) - oracle).abs() < 1e-10);
        for x in [0.3, 1.0, 2.5, 4.0] {
            let o = 0.5 + simpson(density, 0.0, x, 4000);
            assert!((normal_cdf(x) - o).abs() < 1e-10, "x={x}");
            assert!((normal_cdf(-x) - (1.0 - normal_cdf(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn student_t_examples() {
        for dof in [1, 5, 30] {
            assert_eq!(student_t_cdf(0.0, dof).unwrap(), 0.5);
        }
        let cauchy = 0.5 + 1f64.atan() / PI;
        assert!((student_t_cdf(1.0, 1).unwrap() - cauchy).abs() < 1e-12);
        assert!((student_t_cdf(1.0, 1).unwrap() - 0.75).abs() < 1e-12);
        for x in [-3.0, -0.4, 2.2, 7.5] {
            let c = 0.5 + f64::atan(x) / PI;
            assert!((student_t_cdf(x, 1).unwrap() - c).abs() < 1e-12);
        }
        // dof = 2 closed form: ½ + x / (2√(2 + x²))
        for x in [-2.0f64, 0.7, 3.1] {
            let c = 0.5 + x / (2.0 * (2.0 + x * x).sqrt());
            assert!((student_t_cdf(x, 2).unwrap() - c).abs() < 1e-12);
        }
        assert!(student_t_two_sided_p(10.180_14, 21).unwrap() < 0.000_05);
        assert!(matches!(student_t_cdf(1.0, 0), Err(Error::InvalidDof(_))));
    }

    #[test]
    fn chi_square_examples() {
        assert_eq!(chi_square_cdf(0.0, 3).unwrap(), 0.0);
        let p = chi_square_sf(5.995_448, 2).unwrap();
        assert!((p - 0.0499).abs() < 0.000_05, "{p}");
        assert!(((-2.997_724f64).exp() - p).abs() < 1e-12);
        let p = chi_square_sf(2.309_003, 2).unwrap();
        assert!((p - 0.3152).abs() < 0.000_05);
        assert!(matches!(chi_square_cdf(-1.0, 2), Err(Error::Domain(_))));
        // dof = 1: P(χ² ≤ x) = 2Φ(√x) − 1
        for x in [0.1f64, 1.0, 3.84, 9.0] {
            let c = 2.0 * normal_cdf(x.sqrt()) - 1.0;
            assert!((chi_square_cdf(x, 1).unwrap() - c).abs() < 1e-12);
        }
    }

    #[test]
    fn f_examples() {
        assert_eq!(f_cdf(0.0, 2, 5).unwrap(), 0.0);
        let p = f_sf(3.558_785, 2, 19).unwrap();
        assert!((p - 0.0487).abs() < 0.000_05, "{p}");
        let p = f_sf(0.065_414, 3, 18).unwrap();
        assert!((p - 0.9775).abs() < 0.000_05, "{p}");
        assert!(matches!(f_cdf(-0.1, 2, 5), Err(Error::Domain(_))));
        // F(2, d2) closed form: sf = (1 + 2x/d2)^(−d2/2)
        for (x, d2) in [(0.5, 7usize), (3.0, 19), (10.0, 4)] {
            let c = (1.0 + 2.0 * x / d2 as f64).powf(-(d2 as f64) / 2.0);
            assert!((f_sf(x, 2, d2).unwrap() - c).abs() < 1e-12);
            assert!((f_cdf(x, 2, d2).unwrap() + c - 1.0).abs() < 1e-12);
        }
        // t² ~ F(1, v)
        let t = 1.7;
        let via_t = student_t_two_sided_p(t, 9).unwrap();
        assert!((f_sf(t * t, 1, 9).unwrap() - via_t).abs() < 1e-12);
    }
}
