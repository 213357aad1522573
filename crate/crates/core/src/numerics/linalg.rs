use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative size below which a Householder pivot counts as rank deficiency.
const RANK_TOLERANCE: f64 = 1e-10;

/// Named regressor columns of equal length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    column_names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl DesignMatrix {
    pub fn new(column_names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Config("design matrix has no columns".into()));
        }
        if column_names.len() != columns.len() {
            return Err(Error::Config(format!(
                "{} column names for {} columns",
                column_names.len(),
                columns.len()
            )));
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(Error::InsufficientObservations { needed: 0, got: 0 });
        }
        for (name, col) in column_names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::Config(format!(
                    "column `{name}` has {} rows, expected {n}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("column `{name}` has non-finite entries")));
            }
        }
        Ok(DesignMatrix {
            column_names,
            columns,
        })
    }

    /// Prepends a column of ones named `name`.
    pub fn with_intercept(self, name: &str) -> Self {
        let mut column_names = vec![name.to_string()];
        column_names.extend(self.column_names);
        let mut columns = vec![vec![1.0; self.columns[0].len()]];
        columns.extend(self.columns);
        DesignMatrix {
            column_names,
            columns,
        }
    }

    /// Appends a column, keeping the row count.
    pub fn push_column(&mut self, name: impl Into<String>, column: Vec<f64>) -> Result<()> {
        if column.len() != self.n() {
            return Err(Error::Config(format!(
                "column has {} rows, expected {}",
                column.len(),
                self.n()
            )));
        }
        self.column_names.push(name.into());
        self.columns.push(column);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    pub fn k(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    /// `X · beta`.
    pub fn mul_vec(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (col, b) in self.columns.iter().zip(beta) {
            for (o, x) in out.iter_mut().zip(col) {
                *o += b * x;
            }
        }
        out
    }
}

/// Least-squares coefficients and `(XᵀX)⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub beta: Vec<f64>,
    pub xtx_inverse: Vec<Vec<f64>>,
}

/// Solves `min ‖y − Xβ‖²` with Householder QR.
pub fn least_squares_solve(x: &DesignMatrix, y: &[f64]) -> Result<LeastSquares> {
    let n = x.n();
    let k = x.k();
    if y.len() != n {
        return Err(Error::Config(format!(
            "response has {} rows, design has {n}",
            y.len()
        )));
    }
    if n <= k {
        return Err(Error::InsufficientObservations { needed: k, got: n });
    }

    let mut a: Vec<Vec<f64>> = x.columns.clone();
    let mut qty = y.to_vec();
    let mut r_diag = vec![0.0; k];

    for j in 0..k {
        let original_norm = norm(&x.columns[j]);
        let alpha = norm(&a[j][j..]);
        if original_norm == 0.0 || alpha <= RANK_TOLERANCE * original_norm {
            return Err(Error::SingularDesign {
                column: x.column_names[j].clone(),
            });
        }
        // Reflector v = a_j[j..] + sign(a_jj)·α·e₁, stored in place.
        let diag = if a[j][j] >= 0.0 { -alpha } else { alpha };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= diag;
        let vtv: f64 = v.iter().map(|e| e * e).sum();
        r_diag[j] = diag;
        a[j][j] = diag;
        for e in a[j][j + 1..].iter_mut() {
            *e = 0.0;
        }
        let reflect = |target: &mut [f64]| {
            let dot: f64 = v.iter().zip(target.iter()).map(|(p, q)| p * q).sum();
            let s = 2.0 * dot / vtv;
            for (t, p) in target.iter_mut().zip(&v) {
                *t -= s * p;
            }
        };
        for col in a.iter_mut().skip(j + 1) {
            reflect(&mut col[j..]);
        }
        reflect(&mut qty[j..]);
    }

    // R is upper triangular: R[i][j] = a[j][i] for i ≤ j.
    let r = |i: usize, j: usize| a[j][i];

    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| r(i, j) * beta[j]).sum();
        beta[i] = (qty[i] - s) / r_diag[i];
    }

    // R⁻¹ by back substitution, then (XᵀX)⁻¹ = R⁻¹ R⁻ᵀ.
    let mut r_inv = vec![vec![0.0; k]; k];
    for c in 0..k {
        for i in (0..=c).rev() {
            let rhs = if i == c { 1.0 } else { 0.0 };
            let s: f64 = (i + 1..=c).map(|j| r(i, j) * r_inv[j][c]).sum();
            r_inv[i][c] = (rhs - s) / r_diag[i];
        }
    }
    let mut xtx_inverse = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let s: f64 = (j..k).map(|m| r_inv[i][m] * r_inv[j][m]).sum();
            xtx_inverse[i][j] = s;
            xtx_inverse[j][i] = s;
        }
    }

    Ok(LeastSquares { beta, xtx_inverse })
}

fn norm(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|e| (e / scale).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(cols: &[&[f64]]) -> DesignMatrix {
        DesignMatrix::new(
            (0..cols.len()).map(|i| format!("x{i}")).collect(),
            cols.iter().map(|c| c.to_vec()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn perfect_line() {
        let x = design(&[&[1.0; 3], &[1.0, 2.0, 3.0]]);
        let ls = least_squares_solve(&x, &[2.0, 4.0, 6.0]).unwrap();
        assert!(ls.beta[0].abs() < 1e-12);
        assert!((ls.beta[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hand_normal_equations() {
        // Sxy / Sxx = 7 / 5, intercept = 4 - 1.4 * 2.5
        let x = design(&[&[1.0; 4], &[1.0, 2.0, 3.0, 4.0]]);
        let ls = least_squares_solve(&x, &[2.0, 3.0, 5.0, 6.0]).unwrap();
        assert!((ls.beta[0] - 0.5).abs() < 1e-12);
        assert!((ls.beta[1] - 1.4).abs() < 1e-12);
        // (XᵀX)⁻¹ for X = [1, x]: [[30, -10], [-10, 4]] / 20
        let expect = [[1.5, -0.5], [-0.5, 0.2]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((ls.xtx_inverse[i][j] - expect[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn duplicated_column_is_singular() {
        let x = design(&[&[1.0; 4], &[1.0, 2.0, 3.0, 5.0], &[1.0, 2.0, 3.0, 5.0]]);
        assert!(matches!(
            least_squares_solve(&x, &[1.0, 2.0, 3.0, 4.0]),
            Err(Error::SingularDesign { column }) if column == "x2"
        ));
    }

    #[test]
    fn zero_column_is_singular() {
        let x = design(&[&[1.0; 3], &[0.0; 3]]);
        assert!(least_squares_solve(&x, &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn needs_more_rows_than_columns() {
        let x = design(&[&[1.0; 2], &[1.0, 2.0]]);
        assert!(matches!(
            least_squares_solve(&x, &[1.0, 2.0]),
            Err(Error::InsufficientObservations { needed: 2, got: 2 })
        ));
    }
}
