//! Dense least squares and the distribution functions used for p-values.

mod distributions;
mod linalg;

pub use distributions::{
    beta_inc, chi_square_cdf, chi_square_sf, f_cdf, f_sf, gamma_p, gamma_q, ln_gamma,
    normal_cdf, student_t_cdf, student_t_two_sided_p,
};
pub use linalg::{least_squares_solve, DesignMatrix, LeastSquares};
