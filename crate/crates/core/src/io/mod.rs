//! Dataset CSV, report rendering and plot data.

mod dataset;
mod report;

pub use dataset::{parse_dataset, parse_dataset_str, write_dataset, DATASET_HEADER};
pub use report::{
    emit_plot_data, parse_report_json, render_ledger_text, render_report, ReportFormat,
};

/// Seven significant digits, fixed notation where practical.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return "NA".into();
    }
    if x == 0.0 {
        return "0.000000".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-4..=12).contains(&magnitude) {
        return format!("{x:.6e}");
    }
    let decimals = (6 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Four decimals, as probabilities are printed.
pub fn format_probability(p: f64) -> String {
    format!("{p:.4}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_significant_digits() {
        assert_eq!(format_number(1.549155), "1.549155");
        assert_eq!(format_number(1843.7129), "1843.713");
        assert_eq!(format_number(-189.8207), "-189.8207");
        assert_eq!(format_number(30345061.0), "30345061");
        assert_eq!(format_number(0.0499), "0.04990000");
        assert_eq!(format_number(0.0), "0.000000");
        assert_eq!(format_number(1.5e-7), "1.500000e-7");
        assert_eq!(format_number(f64::NAN), "NA");
    }

    #[test]
    fn printed_numbers_reparse_within_half_a_digit() {
        for &x in &[1.549155123, 2609.0157, 0.00012345678, 98765432.1, -3.14159265, 7.0e-6] {
            let s = format_number(x);
            let back: f64 = s.parse().unwrap();
            let digits = s.split(['e', 'E']).next().unwrap();
            let decimals = digits.split('.').nth(1).map_or(0, str::len) as i32;
            let exp: i32 = s.split('e').nth(1).map_or(0, |e| e.parse().unwrap());
            let half_unit = 0.5 * 10f64.powi(exp - decimals);
            assert!((back - x).abs() <= half_unit * (1.0 + 1e-9), "{x} -> {s}");
        }
    }
}
