use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("insufficient observations: need more than {needed}, got {got}")]
    InsufficientObservations { needed: usize, got: usize },

    #[error("singular design: column `{column}` is linearly dependent on earlier columns")]
    SingularDesign { column: String },

    #[error("invalid degrees of freedom: {0}")]
    InvalidDof(f64),

    #[error("argument outside the distribution's domain: {0}")]
    Domain(f64),

    #[error("degenerate residuals: {0}")]
    DegenerateResiduals(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },

    #[error("line {line}: duplicate row for ({period}, {dimension}, {level})")]
    DuplicateRow {
        line: u64,
        period: String,
        dimension: String,
        level: String,
    },

    #[error("dataset failed validation: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("i/o error: {0}")]
    Io(String),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
