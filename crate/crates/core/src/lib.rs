//! Explains total page views of a web site as a composition of per-segment
//! least-squares fits, with unit-root screening and a residual-diagnostic
//! validation ledger.

pub mod diagnostics;
pub mod error;
pub mod io;
pub mod model;
pub mod numerics;
pub mod ols;
pub mod pipeline;
pub mod stationarity;
pub mod synth;

pub use diagnostics::{breusch_godfrey, breusch_pagan_godfrey, jarque_bera, sign_check, Sign};
pub use error::{Error, Result};
pub use model::{
    validate_dataset, AnalysisConfig, DimensionCounts, Frequency, LevelCounts, Period,
    SegmentDimension, SegmentedDataset, TimeSeries, Violation,
};
pub use ols::{fit_ols, fit_restricted, RegressionResult};
pub use pipeline::{run_analysis, AnalysisReport, Overall, Verdict};
pub use stationarity::{adf_test, ensure_stationary, AdfSpec, CriticalLevel};
