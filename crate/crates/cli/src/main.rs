use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pageview::diagnostics::Sign;
use pageview::io::{
    emit_plot_data, parse_dataset, render_ledger_text, render_report, write_dataset, ReportFormat,
};
use pageview::pipeline::DimensionOutcome;
use pageview::synth::{generate, SynthConfig};
use pageview::{adf_test, run_analysis, AdfSpec, AnalysisConfig, CriticalLevel, Error, SegmentedDataset};

#[derive(Parser)]
#[command(name = "pageview", version, about = "Segment-composed page-view models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    r2_threshold: f64,
    #[arg(long = "max-diff", default_value_t = 2)]
    max_diff: u32,
    #[arg(long, default_value = "constant")]
    adf_spec: AdfSpec,
    #[arg(long, default_value_t = 0)]
    adf_lags: usize,
    #[arg(long, default_value = "10%")]
    adf_level: CriticalLevel,
    #[arg(long, default_value_t = 2)]
    bg_lags: usize,
    /// Expected slope sign, e.g. `--expect direct=negative`. Repeatable.
    #[arg(long = "expect", value_name = "LEVEL=SIGN")]
    expect: Vec<String>,
}

impl ModelArgs {
    fn config(&self) -> Result<AnalysisConfig, Error> {
        let mut config = AnalysisConfig {
            alpha: self.alpha,
            r2_threshold: self.r2_threshold,
            max_diff_order: self.max_diff,
            adf_spec: self.adf_spec,
            adf_lags: self.adf_lags,
            adf_level: self.adf_level,
            bg_lags: self.bg_lags,
            ..AnalysisConfig::default()
        };
        for e in &self.expect {
            let (level, sign) = e
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("`{e}` is not LEVEL=SIGN")))?;
            let sign = match sign {
                "positive" | "+" => Sign::Positive,
                "negative" | "-" => Sign::Negative,
                other => return Err(Error::Config(format!("unknown sign `{other}`"))),
            };
            config.expected_signs.insert(level.to_string(), sign);
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit segment models, compose the total model and validate it.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        /// Dimension to analyze; `all` analyzes every dimension in the file.
        #[arg(long, default_value = "all")]
        dimension: String,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "text")]
        format: ReportFormat,
        /// Write the report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Directory for per-dimension `actual/fitted/residual` CSV files.
        #[arg(long)]
        plots: Option<PathBuf>,
    },
    /// Augmented Dickey-Fuller test on one series.
    Adf {
        #[arg(long)]
        input: PathBuf,
        /// `total`, `DIMENSION/LEVEL` (visits) or `DIMENSION/LEVEL/pageviews`.
        #[arg(long)]
        column: String,
        #[arg(long, default_value = "constant")]
        spec: AdfSpec,
        #[arg(long, default_value_t = 0)]
        lags: usize,
        #[arg(long, default_value = "10%")]
        level: CriticalLevel,
        /// Difference the series this many times first.
        #[arg(long, default_value_t = 0)]
        diff: u32,
    },
    /// Residual diagnostics and the validation ledger for one dimension.
    Diagnose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        dimension: String,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "text")]
        format: ReportFormat,
    },
    /// Generate a synthetic dataset from a JSON configuration.
    Synth {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::Parse { .. } | Error::DuplicateRow { .. } | Error::Validation(_) | Error::Io(_) => 2,
        Error::DegenerateSeries(_)
        | Error::InsufficientObservations { .. }
        | Error::SingularDesign { .. }
        | Error::InvalidDof(_)
        | Error::Domain(_)
        | Error::DegenerateResiduals(_) => 3,
    }
}

fn load(path: &Path) -> Result<SegmentedDataset, Error> {
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_dataset(file)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dimensions_arg(dimension: &str) -> Option<Vec<String>> {
    match dimension {
        "all" => None,
        other => Some(vec![other.to_string()]),
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Analyze {
            input,
            dimension,
            model,
            format,
            output,
            plots,
        } => {
            let config = model.config()?;
            let data = load(&input)?;
            let dims = dimensions_arg(&dimension);
            let report = run_analysis(&data, &config, dims.as_deref())?;
            emit(&render_report(&report, format)?, output.as_deref())?;
            if let Some(dir) = plots {
                fs::create_dir_all(&dir).map_err(|e| Error::Io(e.to_string()))?;
                for a in report.dimensions.iter().filter_map(DimensionOutcome::analysis) {
                    let path = dir.join(format!("{}.csv", a.dimension));
                    emit(&emit_plot_data(&a.composed, &data), Some(&path))?;
                }
            }
            let failed: Vec<_> = report
                .dimensions
                .iter()
                .filter_map(|d| match d {
                    DimensionOutcome::Failed { dimension, error } => Some((dimension, error)),
                    DimensionOutcome::Analyzed(_) => None,
                })
                .collect();
            for (d, e) in &failed {
                eprintln!("error: dimension `{d}`: {e}");
            }
            Ok(if failed.is_empty() { 0 } else { 3 })
        }
        Command::Adf {
            input,
            column,
            spec,
            lags,
            level,
            diff,
        } => {
            let data = load(&input)?;
            let parts: Vec<&str> = column.split('/').collect();
            let ts = match parts.as_slice() {
                ["total"] => data.total_pageview_series()?,
                [d, l] | [d, l, "visits"] => data.visits(d, l)?,
                [d, l, "pageviews"] => data.pageviews(d, l)?,
                _ => return Err(Error::Config(format!("cannot read series `{column}`"))),
            };
            let ts = ts.difference_n(diff)?;
            let r = adf_test(&ts, spec, lags, level)?;
            println!("Null Hypothesis: {} has a unit root", ts.label());
            println!("Exogenous: {}   Lags: {}", r.spec, r.lags);
            println!("Included observations: {}", r.n_effective);
            println!(
                "ADF t-Statistic: {}",
                pageview::io::format_number(r.statistic)
            );
            for l in CriticalLevel::ALL {
                println!(
                    "{:>4} level: {}",
                    l.to_string(),
                    pageview::io::format_number(r.critical_values.at(l))
                );
            }
            println!(
                "Decision at {}: {}",
                r.level,
                if r.reject_unit_root {
                    "reject unit root (stationary)"
                } else {
                    "unit root not rejected"
                }
            );
            Ok(0)
        }
        Command::Diagnose {
            input,
            dimension,
            model,
            format,
        } => {
            let config = model.config()?;
            let data = load(&input)?;
            let report = run_analysis(&data, &config, Some(std::slice::from_ref(&dimension)))?;
            match &report.dimensions[0] {
                DimensionOutcome::Analyzed(a) => {
                    let text = match format {
                        ReportFormat::Text => render_ledger_text(&a.composed),
                        ReportFormat::Json => serde_json::to_string_pretty(&a.composed.ledger)
                            .map_err(|e| Error::Io(e.to_string()))?,
                    };
                    emit(&text, None)?;
                    Ok(0)
                }
                DimensionOutcome::Failed { error, .. } => {
                    eprintln!("error: {error}");
                    Ok(3)
                }
            }
        }
        Command::Synth { config, seed, out } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
            let mut cfg = SynthConfig::from_json(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let data = generate(&cfg)?;
            emit(&write_dataset(&data), out.as_deref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Validation(v) = &e {
                for violation in v {
                    eprintln!("  {violation}");
                }
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
