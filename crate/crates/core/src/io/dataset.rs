use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use crate::error::{Error, Result};
use crate::model::{
    validate_dataset, DimensionCounts, Frequency, LevelCounts, Period, SegmentedDataset,
};

pub const DATASET_HEADER: [&str; 5] = ["period", "dimension", "level", "visits", "pageviews"];

fn parse_error(line: u64, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

struct Row {
    line: u64,
    period: Period,
    dimension: String,
    level: String,
    visits: i64,
    pageviews: i64,
}

/// Reads the long-format CSV `period,dimension,level,visits,pageviews`
/// (monthly periods written `YYYY-MM`). Totals are the level sums of the
/// first dimension; the result is checked with [`validate_dataset`].
pub fn parse_dataset<R: Read>(reader: R) -> Result<SegmentedDataset> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = csv.records();
    let header = match records.next() {
        None => return Err(parse_error(1, 1, "empty input; expected a header row")),
        Some(r) => r.map_err(csv_error)?,
    };
    let names: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    if names != DATASET_HEADER {
        return Err(parse_error(
            1,
            1,
            format!("expected header `{}`", DATASET_HEADER.join(",")),
        ));
    }

    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != DATASET_HEADER.len() {
            return Err(parse_error(
                line,
                record.len().min(DATASET_HEADER.len()) + 1,
                format!("expected 5 fields, found {}", record.len()),
            ));
        }
        let period: Period = record[0]
            .parse()
            .map_err(|e: Error| parse_error(line, 1, e.to_string()))?;
        let name = |i: usize, what: &str| {
            if record[i].is_empty() {
                Err(parse_error(line, i + 1, format!("empty {what}")))
            } else {
                Ok(record[i].to_string())
            }
        };
        let count = |i: usize, what: &str| {
            record[i].parse::<i64>().map_err(|_| {
                parse_error(line, i + 1, format!("{what} `{}` is not an integer", &record[i]))
            })
        };
        rows.push(Row {
            line,
            period,
            dimension: name(1, "dimension")?,
            level: name(2, "level")?,
            visits: count(3, "visits")?,
            pageviews: count(4, "pageviews")?,
        });
    }
    if rows.is_empty() {
        return Err(parse_error(2, 1, "no data rows"));
    }

    let periods: BTreeSet<Period> = rows.iter().map(|r| r.period).collect();
    let start = *periods.iter().next().expect("non-empty");
    let mut expected = start;
    for p in &periods {
        if *p != expected {
            let line = rows.iter().find(|r| r.period == *p).map_or(0, |r| r.line);
            return Err(parse_error(
                line,
                1,
                format!("period {p} follows a gap; expected {expected}"),
            ));
        }
        expected = expected.advance(Frequency::Monthly, 1);
    }
    let n = periods.len();

    // Dimension and level order follow first appearance.
    let mut order: Vec<(String, Vec<String>)> = Vec::new();
    let mut cells: BTreeMap<(String, String), (u64, Vec<Option<(i64, i64)>>)> = BTreeMap::new();
    for r in &rows {
        let d = match order.iter().position(|(d, _)| *d == r.dimension) {
            Some(i) => i,
            None => {
                order.push((r.dimension.clone(), Vec::new()));
                order.len() - 1
            }
        };
        if !order[d].1.contains(&r.level) {
            order[d].1.push(r.level.clone());
        }
        let t = (r.period.ordinal() - start.ordinal()) as usize;
        let entry = cells
            .entry((r.dimension.clone(), r.level.clone()))
            .or_insert_with(|| (r.line, vec![None; n]));
        if entry.1[t].is_some() {
            return Err(Error::DuplicateRow {
                line: r.line,
                period: r.period.to_string(),
                dimension: r.dimension.clone(),
                level: r.level.clone(),
            });
        }
        entry.1[t] = Some((r.visits, r.pageviews));
    }

    let mut dimensions = Vec::with_capacity(order.len());
    for (dimension, levels) in order {
        if levels.len() < 2 {
            let line = cells[&(dimension.clone(), levels[0].clone())].0;
            return Err(parse_error(
                line,
                2,
                format!("dimension `{dimension}` has a single level"),
            ));
        }
        let mut out = Vec::with_capacity(levels.len());
        for level in levels {
            let (line, values) = cells.remove(&(dimension.clone(), level.clone())).expect("seen");
            let mut visits = Vec::with_capacity(n);
            let mut pageviews = Vec::with_capacity(n);
            for (t, cell) in values.into_iter().enumerate() {
                let (v, p) = cell.ok_or_else(|| {
                    parse_error(
                        line,
                        1,
                        format!(
                            "no row for {dimension}/{level} in {}",
                            start.advance(Frequency::Monthly, t as i64)
                        ),
                    )
                })?;
                visits.push(v);
                pageviews.push(p);
            }
            out.push(LevelCounts {
                level,
                visits,
                pageviews,
            });
        }
        dimensions.push(DimensionCounts {
            name: dimension,
            levels: out,
        });
    }

    let dataset = SegmentedDataset::from_dimensions(start, Frequency::Monthly, dimensions)?;
    validate_dataset(&dataset).map_err(Error::Validation)?;
    Ok(dataset)
}

pub fn parse_dataset_str(text: &str) -> Result<SegmentedDataset> {
    parse_dataset(text.as_bytes())
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    parse_error(line, 1, e.to_string())
}

/// Writes the dataset in the layout [`parse_dataset`] reads, ordered by
/// period, then dimension, then level.
pub fn write_dataset(dataset: &SegmentedDataset) -> String {
    let mut out = DATASET_HEADER.join(",");
    out.push('\n');
    for (t, period) in dataset.periods().iter().enumerate() {
        for d in dataset.dimensions() {
            for l in &d.levels {
                out.push_str(&format!(
                    "{period},{},{},{},{}\n",
                    d.name, l.level, l.visits[t], l.pageviews[t]
                ));
            }
        }
    }
    out
}
