//! Dated series containers, return/NAV conversions, calendar resampling and
//! CSV ingestion.
//!
//! Dates are opaque ordered labels: nothing here knows about business days.
//! Quarter and year membership come straight from the calendar date.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Strictly increasing sequence of calendar dates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DateIndex(Vec<NaiveDate>);

impl DateIndex {
    pub fn new(dates: Vec<NaiveDate>) -> Result<Self> {
        if let Some(w) = dates.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(format!(
                "dates must be strictly increasing ({} followed by {})",
                w[0], w[1]
            )));
        }
        Ok(DateIndex(dates))
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<NaiveDate> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<NaiveDate> {
        self.0.last().copied()
    }

    pub fn get(&self, i: usize) -> NaiveDate {
        self.0[i]
    }

    pub fn position(&self, date: NaiveDate) -> Option<usize> {
        self.0.binary_search(&date).ok()
    }

    fn sub(&self, range: std::ops::Range<usize>) -> DateIndex {
        DateIndex(self.0[range].to_vec())
    }

    /// Dates present in both indexes, in order.
    pub fn intersect(&self, other: &DateIndex) -> DateIndex {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(self.0[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        DateIndex(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Price,
    Nav,
    Return,
}

impl SeriesKind {
    fn is_level(self) -> bool {
        matches!(self, SeriesKind::Price | SeriesKind::Nav)
    }
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeriesKind::Price => "price",
            SeriesKind::Nav => "nav",
            SeriesKind::Return => "return",
        })
    }
}

fn check_values(kind: SeriesKind, dates: &[NaiveDate], values: &[f64]) -> Result<()> {
    for (d, &v) in dates.iter().zip(values) {
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite {kind} value {v} at {d}")));
        }
        if kind.is_level() && v <= 0.0 {
            return Err(Error::InvalidInput(format!("non-positive {kind} value {v} at {d}")));
        }
    }
    Ok(())
}

/// A single dated series of prices, NAVs or simple returns.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSeries {
    index: DateIndex,
    values: Vec<f64>,
    kind: SeriesKind,
}

impl ValueSeries {
    pub fn new(index: DateIndex, values: Vec<f64>, kind: SeriesKind) -> Result<Self> {
        if index.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "index has {} dates but {} values were given",
                index.len(),
                values.len()
            )));
        }
        check_values(kind, index.dates(), &values)?;
        Ok(ValueSeries {
            index,
            values,
            kind,
        })
    }

    pub fn from_pairs(
        pairs: impl IntoIterator<Item = (NaiveDate, f64)>,
        kind: SeriesKind,
    ) -> Result<Self> {
        let (dates, values): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        ValueSeries::new(DateIndex::new(dates)?, values, kind)
    }

    pub fn index(&self) -> &DateIndex {
        &self.index
    }

    pub fn dates(&self) -> &[NaiveDate] {
        self.index.dates()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, f64)> + '_ {
        self.index.dates().iter().copied().zip(self.values.iter().copied())
    }

    /// Same values stamped with a different index of equal length.
    pub fn reindexed(&self, index: DateIndex) -> Result<Self> {
        ValueSeries::new(index, self.values.clone(), self.kind)
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        ValueSeries::new(
            self.index.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
            self.kind,
        )
    }

    /// Points dated on or before `date`.
    pub fn until(&self, date: NaiveDate) -> Self {
        let n = self.dates().partition_point(|d| *d <= date);
        self.slice(0..n)
    }

    /// Points dated strictly after `date`.
    pub fn after(&self, date: NaiveDate) -> Self {
        let n = self.dates().partition_point(|d| *d <= date);
        self.slice(n..self.len())
    }

    /// The final `n` points (or all of them when shorter).
    pub fn tail(&self, n: usize) -> Self {
        let len = self.len();
        self.slice(len.saturating_sub(n)..len)
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        ValueSeries {
            index: self.index.sub(range.clone()),
            values: self.values[range].to_vec(),
            kind: self.kind,
        }
    }

    /// Restricts the series to the dates of `index`, which must all be present.
    pub fn select(&self, index: &DateIndex) -> Result<Self> {
        let values = index
            .dates()
            .iter()
            .map(|d| {
                self.index
                    .position(*d)
                    .map(|i| self.values[i])
                    .ok_or_else(|| Error::Alignment(format!("date {d} missing from series")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ValueSeries {
            index: index.clone(),
            values,
            kind: self.kind,
        })
    }
}

/// Multiple aligned asset columns over one shared index.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    index: DateIndex,
    asset_names: Vec<String>,
    columns: Vec<Vec<f64>>,
    kind: SeriesKind,
}

impl PricePanel {
    pub fn new(
        index: DateIndex,
        asset_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        kind: SeriesKind,
    ) -> Result<Self> {
        if asset_names.is_empty() {
            return Err(Error::InvalidInput("panel needs at least one asset".into()));
        }
        if asset_names.len() != columns.len() {
            return Err(Error::InvalidInput(format!(
                "{} asset names for {} columns",
                asset_names.len(),
                columns.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &asset_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate asset name `{name}`")));
            }
        }
        for (name, col) in asset_names.iter().zip(&columns) {
            if col.len() != index.len() {
                return Err(Error::InvalidInput(format!(
                    "column `{name}` has {} values, index has {}",
                    col.len(),
                    index.len()
                )));
            }
            check_values(kind, index.dates(), col)?;
        }
        Ok(PricePanel {
            index,
            asset_names,
            columns,
            kind,
        })
    }

    pub fn index(&self) -> &DateIndex {
        &self.index
    }

    pub fn dates(&self) -> &[NaiveDate] {
        self.index.dates()
    }

    pub fn asset_names(&self) -> &[String] {
        &self.asset_names
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn n_assets(&self) -> usize {
        self.asset_names.len()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<ValueSeries> {
        let k = self.asset_names.iter().position(|n| n == name)?;
        Some(ValueSeries {
            index: self.index.clone(),
            values: self.columns[k].clone(),
            kind: self.kind,
        })
    }

    /// Cross-section at row `t`.
    pub fn row(&self, t: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[t]).collect()
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        PricePanel {
            index: self.index.sub(range.clone()),
            asset_names: self.asset_names.clone(),
            columns: self.columns.iter().map(|c| c[range.clone()].to_vec()).collect(),
            kind: self.kind,
        }
    }

    pub fn until(&self, date: NaiveDate) -> Self {
        let n = self.dates().partition_point(|d| *d <= date);
        self.slice(0..n)
    }

    pub fn after(&self, date: NaiveDate) -> Self {
        let n = self.dates().partition_point(|d| *d <= date);
        self.slice(n..self.len())
    }

    pub fn select(&self, index: &DateIndex) -> Result<Self> {
        let rows = index
            .dates()
            .iter()
            .map(|d| {
                self.index
                    .position(*d)
                    .ok_or_else(|| Error::Alignment(format!("date {d} missing from panel")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PricePanel {
            index: index.clone(),
            asset_names: self.asset_names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&i| c[i]).collect())
                .collect(),
            kind: self.kind,
        })
    }

    /// Reorders asset columns; `order[j]` is the source column of output column `j`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n_assets() {
            return Err(Error::InvalidInput("permutation length mismatch".into()));
        }
        PricePanel::new(
            self.index.clone(),
            order.iter().map(|&i| self.asset_names[i].clone()).collect(),
            order.iter().map(|&i| self.columns[i].clone()).collect(),
            self.kind,
        )
    }
}

fn simple_returns(levels: &[f64]) -> Vec<f64> {
    levels.windows(2).map(|w| w[1] / w[0] - 1.0).collect()
}

/// `p_t / p_{t-1} - 1`, dropping the first date.
pub fn returns_from_prices(prices: &ValueSeries) -> Result<ValueSeries> {
    if !prices.kind.is_level() {
        return Err(Error::InvalidInput(format!(
            "expected a price or nav series, got {}",
            prices.kind
        )));
    }
    if prices.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: prices.len(),
        });
    }
    ValueSeries::new(
        prices.index.sub(1..prices.len()),
        simple_returns(&prices.values),
        SeriesKind::Return,
    )
}

/// Returns panel from a price panel; the first date is dropped.
pub fn panel_returns(prices: &PricePanel) -> Result<PricePanel> {
    if !prices.kind.is_level() {
        return Err(Error::InvalidInput("panel already holds returns".into()));
    }
    if prices.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: prices.len(),
        });
    }
    PricePanel::new(
        prices.index.sub(1..prices.len()),
        prices.asset_names.clone(),
        prices.columns.iter().map(|c| simple_returns(c)).collect(),
        SeriesKind::Return,
    )
}

/// Compounds returns from `initial`; the first output is `initial * (1 + r_1)`.
pub fn nav_from_returns(returns: &ValueSeries, initial: f64) -> Result<ValueSeries> {
    if !(initial > 0.0 && initial.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "initial nav must be positive, got {initial}"
        )));
    }
    let mut nav = initial;
    let mut out = Vec::with_capacity(returns.len());
    for (date, r) in returns.iter() {
        nav *= 1.0 + r;
        if r <= -1.0 || nav <= 0.0 {
            return Err(Error::NavNonPositive { date, value: nav });
        }
        out.push(nav);
    }
    ValueSeries::new(returns.index.clone(), out, SeriesKind::Nav)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Period {
    Quarterly,
    Yearly,
}

impl Period {
    fn key(self, d: NaiveDate) -> (i32, u32) {
        match self {
            Period::Quarterly => (d.year(), d.month0() / 3),
            Period::Yearly => (d.year(), 0),
        }
    }
}

/// Compounds returns within each calendar period, stamping each period at its
/// last observed date. Periods without observations do not appear.
pub fn resample_compound(returns: &ValueSeries, target: Period) -> Result<ValueSeries> {
    if returns.kind != SeriesKind::Return {
        return Err(Error::InvalidInput("resampling expects a return series".into()));
    }
    let mut dates = Vec::new();
    let mut values = Vec::new();
    let mut current: Option<((i32, u32), NaiveDate, f64)> = None;
    for (d, r) in returns.iter() {
        let key = target.key(d);
        match current.as_mut() {
            Some((k, last, growth)) if *k == key => {
                *last = d;
                *growth *= 1.0 + r;
            }
            _ => {
                if let Some((_, last, growth)) = current.take() {
                    dates.push(last);
                    values.push(growth - 1.0);
                }
                current = Some((key, d, 1.0 + r));
            }
        }
    }
    if let Some((_, last, growth)) = current {
        dates.push(last);
        values.push(growth - 1.0);
    }
    ValueSeries::new(DateIndex(dates), values, SeriesKind::Return)
}

/// Inner join of all series on their dates.
pub fn align(series: &[ValueSeries]) -> Result<Vec<ValueSeries>> {
    let first = series
        .first()
        .ok_or_else(|| Error::Alignment("nothing to align".into()))?;
    let common = series[1..]
        .iter()
        .fold(first.index.clone(), |acc, s| acc.intersect(&s.index));
    if common.is_empty() {
        return Err(Error::Alignment("series share no dates".into()));
    }
    series.iter().map(|s| s.select(&common)).collect()
}

/// Inner join of a panel with a single series.
pub fn align_panel(panel: &PricePanel, series: &ValueSeries) -> Result<(PricePanel, ValueSeries)> {
    let common = panel.index.intersect(&series.index);
    if common.is_empty() {
        return Err(Error::Alignment("panel and series share no dates".into()));
    }
    Ok((panel.select(&common)?, series.select(&common)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvSchema {
    /// `date,value`
    Single,
    /// `date,<name1>,...,<nameK>`
    Panel,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Single(ValueSeries),
    Panel(PricePanel),
}

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), DATE_FORMAT).ok()
}

struct RawTable {
    header: Vec<String>,
    dates: Vec<NaiveDate>,
    rows: Vec<Vec<f64>>,
}

fn read_table<R: Read>(reader: R) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header: Vec<String> = match records.next() {
        Some(rec) => rec
            .map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .iter()
            .map(|s| s.trim_start_matches('\u{feff}').to_string())
            .collect(),
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty file".into(),
            })
        }
    };
    if header.len() < 2 || header[0] != "date" {
        return Err(Error::Parse {
            line: 1,
            message: format!("header must start with `date` followed by columns, got `{}`", header.join(",")),
        });
    }
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let date = parse_date(&rec[0]).ok_or_else(|| Error::Parse {
            line,
            message: format!("invalid date `{}`", &rec[0]),
        })?;
        if let Some(prev) = dates.last() {
            if date <= *prev {
                return Err(Error::Order {
                    line,
                    message: format!("date {date} does not follow {prev}"),
                });
            }
        }
        let values = rec
            .iter()
            .skip(1)
            .map(|field| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line,
                        message: format!("invalid number `{field}`"),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        dates.push(date);
        rows.push(values);
    }
    Ok(RawTable {
        header,
        dates,
        rows,
    })
}

pub fn read_series<R: Read>(reader: R, kind: SeriesKind) -> Result<ValueSeries> {
    let table = read_table(reader)?;
    if table.header != ["date", "value"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `date,value`, got `{}`", table.header.join(",")),
        });
    }
    let values = table.rows.into_iter().map(|r| r[0]).collect();
    ValueSeries::new(DateIndex(table.dates), values, kind)
}

pub fn read_panel<R: Read>(reader: R, kind: SeriesKind) -> Result<PricePanel> {
    let table = read_table(reader)?;
    let names: Vec<String> = table.header[1..].to_vec();
    let mut columns = vec![Vec::with_capacity(table.rows.len()); names.len()];
    for row in table.rows {
        for (col, v) in columns.iter_mut().zip(row) {
            col.push(v);
        }
    }
    PricePanel::new(DateIndex(table.dates), names, columns, kind).map_err(|e| match e {
        Error::InvalidInput(message) if message.starts_with("duplicate") => {
            Error::Parse { line: 1, message }
        }
        other => other,
    })
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::from(e).in_file(path.display().to_string()))
}

pub fn load_series(path: impl AsRef<Path>, kind: SeriesKind) -> Result<ValueSeries> {
    let path = path.as_ref();
    read_series(open(path)?, kind).map_err(|e| e.in_file(path.display().to_string()))
}

pub fn load_panel(path: impl AsRef<Path>, kind: SeriesKind) -> Result<PricePanel> {
    let path = path.as_ref();
    read_panel(open(path)?, kind).map_err(|e| e.in_file(path.display().to_string()))
}

/// Loads a CSV file under the given schema; values are taken as `kind`.
pub fn load_csv(path: impl AsRef<Path>, schema: CsvSchema, kind: SeriesKind) -> Result<Loaded> {
    Ok(match schema {
        CsvSchema::Single => Loaded::Single(load_series(path, kind)?),
        CsvSchema::Panel => Loaded::Panel(load_panel(path, kind)?),
    })
}

pub fn write_series<W: Write>(writer: W, series: &ValueSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "value"]).map_err(csv_io)?;
    for (d, v) in series.iter() {
        w.write_record([d.format(DATE_FORMAT).to_string(), v.to_string()])
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_panel<W: Write>(writer: W, panel: &PricePanel) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_string()];
    header.extend(panel.asset_names.iter().cloned());
    w.write_record(&header).map_err(csv_io)?;
    for (t, d) in panel.dates().iter().enumerate() {
        let mut rec = vec![d.format(DATE_FORMAT).to_string()];
        rec.extend(panel.columns.iter().map(|c| c[t].to_string()));
        w.write_record(&rec).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidInput(format!("{other:?}")),
    }
}
