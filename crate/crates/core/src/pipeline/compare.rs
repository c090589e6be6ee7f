use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{self, Period, SeriesKind, ValueSeries};
use crate::stats::{self, Horizon, HorizonCorrelations, PerfReport, Sampling};

/// A report section that is either computed or explicitly skipped.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Section<T> {
    Ok { value: T },
    Skipped { reason: String },
}

impl<T> Section<T> {
    pub fn skipped(reason: impl Into<String>) -> Self {
        Section::Skipped { reason: reason.into() }
    }

    pub fn from_result(r: Result<T>) -> Self {
        match r {
            Ok(value) => Section::Ok { value },
            Err(e) => Section::Skipped { reason: e.to_string() },
        }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Section::Ok { value } => Some(value),
            Section::Skipped { .. } => None,
        }
    }

    pub fn is_skipped(&self) -> bool {
        matches!(self, Section::Skipped { .. })
    }
}

/// A return series with a name and native sampling.
#[derive(Debug, Clone)]
pub struct NamedSeries {
    pub name: String,
    pub returns: ValueSeries,
    pub sampling: Sampling,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkComparison {
    pub sampling: Sampling,
    /// Common periods after resampling.
    pub points: usize,
    pub correlations: HorizonCorrelations,
    pub decoded: Section<PerfReport>,
    pub benchmark: Section<PerfReport>,
}

fn quarter_key(d: NaiveDate) -> (i32, u32) {
    (d.year(), d.month0() / 3)
}

/// Pairs two quarterly series by calendar quarter, keeping the dates of `b`.
fn align_by_quarter(a: &ValueSeries, b: &ValueSeries) -> Result<(ValueSeries, ValueSeries)> {
    let a_by_key: BTreeMap<_, _> = a.iter().map(|(d, v)| (quarter_key(d), v)).collect();
    let (mut av, mut bv) = (Vec::new(), Vec::new());
    for (d, v) in b.iter() {
        if let Some(&x) = a_by_key.get(&quarter_key(d)) {
            av.push((d, x));
            bv.push((d, v));
        }
    }
    Ok((
        ValueSeries::from_pairs(av, SeriesKind::Return)?,
        ValueSeries::from_pairs(bv, SeriesKind::Return)?,
    ))
}

/// Compares daily decoded returns with one benchmark at the benchmark's
/// sampling. Quarterly benchmarks are matched against the decoded returns
/// compounded per calendar quarter.
pub fn compare_one(decoded: &ValueSeries, benchmark: &NamedSeries, horizons: &[Horizon]) -> Result<BenchmarkComparison> {
    let (a, b) = match benchmark.sampling {
        Sampling::Daily => {
            let v = series::align(&[decoded.clone(), benchmark.returns.clone()])?;
            (v[0].clone(), v[1].clone())
        }
        Sampling::Quarterly => {
            let dq = series::resample_compound(decoded, Period::Quarterly)?;
            let bq = series::resample_compound(&benchmark.returns, Period::Quarterly)?;
            align_by_quarter(&dq, &bq)?
        }
    };
    if a.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: a.len() });
    }
    Ok(BenchmarkComparison {
        sampling: benchmark.sampling,
        points: a.len(),
        correlations: stats::corr_over_horizons(&a, &b, horizons, benchmark.sampling)?,
        decoded: Section::from_result(PerfReport::from_returns(&a, benchmark.sampling)),
        benchmark: Section::from_result(PerfReport::from_returns(&b, benchmark.sampling)),
    })
}

/// One comparison per benchmark; failures are recorded as skipped entries.
pub fn compare(
    decoded: &ValueSeries,
    benchmarks: &[NamedSeries],
    horizons: &[Horizon],
) -> BTreeMap<String, Section<BenchmarkComparison>> {
    benchmarks
        .iter()
        .map(|b| (b.name.clone(), Section::from_result(compare_one(decoded, b, horizons))))
        .collect()
}
