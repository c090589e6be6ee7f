use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;

use super::RunOutput;
use crate::error::{Error, Result};
use crate::series::{self, SeriesKind, ValueSeries};
use crate::stats;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::from(e).in_file(path.display().to_string()))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::from(e).in_file(path.display().to_string()))
}

/// Rows of `date,series,value`.
fn write_tidy(path: &Path, rows: impl IntoIterator<Item = (NaiveDate, String, f64)>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let wrap = |e: csv::Error| Error::Io(e.into()).in_file(path.display().to_string());
    w.write_record(["date", "series", "value"]).map_err(wrap)?;
    for (d, s, v) in rows {
        w.write_record([d.format("%Y-%m-%d").to_string(), s, v.to_string()])
            .map_err(wrap)?;
    }
    let inner = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    finish(inner, path)
}

fn nav_rows(name: &str, returns: &ValueSeries) -> Result<Vec<(NaiveDate, String, f64)>> {
    let nav = series::nav_from_returns(returns, 1.0)?;
    Ok(nav.iter().map(|(d, v)| (d, name.to_string(), v)).collect())
}

fn drawdown_rows(name: &str, returns: &ValueSeries) -> Result<Vec<(NaiveDate, String, f64)>> {
    let nav = series::nav_from_returns(returns, 1.0)?;
    let dd = stats::drawdowns(nav.values());
    Ok(nav.dates().iter().zip(dd).map(|(d, v)| (*d, name.to_string(), v)).collect())
}

/// Writes `report.json`, `decoded_nav.csv`, `weights.csv` and the tidy
/// `plotdata/*.csv` files. Output depends only on the run, so identical runs
/// produce identical bytes.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<()> {
    let plot = dir.join("plotdata");
    fs::create_dir_all(&plot).map_err(|e| Error::from(e).in_file(plot.display().to_string()))?;

    let report_path = dir.join("report.json");
    let mut w = create(&report_path)?;
    serde_json::to_writer_pretty(&mut w, &out.report)?;
    w.write_all(b"\n")?;
    finish(w, &report_path)?;

    // the replicated NAV starts at 1.0 on the last training date
    let nav = ValueSeries::from_pairs(
        std::iter::once((out.report.train.end, 1.0)).chain(out.decode.replicated_nav.iter()),
        SeriesKind::Nav,
    )?;
    let nav_path = dir.join("decoded_nav.csv");
    let mut w = create(&nav_path)?;
    series::write_series(&mut w, &nav)?;
    finish(w, &nav_path)?;

    let weights_path = dir.join("weights.csv");
    let mut w = create(&weights_path)?;
    series::write_panel(&mut w, &out.decode.weights_panel()?)?;
    finish(w, &weights_path)?;

    let mut navs = Vec::new();
    let mut dds = Vec::new();
    for (name, s) in &out.series {
        navs.extend(nav_rows(name, s)?);
        dds.extend(drawdown_rows(name, s)?);
    }
    write_tidy(&plot.join("nav.csv"), navs)?;
    write_tidy(&plot.join("drawdowns.csv"), dds)?;

    let dates = out.decode.index().dates();
    let mut weights = Vec::new();
    for (j, name) in out.decode.asset_names.iter().enumerate() {
        for (t, &d) in dates.iter().enumerate() {
            weights.push((d, format!("posterior:{name}"), out.decode.beliefs[t].mean()[j]));
        }
        for (t, &d) in dates.iter().enumerate() {
            weights.push((d, format!("applied:{name}"), out.decode.applied_weights[t][j]));
        }
        if let Some(truth) = out.true_weights.as_ref().and_then(|p| p.column(name)) {
            let truth = truth.select(out.decode.index())?;
            weights.extend(truth.iter().map(|(d, v)| (d, format!("true:{name}"), v)));
        }
    }
    write_tidy(&plot.join("weights.csv"), weights)?;

    let z = out.decode.standardized_innovations();
    write_tidy(
        &plot.join("innovations.csv"),
        dates.iter().zip(z).map(|(d, v)| (*d, "standardized".to_string(), v)),
    )?;

    let yearly_path = plot.join("yearly_returns.csv");
    let mut w = csv::Writer::from_writer(create(&yearly_path)?);
    let wrap = |e: csv::Error| Error::Io(e.into()).in_file(yearly_path.display().to_string());
    w.write_record(["year", "series", "value"]).map_err(wrap)?;
    for (name, years) in &out.report.yearly_returns {
        for (y, v) in years {
            w.write_record([y.to_string(), name.clone(), v.to_string()]).map_err(wrap)?;
        }
    }
    let inner = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    finish(inner, &yearly_path)?;

    if !out.signals.is_empty() {
        let mut rows = Vec::new();
        for s in &out.signals {
            rows.push((s.date, "probability".to_string(), s.probability));
            rows.push((s.date, "active".to_string(), f64::from(u8::from(s.active))));
            rows.push((s.date, "w_st".to_string(), s.w_st));
            rows.push((s.date, "w_mt".to_string(), s.w_mt));
        }
        write_tidy(&plot.join("overlay.csv"), rows)?;
    }
    Ok(())
}
