use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{PanelDataset, PanelError, Result};
use crate::fmt::format_f64;

pub const REGION_COLUMN: &str = "region";
pub const YEAR_COLUMN: &str = "year";

/// Loads a long-format panel (`region,year,<var>...`) from a CSV file.
///
/// Every column named in `schema` must be present. Region-year pairs absent
/// from the file are stored as missing cells; use [`super::validate_balanced`]
/// to list them.
pub fn load_panel_csv<S: AsRef<str>>(path: impl AsRef<Path>, schema: &[S]) -> Result<PanelDataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let d = read_panel_csv(file, schema)?;
    Ok(d.with_metadata("source", path.display().to_string()))
}

pub fn read_panel_csv<R: Read, S: AsRef<str>>(reader: R, schema: &[S]) -> Result<PanelDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let position = |name: &str| headers.iter().position(|h| h == name);

    let region_col = position(REGION_COLUMN).ok_or_else(|| PanelError::MissingColumn(REGION_COLUMN.into()))?;
    let year_col = position(YEAR_COLUMN).ok_or_else(|| PanelError::MissingColumn(YEAR_COLUMN.into()))?;
    for s in schema {
        if position(s.as_ref()).is_none() {
            return Err(PanelError::MissingColumn(s.as_ref().to_string()));
        }
    }
    let value_cols: Vec<usize> = (0..headers.len())
        .filter(|&i| i != region_col && i != year_col)
        .collect();
    if value_cols.is_empty() {
        return Err(PanelError::MissingColumn("at least one variable column".into()));
    }
    let mut seen_names = BTreeSet::new();
    for &c in &value_cols {
        if !seen_names.insert(headers[c].as_str()) {
            return Err(PanelError::DuplicateVariable(headers[c].clone()));
        }
    }

    let mut cells: BTreeMap<(String, i32), Vec<f64>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let region = record.get(region_col).unwrap_or_default().to_string();
        if region.is_empty() {
            return Err(PanelError::NonNumericCell {
                line,
                column: REGION_COLUMN.into(),
                value: region,
            });
        }
        let year_raw = record.get(year_col).unwrap_or_default();
        let year: i32 = year_raw.parse().map_err(|_| PanelError::NonNumericCell {
            line,
            column: YEAR_COLUMN.into(),
            value: year_raw.to_string(),
        })?;
        let values = value_cols
            .iter()
            .map(|&c| {
                let raw = record.get(c).unwrap_or_default();
                parse_cell(raw).ok_or_else(|| PanelError::NonNumericCell {
                    line,
                    column: headers[c].clone(),
                    value: raw.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if cells.insert((region.clone(), year), values).is_some() {
            return Err(PanelError::DuplicateRow { region, year });
        }
    }
    if cells.is_empty() {
        return Err(PanelError::MissingData);
    }

    let regions: Vec<String> = cells
        .keys()
        .map(|(r, _)| r.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let year_set: BTreeSet<i32> = cells.keys().map(|(_, y)| *y).collect();
    let years: Vec<i32> = year_set.iter().copied().collect();

    let mut d = PanelDataset::new(regions, years)?;
    let mut columns = vec![vec![f64::NAN; d.n_obs()]; value_cols.len()];
    for ((region, year), values) in &cells {
        let r = d.region_index(region).expect("region collected above");
        let t = d.year_index(*year).expect("year collected above");
        let idx = d.index(r, t);
        for (col, v) in columns.iter_mut().zip(values) {
            col[idx] = *v;
        }
    }
    for (&c, values) in value_cols.iter().zip(columns) {
        d = d.with_variable(headers[c].clone(), values)?;
    }
    Ok(d)
}

fn parse_cell(raw: &str) -> Option<f64> {
    if raw.is_empty() || raw == "NA" {
        return Some(f64::NAN);
    }
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Writes the panel in long format, one row per region-year in
/// (region, year) order. Missing cells are written empty.
pub fn write_panel_csv<W: Write>(d: &PanelDataset, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(writer);
    let names: Vec<&str> = d.variable_names().collect();
    let mut header = vec![REGION_COLUMN, YEAR_COLUMN];
    header.extend(&names);
    w.write_record(&header)?;
    let columns: Vec<&[f64]> = names.iter().map(|n| d.variable(n)).collect::<Result<_>>()?;
    for (r, region) in d.region_ids().iter().enumerate() {
        for (t, year) in d.years().iter().enumerate() {
            let idx = d.index(r, t);
            let mut row = vec![region.clone(), year.to_string()];
            row.extend(columns.iter().map(|c| format_f64(c[idx])));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}
