use serde::Serialize;

use super::{PanelDataset, PanelError, Result};
use crate::fmt::fixed;

/// Six-number summary of one variable; missing cells are skipped and counted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableSummary {
    pub name: String,
    pub n: usize,
    pub missing: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile of sorted data by linear interpolation between order statistics.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn descriptive_stats<S: AsRef<str>>(d: &PanelDataset, names: &[S]) -> Result<Vec<VariableSummary>> {
    names
        .iter()
        .map(|name| {
            let name = name.as_ref();
            let raw = d.variable(name)?;
            let mut v: Vec<f64> = raw.iter().copied().filter(|x| !x.is_nan()).collect();
            if v.is_empty() {
                return Err(PanelError::Empty("variable has no observed values"));
            }
            v.sort_by(f64::total_cmp);
            // shifted by the median so constant series come out exact
            let median = quantile_sorted(&v, 0.5);
            let mean = median + v.iter().map(|x| x - median).sum::<f64>() / v.len() as f64;
            Ok(VariableSummary {
                name: name.to_string(),
                n: v.len(),
                missing: raw.len() - v.len(),
                min: v[0],
                q1: quantile_sorted(&v, 0.25),
                median,
                mean,
                q3: quantile_sorted(&v, 0.75),
                max: v[v.len() - 1],
            })
        })
        .collect()
}

/// Aligned plain-text table in the usual Min / 1st Qu / Median / Mean /
/// 3rd Qu / Max layout.
pub fn render_stats_text(stats: &[VariableSummary], decimals: usize) -> String {
    let header = ["", "N", "Min", "1st Qu", "Median", "Mean", "3rd Qu", "Max"];
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for s in stats {
        let mut row = vec![s.name.clone(), s.n.to_string()];
        row.extend(
            [s.min, s.q1, s.median, s.mean, s.q3, s.max]
                .iter()
                .map(|x| fixed(*x, decimals)),
        );
        rows.push(row);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if c == 0 {
                    format!("{cell:<w$}", w = widths[c])
                } else {
                    format!("{cell:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}
