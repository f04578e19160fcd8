//! Variable construction: deflation, ratios, logs, weighted trailing
//! averages and lead shifts.
//!
//! Missing cells propagate as missing. Each function returns a new dataset
//! with the output variable appended.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{PanelDataset, PanelError, Result};

fn check_output(d: &PanelDataset, inputs: &[&str], out: &str) -> Result<()> {
    if inputs.contains(&out) {
        return Err(PanelError::InvalidStep(format!(
            "output `{out}` must differ from its inputs"
        )));
    }
    if d.has_variable(out) {
        return Err(PanelError::DuplicateVariable(out.to_string()));
    }
    Ok(())
}

/// Price level of `year` relative to `base_year`, chaining year-on-year
/// indices (`cpi[y]` is the index of `y` relative to `y - 1`).
pub fn chained_deflator(cpi: &BTreeMap<i32, f64>, base_year: i32, year: i32) -> Result<f64> {
    let index = |y: i32| -> Result<f64> {
        let v = *cpi.get(&y).ok_or(PanelError::MissingIndex(y))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(PanelError::NonPositiveIndex { year: y, value: v });
        }
        Ok(v)
    };
    let mut level = 1.0;
    if year > base_year {
        for y in base_year + 1..=year {
            level *= index(y)?;
        }
    } else {
        for y in year + 1..=base_year {
            level /= index(y)?;
        }
    }
    Ok(level)
}

/// Converts a nominal series to `base_year` prices.
pub fn deflate(
    d: &PanelDataset,
    nominal: &str,
    cpi: &BTreeMap<i32, f64>,
    base_year: i32,
    out: &str,
) -> Result<PanelDataset> {
    check_output(d, &[nominal], out)?;
    if d.year_index(base_year).is_none() {
        return Err(PanelError::YearOutOfRange(base_year));
    }
    for (&year, &value) in cpi {
        if !(value > 0.0 && value.is_finite()) {
            return Err(PanelError::NonPositiveIndex { year, value });
        }
    }
    let deflators = d
        .years()
        .iter()
        .map(|&y| chained_deflator(cpi, base_year, y))
        .collect::<Result<Vec<_>>>()?;
    let x = d.variable(nominal)?;
    let t = d.n_years();
    let values = x.iter().enumerate().map(|(i, v)| v / deflators[i % t]).collect();
    d.clone().with_variable(out, values)
}

/// `out = numerator / denominator * scale`, e.g. per-employee ratios.
pub fn ratio(d: &PanelDataset, numerator: &str, denominator: &str, scale: f64, out: &str) -> Result<PanelDataset> {
    check_output(d, &[numerator, denominator], out)?;
    let num = d.variable(numerator)?;
    let den = d.variable(denominator)?;
    for (i, &v) in den.iter().enumerate() {
        if v <= 0.0 {
            let t = d.n_years();
            return Err(PanelError::NonPositiveValue {
                variable: denominator.to_string(),
                region: d.region_ids()[i / t].clone(),
                year: d.years()[i % t],
                value: v,
            });
        }
    }
    let values = num.iter().zip(den).map(|(a, b)| a / b * scale).collect();
    d.clone().with_variable(out, values)
}

/// Natural log. Zero or negative values are an error, never imputed.
pub fn apply_log(d: &PanelDataset, x: &str, out: &str) -> Result<PanelDataset> {
    check_output(d, &[x], out)?;
    let src = d.variable(x)?;
    let t = d.n_years();
    let values = src
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v <= 0.0 {
                Err(PanelError::NonPositiveValue {
                    variable: x.to_string(),
                    region: d.region_ids()[i / t].clone(),
                    year: d.years()[i % t],
                    value: v,
                })
            } else {
                Ok(v.ln())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    d.clone().with_variable(out, values)
}

pub fn square(d: &PanelDataset, x: &str, out: &str) -> Result<PanelDataset> {
    check_output(d, &[x], out)?;
    let values = d.variable(x)?.iter().map(|v| v * v).collect();
    d.clone().with_variable(out, values)
}

/// Weighted average of the current and preceding `weights.len() - 1` years;
/// the last weight applies to the current year.
///
/// Years without a full window (the first `K - 1` years, or windows that
/// touch a missing cell) are missing in the output.
pub fn weighted_trailing_average(d: &PanelDataset, x: &str, weights: &[f64], out: &str) -> Result<PanelDataset> {
    check_output(d, &[x], out)?;
    if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(PanelError::InvalidStep(
            "trailing-average weights must be positive".into(),
        ));
    }
    let k = weights.len();
    let t_len = d.n_years();
    if t_len < k {
        return Err(PanelError::InsufficientHistory {
            first_computable_year: d.years()[0] + k as i32 - 1,
        });
    }
    let total: f64 = weights.iter().sum();
    let src = d.variable(x)?;
    let mut values = vec![f64::NAN; d.n_obs()];
    for r in 0..d.n_regions() {
        for t in k - 1..t_len {
            let start = d.index(r, t + 1 - k);
            let acc: f64 = weights.iter().zip(&src[start..start + k]).map(|(w, v)| w * v).sum();
            values[d.index(r, t)] = acc / total;
        }
    }
    d.clone().with_variable(out, values)
}

/// Aligns `y[t + periods]` with year `t`.
///
/// The result spans the explanatory years: those in which every variable
/// other than `y` is fully observed (all years up to `T - periods` when `y`
/// is the only variable). Every such year needs an observed lead value.
pub fn lead_shift(d: &PanelDataset, y: &str, periods: usize, out: &str) -> Result<PanelDataset> {
    check_output(d, &[y], out)?;
    let src = d.variable(y)?.to_vec();
    if periods == 0 {
        return d.clone().with_variable(out, src);
    }
    let t_len = d.n_years();
    let others: Vec<&[f64]> = d
        .variable_names()
        .filter(|n| *n != y)
        .map(|n| d.variable(n))
        .collect::<Result<_>>()?;

    let span: Vec<usize> = if others.is_empty() {
        (0..t_len.saturating_sub(periods)).collect()
    } else {
        (0..t_len)
            .filter(|&t| {
                others
                    .iter()
                    .all(|v| (0..d.n_regions()).all(|r| !v[d.index(r, t)].is_nan()))
            })
            .collect()
    };
    let (Some(&lo), Some(&hi)) = (span.first(), span.last()) else {
        return Err(PanelError::InsufficientLead {
            region: d.region_ids()[0].clone(),
            year: d.years()[0] + periods as i32,
        });
    };
    if hi - lo + 1 != span.len() {
        let missing = (lo..=hi).find(|t| !span.contains(t)).expect("hole in span");
        return Err(PanelError::NonConsecutiveYears(d.years()[missing]));
    }

    let mut values = Vec::with_capacity(d.n_regions() * span.len());
    for (r, region) in d.region_ids().iter().enumerate() {
        for &t in &span {
            let lead_year = d.years()[t] + periods as i32;
            let v = if t + periods < t_len {
                src[d.index(r, t + periods)]
            } else {
                f64::NAN
            };
            if v.is_nan() {
                return Err(PanelError::InsufficientLead {
                    region: region.clone(),
                    year: lead_year,
                });
            }
            values.push(v);
        }
    }
    d.slice_years(lo, hi + 1).with_variable(out, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    /// inputs: `[nominal, cpi]`; `cpi` is a panel variable constant across
    /// regions within a year.
    Deflate,
    Log,
    /// inputs: `[numerator, denominator]`.
    PerCapitaOrPerEmployeeRatio,
    WeightedTrailingAverage,
    LeadShift,
    Square,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransformParameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift_periods: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

/// One declarative variable-construction step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformStep {
    pub kind: TransformKind,
    pub input_names: Vec<String>,
    pub output_name: String,
    #[serde(default)]
    pub parameters: TransformParameters,
}

impl TransformStep {
    fn input(&self, i: usize) -> Result<&str> {
        self.input_names.get(i).map(String::as_str).ok_or_else(|| {
            PanelError::InvalidStep(format!(
                "{:?} step for `{}` needs {} input(s)",
                self.kind,
                self.output_name,
                i + 1
            ))
        })
    }

    pub fn apply(&self, d: &PanelDataset) -> Result<PanelDataset> {
        let out = self.output_name.as_str();
        if self.input_names.iter().any(|n| n == out) {
            return Err(PanelError::InvalidStep(format!(
                "output `{out}` must differ from its inputs"
            )));
        }
        let p = &self.parameters;
        match self.kind {
            TransformKind::Deflate => {
                let base = p
                    .base_year
                    .ok_or_else(|| PanelError::InvalidStep("deflate needs parameters.base_year".into()))?;
                let cpi = year_series(d, self.input(1)?)?;
                deflate(d, self.input(0)?, &cpi, base, out)
            }
            TransformKind::Log => apply_log(d, self.input(0)?, out),
            TransformKind::PerCapitaOrPerEmployeeRatio => {
                ratio(d, self.input(0)?, self.input(1)?, p.scale.unwrap_or(1.0), out)
            }
            TransformKind::WeightedTrailingAverage => {
                let w = p
                    .weights
                    .as_deref()
                    .ok_or_else(|| PanelError::InvalidStep("trailing average needs parameters.weights".into()))?;
                weighted_trailing_average(d, self.input(0)?, w, out)
            }
            TransformKind::LeadShift => lead_shift(d, self.input(0)?, p.shift_periods.unwrap_or(1), out),
            TransformKind::Square => square(d, self.input(0)?, out),
        }
    }
}

/// Applies steps in order.
pub fn apply_steps(d: &PanelDataset, steps: &[TransformStep]) -> Result<PanelDataset> {
    steps.iter().try_fold(d.clone(), |acc, s| s.apply(&acc))
}

/// Reads a variable that is constant across regions within each year.
fn year_series(d: &PanelDataset, name: &str) -> Result<BTreeMap<i32, f64>> {
    let v = d.variable(name)?;
    let mut out = BTreeMap::new();
    for (t, &year) in d.years().iter().enumerate() {
        let first = v[d.index(0, t)];
        if first.is_nan() {
            continue;
        }
        if (1..d.n_regions()).any(|r| v[d.index(r, t)] != first) {
            return Err(PanelError::InvalidStep(format!(
                "`{name}` varies across regions in {year}"
            )));
        }
        out.insert(year, first);
    }
    Ok(out)
}
