//! Balanced region x year panels.
//!
//! A [`PanelDataset`] stores every variable as a dense region-major array of
//! `n_regions * n_years` values. Missing cells are held as `NaN` so that raw
//! files with ragged coverage can be loaded, inspected with
//! [`validate_balanced`] and trimmed before estimation. Estimation code calls
//! [`PanelDataset::require_complete`] and never sees a gap.
//!
//! Datasets are immutable: every transform returns a new dataset.

mod io;
mod stats;
mod transform;
mod validate;

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;
use thiserror::Error;

pub use io::{load_panel_csv, read_panel_csv, write_panel_csv, REGION_COLUMN, YEAR_COLUMN};
pub use stats::{descriptive_stats, render_stats_text, VariableSummary};
pub use transform::{
    apply_log, apply_steps, chained_deflator, deflate, lead_shift, ratio, square, weighted_trailing_average,
    TransformKind, TransformParameters, TransformStep,
};
pub use validate::{validate_balanced, Gap, ValidationReport};

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("non-numeric cell at line {line}, column `{column}`: {value:?}")]
    NonNumericCell { line: u64, column: String, value: String },
    #[error("duplicate row for region `{region}`, year {year}")]
    DuplicateRow { region: String, year: i32 },
    #[error("no data rows")]
    MissingData,
    #[error("years are not consecutive: {0} is missing")]
    NonConsecutiveYears(i32),
    #[error("duplicate region id `{0}`")]
    DuplicateRegion(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` already exists")]
    DuplicateVariable(String),
    #[error("variable `{name}` has {actual} values, expected {expected}")]
    LengthMismatch {
        name: String,
        expected: usize,
        actual: usize,
    },
    #[error("price index for {year} is not positive: {value}")]
    NonPositiveIndex { year: i32, value: f64 },
    #[error("no price index for {0}")]
    MissingIndex(i32),
    #[error("year {0} is outside the panel")]
    YearOutOfRange(i32),
    #[error("not enough history for trailing average; first computable year is {first_computable_year}")]
    InsufficientHistory { first_computable_year: i32 },
    #[error("lead value missing for region `{region}`, year {year}")]
    InsufficientLead { region: String, year: i32 },
    #[error("non-positive value {value} in `{variable}` (region `{region}`, year {year})")]
    NonPositiveValue {
        variable: String,
        region: String,
        year: i32,
        value: f64,
    },
    #[error("panel is not balanced: {gaps} missing cells")]
    Unbalanced { gaps: usize },
    #[error("invalid transform step: {0}")]
    InvalidStep(String),
    #[error("empty panel: {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = PanelError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Variable {
    name: String,
    values: Vec<f64>,
}

/// Region x year table of named real-valued variables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelDataset {
    region_ids: Vec<String>,
    years: Vec<i32>,
    variables: Vec<Variable>,
    metadata: BTreeMap<String, String>,
}

impl PanelDataset {
    /// Creates an empty dataset over the given regions and years.
    ///
    /// Region ids must be unique and years consecutive and increasing.
    pub fn new(region_ids: Vec<String>, years: Vec<i32>) -> Result<Self> {
        if region_ids.is_empty() {
            return Err(PanelError::Empty("no regions"));
        }
        if years.is_empty() {
            return Err(PanelError::Empty("no years"));
        }
        let mut seen = HashSet::new();
        for r in &region_ids {
            if !seen.insert(r.as_str()) {
                return Err(PanelError::DuplicateRegion(r.clone()));
            }
        }
        for w in years.windows(2) {
            if w[1] != w[0] + 1 {
                return Err(PanelError::NonConsecutiveYears(w[0] + 1));
            }
        }
        Ok(Self {
            region_ids,
            years,
            variables: Vec::new(),
            metadata: BTreeMap::new(),
        })
    }

    /// Adds a region-major variable (`values[r * n_years + t]`).
    pub fn with_variable(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if self.has_variable(&name) {
            return Err(PanelError::DuplicateVariable(name));
        }
        let expected = self.n_obs();
        if values.len() != expected {
            return Err(PanelError::LengthMismatch {
                name,
                expected,
                actual: values.len(),
            });
        }
        self.variables.push(Variable { name, values });
        Ok(self)
    }

    /// Adds or replaces a variable.
    pub fn with_replaced(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        self.variables.retain(|v| v.name != name);
        self.with_variable(name, values)
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn region_ids(&self) -> &[String] {
        &self.region_ids
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn n_regions(&self) -> usize {
        self.region_ids.len()
    }

    pub fn n_years(&self) -> usize {
        self.years.len()
    }

    /// Number of region-year cells.
    pub fn n_obs(&self) -> usize {
        self.n_regions() * self.n_years()
    }

    pub fn variable_names(&self) -> impl Iterator<Item = &str> {
        self.variables.iter().map(|v| v.name.as_str())
    }

    pub fn has_variable(&self, name: &str) -> bool {
        self.variables.iter().any(|v| v.name == name)
    }

    pub fn variable(&self, name: &str) -> Result<&[f64]> {
        self.variables
            .iter()
            .find(|v| v.name == name)
            .map(|v| v.values.as_slice())
            .ok_or_else(|| PanelError::UnknownVariable(name.to_string()))
    }

    #[inline]
    pub fn index(&self, region: usize, year: usize) -> usize {
        region * self.n_years() + year
    }

    pub fn year_index(&self, year: i32) -> Option<usize> {
        let first = *self.years.first()?;
        let idx = usize::try_from(year - first).ok()?;
        (idx < self.years.len()).then_some(idx)
    }

    pub fn region_index(&self, region: &str) -> Option<usize> {
        self.region_ids.iter().position(|r| r == region)
    }

    /// Keeps only the years in `first..=last`.
    pub fn select_years(&self, first: i32, last: i32) -> Result<Self> {
        let lo = self.year_index(first).ok_or(PanelError::YearOutOfRange(first))?;
        let hi = self.year_index(last).ok_or(PanelError::YearOutOfRange(last))?;
        if lo > hi {
            return Err(PanelError::Empty("empty year range"));
        }
        Ok(self.slice_years(lo, hi + 1))
    }

    pub(crate) fn slice_years(&self, lo: usize, hi: usize) -> Self {
        let t = self.n_years();
        let variables = self
            .variables
            .iter()
            .map(|v| Variable {
                name: v.name.clone(),
                values: (0..self.n_regions())
                    .flat_map(|r| v.values[r * t + lo..r * t + hi].iter().copied())
                    .collect(),
            })
            .collect();
        Self {
            region_ids: self.region_ids.clone(),
            years: self.years[lo..hi].to_vec(),
            variables,
            metadata: self.metadata.clone(),
        }
    }

    /// Keeps only the named variables, in the given order.
    pub fn select_variables<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        let variables = names
            .iter()
            .map(|n| {
                let n = n.as_ref();
                self.variable(n).map(|values| Variable {
                    name: n.to_string(),
                    values: values.to_vec(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            variables,
            ..self.without_variables()
        })
    }

    pub fn drop_variables<S: AsRef<str>>(&self, names: &[S]) -> Self {
        let mut out = self.clone();
        out.variables.retain(|v| !names.iter().any(|n| n.as_ref() == v.name));
        out
    }

    fn without_variables(&self) -> Self {
        Self {
            region_ids: self.region_ids.clone(),
            years: self.years.clone(),
            variables: Vec::new(),
            metadata: self.metadata.clone(),
        }
    }

    /// Errors unless every listed variable is fully observed.
    pub fn require_complete<S: AsRef<str>>(&self, names: &[S]) -> Result<()> {
        let mut gaps = 0;
        for n in names {
            gaps += self.variable(n.as_ref())?.iter().filter(|x| x.is_nan()).count();
        }
        if gaps > 0 {
            return Err(PanelError::Unbalanced { gaps });
        }
        Ok(())
    }

    /// Merges `other`'s variables in by (region, year). Cells absent from
    /// `other` are left missing.
    pub fn join(&self, other: &PanelDataset) -> Result<Self> {
        let mut out = self.clone();
        for var in &other.variables {
            let mut values = vec![f64::NAN; self.n_obs()];
            for (ro, region) in other.region_ids.iter().enumerate() {
                let Some(r) = self.region_index(region) else {
                    continue;
                };
                for (to, &year) in other.years.iter().enumerate() {
                    if let Some(t) = self.year_index(year) {
                        values[self.index(r, t)] = var.values[other.index(ro, to)];
                    }
                }
            }
            out = out.with_variable(var.name.clone(), values)?;
        }
        Ok(out)
    }
}
