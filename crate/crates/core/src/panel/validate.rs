use std::fmt;

use serde::Serialize;

use super::PanelDataset;

/// A single missing (region, year, variable) cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Gap {
    pub region: String,
    pub year: i32,
    pub variable: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub n_regions: usize,
    pub n_years: usize,
    pub first_year: i32,
    pub last_year: i32,
    pub variables: Vec<String>,
    pub gaps: Vec<Gap>,
}

/// Checks that every region has a value for every year and variable.
pub fn validate_balanced(d: &PanelDataset) -> ValidationReport {
    let mut gaps = Vec::new();
    for (r, region) in d.region_ids().iter().enumerate() {
        for (t, &year) in d.years().iter().enumerate() {
            for name in d.variable_names() {
                let v = d.variable(name).expect("listed variable")[d.index(r, t)];
                if v.is_nan() {
                    gaps.push(Gap {
                        region: region.clone(),
                        year,
                        variable: name.to_string(),
                    });
                }
            }
        }
    }
    ValidationReport {
        passed: gaps.is_empty(),
        n_regions: d.n_regions(),
        n_years: d.n_years(),
        first_year: d.years()[0],
        last_year: *d.years().last().expect("non-empty years"),
        variables: d.variable_names().map(str::to_string).collect(),
        gaps,
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "balanced panel check: {}", if self.passed { "PASS" } else { "FAIL" })?;
        writeln!(
            f,
            "regions: {}  years: {} ({}-{})  variables: {}",
            self.n_regions,
            self.n_years,
            self.first_year,
            self.last_year,
            self.variables.len()
        )?;
        if !self.gaps.is_empty() {
            writeln!(f, "{} missing cells:", self.gaps.len())?;
            let width = self.gaps.iter().map(|g| g.region.len()).max().unwrap_or(6).max(6);
            writeln!(f, "  {:<width$}  {:>4}  variable", "region", "year")?;
            for g in &self.gaps {
                writeln!(f, "  {:<width$}  {:>4}  {}", g.region, g.year, g.variable)?;
            }
        }
        Ok(())
    }
}
