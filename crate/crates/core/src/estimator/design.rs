use nalgebra::{DMatrix, DVector};

use super::{EstimationError, ModelSpec, Result};
use crate::panel::PanelDataset;
use crate::weights::{lag_values, SpatialWeights};

pub const CONSTANT: &str = "Constant";

pub fn time_dummy_name(year: i32) -> String {
    format!("factor(year){year}")
}

/// Design matrix, response and row bookkeeping for one specification.
///
/// Rows are region-major, year-minor. Columns are the regressor terms in
/// specification order, then `T - 1` time dummies (first year is the
/// baseline), then the constant.
#[derive(Debug, Clone)]
pub struct Design {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Region index of each row.
    pub clusters: Vec<usize>,
    pub column_names: Vec<String>,
    pub n_groups: usize,
}

pub fn build_design(d: &PanelDataset, spec: &ModelSpec, w: Option<&SpatialWeights>) -> Result<Design> {
    spec.validate()?;
    if spec.regressors.iter().any(|t| t.spatial_lag) && w.is_none() {
        return Err(EstimationError::MissingWeights);
    }
    let mut names = vec![spec.dependent.clone()];
    names.extend(spec.regressors.iter().map(|t| t.variable.clone()));
    for n in &names {
        if !d.has_variable(n) {
            return Err(EstimationError::UnknownVariable(n.clone()));
        }
    }
    d.require_complete(&names)?;

    let n_obs = d.n_obs();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut column_names = Vec::new();
    for term in &spec.regressors {
        let level = d.variable(&term.variable)?;
        let mut values: Vec<f64> = if term.squared {
            level.iter().map(|v| v * v).collect()
        } else {
            level.to_vec()
        };
        if term.spatial_lag {
            let w = w.expect("checked above");
            let tmp = PanelDataset::new(d.region_ids().to_vec(), d.years().to_vec())?.with_variable("x", values)?;
            values = lag_values(w, &tmp, "x")?;
        }
        columns.push(values);
        column_names.push(term.label());
    }
    if spec.time_dummies {
        let t_len = d.n_years();
        for (t, &year) in d.years().iter().enumerate().skip(1) {
            columns.push((0..n_obs).map(|i| if i % t_len == t { 1.0 } else { 0.0 }).collect());
            column_names.push(time_dummy_name(year));
        }
    }
    if spec.intercept {
        columns.push(vec![1.0; n_obs]);
        column_names.push(CONSTANT.to_string());
    }
    if columns.is_empty() {
        return Err(EstimationError::InvalidSpec("specification has no columns".into()));
    }
    let x = DMatrix::from_fn(n_obs, columns.len(), |i, j| columns[j][i]);
    let y = DVector::from_column_slice(d.variable(&spec.dependent)?);
    let t_len = d.n_years();
    Ok(Design {
        x,
        y,
        clusters: (0..n_obs).map(|i| i / t_len).collect(),
        column_names,
        n_groups: d.n_regions(),
    })
}

/// Subtracts group means from every column of `x` and from `y`.
pub fn within_transform(x: &DMatrix<f64>, y: &DVector<f64>, groups: &[usize]) -> (DMatrix<f64>, DVector<f64>) {
    let n_groups = groups.iter().copied().max().map_or(0, |g| g + 1);
    let mut counts = vec![0usize; n_groups];
    for &g in groups {
        counts[g] += 1;
    }
    let demean = |col: &mut dyn Iterator<Item = &mut f64>, values: &[f64]| {
        let mut sums = vec![0.0; n_groups];
        for (v, &g) in values.iter().zip(groups) {
            sums[g] += v;
        }
        for ((cell, v), &g) in col.zip(values).zip(groups) {
            *cell = v - sums[g] / counts[g] as f64;
        }
    };
    let mut xt = x.clone();
    for j in 0..x.ncols() {
        let values: Vec<f64> = x.column(j).iter().copied().collect();
        demean(&mut xt.column_mut(j).iter_mut(), &values);
    }
    let mut yt = y.clone();
    let values: Vec<f64> = y.iter().copied().collect();
    demean(&mut yt.iter_mut(), &values);
    (xt, yt)
}
