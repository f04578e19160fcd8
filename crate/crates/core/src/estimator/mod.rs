//! Least-squares estimation of panel specifications.
//!
//! Region fixed effects are absorbed by the within transform; year effects
//! enter as explicit dummies with the first year as baseline. Coefficients
//! come from a QR solve, never from inverting `X'X` directly.

mod covariance;
mod design;
mod ols;

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::panel::PanelError;
use crate::weights::{SpatialWeights, WeightsError};

pub use covariance::{classical_cov, cluster_robust_cov, cluster_scale, hc0_cov, residual_dof};
pub use design::{build_design, time_dummy_name, within_transform, Design, CONSTANT};
pub use ols::{ols_fit, OlsFit};

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("design is rank deficient: column `{0}` is collinear with earlier columns")]
    RankDeficient(String),
    #[error("no residual degrees of freedom ({n_obs} observations, {n_params} parameters)")]
    ZeroDof { n_obs: usize, n_params: usize },
    #[error("cluster-robust covariance needs at least two clusters")]
    SingleCluster,
    #[error("specification uses spatial lags but no weights were supplied")]
    MissingWeights,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Weights(#[from] WeightsError),
}

pub type Result<T, E = EstimationError> = std::result::Result<T, E>;

/// One regressor: a panel variable, optionally squared and/or spatially
/// lagged (the lag applies to the squared values when both are set).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Term {
    pub variable: String,
    #[serde(default)]
    pub squared: bool,
    #[serde(default)]
    pub spatial_lag: bool,
}

impl Term {
    pub fn level(variable: impl Into<String>) -> Self {
        Self {
            variable: variable.into(),
            squared: false,
            spatial_lag: false,
        }
    }

    pub fn squared(variable: impl Into<String>) -> Self {
        Self {
            squared: true,
            ..Self::level(variable)
        }
    }

    pub fn lagged(variable: impl Into<String>) -> Self {
        Self {
            spatial_lag: true,
            ..Self::level(variable)
        }
    }

    /// Display name: `x`, `I(x^2)`, `slx`.
    pub fn label(&self) -> String {
        let base = if self.squared {
            format!("I({}^2)", self.variable)
        } else {
            self.variable.clone()
        };
        if self.spatial_lag {
            format!("sl{base}")
        } else {
            base
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    Classical,
    ClusterByRegion,
}

impl CovarianceKind {
    pub fn describe(self) -> &'static str {
        match self {
            CovarianceKind::Classical => "classical: s^2 (X'X)^-1, s^2 = SSR / (N - K - absorbed effects)",
            CovarianceKind::ClusterByRegion => {
                "cluster-robust by region: sandwich scaled by G/(G-1) * (N-1)/(N-K), K = estimated columns"
            }
        }
    }
}

impl fmt::Display for CovarianceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CovarianceKind::Classical => "classical",
            CovarianceKind::ClusterByRegion => "cluster_by_region",
        })
    }
}

/// Declarative regression specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub dependent: String,
    pub regressors: Vec<Term>,
    pub intercept: bool,
    pub region_effects: bool,
    pub time_dummies: bool,
    pub covariance: CovarianceKind,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.intercept && self.region_effects {
            return Err(EstimationError::InvalidSpec(
                "region effects absorb the constant; drop the intercept".into(),
            ));
        }
        for (i, t) in self.regressors.iter().enumerate() {
            if self.regressors[..i].contains(t) {
                return Err(EstimationError::InvalidSpec(format!(
                    "term `{}` listed twice",
                    t.label()
                )));
            }
        }
        Ok(())
    }

    pub fn uses_spatial_lags(&self) -> bool {
        self.regressors.iter().any(|t| t.spatial_lag)
    }
}

/// Significance stars: `***` p < 0.01, `**` p < 0.05, `*` p < 0.10.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

/// Two-sided p-value of a t statistic.
pub fn t_p_value(t: f64, dof: usize) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    let dist = StudentsT::new(0.0, 1.0, dof as f64).expect("positive dof");
    2.0 * dist.sf(t.abs())
}

/// Two-sided critical value for a `level` interval, e.g. 0.95.
pub fn t_critical(level: f64, dof: usize) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, dof as f64).expect("positive dof");
    dist.inverse_cdf(0.5 + level / 2.0)
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Standard errors under `spec.covariance`.
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub se_classical: Vec<f64>,
    /// `None` when fewer than two regions are present.
    pub se_cluster: Option<Vec<f64>>,
    pub covariance: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub n_obs: usize,
    pub n_params: usize,
    pub n_absorbed: usize,
    pub dof: usize,
    pub r_squared_within: f64,
    /// R^2 of the full model, absorbed effects included.
    pub r_squared_overall: f64,
    pub ssr: f64,
    pub aic: f64,
    pub region_effects_absorbed: bool,
}

impl FitResult {
    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.term_index(term).map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, term: &str) -> Option<f64> {
        self.term_index(term).map(|i| self.std_errors[i])
    }

    pub fn p_value(&self, term: &str) -> Option<f64> {
        self.term_index(term).map(|i| self.p_values[i])
    }

    /// Serializable coefficient table, fit block and metadata.
    pub fn report(&self) -> FitReport {
        FitReport {
            dependent: self.spec.dependent.clone(),
            coefficients: (0..self.terms.len())
                .map(|i| CoefficientRow {
                    term: self.terms[i].clone(),
                    estimate: self.coefficients[i],
                    se: self.std_errors[i],
                    t: self.t_values[i],
                    p: self.p_values[i],
                    stars: significance_stars(self.p_values[i]).to_string(),
                    se_classical: self.se_classical[i],
                    se_cluster: self.se_cluster.as_ref().map(|s| s[i]),
                })
                .collect(),
            fit: FitBlock {
                n_obs: self.n_obs,
                n_params: self.n_params,
                dof: self.dof,
                r_squared_within: self.r_squared_within,
                r_squared_overall: self.r_squared_overall,
                ssr: self.ssr,
                aic: self.aic,
            },
            metadata: FitMetadata {
                covariance: self.spec.covariance,
                covariance_detail: self.spec.covariance.describe().to_string(),
                region_effects_absorbed: self.region_effects_absorbed,
                absorbed_effects: self.n_absorbed,
                p_values: format!("Student t with {} dof", self.dof),
                aic: "n ln(SSR/n) + 2k, k = estimated columns + absorbed effects".into(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientRow {
    pub term: String,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
    pub stars: String,
    pub se_classical: f64,
    pub se_cluster: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitBlock {
    pub n_obs: usize,
    pub n_params: usize,
    pub dof: usize,
    pub r_squared_within: f64,
    pub r_squared_overall: f64,
    pub ssr: f64,
    pub aic: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitMetadata {
    pub covariance: CovarianceKind,
    pub covariance_detail: String,
    pub region_effects_absorbed: bool,
    pub absorbed_effects: usize,
    pub p_values: String,
    pub aic: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub dependent: String,
    pub coefficients: Vec<CoefficientRow>,
    pub fit: FitBlock,
    pub metadata: FitMetadata,
}

fn group_sum_of_squares(y: &[f64], groups: &[usize], n_groups: usize) -> f64 {
    let mut sums = vec![0.0; n_groups];
    let mut counts = vec![0usize; n_groups];
    for (v, &g) in y.iter().zip(groups) {
        sums[g] += v;
        counts[g] += 1;
    }
    y.iter()
        .zip(groups)
        .map(|(v, &g)| (v - sums[g] / counts[g] as f64).powi(2))
        .sum()
}

/// Estimates `spec` on an aligned panel (the dependent variable already
/// lead-shifted).
pub fn fit_model(d: &crate::panel::PanelDataset, spec: &ModelSpec, w: Option<&SpatialWeights>) -> Result<FitResult> {
    let design = build_design(d, spec, w)?;
    let reference: Vec<f64> = design.x.column_iter().map(|c| c.norm()).collect();
    let (x, y) = if spec.region_effects {
        within_transform(&design.x, &design.y, &design.clusters)
    } else {
        (design.x.clone(), design.y.clone())
    };
    let fit = ols::ols_fit_with_reference(&x, &y, &design.column_names, &reference)?;
    let n_absorbed = if spec.region_effects { design.n_groups } else { 0 };
    let dof = residual_dof(&fit, n_absorbed)?;

    let classical = classical_cov(&fit, n_absorbed)?;
    let cluster = if design.n_groups >= 2 {
        Some(cluster_robust_cov(&fit, &x, &design.clusters)?)
    } else {
        None
    };
    let covariance = match spec.covariance {
        CovarianceKind::Classical => classical.clone(),
        CovarianceKind::ClusterByRegion => cluster.clone().ok_or(EstimationError::SingleCluster)?,
    };
    let diag_se = |m: &DMatrix<f64>| -> Vec<f64> { m.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect() };
    let std_errors = diag_se(&covariance);
    let coefficients: Vec<f64> = fit.coefficients.iter().copied().collect();
    let t_values: Vec<f64> = coefficients.iter().zip(&std_errors).map(|(b, se)| b / se).collect();
    let p_values = t_values.iter().map(|&t| t_p_value(t, dof)).collect();

    let n = fit.n_obs();
    let y_raw = design.y.as_slice();
    let tss_within = group_sum_of_squares(y_raw, &design.clusters, design.n_groups);
    let tss_total = group_sum_of_squares(y_raw, &vec![0; n], 1);
    let k = fit.n_params() + n_absorbed;
    let aic = n as f64 * (fit.ssr / n as f64).ln() + 2.0 * k as f64;

    Ok(FitResult {
        spec: spec.clone(),
        terms: design.column_names,
        coefficients,
        std_errors,
        t_values,
        p_values,
        se_classical: diag_se(&classical),
        se_cluster: cluster.as_ref().map(diag_se),
        covariance,
        residuals: fit.residuals.iter().copied().collect(),
        n_obs: n,
        n_params: fit.n_params(),
        n_absorbed,
        dof,
        r_squared_within: 1.0 - fit.ssr / tss_within,
        r_squared_overall: 1.0 - fit.ssr / tss_total,
        ssr: fit.ssr,
        aic,
        region_effects_absorbed: spec.region_effects,
    })
}
