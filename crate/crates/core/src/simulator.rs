//! Synthetic panels from a known data-generating process, and Monte Carlo
//! studies of estimator bias and interval coverage.
//!
//! Every draw comes from one ChaCha8 generator seeded with `cfg.seed`. A
//! single panel uses stream 0; Monte Carlo replication `k` uses stream
//! `k + 1`, so results do not depend on thread scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{fit_model, t_critical, EstimationError, Term};
use crate::panel::{PanelDataset, PanelError};
use crate::suite::{expand_with, SuiteError, SuiteNotation, SuiteVariables};
use crate::weights::{build_weights, SpatialWeights, ThematicProfileMatrix, WeightsError};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("at least 2 replications are required, got {0}")]
    TooFewReplications(usize),
    #[error("replication {index}: {source}")]
    Replication {
        index: usize,
        #[source]
        source: EstimationError,
    },
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Weights(#[from] WeightsError),
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = SimulationError> = std::result::Result<T, E>;

pub const RNG_NAME: &str = "ChaCha8 (rand_chacha), seeded from u64; panel = stream 0, replication k = stream k + 1";

/// Log-scale law of one regressor: region level, linear trend and a
/// stationary AR(1) within-region component, exponentiated and clamped to
/// `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressorLaw {
    pub log_mean: f64,
    pub region_sd: f64,
    pub within_sd: f64,
    pub persistence: f64,
    #[serde(default)]
    pub trend: f64,
    pub lower: f64,
    pub upper: f64,
}

impl RegressorLaw {
    const fn new(
        log_mean: f64,
        region_sd: f64,
        within_sd: f64,
        persistence: f64,
        trend: f64,
        lower: f64,
        upper: f64,
    ) -> Self {
        Self {
            log_mean,
            region_sd,
            within_sd,
            persistence,
            trend,
            lower,
            upper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressorLaws {
    pub expemp10: RegressorLaw,
    pub grpcap10: RegressorLaw,
    pub papemp: RegressorLaw,
    pub fwci: RegressorLaw,
    pub q1sh: RegressorLaw,
    pub nqsh: RegressorLaw,
}

impl Default for RegressorLaws {
    fn default() -> Self {
        Self {
            expemp10: RegressorLaw::new(-0.45, 0.35, 0.15, 0.6, 0.02, 0.12, 2.16),
            grpcap10: RegressorLaw::new(12.27, 0.44, 0.05, 0.7, 0.02, 48_239.0, 1_584_591.0),
            papemp: RegressorLaw::new(-3.05, 0.72, 0.3, 0.5, 0.0, 0.0005, 1.06),
            fwci: RegressorLaw::new(-0.63, 0.43, 0.25, 0.5, 0.0, 0.01, 8.04),
            q1sh: RegressorLaw::new(2.29, 0.57, 0.3, 0.4, 0.0, 0.0, 75.27),
            nqsh: RegressorLaw::new(2.56, 0.53, 0.35, 0.4, 0.0, 0.0, 100.0),
        }
    }
}

/// Region-level AR(1) noise added on top of the i.i.d. component.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteredNoise {
    pub sd: f64,
    pub persistence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DgpConfig {
    pub n_regions: usize,
    pub n_years: usize,
    pub first_year: i32,
    pub seed: u64,
    /// Term label -> coefficient. Terms left out have coefficient 0.
    pub true_coefficients: BTreeMap<String, f64>,
    pub region_effect_sd: f64,
    pub noise_sd: f64,
    /// Year offsets; a rising sigmoid of height `time_effect_height` if absent.
    pub time_effect_profile: Option<Vec<f64>>,
    pub time_effect_height: f64,
    /// Penalty `q` entering the log-output equation as `-q`.
    pub quality_substitution: f64,
    /// Sample mean of the log dependent variable before effects and noise.
    pub outcome_level: f64,
    pub n_subject_areas: usize,
    pub n_archetypes: usize,
    pub regressors: RegressorLaws,
    pub clustered_noise: ClusteredNoise,
}

/// Coefficients of the richest reference main-model column.
pub fn default_coefficients() -> BTreeMap<String, f64> {
    [
        ("log(EXPEMP10)", 0.460),
        ("log(GRPCAP10)", 0.323),
        ("log(PAPEMP)", 0.242),
        ("FWCI", 0.348),
        ("I(FWCI^2)", -0.049),
        ("Q1SH", -0.009),
        ("NQSH", 0.003),
        ("slFWCI", 1.569),
        ("slQ1SH", -0.021),
        ("slNQSH", 0.010),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

impl Default for DgpConfig {
    fn default() -> Self {
        Self {
            n_regions: 78,
            n_years: 12,
            first_year: 2009,
            seed: 7,
            true_coefficients: default_coefficients(),
            region_effect_sd: 0.6,
            noise_sd: 0.15,
            time_effect_profile: None,
            time_effect_height: 1.6,
            quality_substitution: 0.0,
            outcome_level: -2.8,
            n_subject_areas: 27,
            n_archetypes: 4,
            regressors: RegressorLaws::default(),
            clustered_noise: ClusteredNoise::default(),
        }
    }
}

const TERMS: [&str; 10] = [
    "log(EXPEMP10)",
    "log(GRPCAP10)",
    "log(PAPEMP)",
    "FWCI",
    "I(FWCI^2)",
    "Q1SH",
    "NQSH",
    "slFWCI",
    "slQ1SH",
    "slNQSH",
];

impl DgpConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SimulationError::InvalidConfig(m));
        if self.n_regions < 3 || self.n_years < 3 {
            return bad(format!(
                "need at least 3 regions and 3 years, got {} x {}",
                self.n_regions, self.n_years
            ));
        }
        if self.n_subject_areas < 2 || self.n_archetypes < 1 {
            return bad("need at least 2 subject areas and 1 archetype".into());
        }
        for (name, v) in [
            ("region_effect_sd", self.region_effect_sd),
            ("noise_sd", self.noise_sd),
            ("clustered_noise.sd", self.clustered_noise.sd),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        if self.clustered_noise.persistence.is_nan() || self.clustered_noise.persistence.abs() >= 1.0 {
            return bad("clustered_noise.persistence must lie in (-1, 1)".into());
        }
        for key in self.true_coefficients.keys() {
            if !TERMS.contains(&key.as_str()) {
                return bad(format!(
                    "unknown coefficient `{key}`; expected one of {}",
                    TERMS.join(", ")
                ));
            }
        }
        if let Some(p) = &self.time_effect_profile {
            if p.len() != self.n_years {
                return bad(format!(
                    "time_effect_profile has {} entries for {} years",
                    p.len(),
                    self.n_years
                ));
            }
        }
        for (name, law) in self.laws() {
            if law.persistence.is_nan()
                || law.persistence.abs() >= 1.0
                || law.region_sd < 0.0
                || law.within_sd < 0.0
                || law.lower > law.upper
            {
                return bad(format!("regressor law `{name}` is malformed"));
            }
        }
        Ok(())
    }

    fn laws(&self) -> [(&'static str, &RegressorLaw); 6] {
        let r = &self.regressors;
        [
            ("expemp10", &r.expemp10),
            ("grpcap10", &r.grpcap10),
            ("papemp", &r.papemp),
            ("fwci", &r.fwci),
            ("q1sh", &r.q1sh),
            ("nqsh", &r.nqsh),
        ]
    }

    pub fn coefficient(&self, term: &str) -> f64 {
        self.true_coefficients.get(term).copied().unwrap_or(0.0)
    }

    /// Year offsets, first year normalized to 0.
    pub fn time_effects(&self) -> Vec<f64> {
        let raw = match &self.time_effect_profile {
            Some(p) => p.clone(),
            None => {
                let t = self.n_years as f64;
                let mid = (t - 1.0) / 2.0;
                let width = t / 8.0;
                (0..self.n_years)
                    .map(|i| self.time_effect_height / (1.0 + (-(i as f64 - mid) / width).exp()))
                    .collect()
            }
        };
        raw.iter().map(|v| v - raw[0]).collect()
    }
}

/// A generated dataset with everything needed to check recovery.
#[derive(Debug, Clone)]
pub struct GeneratedPanel {
    /// Aligned panel: the dependent value at year `t` is the outcome of `t + 1`.
    pub data: PanelDataset,
    pub profiles: ThematicProfileMatrix,
    pub weights: SpatialWeights,
    /// True value of every term, time dummies included.
    pub truth: BTreeMap<String, f64>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Region x year draws of one regressor, region-major.
fn draw_regressor(rng: &mut ChaCha8Rng, law: &RegressorLaw, n: usize, t: usize) -> Vec<f64> {
    let innovation = (1.0 - law.persistence * law.persistence).sqrt() * law.within_sd;
    let mid = (t as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(n * t);
    for _ in 0..n {
        let level = law.log_mean + law.region_sd * normal(rng);
        let mut a = law.within_sd * normal(rng);
        for s in 0..t {
            if s > 0 {
                a = law.persistence * a + innovation * normal(rng);
            }
            let v = (level + law.trend * (s as f64 - mid) + a).exp();
            out.push(v.clamp(law.lower, law.upper));
        }
    }
    out
}

fn draw_profiles(rng: &mut ChaCha8Rng, cfg: &DgpConfig, regions: &[String]) -> Result<ThematicProfileMatrix> {
    let s = cfg.n_subject_areas;
    let spiky = Gamma::<f64>::new(0.5, 1.0).expect("valid shape");
    let flat = Gamma::<f64>::new(1.0, 1.0).expect("valid shape");
    let archetypes: Vec<Vec<f64>> = (0..cfg.n_archetypes)
        .map(|_| (0..s).map(|_| spiky.sample(rng) + 1e-6).collect())
        .collect();
    let mut shares = DMatrix::zeros(regions.len(), s);
    for r in 0..regions.len() {
        let mix: Vec<f64> = (0..cfg.n_archetypes).map(|_| flat.sample(rng).powi(2)).collect();
        let mut row: Vec<f64> = (0..s)
            .map(|j| {
                let base: f64 = mix.iter().zip(&archetypes).map(|(m, a)| m * a[j]).sum();
                base * (0.3 * normal(rng)).exp()
            })
            .collect();
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= total);
        // exact unit sums after rounding
        let drift: f64 = 1.0 - row.iter().sum::<f64>();
        row[0] += drift;
        for (j, v) in row.into_iter().enumerate() {
            shares[(r, j)] = v;
        }
    }
    let areas = (1..=s).map(|j| format!("SA{j:02}")).collect();
    Ok(ThematicProfileMatrix::new(regions.to_vec(), areas, shares)?)
}

fn lag(w: &SpatialWeights, x: &[f64], t: usize) -> Vec<f64> {
    let n = w.n();
    let m = w.matrix();
    let mut out = vec![0.0; n * t];
    for i in 0..n {
        for j in 0..n {
            let wij = m[(i, j)];
            if wij != 0.0 {
                for s in 0..t {
                    out[i * t + s] += wij * x[j * t + s];
                }
            }
        }
    }
    out
}

pub fn generate_panel(cfg: &DgpConfig) -> Result<GeneratedPanel> {
    generate_stream(cfg, 0)
}

/// As [`generate_panel`] on generator stream `stream`.
pub fn generate_stream(cfg: &DgpConfig, stream: u64) -> Result<GeneratedPanel> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let (n, t) = (cfg.n_regions, cfg.n_years);
    let width = n.to_string().len().max(2);
    let regions: Vec<String> = (1..=n).map(|i| format!("R{i:0width$}")).collect();
    let years: Vec<i32> = (0..t as i32).map(|i| cfg.first_year + i).collect();

    let profiles = draw_profiles(&mut rng, cfg, &regions)?;
    let weights = build_weights(&profiles.correlation()?);

    let r = &cfg.regressors;
    let expemp = draw_regressor(&mut rng, &r.expemp10, n, t);
    let grpcap = draw_regressor(&mut rng, &r.grpcap10, n, t);
    let papemp = draw_regressor(&mut rng, &r.papemp, n, t);
    let fwci = draw_regressor(&mut rng, &r.fwci, n, t);
    let mut q1sh = draw_regressor(&mut rng, &r.q1sh, n, t);
    let mut nqsh = draw_regressor(&mut rng, &r.nqsh, n, t);
    for (a, b) in q1sh.iter_mut().zip(nqsh.iter_mut()) {
        let total = *a + *b;
        if total > 100.0 {
            *a *= 100.0 / total;
            *b *= 100.0 / total;
        }
    }
    let ln = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| x.ln()).collect() };
    let (l_exp, l_grp, l_pap) = (ln(&expemp), ln(&grpcap), ln(&papemp));
    let fwci_sq: Vec<f64> = fwci.iter().map(|v| v * v).collect();
    let columns: [(&str, Vec<f64>); 10] = [
        ("log(EXPEMP10)", l_exp.clone()),
        ("log(GRPCAP10)", l_grp.clone()),
        ("log(PAPEMP)", l_pap.clone()),
        ("FWCI", fwci.clone()),
        ("I(FWCI^2)", fwci_sq),
        ("Q1SH", q1sh.clone()),
        ("NQSH", nqsh.clone()),
        ("slFWCI", lag(&weights, &fwci, t)),
        ("slQ1SH", lag(&weights, &q1sh, t)),
        ("slNQSH", lag(&weights, &nqsh, t)),
    ];
    let mut systematic = vec![0.0; n * t];
    for (term, values) in &columns {
        let b = cfg.coefficient(term);
        for (s, v) in systematic.iter_mut().zip(values) {
            *s += b * v;
        }
    }
    let mean = systematic.iter().sum::<f64>() / (n * t) as f64;

    let tau = cfg.time_effects();
    let cn = &cfg.clustered_noise;
    let cn_innovation = (1.0 - cn.persistence * cn.persistence).sqrt() * cn.sd;
    let mut y = Vec::with_capacity(n * t);
    for i in 0..n {
        let mu = cfg.region_effect_sd * normal(&mut rng);
        let mut c = cn.sd * normal(&mut rng);
        for s in 0..t {
            if s > 0 {
                c = cn.persistence * c + cn_innovation * normal(&mut rng);
            }
            let e = cfg.noise_sd * normal(&mut rng);
            y.push(cfg.outcome_level + systematic[i * t + s] - mean + mu + tau[s] - cfg.quality_substitution + c + e);
        }
    }

    let level_y: Vec<f64> = y.iter().map(|v| v.exp()).collect();
    let data = PanelDataset::new(regions, years.clone())?
        .with_variable("PUB21EMP", level_y)?
        .with_variable("log(PUB21EMP)", y)?
        .with_variable("EXPEMP10", expemp)?
        .with_variable("log(EXPEMP10)", l_exp)?
        .with_variable("GRPCAP10", grpcap)?
        .with_variable("log(GRPCAP10)", l_grp)?
        .with_variable("PAPEMP", papemp)?
        .with_variable("log(PAPEMP)", l_pap)?
        .with_variable("FWCI", fwci)?
        .with_variable("Q1SH", q1sh)?
        .with_variable("NQSH", nqsh)?
        .with_metadata("generator", "synthetic data-generating process")
        .with_metadata(
            "calibration",
            "coefficients and ranges calibrated to reference estimates; not a reproduction",
        )
        .with_metadata("rng", RNG_NAME)
        .with_metadata("seed", cfg.seed.to_string())
        .with_metadata("stream", stream.to_string())
        .with_metadata("dependent_lead", "PUB21EMP at year t is the outcome of year t+1");

    let mut truth: BTreeMap<String, f64> = TERMS.iter().map(|t| (t.to_string(), cfg.coefficient(t))).collect();
    for (s, year) in years.iter().enumerate().skip(1) {
        truth.insert(crate::estimator::time_dummy_name(*year), tau[s] - tau[0]);
    }
    Ok(GeneratedPanel {
        data,
        profiles,
        weights,
        truth,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McTerm {
    pub term: String,
    pub truth: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    pub sd: f64,
    /// Mean reported standard error under the spec's covariance.
    pub mean_se: f64,
    /// Share of nominal 95% intervals covering the truth, spec's covariance.
    pub coverage: f64,
    pub mean_se_classical: f64,
    pub coverage_classical: f64,
    pub mean_se_cluster: f64,
    pub coverage_cluster: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub spec: String,
    pub replications: usize,
    pub covariance: String,
    pub seed: u64,
    pub n_regions: usize,
    pub n_years: usize,
    pub rng: String,
    pub calibration: String,
    pub terms: Vec<McTerm>,
}

impl McReport {
    pub fn term(&self, name: &str) -> Option<&McTerm> {
        self.terms.iter().find(|t| t.term == name)
    }
}

impl fmt::Display for McReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "Monte Carlo: {} | {} replications | {} x {} | seed {} | {}",
            self.spec, self.replications, self.n_regions, self.n_years, self.seed, self.covariance
        )?;
        let head = [
            "term",
            "truth",
            "mean",
            "bias",
            "sd",
            "mean_se",
            "coverage",
            "cov_classical",
            "cov_cluster",
        ];
        let rows: Vec<Vec<String>> = self
            .terms
            .iter()
            .map(|t| {
                let mut r = vec![t.term.clone()];
                r.extend(
                    [t.truth, t.mean_estimate, t.bias, t.sd, t.mean_se]
                        .iter()
                        .map(|v| format!("{v:.4}")),
                );
                r.extend(
                    [t.coverage, t.coverage_classical, t.coverage_cluster]
                        .iter()
                        .map(|v| format!("{v:.3}")),
                );
                r
            })
            .collect();
        let mut widths: Vec<usize> = head.iter().map(|h| h.len()).collect();
        for r in &rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: Vec<String>| {
            cells
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if i == 0 {
                        format!("{c:<w$}", w = widths[0])
                    } else {
                        format!("{c:>w$}", w = widths[i])
                    }
                })
                .collect::<Vec<_>>()
                .join("  ")
        };
        writeln!(f, "{}", line(head.iter().map(|s| s.to_string()).collect()))?;
        for r in rows {
            writeln!(f, "{}", line(r))?;
        }
        Ok(())
    }
}

struct Draw {
    estimate: Vec<f64>,
    se_classical: Vec<f64>,
    se_cluster: Vec<f64>,
    critical: f64,
}

/// Repeats generate-then-fit `replications` times (in parallel) and
/// summarizes every regressor of `tag`.
pub fn monte_carlo(cfg: &DgpConfig, tag: &str, replications: usize) -> Result<McReport> {
    monte_carlo_with(cfg, tag, replications, &SuiteVariables::default())
}

pub fn monte_carlo_with(cfg: &DgpConfig, tag: &str, replications: usize, vars: &SuiteVariables) -> Result<McReport> {
    if replications < 2 {
        return Err(SimulationError::TooFewReplications(replications));
    }
    cfg.validate()?;
    let notation: SuiteNotation = tag.parse()?;
    let spec = expand_with(&notation, vars);
    let terms: Vec<String> = spec.regressors.iter().map(Term::label).collect();

    let draws: Vec<Result<Draw>> = (0..replications)
        .into_par_iter()
        .map(|k| {
            let g = generate_stream(cfg, k as u64 + 1)?;
            let w = spec.uses_spatial_lags().then_some(&g.weights);
            let fit =
                fit_model(&g.data, &spec, w).map_err(|source| SimulationError::Replication { index: k, source })?;
            let pick = |v: &[f64]| -> Vec<f64> {
                terms
                    .iter()
                    .map(|t| v[fit.term_index(t).expect("term fitted")])
                    .collect()
            };
            Ok(Draw {
                estimate: pick(&fit.coefficients),
                se_classical: pick(&fit.se_classical),
                se_cluster: fit
                    .se_cluster
                    .as_deref()
                    .map_or_else(|| vec![f64::NAN; terms.len()], pick),
                critical: t_critical(0.95, fit.dof),
            })
        })
        .collect();
    let draws: Vec<Draw> = draws.into_iter().collect::<Result<_>>()?;

    let reps = replications as f64;
    let cluster = matches!(spec.covariance, crate::estimator::CovarianceKind::ClusterByRegion);
    let terms = terms
        .iter()
        .enumerate()
        .map(|(j, term)| {
            let truth = cfg.coefficient(term);
            let est: Vec<f64> = draws.iter().map(|d| d.estimate[j]).collect();
            let mean = est.iter().sum::<f64>() / reps;
            let sd = (est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (reps - 1.0)).sqrt();
            let summarize = |se: &dyn Fn(&Draw) -> f64| -> (f64, f64) {
                let mean_se = draws.iter().map(se).sum::<f64>() / reps;
                let covered = draws
                    .iter()
                    .filter(|d| (d.estimate[j] - truth).abs() <= d.critical * se(d))
                    .count();
                (mean_se, covered as f64 / reps)
            };
            let (se_c, cov_c) = summarize(&|d| d.se_classical[j]);
            let (se_r, cov_r) = summarize(&|d| d.se_cluster[j]);
            let (mean_se, coverage) = if cluster { (se_r, cov_r) } else { (se_c, cov_c) };
            McTerm {
                term: term.clone(),
                truth,
                mean_estimate: mean,
                bias: mean - truth,
                sd,
                mean_se,
                coverage,
                mean_se_classical: se_c,
                coverage_classical: cov_c,
                mean_se_cluster: se_r,
                coverage_cluster: cov_r,
            }
        })
        .collect();

    Ok(McReport {
        spec: tag.to_string(),
        replications,
        covariance: spec.covariance.to_string(),
        seed: cfg.seed,
        n_regions: cfg.n_regions,
        n_years: cfg.n_years,
        rng: RNG_NAME.to_string(),
        calibration: "true coefficients calibrated to reference estimates; not a reproduction".into(),
        terms,
    })
}
