//! Specification notation, multi-model comparison runs and table rendering.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{
    fit_model, significance_stars, t_p_value, CovarianceKind, EstimationError, FitReport, FitResult, ModelSpec, Term,
    CONSTANT,
};
use crate::fmt::fixed;
use crate::panel::PanelDataset;
use crate::weights::SpatialWeights;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("invalid specification tag `{tag}`: {reason}")]
    InvalidTag { tag: String, reason: String },
    #[error("no specification tags given")]
    EmptyTagList,
    #[error("quadratic coefficient {0} is not negative; no interior maximum")]
    NoInteriorMaximum(f64),
    #[error("fitting `{tag}`: {source}")]
    Fit {
        tag: String,
        #[source]
        source: EstimationError,
    },
}

pub type Result<T, E = SuiteError> = std::result::Result<T, E>;

/// The seven comparison columns of the main results table.
pub const MAIN_TAGS: [&str; 7] = [
    "ols.q",
    "fe.tw",
    "fe.ow.q",
    "fe.tw.q",
    "fe.tw.q.sl.non",
    "fe.tw.q.sl.noq",
    "fe.tw.q.sl",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Omitted {
    /// `non`: no non-quartile share.
    NonQuartileShare,
    /// `noq`: no first-quartile share.
    FirstQuartileShare,
}

/// Parsed dot-separated specification tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteNotation {
    pub tag: String,
    pub fixed_effects: bool,
    pub two_way: bool,
    pub quality: bool,
    pub spatial_lags: bool,
    pub articles: bool,
    pub omitted: Option<Omitted>,
}

impl FromStr for SuiteNotation {
    type Err = SuiteError;

    fn from_str(tag: &str) -> Result<Self> {
        let invalid = |reason: &str| SuiteError::InvalidTag {
            tag: tag.to_string(),
            reason: reason.to_string(),
        };
        let mut seen = BTreeSet::new();
        for token in tag.split('.') {
            if !matches!(token, "ols" | "fe" | "ow" | "tw" | "q" | "sl" | "a" | "non" | "noq") {
                return Err(invalid(&format!("unknown token `{token}`")));
            }
            if !seen.insert(token) {
                return Err(invalid(&format!("token `{token}` repeated")));
            }
        }
        let has = |t: &str| seen.contains(t);
        if has("ols") == has("fe") {
            return Err(invalid("exactly one of `ols` and `fe` is required"));
        }
        if has("fe") && has("ow") == has("tw") {
            return Err(invalid("`fe` requires exactly one of `ow` and `tw`"));
        }
        if has("ols") && (has("ow") || has("tw")) {
            return Err(invalid("`ow`/`tw` apply only to `fe`"));
        }
        if has("non") && has("noq") {
            return Err(invalid("`non` and `noq` are mutually exclusive"));
        }
        if has("sl") && !has("q") {
            return Err(invalid("`sl` requires `q`"));
        }
        if (has("non") || has("noq")) && !has("q") {
            return Err(invalid("`non`/`noq` require `q`"));
        }
        Ok(Self {
            tag: tag.to_string(),
            fixed_effects: has("fe"),
            two_way: has("tw"),
            quality: has("q"),
            spatial_lags: has("sl"),
            articles: has("a"),
            omitted: if has("non") {
                Some(Omitted::NonQuartileShare)
            } else if has("noq") {
                Some(Omitted::FirstQuartileShare)
            } else {
                None
            },
        })
    }
}

impl fmt::Display for SuiteNotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag)
    }
}

/// Variable names the notation expands to. `articles_suffix` is appended to
/// the dependent base name and the quality variables under the `a` token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteVariables {
    pub dependent: String,
    pub controls: Vec<String>,
    pub fwci: String,
    pub q1sh: String,
    pub nqsh: String,
    pub articles_suffix: String,
    pub covariance: CovarianceKind,
}

impl Default for SuiteVariables {
    fn default() -> Self {
        Self {
            dependent: "PUB21EMP".into(),
            controls: vec!["log(EXPEMP10)".into(), "log(GRPCAP10)".into(), "log(PAPEMP)".into()],
            fwci: "FWCI".into(),
            q1sh: "Q1SH".into(),
            nqsh: "NQSH".into(),
            articles_suffix: "A".into(),
            covariance: CovarianceKind::ClusterByRegion,
        }
    }
}

impl SuiteVariables {
    fn quality_names(&self, articles: bool) -> [String; 3] {
        let s = if articles { self.articles_suffix.as_str() } else { "" };
        [
            format!("{}{s}", self.fwci),
            format!("{}{s}", self.q1sh),
            format!("{}{s}", self.nqsh),
        ]
    }

    /// Every term any tag can produce, in table row order.
    fn canonical_terms(&self) -> Vec<String> {
        let mut out = self.controls.clone();
        for articles in [false, true] {
            let [fwci, q1, nq] = self.quality_names(articles);
            out.extend([
                Term::level(&fwci).label(),
                Term::squared(&fwci).label(),
                q1.clone(),
                nq.clone(),
            ]);
            out.extend([Term::lagged(&fwci), Term::lagged(&q1), Term::lagged(&nq)].map(|t| t.label()));
        }
        out
    }
}

pub fn expand_notation(tag: &str) -> Result<ModelSpec> {
    Ok(expand_with(&tag.parse()?, &SuiteVariables::default()))
}

pub fn expand_with(n: &SuiteNotation, vars: &SuiteVariables) -> ModelSpec {
    let dependent = if n.articles {
        format!("log({}{})", vars.dependent, vars.articles_suffix)
    } else {
        format!("log({})", vars.dependent)
    };
    let mut regressors: Vec<Term> = vars.controls.iter().map(Term::level).collect();
    if n.quality {
        let [fwci, q1, nq] = vars.quality_names(n.articles);
        let keep_q1 = n.omitted != Some(Omitted::FirstQuartileShare);
        let keep_nq = n.omitted != Some(Omitted::NonQuartileShare);
        regressors.push(Term::level(&fwci));
        regressors.push(Term::squared(&fwci));
        if keep_q1 {
            regressors.push(Term::level(&q1));
        }
        if keep_nq {
            regressors.push(Term::level(&nq));
        }
        if n.spatial_lags {
            regressors.push(Term::lagged(&fwci));
            if keep_q1 {
                regressors.push(Term::lagged(&q1));
            }
            if keep_nq {
                regressors.push(Term::lagged(&nq));
            }
        }
    }
    ModelSpec {
        dependent,
        regressors,
        intercept: !n.fixed_effects,
        region_effects: n.fixed_effects,
        time_dummies: n.fixed_effects && n.two_way,
        covariance: vars.covariance,
    }
}

/// `-b_linear / (2 b_quadratic)`, the argmax of `b_linear x + b_quadratic x^2`.
pub fn vertex_of_quadratic(b_linear: f64, b_quadratic: f64) -> Result<f64> {
    if b_quadratic.is_nan() || b_quadratic >= 0.0 {
        return Err(SuiteError::NoInteriorMaximum(b_quadratic));
    }
    Ok(-b_linear / (2.0 * b_quadratic))
}

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub estimate: f64,
    pub se: f64,
    pub p: f64,
    pub stars: &'static str,
    pub se_classical: f64,
    pub p_classical: f64,
    pub se_cluster: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SuiteColumn {
    pub notation: SuiteNotation,
    pub fit: FitResult,
}

impl SuiteColumn {
    pub fn cell(&self, term: &str) -> Option<Cell> {
        let i = self.fit.term_index(term)?;
        let f = &self.fit;
        let p_classical = t_p_value(f.coefficients[i] / f.se_classical[i], f.dof);
        Some(Cell {
            estimate: f.coefficients[i],
            se: f.std_errors[i],
            p: f.p_values[i],
            stars: significance_stars(f.p_values[i]),
            se_classical: f.se_classical[i],
            p_classical,
            se_cluster: f.se_cluster.as_ref().map(|s| s[i]),
        })
    }
}

/// Fitted columns plus the union of their terms in table order.
#[derive(Debug, Clone)]
pub struct ComparisonTable {
    pub dependent: String,
    pub columns: Vec<SuiteColumn>,
    pub rows: Vec<String>,
}

fn row_order(columns: &[SuiteColumn], vars: &SuiteVariables) -> Vec<String> {
    let canonical = vars.canonical_terms();
    let mut seen: Vec<String> = Vec::new();
    for c in columns {
        for t in &c.fit.terms {
            if !seen.contains(t) {
                seen.push(t.clone());
            }
        }
    }
    let key = |t: &String, first_seen: usize| -> (u8, usize, String) {
        if let Some(i) = canonical.iter().position(|c| c == t) {
            (0, i, String::new())
        } else if t.starts_with("factor(year)") {
            (2, 0, t.clone())
        } else if t == CONSTANT {
            (3, 0, String::new())
        } else {
            (1, first_seen, String::new())
        }
    };
    let mut keyed: Vec<_> = seen.into_iter().enumerate().map(|(i, t)| (key(&t, i), t)).collect();
    keyed.sort();
    keyed.into_iter().map(|(_, t)| t).collect()
}

/// Fits every tag (in parallel) and assembles the comparison in tag order.
/// All tags are parsed before any estimation starts.
pub fn run_suite<S: AsRef<str>>(
    d: &PanelDataset,
    w: Option<&SpatialWeights>,
    tags: &[S],
    vars: &SuiteVariables,
) -> Result<ComparisonTable> {
    if tags.is_empty() {
        return Err(SuiteError::EmptyTagList);
    }
    let notations: Vec<SuiteNotation> = tags.iter().map(|t| t.as_ref().parse()).collect::<Result<_>>()?;
    let fits: Vec<std::result::Result<FitResult, EstimationError>> = notations
        .par_iter()
        .map(|n| fit_model(d, &expand_with(n, vars), w))
        .collect();
    let mut columns = Vec::with_capacity(fits.len());
    for (notation, fit) in notations.into_iter().zip(fits) {
        let fit = fit.map_err(|source| SuiteError::Fit {
            tag: notation.tag.clone(),
            source,
        })?;
        columns.push(SuiteColumn { notation, fit });
    }
    let dependent = columns[0].fit.spec.dependent.clone();
    let rows = row_order(&columns, vars);
    Ok(ComparisonTable {
        dependent,
        columns,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Text,
    Csv,
    Md,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableOptions {
    pub format: TableFormat,
    /// Two parenthesized lines per cell: classical, then cluster-robust.
    /// Stars then follow the classical p-values.
    pub dual_se: bool,
    pub omit_time_dummies: bool,
    pub decimals: usize,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            format: TableFormat::Text,
            dual_se: false,
            omit_time_dummies: false,
            decimals: 3,
        }
    }
}

pub const STAR_NOTE: &str = "*p<0.10; **p<0.05; ***p<0.01";

struct Grid {
    header: Vec<String>,
    body: Vec<(String, Vec<String>)>,
}

fn build_grid(t: &ComparisonTable, opts: &TableOptions) -> Grid {
    let dp = opts.decimals;
    let mut header = vec![t.dependent.clone()];
    header.extend(t.columns.iter().map(|c| c.notation.tag.clone()));
    let mut body = Vec::new();
    for term in &t.rows {
        if opts.omit_time_dummies && term.starts_with("factor(year)") {
            continue;
        }
        let cells: Vec<Option<Cell>> = t.columns.iter().map(|c| c.cell(term)).collect();
        let est = cells
            .iter()
            .map(|c| match c {
                Some(c) => {
                    let stars = if opts.dual_se {
                        significance_stars(c.p_classical)
                    } else {
                        c.stars
                    };
                    format!("{}{stars}", fixed(c.estimate, dp))
                }
                None => String::new(),
            })
            .collect();
        body.push((term.clone(), est));
        let paren = |v: Option<f64>| v.map_or(String::new(), |v| format!("({})", fixed(v, dp)));
        if opts.dual_se {
            body.push((
                String::new(),
                cells
                    .iter()
                    .map(|c| paren(c.as_ref().map(|c| c.se_classical)))
                    .collect(),
            ));
            body.push((
                String::new(),
                cells
                    .iter()
                    .map(|c| paren(c.as_ref().and_then(|c| c.se_cluster)))
                    .collect(),
            ));
        } else {
            body.push((
                String::new(),
                cells.iter().map(|c| paren(c.as_ref().map(|c| c.se))).collect(),
            ));
        }
    }
    body.push((
        "Observations".into(),
        t.columns.iter().map(|c| c.fit.n_obs.to_string()).collect(),
    ));
    body.push(("AIC".into(), t.columns.iter().map(|c| fixed(c.fit.aic, dp)).collect()));
    Grid { header, body }
}

pub fn render_table(t: &ComparisonTable, opts: &TableOptions) -> String {
    let grid = build_grid(t, opts);
    match opts.format {
        TableFormat::Text => render_text(&grid, t, opts),
        TableFormat::Csv => render_csv(&grid),
        TableFormat::Md => render_md(&grid, t, opts),
    }
}

fn se_caption(t: &ComparisonTable, opts: &TableOptions) -> String {
    if opts.dual_se {
        "Standard errors in parentheses: classical, then cluster-robust; stars from classical p-values.".into()
    } else {
        match t.columns.first().map(|c| c.fit.spec.covariance) {
            Some(CovarianceKind::ClusterByRegion) => "Cluster-robust standard errors in parentheses.".into(),
            _ => "Standard errors in parentheses.".into(),
        }
    }
}

fn render_text(grid: &Grid, t: &ComparisonTable, opts: &TableOptions) -> String {
    let n = grid.header.len();
    let mut widths = vec![0usize; n];
    let numbers: Vec<String> = std::iter::once(String::new())
        .chain((1..n).map(|i| format!("({i})")))
        .collect();
    let all_rows = std::iter::once(&numbers)
        .chain(std::iter::once(&grid.header))
        .chain(grid.body.iter().map(|(_, r)| r));
    for r in all_rows {
        for (i, c) in r.iter().enumerate().skip(1) {
            widths[i] = widths[i].max(c.chars().count());
        }
    }
    widths[0] = grid
        .body
        .iter()
        .map(|(l, _)| l.chars().count())
        .chain([grid.header[0].chars().count()])
        .max()
        .unwrap_or(0);
    let line = |label: &str, cells: &[String]| {
        let mut s = format!("{label:<w$}", w = widths[0]);
        for (i, c) in cells.iter().enumerate() {
            s.push_str(&format!("  {c:>w$}", w = widths[i + 1]));
        }
        s.trim_end().to_string()
    };
    let total: usize = widths.iter().sum::<usize>() + 2 * (n - 1);
    let rule = "-".repeat(total);
    let mut out = Vec::new();
    out.push(line(&grid.header[0], &numbers[1..]));
    out.push(line("", &grid.header[1..]));
    out.push(rule.clone());
    let footer_at = grid.body.len() - 2;
    for (i, (label, cells)) in grid.body.iter().enumerate() {
        if i == footer_at {
            out.push(rule.clone());
        }
        out.push(line(label, cells));
    }
    out.push(rule);
    out.push(se_caption(t, opts));
    out.push(format!("Significance: {STAR_NOTE}"));
    out.join("\n") + "\n"
}

fn render_csv(grid: &Grid) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header = vec!["term".to_string()];
    header.extend(grid.header[1..].iter().cloned());
    w.write_record(&header).expect("in-memory write");
    let mut last_label = String::new();
    for (label, cells) in &grid.body {
        let label = if label.is_empty() {
            last_label.clone()
        } else {
            label.clone()
        };
        let mut rec = vec![label.clone()];
        rec.extend(cells.iter().cloned());
        w.write_record(&rec).expect("in-memory write");
        last_label = label;
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

fn render_md(grid: &Grid, t: &ComparisonTable, opts: &TableOptions) -> String {
    let esc = |s: &str| s.replace('|', "\\|").replace('*', "\\*");
    let mut out = Vec::new();
    let mut header = vec![esc(&grid.header[0])];
    header.extend((1..grid.header.len()).map(|i| format!("({i}) {}", esc(&grid.header[i]))));
    out.push(format!("| {} |", header.join(" | ")));
    out.push(format!("|{}", ":---|".to_string() + &"---:|".repeat(header.len() - 1)));
    let mut i = 0;
    while i < grid.body.len() {
        let (label, cells) = &grid.body[i];
        let mut merged: Vec<String> = cells.iter().map(|c| esc(c)).collect();
        let mut j = i + 1;
        while j < grid.body.len() && grid.body[j].0.is_empty() {
            for (m, c) in merged.iter_mut().zip(&grid.body[j].1) {
                if !c.is_empty() {
                    m.push(' ');
                    m.push_str(c);
                }
            }
            j += 1;
        }
        out.push(format!("| {} | {} |", esc(label), merged.join(" | ")));
        i = j;
    }
    out.push(String::new());
    out.push(se_caption(t, opts));
    out.push(format!("Significance: {}", esc(STAR_NOTE)));
    out.join("\n") + "\n"
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteColumnReport {
    pub tag: String,
    pub spec: ModelSpec,
    pub result: FitReport,
}

/// Full-precision companion to the rendered table.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub dependent: String,
    pub tags: Vec<String>,
    pub rows: Vec<String>,
    pub columns: Vec<SuiteColumnReport>,
}

impl ComparisonTable {
    pub fn report(&self) -> SuiteReport {
        SuiteReport {
            dependent: self.dependent.clone(),
            tags: self.columns.iter().map(|c| c.notation.tag.clone()).collect(),
            rows: self.rows.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| SuiteColumnReport {
                    tag: c.notation.tag.clone(),
                    spec: c.fit.spec.clone(),
                    result: c.fit.report(),
                })
                .collect(),
        }
    }
}
