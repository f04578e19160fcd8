//! Region-level scientometric indicators from publication records.
//!
//! Attribution uses full counting: a co-authored publication counts once for
//! every region among its affiliations, and never twice for the same region.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::panel::{PanelDataset, PanelError};
use crate::weights::ThematicProfileMatrix;

#[derive(Debug, Error)]
pub enum IndicatorError {
    #[error("no publications in region-year cell")]
    EmptyCell,
    #[error("no publications for region `{0}`")]
    EmptyRegion(String),
    #[error("invalid publication record `{id}`: {reason}")]
    InvalidRecord { id: String, reason: String },
    #[error("subject area `{0}` is not in the vocabulary")]
    UnknownSubject(String),
    #[error("duplicate subject area `{0}` in vocabulary")]
    DuplicateSubject(String),
    #[error("unknown journal quartile {0:?}")]
    InvalidQuartile(String),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Panel(#[from] PanelError),
}

pub type Result<T, E = IndicatorError> = std::result::Result<T, E>;

/// Journal quartile by CiteScore rank; `None` marks sources without a rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Quartile {
    Q1,
    Q2,
    Q3,
    Q4,
    #[serde(rename = "NONE")]
    None,
}

impl Quartile {
    /// Best (highest) quartile across a journal's categories. Ranked
    /// categories beat unranked ones.
    pub fn best_of(qs: impl IntoIterator<Item = Quartile>) -> Quartile {
        qs.into_iter().min().unwrap_or(Quartile::None)
    }
}

impl FromStr for Quartile {
    type Err = IndicatorError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "Q1" => Ok(Quartile::Q1),
            "Q2" => Ok(Quartile::Q2),
            "Q3" => Ok(Quartile::Q3),
            "Q4" => Ok(Quartile::Q4),
            "NONE" | "" | "NQ" => Ok(Quartile::None),
            _ => Err(IndicatorError::InvalidQuartile(s.to_string())),
        }
    }
}

fn one_or_many_quartiles<'de, D: Deserializer<'de>>(de: D) -> Result<Quartile, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(Quartile),
        Many(Vec<Quartile>),
    }
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(q) => q,
        OneOrMany::Many(qs) => Quartile::best_of(qs),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub id: String,
    pub year: i32,
    pub regions: BTreeSet<String>,
    pub subject_areas: BTreeSet<String>,
    pub citations: u64,
    pub expected_citations: f64,
    #[serde(deserialize_with = "one_or_many_quartiles")]
    pub journal_quartile: Quartile,
}

impl PublicationRecord {
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: &str| IndicatorError::InvalidRecord {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        if self.regions.is_empty() {
            return Err(invalid("no regions"));
        }
        if self.subject_areas.is_empty() {
            return Err(invalid("no subject areas"));
        }
        if !(self.expected_citations > 0.0 && self.expected_citations.is_finite()) {
            return Err(invalid("expected_citations must be positive"));
        }
        Ok(())
    }

    fn citation_ratio(&self) -> f64 {
        self.citations as f64 / self.expected_citations
    }
}

/// Indicators for one region-year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionYearIndicators {
    pub region: String,
    pub year: i32,
    pub pub_count: usize,
    pub fwci: f64,
    pub q1_share: f64,
    pub nq_share: f64,
}

/// Groups records under every (region, year) they belong to.
pub fn attribute_full_counting(pubs: &[PublicationRecord]) -> BTreeMap<(String, i32), Vec<&PublicationRecord>> {
    let mut cells: BTreeMap<(String, i32), Vec<&PublicationRecord>> = BTreeMap::new();
    for p in pubs {
        // `regions` is a set, so a region appears once however many of its
        // authors signed the publication
        for region in &p.regions {
            cells.entry((region.clone(), p.year)).or_default().push(p);
        }
    }
    cells
}

/// Mean of citations / expected citations over the records.
pub fn compute_fwci(records: &[&PublicationRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(IndicatorError::EmptyCell);
    }
    let sum: f64 = records.iter().map(|r| r.citation_ratio()).sum();
    Ok(sum / records.len() as f64)
}

/// Percent of records in Q1 journals and in unranked sources.
pub fn compute_quartile_shares(records: &[&PublicationRecord]) -> Result<(f64, f64)> {
    if records.is_empty() {
        return Err(IndicatorError::EmptyCell);
    }
    let total = records.len() as f64;
    let q1 = records.iter().filter(|r| r.journal_quartile == Quartile::Q1).count();
    let nq = records.iter().filter(|r| r.journal_quartile == Quartile::None).count();
    Ok(((100 * q1) as f64 / total, (100 * nq) as f64 / total))
}

/// Ordered subject-area codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectVocabulary {
    codes: Vec<String>,
}

impl SubjectVocabulary {
    pub fn new(codes: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &codes {
            if !seen.insert(c.as_str()) {
                return Err(IndicatorError::DuplicateSubject(c.clone()));
            }
        }
        Ok(Self { codes })
    }

    /// One code per line; blank lines and `#` comments are ignored.
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut codes = Vec::new();
        for line in BufReader::new(reader).lines() {
            let line = line?;
            let code = line.trim();
            if !code.is_empty() && !code.starts_with('#') {
                codes.push(code.to_string());
            }
        }
        Self::new(codes)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(File::open(path)?)
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    fn position(&self, code: &str) -> Result<usize> {
        self.codes
            .iter()
            .position(|c| c == code)
            .ok_or_else(|| IndicatorError::UnknownSubject(code.to_string()))
    }
}

/// Share of subject-area incidences per area. A record listing k areas adds
/// one incidence to each.
pub fn compute_thematic_profile(records: &[&PublicationRecord], vocab: &SubjectVocabulary) -> Result<Vec<f64>> {
    let mut counts = vec![0usize; vocab.len()];
    for r in records {
        for s in &r.subject_areas {
            counts[vocab.position(s)?] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(IndicatorError::EmptyRegion(String::new()));
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

/// All region-year indicator rows, ordered by (region, year).
pub fn region_year_indicators(pubs: &[PublicationRecord]) -> Result<Vec<RegionYearIndicators>> {
    for p in pubs {
        p.validate()?;
    }
    attribute_full_counting(pubs)
        .into_iter()
        .map(|((region, year), records)| {
            let fwci = compute_fwci(&records)?;
            let (q1_share, nq_share) = compute_quartile_shares(&records)?;
            Ok(RegionYearIndicators {
                region,
                year,
                pub_count: records.len(),
                fwci,
                q1_share,
                nq_share,
            })
        })
        .collect()
}

/// Variable names used when indicators are merged into a panel.
#[derive(Debug, Clone)]
pub struct IndicatorNames {
    pub pub_count: String,
    pub fwci: String,
    pub q1_share: String,
    pub nq_share: String,
}

impl IndicatorNames {
    /// `suffix` distinguishes alternative corpora, e.g. `"A"` for articles
    /// and reviews only.
    pub fn with_suffix(suffix: &str) -> Self {
        Self {
            pub_count: format!("PUBCOUNT{suffix}"),
            fwci: format!("FWCI{suffix}"),
            q1_share: format!("Q1SH{suffix}"),
            nq_share: format!("NQSH{suffix}"),
        }
    }
}

impl Default for IndicatorNames {
    fn default() -> Self {
        Self::with_suffix("")
    }
}

/// Lays indicator rows out as a panel over the regions and years they cover.
/// Region-years without publications are missing cells.
pub fn indicators_to_panel(rows: &[RegionYearIndicators], names: &IndicatorNames) -> Result<PanelDataset> {
    let regions: Vec<String> = rows
        .iter()
        .map(|r| r.region.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let (Some(first), Some(last)) = (rows.iter().map(|r| r.year).min(), rows.iter().map(|r| r.year).max()) else {
        return Err(PanelError::MissingData.into());
    };
    let d = PanelDataset::new(regions, (first..=last).collect())?;
    let mut cols = vec![vec![f64::NAN; d.n_obs()]; 4];
    for row in rows {
        let r = d.region_index(&row.region).expect("region collected");
        let t = d.year_index(row.year).expect("year in range");
        let i = d.index(r, t);
        cols[0][i] = row.pub_count as f64;
        cols[1][i] = row.fwci;
        cols[2][i] = row.q1_share;
        cols[3][i] = row.nq_share;
    }
    let mut cols = cols.into_iter();
    let mut next = || cols.next().expect("four columns");
    Ok(d.with_variable(names.pub_count.clone(), next())?
        .with_variable(names.fwci.clone(), next())?
        .with_variable(names.q1_share.clone(), next())?
        .with_variable(names.nq_share.clone(), next())?)
}

/// Region x subject share matrix, optionally restricted to one reference
/// year. Regions are ordered by id.
pub fn thematic_profiles(
    pubs: &[PublicationRecord],
    vocab: &SubjectVocabulary,
    year: Option<i32>,
) -> Result<ThematicProfileMatrix> {
    let mut by_region: BTreeMap<&str, Vec<&PublicationRecord>> = BTreeMap::new();
    for p in pubs.iter().filter(|p| year.is_none_or(|y| p.year == y)) {
        p.validate()?;
        for r in &p.regions {
            by_region.entry(r.as_str()).or_default().push(p);
        }
    }
    let n = by_region.len();
    let s = vocab.len();
    let mut shares = DMatrix::zeros(n, s);
    let mut regions = Vec::with_capacity(n);
    for (i, (region, records)) in by_region.into_iter().enumerate() {
        let profile =
            compute_thematic_profile(&records, vocab).map_err(|_| IndicatorError::EmptyRegion(region.to_string()))?;
        for (j, v) in profile.into_iter().enumerate() {
            shares[(i, j)] = v;
        }
        regions.push(region.to_string());
    }
    ThematicProfileMatrix::new(regions, vocab.codes().to_vec(), shares).map_err(|e| IndicatorError::InvalidRecord {
        id: "<profiles>".into(),
        reason: e.to_string(),
    })
}

/// Reads JSON-lines records (one object per line).
pub fn read_publications_jsonl<R: Read>(reader: R) -> Result<Vec<PublicationRecord>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PublicationRecord =
            serde_json::from_str(&line).map_err(|source| IndicatorError::Json { line: i + 1, source })?;
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

/// Reads CSV records with columns
/// `id,year,regions,subject_areas,citations,expected_citations,journal_quartile`;
/// list-valued cells are `;`-separated.
pub fn read_publications_csv<R: Read>(reader: R) -> Result<Vec<PublicationRecord>> {
    #[derive(Deserialize)]
    struct Row {
        id: String,
        year: i32,
        regions: String,
        subject_areas: String,
        citations: u64,
        expected_citations: f64,
        journal_quartile: String,
    }
    let split = |s: &str| -> BTreeSet<String> {
        s.split(';')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(str::to_string)
            .collect()
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        let quartiles = row
            .journal_quartile
            .split(';')
            .map(Quartile::from_str)
            .collect::<Result<Vec<_>>>()?;
        let rec = PublicationRecord {
            id: row.id,
            year: row.year,
            regions: split(&row.regions),
            subject_areas: split(&row.subject_areas),
            citations: row.citations,
            expected_citations: row.expected_citations,
            journal_quartile: Quartile::best_of(quartiles),
        };
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

/// Dispatches on extension: `.jsonl`/`.json`/`.ndjson` as JSON lines,
/// anything else as CSV.
pub fn load_publications(path: impl AsRef<Path>) -> Result<Vec<PublicationRecord>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl" | "json" | "ndjson") => read_publications_jsonl(file),
        _ => read_publications_csv(file),
    }
}
