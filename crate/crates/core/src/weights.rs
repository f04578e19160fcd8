//! Thematic-proximity spatial weights.
//!
//! Regions are compared by the Pearson correlation of their subject-area
//! share profiles. The weights matrix keeps only positive correlations, has a
//! zero diagonal and is row-standardized. A region with no positively
//! correlated peer has an all-zero row and is reported as isolated.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fmt::format_f64;
use crate::panel::{PanelDataset, PanelError};

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("degenerate dimensions: {0}")]
    DegenerateDimensions(String),
    #[error("weights regions do not match the panel's region order")]
    RegionOrderMismatch,
    #[error("invalid profile matrix: {0}")]
    InvalidProfiles(String),
    #[error("invalid weights matrix: {0}")]
    InvalidWeights(String),
    #[error("bad number {value:?} at row {row}, column {column}")]
    BadNumber { row: usize, column: usize, value: String },
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = WeightsError> = std::result::Result<T, E>;

const ROW_SUM_TOL: f64 = 1e-9;

/// Region x subject-area share matrix (each row sums to one).
#[derive(Debug, Clone, PartialEq)]
pub struct ThematicProfileMatrix {
    regions: Vec<String>,
    subject_areas: Vec<String>,
    shares: DMatrix<f64>,
}

impl ThematicProfileMatrix {
    pub fn new(regions: Vec<String>, subject_areas: Vec<String>, shares: DMatrix<f64>) -> Result<Self> {
        if shares.nrows() != regions.len() || shares.ncols() != subject_areas.len() {
            return Err(WeightsError::InvalidProfiles(format!(
                "{}x{} shares for {} regions and {} subject areas",
                shares.nrows(),
                shares.ncols(),
                regions.len(),
                subject_areas.len()
            )));
        }
        for (i, row) in shares.row_iter().enumerate() {
            if row.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(WeightsError::InvalidProfiles(format!(
                    "negative or non-finite share for `{}`",
                    regions[i]
                )));
            }
            let sum = row.sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(WeightsError::InvalidProfiles(format!(
                    "shares for `{}` sum to {sum}",
                    regions[i]
                )));
            }
        }
        Ok(Self {
            regions,
            subject_areas,
            shares,
        })
    }

    pub fn regions(&self) -> &[String] {
        &self.regions
    }

    pub fn subject_areas(&self) -> &[String] {
        &self.subject_areas
    }

    pub fn shares(&self) -> &DMatrix<f64> {
        &self.shares
    }

    /// Reads `region,<area1>,<area2>,...` with one row per region.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let (header, regions, values) = read_labelled_matrix(reader)?;
        Self::new(regions, header, values)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_labelled_matrix(writer, &self.subject_areas, &self.regions, &self.shares)
    }

    /// Pearson correlation between region profiles.
    pub fn correlation(&self) -> Result<CorrelationMatrix> {
        correlation_matrix(self)
    }
}

/// Symmetric region x region correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub regions: Vec<String>,
    pub values: DMatrix<f64>,
}

/// Pearson correlation of the rows of `m`.
///
/// Rows with zero variance have no defined correlation; they are given 0
/// against every other row (and on the diagonal), i.e. treated as neutral.
pub fn row_correlations(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, s) = m.shape();
    if n < 2 || s < 2 {
        return Err(WeightsError::DegenerateDimensions(format!(
            "need at least 2 regions and 2 subject areas, got {n}x{s}"
        )));
    }
    let centred: Vec<Vec<f64>> = m
        .row_iter()
        .map(|row| {
            let mean = row.sum() / s as f64;
            row.iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<Option<f64>> = centred
        .iter()
        .zip(m.row_iter())
        .map(|(c, raw)| {
            let ss: f64 = c.iter().map(|v| v * v).sum();
            let scale = raw.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            // deviations at rounding level count as zero variance
            let floor = 64.0 * f64::EPSILON * scale;
            (ss.sqrt() > floor * (s as f64).sqrt()).then(|| ss.sqrt())
        })
        .collect();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        let Some(ni) = norms[i] else { continue };
        c[(i, i)] = 1.0;
        for j in i + 1..n {
            let Some(nj) = norms[j] else { continue };
            let dot: f64 = centred[i].iter().zip(&centred[j]).map(|(a, b)| a * b).sum();
            let r = (dot / (ni * nj)).clamp(-1.0, 1.0);
            c[(i, j)] = r;
            c[(j, i)] = r;
        }
    }
    Ok(c)
}

pub fn correlation_matrix(m: &ThematicProfileMatrix) -> Result<CorrelationMatrix> {
    Ok(CorrelationMatrix {
        regions: m.regions.clone(),
        values: row_correlations(&m.shares)?,
    })
}

/// Row-standardized nonnegative weights with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeights {
    regions: Vec<String>,
    w: DMatrix<f64>,
    isolated: BTreeSet<usize>,
}

/// Zero the diagonal, clamp negatives to zero, then divide each row by its
/// sum. All-zero rows stay zero and are recorded as isolated.
pub fn build_weights(c: &CorrelationMatrix) -> SpatialWeights {
    let n = c.values.nrows();
    let mut w = c.values.clone();
    for i in 0..n {
        w[(i, i)] = 0.0;
    }
    w.apply(|v| {
        if *v < 0.0 {
            *v = 0.0;
        }
    });
    let mut isolated = BTreeSet::new();
    for i in 0..n {
        let sum = w.row(i).sum();
        if sum > 0.0 {
            w.row_mut(i).unscale_mut(sum);
        } else {
            isolated.insert(i);
        }
    }
    SpatialWeights {
        regions: c.regions.clone(),
        w,
        isolated,
    }
}

#[derive(Serialize, Deserialize)]
struct WeightsJson {
    regions: Vec<String>,
    weights: Vec<Vec<f64>>,
    isolated: Vec<String>,
}

impl SpatialWeights {
    /// Validates an externally supplied matrix against the weights invariants.
    pub fn from_matrix(regions: Vec<String>, w: DMatrix<f64>) -> Result<Self> {
        let n = regions.len();
        if w.shape() != (n, n) {
            return Err(WeightsError::InvalidWeights(format!(
                "{}x{} matrix for {n} regions",
                w.nrows(),
                w.ncols()
            )));
        }
        let mut isolated = BTreeSet::new();
        for i in 0..n {
            if w[(i, i)] != 0.0 {
                return Err(WeightsError::InvalidWeights(format!(
                    "nonzero diagonal for `{}`",
                    regions[i]
                )));
            }
            let row = w.row(i);
            if row.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(WeightsError::InvalidWeights(format!(
                    "negative or non-finite weight in row `{}`",
                    regions[i]
                )));
            }
            let sum = row.sum();
            if sum == 0.0 {
                isolated.insert(i);
            } else if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(WeightsError::InvalidWeights(format!(
                    "row `{}` sums to {sum}",
                    regions[i]
                )));
            }
        }
        Ok(Self { regions, w, isolated })
    }

    pub fn regions(&self) -> &[String] {
        &self.regions
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn isolated(&self) -> &BTreeSet<usize> {
        &self.isolated
    }

    pub fn isolated_regions(&self) -> Vec<&str> {
        self.isolated.iter().map(|&i| self.regions[i].as_str()).collect()
    }

    pub fn n(&self) -> usize {
        self.regions.len()
    }

    /// Dense CSV: header `region,<r1>,...`, then one row per region.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_labelled_matrix(writer, &self.regions, &self.regions, &self.w)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let (header, regions, w) = read_labelled_matrix(reader)?;
        if header != regions {
            return Err(WeightsError::InvalidWeights(
                "column labels differ from row labels".into(),
            ));
        }
        Self::from_matrix(regions, w)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = WeightsJson {
            regions: self.regions.clone(),
            weights: self.w.row_iter().map(|r| r.iter().copied().collect()).collect(),
            isolated: self.isolated_regions().into_iter().map(str::to_string).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: WeightsJson = serde_json::from_str(s)?;
        let n = doc.regions.len();
        if doc.weights.len() != n || doc.weights.iter().any(|r| r.len() != n) {
            return Err(WeightsError::InvalidWeights("matrix is not n x n".into()));
        }
        let w = DMatrix::from_fn(n, n, |i, j| doc.weights[i][j]);
        let out = Self::from_matrix(doc.regions, w)?;
        let listed: BTreeSet<&str> = doc.isolated.iter().map(String::as_str).collect();
        let found: BTreeSet<&str> = out.isolated_regions().into_iter().collect();
        if listed != found {
            return Err(WeightsError::InvalidWeights(
                "isolated list disagrees with zero rows".into(),
            ));
        }
        Ok(out)
    }

    /// Loads `.json` as JSON and anything else as CSV.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            Self::from_json(&std::fs::read_to_string(path)?)
        } else {
            Self::read_csv(File::open(path)?)
        }
    }
}

/// Spatial lag `out[r,t] = sum_j w[r,j] x[j,t]`.
pub fn spatial_lag(w: &SpatialWeights, d: &PanelDataset, x: &str, out: &str) -> Result<PanelDataset> {
    let values = lag_values(w, d, x)?;
    Ok(d.clone().with_variable(out, values)?)
}

/// The lagged values without attaching them to the dataset.
pub fn lag_values(w: &SpatialWeights, d: &PanelDataset, x: &str) -> Result<Vec<f64>> {
    if w.regions() != d.region_ids() {
        return Err(WeightsError::RegionOrderMismatch);
    }
    let src = d.variable(x)?;
    let (n, t_len) = (d.n_regions(), d.n_years());
    let mut values = vec![0.0; d.n_obs()];
    for r in 0..n {
        if w.isolated.contains(&r) {
            continue;
        }
        for t in 0..t_len {
            let mut acc = 0.0;
            for j in 0..n {
                let wij = w.w[(r, j)];
                if wij != 0.0 {
                    acc += wij * src[d.index(j, t)];
                }
            }
            values[d.index(r, t)] = acc;
        }
    }
    Ok(values)
}

fn write_labelled_matrix<W: Write>(writer: W, columns: &[String], rows: &[String], m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let mut header = vec!["region".to_string()];
    header.extend(columns.iter().cloned());
    w.write_record(&header)?;
    for (i, label) in rows.iter().enumerate() {
        let mut rec = vec![label.clone()];
        rec.extend(m.row(i).iter().map(|v| format_f64(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn read_labelled_matrix<R: Read>(reader: R) -> Result<(Vec<String>, Vec<String>, DMatrix<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
    let mut labels = Vec::new();
    let mut data = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        labels.push(rec.get(0).unwrap_or_default().to_string());
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let v: f64 = cell.parse().map_err(|_| WeightsError::BadNumber {
                row: i + 1,
                column: j + 1,
                value: cell.to_string(),
            })?;
            data.push(v);
        }
    }
    let m = DMatrix::from_row_slice(labels.len(), header.len(), &data);
    Ok((header, labels, m))
}
