//! Datasets, column roles, standardization and CSV ingestion.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    /// Compared by exact equality only; expected to be integer coded.
    Discrete,
}

/// A block of covariates stored row-major, with one [`ColumnKind`] per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariates {
    values: Vec<f64>,
    kinds: Vec<ColumnKind>,
    names: Vec<String>,
}

impl Covariates {
    /// Builds a block from row-major values. `values.len()` must be a
    /// multiple of `kinds.len()`.
    pub fn new(values: Vec<f64>, kinds: Vec<ColumnKind>, names: Vec<String>) -> Result<Self> {
        if names.len() != kinds.len() {
            return Err(Error::InvalidData(format!(
                "{} column names for {} columns",
                names.len(),
                kinds.len()
            )));
        }
        if kinds.is_empty() && !values.is_empty() {
            return Err(Error::InvalidData("values given for an empty block".into()));
        }
        if !kinds.is_empty() && values.len() % kinds.len() != 0 {
            return Err(Error::InvalidData(format!(
                "{} values do not fill rows of width {}",
                values.len(),
                kinds.len()
            )));
        }
        Ok(Self {
            values,
            kinds,
            names,
        })
    }

    /// A block with no columns (used for `q = 0`).
    pub fn empty() -> Self {
        Self {
            values: Vec::new(),
            kinds: Vec::new(),
            names: Vec::new(),
        }
    }

    /// Builds a block from columns with default names `{prefix}1, {prefix}2, ...`.
    pub fn from_columns(prefix: &str, columns: &[Vec<f64>], kinds: &[ColumnKind]) -> Result<Self> {
        if columns.len() != kinds.len() {
            return Err(Error::InvalidData("one kind per column required".into()));
        }
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidData("columns of unequal length".into()));
        }
        let width = columns.len();
        let mut values = vec![0.0; n * width];
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                values[i * width + j] = *v;
            }
        }
        let names = (1..=width).map(|j| format!("{prefix}{j}")).collect();
        Self::new(values, kinds.to_vec(), names)
    }

    pub fn width(&self) -> usize {
        self.kinds.len()
    }

    fn rows_hint(&self) -> Option<usize> {
        (self.width() > 0).then(|| self.values.len() / self.width())
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        let w = self.width();
        self.values.iter().skip(j).step_by(w).copied().collect()
    }

    pub fn kinds(&self) -> &[ColumnKind] {
        &self.kinds
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn continuous_count(&self) -> usize {
        self.kinds
            .iter()
            .filter(|k| **k == ColumnKind::Continuous)
            .count()
    }
}

/// Response `y`, null-hypothesis covariates `w` and covariates under test `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    y_name: String,
    w: Covariates,
    x: Covariates,
}

impl Dataset {
    /// Validates shapes and finiteness. `w` needs at least one column;
    /// `x` may be empty.
    pub fn new(y: Vec<f64>, w: Covariates, x: Covariates) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::InvalidData("no observations".into()));
        }
        if w.width() == 0 {
            return Err(Error::InvalidData("at least one W column is required".into()));
        }
        for (block, label) in [(&w, "W"), (&x, "X")] {
            if let Some(rows) = block.rows_hint() {
                if rows != n {
                    return Err(Error::InvalidData(format!(
                        "{label} has {rows} rows but y has {n}"
                    )));
                }
            }
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::BadCell {
                row: i + 1,
                column: "y".into(),
                reason: "non-finite value".into(),
            });
        }
        for block in [&w, &x] {
            if let Some(pos) = block.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::BadCell {
                    row: pos / block.width() + 1,
                    column: block.names[pos % block.width()].clone(),
                    reason: "non-finite value".into(),
                });
            }
        }
        Ok(Self {
            y,
            y_name: "y".into(),
            w,
            x,
        })
    }

    pub fn with_response_name(mut self, name: impl Into<String>) -> Self {
        self.y_name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.w.width()
    }

    /// Number of continuous W columns; the bandwidth power used in `h^{p/2}`.
    pub fn p_c(&self) -> usize {
        self.w.continuous_count()
    }

    pub fn q(&self) -> usize {
        self.x.width()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn y_name(&self) -> &str {
        &self.y_name
    }

    pub fn w(&self) -> &Covariates {
        &self.w
    }

    pub fn x(&self) -> &Covariates {
        &self.x
    }

    /// Same covariates, different response.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::InvalidData("response length mismatch".into()));
        }
        let mut out = Self::new(y, self.w.clone(), self.x.clone())?;
        out.y_name = self.y_name.clone();
        Ok(out)
    }

    /// Reorders observations: row `i` of the result is row `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::InvalidParameter("not a permutation".into()));
        }
        let pick = |block: &Covariates| {
            let values = perm.iter().flat_map(|&i| block.row(i).iter().copied()).collect();
            Covariates::new(values, block.kinds.clone(), block.names.clone())
        };
        let y = perm.iter().map(|&i| self.y[i]).collect();
        let mut out = Self::new(y, pick(&self.w)?, pick(&self.x)?)?;
        out.y_name = self.y_name.clone();
        Ok(out)
    }
}

/// Role assignment for a named column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnSpec {
    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Continuous,
        }
    }

    pub fn discrete(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Discrete,
        }
    }
}

/// Which file columns play the roles Y, W and X.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub y: String,
    pub w: Vec<ColumnSpec>,
    pub x: Vec<ColumnSpec>,
}

impl Schema {
    pub fn validate(&self) -> Result<()> {
        let mut names: Vec<&str> = std::iter::once(self.y.as_str())
            .chain(self.w.iter().map(|c| c.name.as_str()))
            .chain(self.x.iter().map(|c| c.name.as_str()))
            .collect();
        names.sort_unstable();
        if let Some(pair) = names.windows(2).find(|p| p[0] == p[1]) {
            return Err(Error::DuplicateColumn(pair[0].to_string()));
        }
        if self.w.is_empty() {
            return Err(Error::InvalidData("schema names no W column".into()));
        }
        Ok(())
    }
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_dataset(file, schema)
}

/// Parses a comma-separated table with a header row.
pub fn read_dataset<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index_of = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let y_idx = index_of(&schema.y)?;
    let w_idx: Vec<usize> = schema.w.iter().map(|c| index_of(&c.name)).collect::<Result<_>>()?;
    let x_idx: Vec<usize> = schema.x.iter().map(|c| index_of(&c.name)).collect::<Result<_>>()?;

    let mut y = Vec::new();
    let mut w = Vec::new();
    let mut x = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let cell = |idx: usize| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            let column = headers[idx].to_string();
            let v: f64 = raw.parse().map_err(|_| Error::BadCell {
                row,
                column: column.clone(),
                reason: format!("cannot parse `{raw}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::BadCell {
                    row,
                    column,
                    reason: format!("non-finite value `{raw}`"),
                });
            }
            Ok(v)
        };
        y.push(cell(y_idx)?);
        for &j in &w_idx {
            w.push(cell(j)?);
        }
        for &j in &x_idx {
            x.push(cell(j)?);
        }
    }
    let block = |values: Vec<f64>, specs: &[ColumnSpec]| {
        Covariates::new(
            values,
            specs.iter().map(|c| c.kind).collect(),
            specs.iter().map(|c| c.name.clone()).collect(),
        )
    };
    let w = block(w, &schema.w)?;
    let x = block(x, &schema.x)?;
    Ok(Dataset::new(y, w, x)?.with_response_name(schema.y.clone()))
}

/// Writes `y, W..., X...` with a header. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_dataset<W: Write>(d: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let header: Vec<&str> = std::iter::once(d.y_name())
        .chain(d.w().names().iter().map(String::as_str))
        .chain(d.x().names().iter().map(String::as_str))
        .collect();
    wtr.write_record(&header)?;
    for i in 0..d.n() {
        let row: Vec<String> = std::iter::once(d.y()[i])
            .chain(d.w().row(i).iter().copied())
            .chain(d.x().row(i).iter().copied())
            .map(|v| format!("{v}"))
            .collect();
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|source| Error::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

/// The schema matching what [`write_dataset`] emits for `d`.
pub fn schema_of(d: &Dataset) -> Schema {
    let specs = |block: &Covariates| {
        block
            .names()
            .iter()
            .zip(block.kinds())
            .map(|(name, kind)| ColumnSpec {
                name: name.clone(),
                kind: *kind,
            })
            .collect()
    };
    Schema {
        y: d.y_name().to_string(),
        w: specs(d.w()),
        x: specs(d.x()),
    }
}

/// A dataset whose continuous covariates have unit sample standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledDataset {
    dataset: Dataset,
    w_scales: Vec<f64>,
    x_scales: Vec<f64>,
}

impl ScaledDataset {
    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    /// Standard deviations the W columns were divided by (1 for discrete).
    pub fn w_scales(&self) -> &[f64] {
        &self.w_scales
    }

    pub fn x_scales(&self) -> &[f64] {
        &self.x_scales
    }

    pub fn n(&self) -> usize {
        self.dataset.n()
    }

    /// Replaces the response, keeping the scaled covariates.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        Ok(Self {
            dataset: self.dataset.with_response(y)?,
            w_scales: self.w_scales.clone(),
            x_scales: self.x_scales.clone(),
        })
    }
}

/// Sample standard deviation with the `n - 1` denominator.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

fn scale_block(block: &Covariates) -> Result<(Covariates, Vec<f64>)> {
    let width = block.width();
    let mut scales = vec![1.0; width];
    for (j, kind) in block.kinds().iter().enumerate() {
        if *kind == ColumnKind::Continuous {
            let sd = sample_sd(&block.column(j));
            if !(sd > 0.0) || !sd.is_finite() {
                return Err(Error::ZeroVariance(block.names()[j].clone()));
            }
            scales[j] = sd;
        }
    }
    let values = block
        .values()
        .iter()
        .enumerate()
        .map(|(pos, v)| v / scales[pos % width])
        .collect();
    Ok((
        Covariates::new(values, block.kinds().to_vec(), block.names().to_vec())?,
        scales,
    ))
}

/// Divides every continuous covariate column by its sample standard
/// deviation. Discrete columns and the response are left as they are.
pub fn standardize(d: &Dataset) -> Result<ScaledDataset> {
    if d.n() < 2 && (d.p_c() > 0 || d.x().continuous_count() > 0) {
        return Err(Error::TooFewObservations {
            what: "standardization",
            min: 2,
            n: d.n(),
        });
    }
    let (w, w_scales) = scale_block(d.w())?;
    let (x, x_scales) = scale_block(d.x())?;
    let dataset = Dataset::new(d.y().to_vec(), w, x)?.with_response_name(d.y_name());
    Ok(ScaledDataset {
        dataset,
        w_scales,
        x_scales,
    })
}
