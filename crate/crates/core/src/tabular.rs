//! Feature matrices with a binary close-time class and per-row project provenance.
//!
//! The canonical interchange format is CSV: one header row, one numeric column
//! per feature, a `project` column carrying provenance and a `timeOpenClass`
//! column holding `le` (closed within the threshold) or `gt`.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CLASS_COLUMN: &str = "timeOpenClass";
pub const PROJECT_COLUMN: &str = "project";

/// Binary close-time class. `Le` ("closes within the threshold") is the
/// positive class throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Le,
    Gt,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Le
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Le => "le",
            Label::Gt => "gt",
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Label::Le => 0,
            Label::Gt => 1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "le" => Ok(Label::Le),
            "gt" => Ok(Label::Gt),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureColumn {
    name: String,
    values: Vec<f64>,
}

impl FeatureColumn {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { column: name, row });
        }
        Ok(FeatureColumn { name, values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Immutable feature matrix plus class labels and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    columns: Vec<FeatureColumn>,
    labels: Vec<Label>,
    provenance: Vec<String>,
}

impl Dataset {
    pub fn new(
        columns: Vec<FeatureColumn>,
        labels: Vec<Label>,
        provenance: Vec<String>,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let n = labels.len();
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
            if c.values.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: c.values.len(),
                });
            }
        }
        if provenance.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: provenance.len(),
            });
        }
        Ok(Dataset {
            columns,
            labels,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&FeatureColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col].values[row]
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let columns = self
            .columns
            .iter()
            .map(|c| FeatureColumn {
                name: c.name.clone(),
                values: indices.iter().map(|&i| c.values[i]).collect(),
            })
            .collect();
        Dataset::new(
            columns,
            indices.iter().map(|&i| self.labels[i]).collect(),
            indices
                .iter()
                .map(|&i| self.provenance[i].clone())
                .collect(),
        )
    }

    /// Same features, different labels. Used when re-labeling for shuffles.
    pub fn with_labels(&self, labels: Vec<Label>) -> Result<Self> {
        Dataset::new(self.columns.clone(), labels, self.provenance.clone())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.feature_names();
        header.push(PROJECT_COLUMN);
        header.push(CLASS_COLUMN);
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for row in 0..self.len() {
            record.clear();
            record.extend(self.columns.iter().map(|c| c.values[row].to_string()));
            record.push(self.provenance[row].clone());
            record.push(self.labels[row].as_str().to_string());
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Which columns of a CSV carry the class and provenance.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub class_column: String,
    /// Used when the file has no provenance column.
    pub default_project: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            class_column: CLASS_COLUMN.to_string(),
            default_project: "unknown".to_string(),
        }
    }
}

/// Loads a labeled CSV. Provenance defaults to the file stem when the file has
/// no `project` column.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let schema = CsvSchema {
        default_project: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "unknown".into()),
        ..CsvSchema::default()
    };
    load_csv_with(path, &schema)
}

pub fn load_csv_with(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), schema)
        .map_err(|e| e.context(path.display().to_string()))
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.iter().any(String::is_empty) {
        return Err(Error::MalformedHeader("empty column name".into()));
    }
    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(Error::MalformedHeader(format!("duplicate column {h:?}")));
        }
    }
    let class_idx = header
        .iter()
        .position(|h| *h == schema.class_column)
        .ok_or_else(|| {
            Error::MalformedHeader(format!("no class column {:?}", schema.class_column))
        })?;
    let project_idx = header.iter().position(|h| h == PROJECT_COLUMN);
    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|&i| i != class_idx && Some(i) != project_idx)
        .collect();

    let mut values: Vec<Vec<f64>> = vec![Vec::new(); feature_idx.len()];
    let mut labels = Vec::new();
    let mut provenance = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based data row numbering, header excluded
        let row = row + 1;
        for (slot, &col) in feature_idx.iter().enumerate() {
            let cell = record.get(col).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| Error::BadCell {
                row,
                column: header[col].clone(),
                reason: format!("not a number: {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::BadCell {
                    row,
                    column: header[col].clone(),
                    reason: format!("non-finite value {cell:?}"),
                });
            }
            values[slot].push(v);
        }
        let raw = record.get(class_idx).unwrap_or("");
        let label = raw
            .parse::<Label>()
            .map_err(|value| Error::UnknownLabel { row, value })?;
        labels.push(label);
        provenance.push(match project_idx {
            Some(p) => record.get(p).unwrap_or("").trim().to_string(),
            None => schema.default_project.clone(),
        });
    }
    let columns = feature_idx
        .iter()
        .zip(values)
        .map(|(&i, v)| FeatureColumn {
            name: header[i].clone(),
            values: v,
        })
        .collect();
    Dataset::new(columns, labels, provenance)
}

/// Keeps exactly the named columns, in their original order.
pub fn project(dataset: &Dataset, keep: &[&str]) -> Result<Dataset> {
    if keep.is_empty() {
        return Err(Error::Empty("column selection"));
    }
    for name in keep {
        if dataset.column(name).is_none() {
            return Err(Error::UnknownColumn((*name).to_string()));
        }
    }
    let columns = dataset
        .columns
        .iter()
        .filter(|c| keep.contains(&c.name.as_str()))
        .cloned()
        .collect();
    Dataset::new(columns, dataset.labels.clone(), dataset.provenance.clone())
}

/// Returns `(positives, negatives)`.
pub fn class_counts(dataset: &Dataset) -> Result<(usize, usize)> {
    count_labels(dataset.labels())
}

pub fn count_labels(labels: &[Label]) -> Result<(usize, usize)> {
    if labels.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let pos = labels.iter().filter(|l| l.is_positive()).count();
    Ok((pos, labels.len() - pos))
}

/// Confusion counts with `Le` as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn new(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        ConfusionCounts { tp, fp, tn, fn_ }
    }

    pub fn from_predictions(actual: &[Label], predicted: &[Label]) -> Result<Self> {
        if actual.len() != predicted.len() {
            return Err(Error::LengthMismatch {
                expected: actual.len(),
                found: predicted.len(),
            });
        }
        let mut c = ConfusionCounts::default();
        for (&a, &p) in actual.iter().zip(predicted) {
            c.record(a, p);
        }
        Ok(c)
    }

    pub fn record(&mut self, actual: Label, predicted: Label) {
        match (actual.is_positive(), predicted.is_positive()) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

impl std::ops::AddAssign for ConfusionCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.tn += rhs.tn;
        self.fn_ += rhs.fn_;
    }
}
