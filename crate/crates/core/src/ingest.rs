//! CSV ingestion: parsing, kind inference, listwise deletion and
//! z-score standardization.
//!
//! Continuous columns are stored as z-scores (sample standard deviation),
//! categorical columns as integer codes `0..k-1`. The raw-scale mean and
//! standard deviation of every column are kept on its [`ColumnSpec`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::FieldHasher;

/// Columns with at most this many distinct values are categorical when the
/// values are non-numeric or integer-valued.
pub const CATEGORICAL_MAX_LEVELS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Continuous,
    Categorical,
}

impl std::str::FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "continuous" => Ok(Kind::Continuous),
            "categorical" => Ok(Kind::Categorical),
            other => Err(format!("unknown column kind `{other}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("CSV has no header row")]
    MissingHeader,
    #[error("column {0} has an empty name")]
    EmptyColumnName(usize),
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("column `{0}` has zero variance after cleaning")]
    ZeroVariance(String),
    #[error("only {0} rows survive listwise deletion, at least 2 are required")]
    TooFewRows(usize),
    #[error("column `{column}` is hinted continuous but holds non-numeric value `{value}`")]
    NotNumeric { column: String, value: String },
    #[error("schema hint names unknown column `{0}`")]
    UnknownHintColumn(String),
    #[error("no usable columns remain")]
    NoColumns,
    #[error("cannot join tables: {0}")]
    Join(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: Kind,
    /// Category labels in code order; empty for continuous columns.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    /// Raw-scale mean (codes for categorical columns).
    pub mean: f64,
    /// Raw-scale sample standard deviation (codes for categorical columns).
    pub stddev: f64,
}

/// What cleaning did to the raw table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DropReport {
    pub rows_read: usize,
    pub rows_removed: usize,
    /// Columns discarded because they could not be coded (free text).
    pub dropped_columns: Vec<String>,
    /// Columns whose kind came from a schema hint rather than inference.
    pub coerced_columns: Vec<String>,
}

/// Raw string table as read from CSV, before any typing.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, IngestError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Err(IngestError::MissingHeader);
        }
        let mut rows = Vec::new();
        for record in rdr.records() {
            rows.push(record?.iter().map(str::to_owned).collect());
        }
        Ok(RawTable { headers, rows })
    }

    pub fn from_path(path: &Path) -> Result<Self, IngestError> {
        let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    /// Appends the columns of `other` row by row. Both tables must have the
    /// same number of rows and disjoint headers.
    pub fn hstack(&self, other: &RawTable) -> Result<RawTable, IngestError> {
        if self.rows.len() != other.rows.len() {
            return Err(IngestError::Join(format!(
                "row counts differ ({} vs {})",
                self.rows.len(),
                other.rows.len()
            )));
        }
        if let Some(dup) = other.headers.iter().find(|h| self.headers.contains(h)) {
            return Err(IngestError::DuplicateColumn(dup.clone()));
        }
        let headers = self.headers.iter().chain(&other.headers).cloned().collect();
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().chain(b).cloned().collect())
            .collect();
        Ok(RawTable { headers, rows })
    }

    pub fn to_csv(&self) -> String {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        wtr.write_record(&self.headers).expect("in-memory write");
        for row in &self.rows {
            wtr.write_record(row).expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory write")).expect("utf-8 input")
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "NA"
}

/// A cleaned, typed, standardized dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub columns: Vec<ColumnSpec>,
    /// Column-major storage: `values[col][row]`.
    values: Vec<Vec<f64>>,
    pub n: usize,
    pub report: DropReport,
}

/// Reads, cleans and standardizes a CSV file.
pub fn load_csv(
    path: &Path,
    schema_hints: &BTreeMap<String, Kind>,
) -> Result<Dataset, IngestError> {
    let table = RawTable::from_path(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_owned());
    Dataset::from_table(&name, &table, schema_hints)
}

enum Typing {
    Continuous,
    Categorical(Vec<String>),
    Drop,
}

fn infer_typing(
    column: &str,
    cells: &[&str],
    hint: Option<Kind>,
) -> Result<(Typing, bool), IngestError> {
    let numeric: Option<Vec<f64>> = cells.iter().map(|c| c.parse::<f64>().ok()).collect();
    let numeric = numeric.filter(|v| v.iter().all(|x| x.is_finite()));
    let distinct: BTreeSet<&str> = cells.iter().copied().collect();

    match (hint, numeric) {
        (Some(Kind::Continuous), Some(_)) => Ok((Typing::Continuous, true)),
        (Some(Kind::Continuous), None) => {
            let value = cells
                .iter()
                .find(|c| c.parse::<f64>().is_err())
                .copied()
                .unwrap_or_default();
            Err(IngestError::NotNumeric {
                column: column.to_owned(),
                value: value.to_owned(),
            })
        }
        (Some(Kind::Categorical), Some(values)) => {
            Ok((Typing::Categorical(numeric_levels(&values)), true))
        }
        (Some(Kind::Categorical), None) => Ok((
            Typing::Categorical(distinct.into_iter().map(str::to_owned).collect()),
            true,
        )),
        (None, Some(values)) => {
            let integer = values.iter().all(|v| v.fract() == 0.0);
            let levels = numeric_levels(&values);
            if integer && levels.len() <= CATEGORICAL_MAX_LEVELS {
                Ok((Typing::Categorical(levels), false))
            } else {
                Ok((Typing::Continuous, false))
            }
        }
        (None, None) => {
            if distinct.len() <= CATEGORICAL_MAX_LEVELS {
                Ok((
                    Typing::Categorical(distinct.into_iter().map(str::to_owned).collect()),
                    false,
                ))
            } else {
                Ok((Typing::Drop, false))
            }
        }
    }
}

/// Distinct numeric values in ascending order, formatted as labels.
fn numeric_levels(values: &[f64]) -> Vec<String> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted.iter().map(|v| format!("{v}")).collect()
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

impl Dataset {
    pub fn from_reader<R: Read>(
        name: &str,
        reader: R,
        schema_hints: &BTreeMap<String, Kind>,
    ) -> Result<Dataset, IngestError> {
        Self::from_table(name, &RawTable::from_reader(reader)?, schema_hints)
    }

    pub fn from_table(
        name: &str,
        table: &RawTable,
        schema_hints: &BTreeMap<String, Kind>,
    ) -> Result<Dataset, IngestError> {
        let mut seen = BTreeSet::new();
        for (i, h) in table.headers.iter().enumerate() {
            if h.is_empty() {
                return Err(IngestError::EmptyColumnName(i));
            }
            if !seen.insert(h.as_str()) {
                return Err(IngestError::DuplicateColumn(h.clone()));
            }
        }
        if let Some(unknown) = schema_hints.keys().find(|k| !seen.contains(k.as_str())) {
            return Err(IngestError::UnknownHintColumn(unknown.clone()));
        }

        let mut report = DropReport {
            rows_read: table.rows.len(),
            ..DropReport::default()
        };

        // Decide which columns are usable before deleting rows, so a free-text
        // column with gaps does not wipe out rows for nothing.
        let mut keep = Vec::new();
        for (j, header) in table.headers.iter().enumerate() {
            let cells: Vec<&str> = table
                .rows
                .iter()
                .map(|r| r[j].as_str())
                .filter(|c| !is_missing(c))
                .collect();
            let (typing, _) = infer_typing(header, &cells, schema_hints.get(header).copied())?;
            if matches!(typing, Typing::Drop) {
                report.dropped_columns.push(header.clone());
            } else {
                keep.push(j);
            }
        }
        if keep.is_empty() {
            return Err(IngestError::NoColumns);
        }

        let rows: Vec<&Vec<String>> = table
            .rows
            .iter()
            .filter(|r| keep.iter().all(|&j| !is_missing(&r[j])))
            .collect();
        report.rows_removed = table.rows.len() - rows.len();
        if rows.len() < 2 {
            return Err(IngestError::TooFewRows(rows.len()));
        }

        let mut columns = Vec::with_capacity(keep.len());
        let mut values = Vec::with_capacity(keep.len());
        for &j in &keep {
            let header = &table.headers[j];
            let cells: Vec<&str> = rows.iter().map(|r| r[j].as_str()).collect();
            let hint = schema_hints.get(header).copied();
            let (typing, coerced) = infer_typing(header, &cells, hint)?;
            if coerced {
                report.coerced_columns.push(header.clone());
            }
            let (spec, column) = match typing {
                Typing::Continuous => {
                    let raw: Vec<f64> = cells.iter().map(|c| c.parse().unwrap()).collect();
                    let (mean, stddev) = mean_sd(&raw);
                    if !(stddev > 0.0) {
                        return Err(IngestError::ZeroVariance(header.clone()));
                    }
                    let z = raw.iter().map(|v| (v - mean) / stddev).collect();
                    let spec = ColumnSpec {
                        name: header.clone(),
                        kind: Kind::Continuous,
                        categories: Vec::new(),
                        mean,
                        stddev,
                    };
                    (spec, z)
                }
                Typing::Categorical(levels) => {
                    let codes: Vec<f64> = cells
                        .iter()
                        .map(|c| code_of(&levels, c) as f64)
                        .collect();
                    let (mean, stddev) = mean_sd(&codes);
                    if !(stddev > 0.0) {
                        return Err(IngestError::ZeroVariance(header.clone()));
                    }
                    let spec = ColumnSpec {
                        name: header.clone(),
                        kind: Kind::Categorical,
                        categories: levels,
                        mean,
                        stddev,
                    };
                    (spec, codes)
                }
                Typing::Drop => unreachable!("dropped columns were filtered above"),
            };
            columns.push(spec);
            values.push(column);
        }

        Ok(Dataset {
            name: name.to_owned(),
            columns,
            values,
            n: rows.len(),
            report,
        })
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[col][row]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Case-insensitive column lookup, used to match hypothesized variable
    /// names against uploaded data.
    pub fn column_index_ci(&self, name: &str) -> Option<usize> {
        let needle = name.trim().to_lowercase();
        self.columns
            .iter()
            .position(|c| c.name.trim().to_lowercase() == needle)
    }

    /// Raw-scale value of a cell: `z * stddev + mean` for continuous
    /// columns, the integer code for categorical ones.
    pub fn raw_value(&self, row: usize, col: usize) -> f64 {
        let spec = &self.columns[col];
        match spec.kind {
            Kind::Continuous => self.values[col][row] * spec.stddev + spec.mean,
            Kind::Categorical => self.values[col][row],
        }
    }

    /// Dataset restricted to the given columns, in the given order.
    pub fn select(&self, cols: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            columns: cols.iter().map(|&j| self.columns[j].clone()).collect(),
            values: cols.iter().map(|&j| self.values[j].clone()).collect(),
            n: self.n,
            report: self.report.clone(),
        }
    }

    /// Re-applies z-scoring to every continuous column. On an already
    /// standardized dataset this changes values only by rounding error.
    pub fn restandardized(&self) -> Dataset {
        let mut out = self.clone();
        for (spec, col) in out.columns.iter().zip(out.values.iter_mut()) {
            if spec.kind == Kind::Continuous {
                let (mean, sd) = mean_sd(col);
                for v in col.iter_mut() {
                    *v = (*v - mean) / sd;
                }
            }
        }
        out
    }

    /// Content fingerprint over column names, kinds and stored values.
    pub fn fingerprint(&self) -> String {
        let mut h = FieldHasher::new();
        for (spec, col) in self.columns.iter().zip(&self.values) {
            h.field(&spec.name);
            h.field(match spec.kind {
                Kind::Continuous => "continuous",
                Kind::Categorical => "categorical",
            });
            let bytes: Vec<u8> = col.iter().flat_map(|v| v.to_le_bytes()).collect();
            h.field(bytes);
        }
        h.finish()
    }
}

fn code_of(levels: &[String], cell: &str) -> usize {
    if let Some(i) = levels.iter().position(|l| l == cell) {
        return i;
    }
    // Numeric levels are stored in canonical float formatting ("4" for "4.0").
    let v: f64 = cell.parse().expect("numeric categorical cell");
    levels
        .iter()
        .position(|l| l.parse::<f64>().ok() == Some(v))
        .expect("cell belongs to a level")
}

/// Human-readable per-column report in column order.
pub fn summary(ds: &Dataset) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "dataset {}: n = {} ({} of {} rows removed by listwise deletion)",
        ds.name, ds.n, ds.report.rows_removed, ds.report.rows_read
    );
    let width = ds.columns.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for (j, spec) in ds.columns.iter().enumerate() {
        match spec.kind {
            Kind::Continuous => {
                let _ = writeln!(
                    out,
                    "  {:<width$}  continuous   mean={:.6} sd={:.6}",
                    spec.name, spec.mean, spec.stddev
                );
            }
            Kind::Categorical => {
                let mut counts = vec![0usize; spec.categories.len()];
                for &code in ds.column(j) {
                    counts[code as usize] += 1;
                }
                let levels: Vec<String> = spec
                    .categories
                    .iter()
                    .zip(&counts)
                    .map(|(l, c)| format!("{l}:{c}"))
                    .collect();
                let _ = writeln!(
                    out,
                    "  {:<width$}  categorical  {}",
                    spec.name,
                    levels.join(" ")
                );
            }
        }
    }
    if !ds.report.dropped_columns.is_empty() {
        let _ = writeln!(out, "  dropped columns: {}", ds.report.dropped_columns.join(", "));
    }
    if !ds.report.coerced_columns.is_empty() {
        let _ = writeln!(out, "  kinds from hints: {}", ds.report.coerced_columns.join(", "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<Dataset, IngestError> {
        Dataset::from_reader("t", text.as_bytes(), &BTreeMap::new())
    }

    #[test]
    fn constant_column_is_rejected() {
        let err = load("a,b\n1.5,2\n2.5,2\n3.5,2\n").unwrap_err();
        assert!(matches!(err, IngestError::ZeroVariance(c) if c == "b"));
    }

    #[test]
    fn duplicate_header_is_rejected() {
        let err = load("a,a\n1,2\n").unwrap_err();
        assert!(matches!(err, IngestError::DuplicateColumn(_)));
    }

    #[test]
    fn missing_cells_delete_whole_rows() {
        let ds = load("x,y\n1.5,2.25\nNA,3.5\n2.5,\n3.5,7.75\n4.5,1.0\n").unwrap();
        assert_eq!(ds.n, 3);
        assert_eq!(ds.report.rows_removed, 2);
        assert_eq!(ds.columns[0].name, "x");
        assert!((ds.raw_value(1, 0) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn too_few_rows_after_deletion() {
        let err = load("x,y\n1.5,NA\n2.5,3.5\n").unwrap_err();
        assert!(matches!(err, IngestError::TooFewRows(1)));
    }

    #[test]
    fn small_integer_and_text_columns_are_categorical() {
        let ds = load("c,o,v\n4,US,1.5\n6,EU,2.5\n4,JP,0.5\n8,US,3.25\n").unwrap();
        assert_eq!(ds.columns[0].kind, Kind::Categorical);
        assert_eq!(ds.columns[0].categories, vec!["4", "6", "8"]);
        assert_eq!(ds.column(0), &[0.0, 1.0, 0.0, 2.0]);
        assert_eq!(ds.columns[1].categories, vec!["EU", "JP", "US"]);
        assert_eq!(ds.columns[2].kind, Kind::Continuous);
    }

    #[test]
    fn hints_override_inference() {
        let mut hints = BTreeMap::new();
        hints.insert("c".to_owned(), Kind::Continuous);
        let ds = Dataset::from_reader("t", "c,v\n4,1.5\n6,2.5\n5,0.5\n".as_bytes(), &hints).unwrap();
        assert_eq!(ds.columns[0].kind, Kind::Continuous);
        assert_eq!(ds.report.coerced_columns, vec!["c"]);

        hints.insert("zz".to_owned(), Kind::Continuous);
        let err = Dataset::from_reader("t", "c,v\n4,1.5\n6,2.5\n".as_bytes(), &hints).unwrap_err();
        assert!(matches!(err, IngestError::UnknownHintColumn(_)));
    }

    #[test]
    fn free_text_column_is_dropped() {
        let mut text = String::from("name,v\n");
        for i in 0..12 {
            text.push_str(&format!("car {i},{}.5\n", i));
        }
        let ds = load(&text).unwrap();
        assert_eq!(ds.n_cols(), 1);
        assert_eq!(ds.report.dropped_columns, vec!["name"]);
    }

    #[test]
    fn summary_omits_categories_for_continuous() {
        let ds = load("x,y\n1.5,2.25\n2.5,3.5\n3.5,7.75\n").unwrap();
        let report = summary(&ds);
        assert!(report.contains("n = 3"));
        assert_eq!(report.matches("continuous").count(), 2);
        assert!(!report.contains(':') || !report.contains("categorical"));
    }

    #[test]
    fn hstack_requires_equal_rows() {
        let a = RawTable::from_reader("x\n1\n2\n".as_bytes()).unwrap();
        let b = RawTable::from_reader("y\n1\n".as_bytes()).unwrap();
        assert!(a.hstack(&b).is_err());
        let c = RawTable::from_reader("y\n3\n4\n".as_bytes()).unwrap();
        let joined = a.hstack(&c).unwrap();
        assert_eq!(joined.to_csv(), "x,y\n1,3\n2,4\n");
    }
}
