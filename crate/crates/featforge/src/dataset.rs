//! Tabular data model: CSV ingestion, train/test splitting, interaction
//! encoding, and feature removal.
//!
//! A [`Dataset`] is immutable after construction; every operation returns a
//! new dataset. All cell values must be finite; missing or non-numeric data
//! is rejected at ingestion.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::seeding;

/// Errors raised by dataset construction and manipulation.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("target column {0:?} not found in header")]
    MissingTarget(String),
    #[error("duplicate column name {0:?} in header")]
    DuplicateHeader(String),
    #[error("non-numeric cell {value:?} at row {row}, column {column:?}")]
    NonNumericCell { row: usize, column: String, value: String },
    #[error("non-finite cell at row {row}, column {column:?}")]
    NonFiniteCell { row: usize, column: String },
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("duplicate feature name {0:?}")]
    DuplicateFeature(String),
    #[error("an interaction needs at least 2 distinct constituents, got {0}")]
    TooFewConstituents(usize),
    #[error("operation would leave the dataset with no features")]
    NoFeaturesLeft,
    #[error("train_count {train_count} must be in 1..{rows} (total rows)")]
    BadTrainCount { train_count: usize, rows: usize },
    #[error("row count mismatch: values have {values} rows, target has {target}")]
    RowCountMismatch { values: usize, target: usize },
    #[error("descriptor count {descriptors} does not match column count {columns}")]
    ColumnCountMismatch { descriptors: usize, columns: usize },
}

/// Where a feature column came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureOrigin {
    /// Present in the source data.
    Raw,
    /// Element-wise product of the named constituent columns.
    Interaction(Vec<String>),
}

/// Name, optional unit, and provenance of one feature column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    pub origin: FeatureOrigin,
}

impl FeatureDescriptor {
    pub fn raw(name: impl Into<String>) -> Self {
        Self { name: name.into(), unit: None, origin: FeatureOrigin::Raw }
    }

    pub fn interaction(name: impl Into<String>, constituents: Vec<String>) -> Self {
        Self { name: name.into(), unit: None, origin: FeatureOrigin::Interaction(constituents) }
    }
}

/// Deterministic train/test split: a seeded uniform permutation split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_count: usize,
    pub seed: u64,
}

/// Stream tag for the split permutation, see [`crate::seeding::rng_for`].
const SPLIT_TAG: u64 = 0x5311;

/// Per-feature mean and standard deviation, used for perturbation sampling
/// and input standardization.
///
/// Standard deviations are population deviations; a column with (numerically)
/// zero variance gets std clamped to 1 so standardized coordinates stay finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureStats {
    pub fn of(values: &Matrix) -> Self {
        let (n, d) = (values.n_rows(), values.n_cols());
        let mut mean = vec![0.0; d];
        let mut std = vec![1.0; d];
        if n == 0 {
            return Self { mean, std };
        }
        for row in values.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        for (j, s) in std.iter_mut().enumerate() {
            let mut var = 0.0;
            for i in 0..n {
                let c = values.get(i, j) - mean[j];
                var += c * c;
            }
            let sd = (var / n as f64).sqrt();
            // Constant columns (and numerically-constant ones) clamp to 1.
            *s = if sd > 1e-12 * mean[j].abs().max(1.0) { sd } else { 1.0 };
        }
        Self { mean, std }
    }

    pub fn standardize(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(self.mean.iter().zip(&self.std)).map(|(v, (m, s))| (v - m) / s).collect()
    }
}

/// Immutable numeric table with named feature columns and one target column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<FeatureDescriptor>,
    values: Matrix,
    target_name: String,
    target: Vec<f64>,
}

impl Dataset {
    /// Validates invariants: unique names, finite values, consistent shapes.
    pub fn new(
        features: Vec<FeatureDescriptor>,
        values: Matrix,
        target_name: impl Into<String>,
        target: Vec<f64>,
    ) -> Result<Self, DataError> {
        let target_name = target_name.into();
        if values.n_cols() != features.len() {
            return Err(DataError::ColumnCountMismatch {
                descriptors: features.len(),
                columns: values.n_cols(),
            });
        }
        if values.n_rows() != target.len() {
            return Err(DataError::RowCountMismatch {
                values: values.n_rows(),
                target: target.len(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for f in &features {
            if !seen.insert(f.name.as_str()) {
                return Err(DataError::DuplicateFeature(f.name.clone()));
            }
            if let FeatureOrigin::Interaction(c) = &f.origin {
                if c.len() < 2 {
                    return Err(DataError::TooFewConstituents(c.len()));
                }
            }
        }
        if seen.contains(target_name.as_str()) {
            return Err(DataError::DuplicateFeature(target_name));
        }
        for (i, row) in values.rows().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(DataError::NonFiniteCell {
                        row: i + 1,
                        column: features[j].name.clone(),
                    });
                }
            }
        }
        if let Some(i) = target.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFiniteCell { row: i + 1, column: target_name });
        }
        Ok(Self { features, values, target_name, target })
    }

    pub fn n_rows(&self) -> usize {
        self.values.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn descriptors(&self) -> &[FeatureDescriptor] {
        &self.features
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j)
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn stats(&self) -> FeatureStats {
        FeatureStats::of(&self.values)
    }

    /// Loads a comma-separated file with a header row; every non-target
    /// column becomes a raw feature, in file order.
    pub fn load_csv(path: impl AsRef<Path>, target_name: &str) -> Result<Self, DataError> {
        let file = File::open(path.as_ref())?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(BufReader::new(file));

        let mut records = reader.records();
        let header = match records.next() {
            Some(rec) => rec?,
            None => return Err(DataError::MissingTarget(target_name.to_string())),
        };
        let names: Vec<String> = header.iter().map(str::to_string).collect();
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(DataError::DuplicateHeader(n.clone()));
            }
        }
        let target_idx = names
            .iter()
            .position(|n| n == target_name)
            .ok_or_else(|| DataError::MissingTarget(target_name.to_string()))?;

        let mut data = Vec::new();
        let mut target = Vec::new();
        let mut n_rows = 0usize;
        for (row_idx, rec) in records.enumerate() {
            let rec = rec?;
            n_rows += 1;
            for (col, cell) in rec.iter().enumerate() {
                let v: f64 = cell.parse().map_err(|_| DataError::NonNumericCell {
                    row: row_idx + 1,
                    column: names[col].clone(),
                    value: cell.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(DataError::NonFiniteCell {
                        row: row_idx + 1,
                        column: names[col].clone(),
                    });
                }
                if col == target_idx {
                    target.push(v);
                } else {
                    data.push(v);
                }
            }
        }
        let features: Vec<FeatureDescriptor> = names
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != target_idx)
            .map(|(_, n)| FeatureDescriptor::raw(n.clone()))
            .collect();
        let values = Matrix::from_flat(n_rows, features.len(), data);
        Dataset::new(features, values, target_name, target)
    }

    /// Writes the dataset as CSV: feature columns in order, target last.
    /// Values are written with 17 significant digits so reloading
    /// reproduces them bit-for-bit.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let file = File::create(path.as_ref())?;
        let mut out = BufWriter::new(file);
        let mut header = self.feature_names().join(",");
        if !header.is_empty() {
            header.push(',');
        }
        header.push_str(&self.target_name);
        writeln!(out, "{header}")?;
        let mut line = String::new();
        for (i, row) in self.values.rows().enumerate() {
            line.clear();
            for v in row {
                let _ = write!(line, "{v:.16e},");
            }
            let _ = write!(line, "{:.16e}", self.target[i]);
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Seeded uniform permutation split into disjoint train/test parts.
    /// Both parts keep rows in their original relative order and share
    /// the feature descriptors.
    pub fn split(&self, spec: &SplitSpec) -> Result<(Dataset, Dataset), DataError> {
        let rows = self.n_rows();
        if spec.train_count == 0 || spec.train_count >= rows {
            return Err(DataError::BadTrainCount { train_count: spec.train_count, rows });
        }
        let mut order: Vec<usize> = (0..rows).collect();
        let mut rng = seeding::rng_for(spec.seed, SPLIT_TAG);
        order.shuffle(&mut rng);
        let mut train_idx = order[..spec.train_count].to_vec();
        let mut test_idx = order[spec.train_count..].to_vec();
        train_idx.sort_unstable();
        test_idx.sort_unstable();
        Ok((self.select_rows(&train_idx), self.select_rows(&test_idx)))
    }

    fn select_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.clone(),
            values: self.values.gather_rows(indices),
            target_name: self.target_name.clone(),
            target: indices.iter().map(|&i| self.target[i]).collect(),
        }
    }

    /// Appends one column holding the element-wise product of the
    /// constituent columns. The new column is named by joining the
    /// constituents with `*` and carries an interaction origin.
    pub fn encode_interaction<S: AsRef<str>>(&self, constituents: &[S]) -> Result<Dataset, DataError> {
        self.encode_interaction_impl(constituents, false)
    }

    /// Like [`Dataset::encode_interaction`] but z-scores each constituent
    /// column (dataset mean/std) before multiplying.
    pub fn encode_interaction_standardized<S: AsRef<str>>(
        &self,
        constituents: &[S],
    ) -> Result<Dataset, DataError> {
        self.encode_interaction_impl(constituents, true)
    }

    fn encode_interaction_impl<S: AsRef<str>>(
        &self,
        constituents: &[S],
        standardize: bool,
    ) -> Result<Dataset, DataError> {
        let names: Vec<&str> = constituents.iter().map(AsRef::as_ref).collect();
        let distinct: std::collections::HashSet<&str> = names.iter().copied().collect();
        if names.len() < 2 || distinct.len() < names.len() {
            return Err(DataError::TooFewConstituents(distinct.len()));
        }
        let mut cols = Vec::with_capacity(names.len());
        for name in &names {
            let idx = self
                .feature_index(name)
                .ok_or_else(|| DataError::UnknownFeature((*name).to_string()))?;
            cols.push(idx);
        }
        let new_name = names.join("*");
        if self.feature_index(&new_name).is_some() || new_name == self.target_name {
            return Err(DataError::DuplicateFeature(new_name));
        }
        let stats = if standardize { Some(self.stats()) } else { None };
        let mut product = vec![1.0; self.n_rows()];
        for &j in &cols {
            match &stats {
                Some(s) => {
                    for (i, p) in product.iter_mut().enumerate() {
                        *p *= (self.values.get(i, j) - s.mean[j]) / s.std[j];
                    }
                }
                None => {
                    for (i, p) in product.iter_mut().enumerate() {
                        *p *= self.values.get(i, j);
                    }
                }
            }
        }
        let mut features = self.features.clone();
        features.push(FeatureDescriptor::interaction(
            new_name,
            names.iter().map(|s| s.to_string()).collect(),
        ));
        Dataset::new(features, self.values.with_column(&product), self.target_name.clone(), self.target.clone())
    }

    /// Drops the named columns; remaining column order is preserved.
    pub fn remove_features<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset, DataError> {
        let mut drop = vec![false; self.n_features()];
        for name in names {
            let idx = self
                .feature_index(name.as_ref())
                .ok_or_else(|| DataError::UnknownFeature(name.as_ref().to_string()))?;
            drop[idx] = true;
        }
        let keep: Vec<usize> = (0..self.n_features()).filter(|&j| !drop[j]).collect();
        if keep.is_empty() {
            return Err(DataError::NoFeaturesLeft);
        }
        Dataset {
            features: keep.iter().map(|&j| self.features[j].clone()).collect(),
            values: self.values.select_columns(&keep),
            target_name: self.target_name.clone(),
            target: self.target.clone(),
        }
        .validate_ok()
    }

    fn validate_ok(self) -> Result<Dataset, DataError> {
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::new(
            vec![
                FeatureDescriptor::raw("a"),
                FeatureDescriptor::raw("b"),
                FeatureDescriptor::raw("c"),
            ],
            Matrix::from_rows(&[vec![1.0, 3.0, 1.0], vec![2.0, 4.0, 1.0]]),
            "y",
            vec![10.0, 20.0],
        )
        .unwrap()
    }

    #[test]
    fn load_minimal_csv() {
        let dir = std::env::temp_dir().join("featforge-dataset-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("minimal.csv");
        std::fs::write(&path, "a,b,y\n1,2,3\n4,5,6\n7,8,9\n").unwrap();
        let d = Dataset::load_csv(&path, "y").unwrap();
        assert_eq!(d.n_features(), 2);
        assert_eq!(d.n_rows(), 3);
        assert_eq!(d.feature_names(), vec!["a", "b"]);
        assert_eq!(d.target(), &[3.0, 6.0, 9.0]);
        assert_eq!(d.column(0), vec![1.0, 4.0, 7.0]);
    }

    #[test]
    fn missing_target_names_column() {
        let dir = std::env::temp_dir().join("featforge-dataset-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("no-target.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        let err = Dataset::load_csv(&path, "y").unwrap_err();
        assert!(matches!(err, DataError::MissingTarget(ref n) if n == "y"), "{err}");
    }

    #[test]
    fn nan_cell_reports_location() {
        let dir = std::env::temp_dir().join("featforge-dataset-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("nan.csv");
        std::fs::write(&path, "a,b,y\n1,2,3\n4,NaN,6\n").unwrap();
        let err = Dataset::load_csv(&path, "y").unwrap_err();
        match err {
            DataError::NonFiniteCell { row, column } => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn duplicate_header_rejected() {
        let dir = std::env::temp_dir().join("featforge-dataset-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("dup.csv");
        std::fs::write(&path, "a,a,y\n1,2,3\n").unwrap();
        assert!(matches!(Dataset::load_csv(&path, "y"), Err(DataError::DuplicateHeader(_))));
    }

    #[test]
    fn non_numeric_cell_reports_location() {
        let dir = std::env::temp_dir().join("featforge-dataset-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("text.csv");
        std::fs::write(&path, "a,y\n1,2\nfoo,4\n").unwrap();
        let err = Dataset::load_csv(&path, "y").unwrap_err();
        match err {
            DataError::NonNumericCell { row, column, value } => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "a", "foo"));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn split_is_deterministic_partition() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let d = Dataset::new(
            vec![FeatureDescriptor::raw("a")],
            Matrix::from_rows(&rows),
            "y",
            (0..10).map(f64::from).collect(),
        )
        .unwrap();
        let spec = SplitSpec { train_count: 7, seed: 1 };
        let (tr1, te1) = d.split(&spec).unwrap();
        let (tr2, te2) = d.split(&spec).unwrap();
        assert_eq!(tr1.n_rows(), 7);
        assert_eq!(te1.n_rows(), 3);
        assert_eq!(tr1, tr2);
        assert_eq!(te1, te2);
    }

    #[test]
    fn split_rejects_full_train() {
        let d = toy();
        let err = d.split(&SplitSpec { train_count: 2, seed: 0 }).unwrap_err();
        assert!(matches!(err, DataError::BadTrainCount { .. }));
    }

    #[test]
    fn interaction_with_ones_is_identity() {
        let d = Dataset::new(
            vec![FeatureDescriptor::raw("a"), FeatureDescriptor::raw("ones")],
            Matrix::from_rows(&[vec![2.0, 1.0], vec![5.0, 1.0]]),
            "y",
            vec![0.0, 0.0],
        )
        .unwrap();
        let e = d.encode_interaction(&["a", "ones"]).unwrap();
        assert_eq!(e.column(2), d.column(0));
        assert_eq!(e.feature_names()[2], "a*ones");
    }

    #[test]
    fn interaction_hand_product() {
        let d = Dataset::new(
            vec![FeatureDescriptor::raw("a"), FeatureDescriptor::raw("b")],
            Matrix::from_rows(&[vec![1.0, 3.0], vec![2.0, 4.0]]),
            "y",
            vec![0.0, 0.0],
        )
        .unwrap();
        let e = d.encode_interaction(&["a", "b"]).unwrap();
        assert_eq!(e.column(2), vec![3.0, 8.0]);
        match &e.descriptors()[2].origin {
            FeatureOrigin::Interaction(c) => assert_eq!(c, &["a", "b"]),
            other => panic!("unexpected origin {other:?}"),
        }
    }

    #[test]
    fn interaction_rejects_unknown_and_few() {
        let d = toy();
        assert!(matches!(
            d.encode_interaction(&["a", "zzz"]),
            Err(DataError::UnknownFeature(ref n)) if n == "zzz"
        ));
        assert!(matches!(d.encode_interaction(&["a"]), Err(DataError::TooFewConstituents(_))));
        assert!(matches!(d.encode_interaction(&["a", "a"]), Err(DataError::TooFewConstituents(_))));
    }

    #[test]
    fn remove_none_is_identity_and_order_preserved() {
        let d = toy();
        let same = d.remove_features::<&str>(&[]).unwrap();
        assert_eq!(same, d);
        let two = d.remove_features(&["b"]).unwrap();
        assert_eq!(two.feature_names(), vec!["a", "c"]);
        assert_eq!(two.column(1), d.column(2));
    }

    #[test]
    fn remove_all_errors() {
        let d = toy();
        assert!(matches!(d.remove_features(&["a", "b", "c"]), Err(DataError::NoFeaturesLeft)));
    }

    #[test]
    fn stats_clamp_constant_columns() {
        let d = toy();
        let s = d.stats();
        assert!((s.mean[2] - 1.0).abs() < 1e-15);
        assert_eq!(s.std[2], 1.0);
    }
}
