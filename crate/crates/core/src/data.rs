//! Dataset ingestion, column-kind inference, capping and stratified splitting.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer-valued columns with fewer distinct values than this are categorical.
pub const CATEGORICAL_UNIQUE_LIMIT: usize = 20;

/// Default row cap applied before splitting.
pub const DEFAULT_SUBSAMPLE_CAP: usize = 10_000;

/// Tokens read as missing values (compared after trimming).
pub const MISSING_TOKENS: [&str; 3] = ["", "NA", "?"];

/// A raw cell value as read from the source file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Missing,
    Number(f64),
    Token(String),
}

impl Cell {
    pub fn parse(raw: &str) -> Cell {
        let raw = raw.trim();
        if MISSING_TOKENS.contains(&raw) {
            return Cell::Missing;
        }
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Cell::Number(v),
            _ => Cell::Token(raw.to_string()),
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            Cell::Number(v)
        } else {
            Cell::Missing
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Numerical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindSource {
    Metadata,
    Inferred,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    pub source: KindSource,
}

/// Raw tabular classification data.
///
/// `class_names` fixes the class order used by every probability matrix
/// produced downstream: label `i` always refers to `class_names[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    rows: Vec<Vec<Cell>>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    columns: Vec<ColumnMeta>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        rows: Vec<Vec<Cell>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        columns: Vec<ColumnMeta>,
    ) -> Result<Self> {
        let k = class_names.len();
        if k < 2 {
            return Err(Error::InvalidDataset(format!(
                "at least 2 classes required, found {k}"
            )));
        }
        if rows.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if rows.len() < k {
            return Err(Error::InvalidDataset(format!(
                "{} rows cannot cover {k} classes",
                rows.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
            return Err(Error::InvalidDataset(format!(
                "label {bad} out of range for {k} classes"
            )));
        }
        if let Some((i, row)) = rows
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != columns.len())
        {
            return Err(Error::InvalidDataset(format!(
                "row {i} has {} cells, expected {}",
                row.len(),
                columns.len()
            )));
        }
        Ok(Dataset {
            name: name.into(),
            rows,
            labels,
            class_names,
            columns,
        })
    }

    /// Build a dataset of purely numerical features.
    pub fn from_numeric(
        name: impl Into<String>,
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let d = features.first().map_or(0, Vec::len);
        let columns = (0..d)
            .map(|j| ColumnMeta {
                name: format!("x{j}"),
                kind: ColumnKind::Numerical,
                source: KindSource::Metadata,
            })
            .collect();
        let rows = features
            .into_iter()
            .map(|r| r.into_iter().map(Cell::from).collect())
            .collect();
        Dataset::new(name, rows, labels, class_names, columns)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn columns(&self) -> &[ColumnMeta] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// A new dataset holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            columns: self.columns.clone(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Dataset {
        self.name = name.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitResult {
    /// The unlabeled pool, sorted ascending.
    pub pool_indices: Vec<usize>,
    /// Held-out test rows, sorted ascending.
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

#[derive(Debug, Default, Deserialize)]
struct ColumnHint {
    kind: Option<ColumnKind>,
}

/// Parsed metadata sidecar: per-column kinds and an optional label column.
#[derive(Debug, Default)]
struct Sidecar {
    label_column: Option<String>,
    kinds: HashMap<String, ColumnKind>,
}

fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Map<String, serde_json::Value> = serde_json::from_reader(file)?;
    let mut sidecar = Sidecar::default();
    for (key, v) in value {
        if key == "label_column" {
            let name = v.as_str().ok_or_else(|| {
                Error::InvalidDataset("metadata label_column must be a string".into())
            })?;
            sidecar.label_column = Some(name.to_string());
        } else if v.is_object() {
            let hint: ColumnHint = serde_json::from_value(v)?;
            if let Some(kind) = hint.kind {
                sidecar.kinds.insert(key, kind);
            }
        }
    }
    Ok(sidecar)
}

/// Read a CSV file (header line required) with an optional JSON metadata
/// sidecar. Column kinds missing from the sidecar are inferred.
pub fn load_dataset(path: &Path, meta_path: Option<&Path>) -> Result<Dataset> {
    let sidecar = match meta_path {
        Some(p) => read_sidecar(p)?,
        None => Sidecar::default(),
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if header.len() < 2 {
        return Err(Error::InvalidDataset(
            "need at least one feature column and a label column".into(),
        ));
    }
    let label_col = match &sidecar.label_column {
        Some(name) => header.iter().position(|h| h == name).ok_or_else(|| {
            Error::InvalidDataset(format!("label column {name:?} not in header"))
        })?,
        None => header.len() - 1,
    };

    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let label = record.get(label_col).unwrap_or("").trim();
        if label.is_empty() {
            return Err(Error::InvalidDataset(format!(
                "empty label in data row {}",
                line + 1
            )));
        }
        raw_labels.push(label.to_string());
        rows.push(
            record
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != label_col)
                .map(|(_, s)| Cell::parse(s))
                .collect::<Vec<_>>(),
        );
    }

    let class_names: Vec<String> = raw_labels
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&str, usize> = class_names
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let labels = raw_labels.iter().map(|l| index[l.as_str()]).collect();

    let columns = header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_col)
        .map(|(_, name)| match sidecar.kinds.get(name) {
            Some(&kind) => ColumnMeta {
                name: name.clone(),
                kind,
                source: KindSource::Metadata,
            },
            None => ColumnMeta {
                name: name.clone(),
                // placeholder, resolved below
                kind: ColumnKind::Numerical,
                source: KindSource::Inferred,
            },
        })
        .collect();

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ds = Dataset::new(name, rows, labels, class_names, columns)?;
    Ok(infer_column_kinds(ds))
}

/// Kind of a single column under the unique-value rule.
pub fn infer_kind<'a>(cells: impl IntoIterator<Item = &'a Cell>) -> ColumnKind {
    let mut uniques = BTreeSet::new();
    let mut integer_valued = true;
    let mut any = false;
    for cell in cells {
        match cell {
            Cell::Missing => {}
            Cell::Token(_) => return ColumnKind::Categorical,
            Cell::Number(v) => {
                any = true;
                if v.fract() != 0.0 {
                    integer_valued = false;
                } else if uniques.len() < CATEGORICAL_UNIQUE_LIMIT {
                    uniques.insert(v.to_bits());
                }
            }
        }
    }
    if !any {
        return ColumnKind::Categorical;
    }
    if integer_valued && uniques.len() < CATEGORICAL_UNIQUE_LIMIT {
        ColumnKind::Categorical
    } else {
        ColumnKind::Numerical
    }
}

/// Resolve the kind of every column whose kind was not fixed by metadata.
pub fn infer_column_kinds(mut ds: Dataset) -> Dataset {
    for j in 0..ds.columns.len() {
        if ds.columns[j].source == KindSource::Inferred {
            ds.columns[j].kind = infer_kind(ds.rows.iter().map(|r| &r[j]));
        }
    }
    ds
}

/// Row indices of a uniform sample without replacement, sorted ascending.
/// Returns every index when the dataset is at or below the cap.
pub fn subsample_indices(n_rows: usize, cap: usize, seed: u64) -> Vec<usize> {
    if n_rows <= cap {
        return (0..n_rows).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n_rows, cap).into_vec();
    idx.sort_unstable();
    idx
}

pub fn subsample(ds: &Dataset, cap: usize, seed: u64) -> Result<Dataset> {
    if cap < ds.n_classes() {
        return Err(Error::InvalidArgument(format!(
            "subsample cap {cap} is below the class count {}",
            ds.n_classes()
        )));
    }
    if ds.n_rows() <= cap {
        return Ok(ds.clone());
    }
    Ok(ds.select_rows(&subsample_indices(ds.n_rows(), cap, seed)))
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Per-class test counts: the overall test size is `round(fraction * n)`,
/// apportioned across classes by largest remainder (ties to the lower class
/// index), then clamped so both sides keep at least one row of every class.
pub fn stratified_test_counts(class_counts: &[usize], test_fraction: f64) -> Vec<usize> {
    let n: usize = class_counts.iter().sum();
    let target = round_half_up(test_fraction * n as f64);
    let exact: Vec<f64> = class_counts
        .iter()
        .map(|&c| test_fraction * c as f64)
        .collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..class_counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &c in order.iter().take(target.saturating_sub(assigned)) {
        counts[c] += 1;
    }
    counts
        .iter()
        .zip(class_counts)
        .map(|(&t, &n_c)| t.clamp(1, n_c.saturating_sub(1).max(1)))
        .collect()
}

pub fn stratified_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<SplitResult> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &y) in ds.labels().iter().enumerate() {
        by_class.entry(y).or_default().push(i);
    }
    let counts = ds.class_counts();
    for (c, &n_c) in counts.iter().enumerate() {
        if n_c < 2 {
            return Err(Error::ClassTooSmall {
                class: ds.class_names()[c].clone(),
                count: n_c,
                needed: 2,
            });
        }
    }
    let test_counts = stratified_test_counts(&counts, test_fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = Vec::with_capacity(ds.n_rows());
    let mut test = Vec::new();
    for (c, members) in by_class {
        let mut members = members;
        members.shuffle(&mut rng);
        let (t, p) = members.split_at(test_counts[c]);
        test.extend_from_slice(t);
        pool.extend_from_slice(p);
    }
    pool.sort_unstable();
    test.sort_unstable();
    Ok(SplitResult {
        pool_indices: pool,
        test_indices: test,
        seed,
    })
}

/// Two isotropic unit-variance Gaussian classes in `dim` dimensions whose
/// means sit at `±separation / 2` on the first axis.
pub fn two_gaussians(n: usize, separation: f64, dim: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let shift = if class == 0 { -separation / 2.0 } else { separation / 2.0 };
        let row: Vec<f64> = (0..dim)
            .map(|j| normal.sample(&mut rng) + if j == 0 { shift } else { 0.0 })
            .collect();
        features.push(row);
        labels.push(class);
    }
    Dataset::from_numeric(
        format!("two-gaussians-{separation}"),
        features,
        labels,
        vec!["a".into(), "b".into()],
    )
    .expect("two classes with n >= 2")
}
