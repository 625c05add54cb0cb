//! The shared feature map: imputation, standardization and ordinal encoding,
//! fitted on pool rows only and applied unchanged to every other row.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{Cell, ColumnKind, Dataset};
use crate::error::{Error, Result};

/// Standard deviations below this are replaced by 1.
pub const STD_FLOOR: f64 = 1e-12;

/// Category used for a categorical column with no observed pool values.
pub const MISSING_CATEGORY: &str = "⟨missing⟩";

/// A category value. Numeric categories sort numerically and precede string
/// tokens, which sort lexicographically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CategoryKey {
    Number(f64),
    Token(String),
}

impl CategoryKey {
    fn of(cell: &Cell) -> Option<CategoryKey> {
        match cell {
            Cell::Missing => None,
            Cell::Number(v) => Some(CategoryKey::Number(*v)),
            Cell::Token(t) => Some(CategoryKey::Token(t.clone())),
        }
    }
}

impl PartialEq for CategoryKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for CategoryKey {}

impl PartialOrd for CategoryKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CategoryKey {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (CategoryKey::Number(a), CategoryKey::Number(b)) => a.total_cmp(b),
            (CategoryKey::Number(_), CategoryKey::Token(_)) => Ordering::Less,
            (CategoryKey::Token(_), CategoryKey::Number(_)) => Ordering::Greater,
            (CategoryKey::Token(a), CategoryKey::Token(b)) => a.cmp(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnTransform {
    Numerical {
        mean: f64,
        std: f64,
    },
    Categorical {
        /// Sorted; a category's position is its ordinal code.
        categories: Vec<CategoryKey>,
        /// Code of the most frequent pool category.
        mode: usize,
    },
}

impl ColumnTransform {
    fn apply(&self, cell: &Cell) -> f64 {
        match self {
            ColumnTransform::Numerical { mean, std } => match cell {
                Cell::Number(v) => (v - mean) / std,
                // tokens in a numerical column cannot be parsed; impute them
                Cell::Missing | Cell::Token(_) => 0.0,
            },
            ColumnTransform::Categorical { categories, mode } => {
                let code = CategoryKey::of(cell)
                    .and_then(|key| categories.binary_search(&key).ok())
                    .unwrap_or(*mode);
                code as f64
            }
        }
    }
}

/// Fitted preprocessing statistics. Immutable once fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessorModel {
    columns: Vec<ColumnTransform>,
}

impl PreprocessorModel {
    pub fn columns(&self) -> &[ColumnTransform] {
        &self.columns
    }

    /// Output dimensionality.
    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn transform(&self, rows: &[Vec<Cell>]) -> Result<Array2<f64>> {
        let d = self.columns.len();
        let mut out = Array2::zeros((rows.len(), d));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::ColumnMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            for (j, (cell, col)) in row.iter().zip(&self.columns).enumerate() {
                out[[i, j]] = col.apply(cell);
            }
        }
        Ok(out)
    }

    /// Transform the given rows of a dataset, in the given order.
    pub fn transform_rows(&self, ds: &Dataset, indices: &[usize]) -> Result<Array2<f64>> {
        let d = self.columns.len();
        let mut out = Array2::zeros((indices.len(), d));
        for (i, &r) in indices.iter().enumerate() {
            let row = &ds.rows()[r];
            if row.len() != d {
                return Err(Error::ColumnMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            for (j, (cell, col)) in row.iter().zip(&self.columns).enumerate() {
                out[[i, j]] = col.apply(cell);
            }
        }
        Ok(out)
    }
}

fn fit_numerical<'a>(cells: impl Iterator<Item = &'a Cell>) -> ColumnTransform {
    let values: Vec<f64> = cells
        .filter_map(|c| match c {
            Cell::Number(v) => Some(*v),
            _ => None,
        })
        .collect();
    if values.is_empty() {
        return ColumnTransform::Numerical { mean: 0.0, std: 1.0 };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let std = if std < STD_FLOOR { 1.0 } else { std };
    ColumnTransform::Numerical { mean, std }
}

fn fit_categorical<'a>(cells: impl Iterator<Item = &'a Cell>) -> ColumnTransform {
    let mut counts: BTreeMap<CategoryKey, usize> = BTreeMap::new();
    for key in cells.filter_map(CategoryKey::of) {
        *counts.entry(key).or_default() += 1;
    }
    if counts.is_empty() {
        return ColumnTransform::Categorical {
            categories: vec![CategoryKey::Token(MISSING_CATEGORY.to_string())],
            mode: 0,
        };
    }
    let mut mode = 0;
    let mut best = 0;
    for (code, &count) in counts.values().enumerate() {
        // strict comparison keeps the smallest category on ties
        if count > best {
            best = count;
            mode = code;
        }
    }
    ColumnTransform::Categorical {
        categories: counts.into_keys().collect(),
        mode,
    }
}

/// Fit the feature map on the pool rows of `ds`.
pub fn fit_preprocessor(ds: &Dataset, pool_indices: &[usize]) -> Result<PreprocessorModel> {
    if pool_indices.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot fit preprocessing on an empty pool".into(),
        ));
    }
    let columns = ds
        .columns()
        .iter()
        .enumerate()
        .map(|(j, meta)| {
            let cells = pool_indices.iter().map(|&i| &ds.rows()[i][j]);
            match meta.kind {
                ColumnKind::Numerical => fit_numerical(cells),
                ColumnKind::Categorical => fit_categorical(cells),
            }
        })
        .collect();
    Ok(PreprocessorModel { columns })
}
