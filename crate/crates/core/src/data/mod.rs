//! Dataset manifest, download, parsing and the deterministic train/test split.

mod fetch;
mod load;
mod manifest;

use std::ops::Range;

use ndarray::{s, Axis};

use crate::error::{Error, Result};
use crate::functions::Matrix;

pub use fetch::{fetch, fetch_with_agent, FetchFailure, FetchReport};
pub use load::{load_dataset, load_partitions, Loaded};
pub use manifest::{ColumnRef, DatasetManifestEntry, FileFormat, LabelPosition, Manifest};

/// Feature matrix, encoded labels and the class table.
///
/// `class_names[c]` is the raw label of class index `c`; the table is sorted
/// by raw value so the encoding is order preserving. A partition may not
/// contain every class of the table.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub x: Matrix,
    pub y: Vec<usize>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, x: Matrix, y: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} rows",
                y.len(),
                x.nrows()
            )));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= class_names.len()) {
            return Err(Error::DimensionMismatch(format!(
                "label {bad} outside class table of size {}",
                class_names.len()
            )));
        }
        Ok(Dataset {
            name: name.into(),
            x,
            y,
            class_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Samples per class index, over the whole class table.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }

    pub fn decode(&self, class: usize) -> &str {
        &self.class_names[class]
    }

    /// Contiguous slice of rows, sharing the class table.
    pub fn rows(&self, range: Range<usize>) -> Dataset {
        Dataset {
            name: self.name.clone(),
            x: self.x.slice(s![range.clone(), ..]).to_owned(),
            y: self.y[range].to_vec(),
            class_names: self.class_names.clone(),
        }
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            x: self.x.select(Axis(0), indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

/// Number of training rows for an unshuffled split: `ceil((1 - f) n)`.
pub fn train_size(n: usize, test_fraction: f64) -> usize {
    // the tolerance keeps e.g. 0.8 * 150 from rounding up to 121
    ((1.0 - test_fraction) * n as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Unshuffled split: the first `ceil((1 - f) n)` rows train, the rest test.
pub fn split(d: &Dataset, test_fraction: f64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let n = d.n_samples();
    let n_train = train_size(n, test_fraction);
    if n_train == 0 || n_train >= n {
        return Err(Error::EmptyPartition(format!(
            "{}: {n} rows at test fraction {test_fraction} leave {n_train} train rows",
            d.name
        )));
    }
    Ok((d.rows(0..n_train), d.rows(n_train..n)))
}
