use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(CoreError::LengthMismatch {
                what: "matrix data",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: alloc::vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(CoreError::LengthMismatch {
                    what: "matrix row",
                    expected: cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }
}

/// Encoded features with binary target (`labels`, 1 = positive outcome) and
/// binary sensitive attribute (`sensitive`, 1 = privileged group).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    features: Matrix,
    labels: Vec<bool>,
    sensitive: Vec<bool>,
}

impl TabularDataset {
    pub fn new(features: Matrix, labels: Vec<bool>, sensitive: Vec<bool>) -> Result<Self> {
        let n = features.rows();
        if n == 0 {
            return Err(CoreError::EmptyDataset);
        }
        if labels.len() != n {
            return Err(CoreError::LengthMismatch {
                what: "labels",
                expected: n,
                actual: labels.len(),
            });
        }
        if sensitive.len() != n {
            return Err(CoreError::LengthMismatch {
                what: "sensitive attribute",
                expected: n,
                actual: sensitive.len(),
            });
        }
        if features.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite("features"));
        }
        Ok(Self {
            features,
            labels,
            sensitive,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn sensitive(&self) -> &[bool] {
        &self.sensitive
    }

    /// Cell index of row `i`: `2*s + y`, i.e. (0,0), (0,1), (1,0), (1,1).
    #[inline]
    pub fn cell(&self, i: usize) -> usize {
        2 * usize::from(self.sensitive[i]) + usize::from(self.labels[i])
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            self.features.select_rows(indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
            indices.iter().map(|&i| self.sensitive[i]).collect(),
        )
    }
}

/// Shares of the four (S, Y) cells plus the label-level parity ratio
/// `SP* = P[Y=1|S=0] / P[Y=1|S=1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub rows: usize,
    /// Indexed as `2*s + y`.
    pub cell_share: [f64; 4],
    pub positive_share: f64,
    pub positive_rate_unprivileged: f64,
    pub positive_rate_privileged: f64,
    pub label_parity: f64,
}

pub fn dataset_summary(ds: &TabularDataset) -> Result<DatasetSummary> {
    let mut counts = [0usize; 4];
    for i in 0..ds.len() {
        counts[ds.cell(i)] += 1;
    }
    let n = ds.len() as f64;
    let unpriv = counts[0] + counts[1];
    let priv_ = counts[2] + counts[3];
    if unpriv == 0 {
        return Err(CoreError::MissingSensitiveGroup(0));
    }
    if priv_ == 0 {
        return Err(CoreError::MissingSensitiveGroup(1));
    }
    let rate0 = counts[1] as f64 / unpriv as f64;
    let rate1 = counts[3] as f64 / priv_ as f64;
    Ok(DatasetSummary {
        rows: ds.len(),
        cell_share: counts.map(|c| c as f64 / n),
        positive_share: (counts[1] + counts[3]) as f64 / n,
        positive_rate_unprivileged: rate0,
        positive_rate_privileged: rate1,
        label_parity: rate0 / rate1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toy(labels: Vec<bool>, sensitive: Vec<bool>) -> TabularDataset {
        let n = labels.len();
        TabularDataset::new(Matrix::zeros(n, 1), labels, sensitive).unwrap()
    }

    #[test]
    fn balanced_dataset_has_unit_label_parity() {
        let ds = toy(
            vec![false, true, false, true],
            vec![false, false, true, true],
        );
        let s = dataset_summary(&ds).unwrap();
        assert_eq!(s.label_parity, 1.0);
        assert_eq!(s.cell_share, [0.25; 4]);
        assert!((s.cell_share.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn label_parity_is_rate_ratio() {
        // S=0: 2 of 10 positive; S=1: 4 of 10 positive.
        let mut labels = vec![false; 20];
        let mut sensitive = vec![false; 20];
        for i in 0..2 {
            labels[i] = true;
        }
        for i in 10..20 {
            sensitive[i] = true;
        }
        for i in 10..14 {
            labels[i] = true;
        }
        let s = dataset_summary(&toy(labels, sensitive)).unwrap();
        assert!((s.label_parity - 0.5).abs() < 1e-15);
        assert!((s.positive_share - 0.3).abs() < 1e-15);
    }

    #[test]
    fn missing_group_is_an_error() {
        let ds = toy(vec![true, false], vec![true, true]);
        assert_eq!(
            dataset_summary(&ds),
            Err(CoreError::MissingSensitiveGroup(0))
        );
    }

    #[test]
    fn dataset_rejects_ragged_input() {
        let err = TabularDataset::new(Matrix::zeros(2, 1), vec![true], vec![true, false]);
        assert!(matches!(err, Err(CoreError::LengthMismatch { .. })));
        assert_eq!(
            TabularDataset::new(Matrix::zeros(0, 1), vec![], vec![]),
            Err(CoreError::EmptyDataset)
        );
    }
}
