//! In-memory labelled dataset used by the logistic objective and the
//! benchmark harness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense `n × d_in` feature matrix (row-major) with class labels in `0..k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    n_features: usize,
    n_classes: usize,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        n_features: usize,
        n_classes: usize,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::InvalidParameter("dataset needs at least one feature".into()));
        }
        if n_classes < 2 {
            return Err(Error::InvalidParameter(format!(
                "dataset needs at least two classes, got {n_classes}"
            )));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::InvalidParameter(format!(
                "feature buffer has {} values, expected {} rows x {} features",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        if feature_names.len() != n_features {
            return Err(Error::InvalidParameter(format!(
                "{} feature names for {} features",
                feature_names.len(),
                n_features
            )));
        }
        if let Some(row) = labels.iter().position(|&y| y >= n_classes) {
            return Err(Error::Data {
                row,
                message: format!("label {} out of range 0..{}", labels[row], n_classes),
            });
        }
        if let Some(i) = features.iter().position(|x| !x.is_finite()) {
            return Err(Error::Data {
                row: i / n_features,
                message: "non-finite feature value".into(),
            });
        }
        Ok(Self {
            features,
            labels,
            n_features,
            n_classes,
            feature_names,
        })
    }

    /// Builds from rows, naming features `x0, x1, …`.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let n_features = rows.first().map_or(0, |r| r.len());
        if let Some(row) = rows.iter().position(|r| r.len() != n_features) {
            return Err(Error::Data {
                row,
                message: format!("expected {n_features} features, found {}", rows[row].len()),
            });
        }
        if rows.len() != labels.len() {
            return Err(Error::InvalidParameter(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let names = (0..n_features).map(|j| format!("x{j}")).collect();
        Self::new(rows.concat(), labels, n_features, n_classes, names)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Dimension of the linear multiclass model, `k · d_in`.
    pub fn model_dim(&self) -> usize {
        self.n_classes * self.n_features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Copies the listed rows (in order) into a new dataset.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidParameter(format!(
                    "row index {i} out of range for {} rows",
                    self.len()
                )));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Ok(Self {
            features,
            labels,
            n_features: self.n_features,
            n_classes: self.n_classes,
            feature_names: self.feature_names.clone(),
        })
    }

    /// Min-max maps every feature column onto [0, 1]. Constant columns map to 0.
    pub fn normalize_unit_interval(&mut self) {
        let d = self.n_features;
        for j in 0..d {
            let column = self.features.iter().skip(j).step_by(d);
            let (lo, hi) = column.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
            let span = hi - lo;
            for x in self.features.iter_mut().skip(j).step_by(d) {
                *x = if span > 0.0 {
                    ((*x - lo) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                };
            }
        }
    }

    /// Largest squared ℓ₂ norm over rows.
    pub fn max_row_norm_sq(&self) -> f64 {
        (0..self.len())
            .map(|i| self.row(i).iter().map(|x| x * x).sum::<f64>())
            .fold(0.0, f64::max)
    }
}
