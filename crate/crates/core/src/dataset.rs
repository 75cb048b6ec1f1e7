use crate::error::{Error, Result};

/// An N×D matrix of finite observations, stored row-major, with optional
/// ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n: usize,
    dim: usize,
    labels: Option<Vec<usize>>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(values: Vec<f64>, n: usize, dim: usize) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::invalid("dataset needs at least one row and one column"));
        }
        if values.len() != n * dim {
            return Err(Error::invalid(format!(
                "expected {} values for a {n}x{dim} matrix, got {}",
                n * dim,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Dataset { values, n, dim, labels: None, feature_names: None })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::invalid(format!(
                    "row {i} has {} columns, expected {dim}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Dataset::new(values, rows.len(), dim)
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::invalid(format!(
                "{} labels for {} observations",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: names.len() });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false for a constructed dataset.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Rows selected by `indices`, keeping labels aligned.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        let mut out = Dataset::new(values, indices.len(), self.dim)?;
        if let Some(labels) = &self.labels {
            out.labels = Some(indices.iter().map(|&i| labels[i]).collect());
        }
        out.feature_names = self.feature_names.clone();
        Ok(out)
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for row in self.rows() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= self.n as f64);
        mean
    }

    /// Unbiased per-column sample variance (population variance when N = 1).
    pub fn column_variances(&self) -> Vec<f64> {
        let mean = self.column_means();
        let mut var = vec![0.0; self.dim];
        for row in self.rows() {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let denom = if self.n > 1 { (self.n - 1) as f64 } else { 1.0 };
        var.iter_mut().for_each(|v| *v /= denom);
        var
    }
}
