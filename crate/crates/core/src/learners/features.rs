use super::LearnerError;
use crate::raster::GrayImage;

/// Row-major sample matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LearnerError> {
        if data.len() != rows * cols {
            return Err(LearnerError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LearnerError::InvalidParameter(
                "features must be finite".into(),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LearnerError> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(LearnerError::DimensionMismatch {
                expected: cols,
                found: bad.len(),
            });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Flattens same-sized images, pixels scaled to [0, 1].
    pub fn from_images(images: &[&GrayImage]) -> Result<Self, LearnerError> {
        let cols = images.first().map_or(0, |g| g.width() * g.height());
        let mut data = Vec::with_capacity(images.len() * cols);
        for img in images {
            let n = img.width() * img.height();
            if n != cols {
                return Err(LearnerError::DimensionMismatch {
                    expected: cols,
                    found: n,
                });
            }
            data.extend(img.data().iter().map(|&p| f64::from(p) / 255.0));
        }
        Ok(Self {
            rows: images.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn select(&self, indices: &[usize]) -> Self {
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

pub(crate) fn check_labels(x: &FeatureMatrix, labels: &[u8]) -> Result<(), LearnerError> {
    if x.rows() != labels.len() {
        return Err(LearnerError::DimensionMismatch {
            expected: x.rows(),
            found: labels.len(),
        });
    }
    Ok(())
}
