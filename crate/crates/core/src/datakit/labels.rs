use crate::error::{Error, Result};
use crate::numkit::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelMode {
    /// One annotator's 0/1 selection.
    Binary,
    /// Frame-wise mean of several binary selections.
    Averaged,
}

/// Per-frame ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryLabels {
    values: Vec<f32>,
    mode: LabelMode,
}

impl SummaryLabels {
    /// Binary labels: only 0 and 1, at least one positive frame.
    pub fn binary(values: Vec<f32>) -> Result<Self> {
        if values.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidArgument("binary labels must be 0 or 1".into()));
        }
        if !values.contains(&1.0) {
            return Err(Error::InvalidArgument(
                "binary labels need at least one positive frame".into(),
            ));
        }
        Ok(Self {
            values,
            mode: LabelMode::Binary,
        })
    }

    /// Real-valued labels in [0, 1].
    pub fn averaged(values: Vec<f32>) -> Result<Self> {
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("averaged labels must lie in [0, 1]".into()));
        }
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty labels".into()));
        }
        Ok(Self {
            values,
            mode: LabelMode::Averaged,
        })
    }

    /// Binary labels from an `N x 1` container.
    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        if m.cols() != 1 {
            return Err(Error::InvalidArgument(format!(
                "labels must have one column, got {}",
                m.cols()
            )));
        }
        Self::binary(m.data().to_vec())
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::new(self.values.len(), 1, self.values.clone()).expect("labels are finite")
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn mode(&self) -> LabelMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1.0).count()
    }

    /// Selected frames of a binary selection as a boolean mask.
    pub fn mask(&self) -> Vec<bool> {
        self.values.iter().map(|&v| v == 1.0).collect()
    }
}
