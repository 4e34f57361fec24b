use std::time::Instant;

use super::{FeatureMatrix, LearnerError, Model};

pub const N_CLASSES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    /// `confusion[truth][predicted]`.
    pub confusion: [[u64; N_CLASSES]; N_CLASSES],
    pub fit_seconds: f64,
    pub predict_seconds: f64,
}

impl Metrics {
    pub fn from_predictions(truth: &[u8], predicted: &[u8]) -> Result<Self, LearnerError> {
        if truth.is_empty() {
            return Err(LearnerError::EmptyTestSet);
        }
        if truth.len() != predicted.len() {
            return Err(LearnerError::DimensionMismatch {
                expected: truth.len(),
                found: predicted.len(),
            });
        }
        let mut confusion = [[0u64; N_CLASSES]; N_CLASSES];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t as usize >= N_CLASSES || p as usize >= N_CLASSES {
                return Err(LearnerError::InvalidParameter(format!(
                    "label outside 0..{N_CLASSES}"
                )));
            }
            confusion[t as usize][p as usize] += 1;
        }
        let correct: u64 = (0..N_CLASSES).map(|c| confusion[c][c]).sum();
        Ok(Self {
            accuracy: correct as f64 / truth.len() as f64,
            confusion,
            fit_seconds: 0.0,
            predict_seconds: 0.0,
        })
    }
}

/// A model together with the wall time its fit took.
#[derive(Debug, Clone, PartialEq)]
pub struct Timed<T> {
    pub model: T,
    pub fit_seconds: f64,
}

pub fn timed<T>(fit: impl FnOnce() -> Result<T, LearnerError>) -> Result<Timed<T>, LearnerError> {
    let start = Instant::now();
    let model = fit()?;
    Ok(Timed {
        model,
        fit_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn evaluate(
    fitted: &Timed<Model>,
    x: &FeatureMatrix,
    labels: &[u8],
) -> Result<Metrics, LearnerError> {
    if x.rows() == 0 {
        return Err(LearnerError::EmptyTestSet);
    }
    let start = Instant::now();
    let predicted = fitted.model.predict(x)?;
    let predict_seconds = start.elapsed().as_secs_f64();
    let mut m = Metrics::from_predictions(labels, &predicted)?;
    m.fit_seconds = fitted.fit_seconds;
    m.predict_seconds = predict_seconds;
    Ok(m)
}
