//! Classical classifiers written from scratch, plus PCA and evaluation.

mod container;
mod features;
mod knn;
mod logreg;
mod metrics;
mod pca;
mod tree;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use container::{decode_model, encode_model, MAGIC, VERSION};
pub use features::FeatureMatrix;
pub use knn::KnnModel;
pub use logreg::{objective as logreg_objective, LogregModel, LogregParams};
pub use metrics::{evaluate, timed, Metrics, Timed, N_CLASSES};
pub use pca::PcaModel;
pub use tree::{Node, TreeModel, TreeParams};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed model file: {0}")]
    Format(String),
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u16),
}

/// A fitted classifier. `Pca` projects its input before delegating.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Knn(KnnModel),
    Logreg(LogregModel),
    Tree(TreeModel),
    Pca(Box<PcaModel>, Box<Model>),
}

impl Model {
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<u8>, LearnerError> {
        match self {
            Model::Knn(m) => m.predict(x),
            Model::Logreg(m) => m.predict(x),
            Model::Tree(m) => m.predict(x),
            Model::Pca(pca, inner) => inner.predict(&pca.transform(x)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Knn,
    KnnPca,
    Logreg,
    LogregPca,
    Tree,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Knn,
        ModelKind::KnnPca,
        ModelKind::Logreg,
        ModelKind::LogregPca,
        ModelKind::Tree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Knn => "knn",
            ModelKind::KnnPca => "knn_pca",
            ModelKind::Logreg => "logreg",
            ModelKind::LogregPca => "logreg_pca",
            ModelKind::Tree => "tree",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = LearnerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| LearnerError::InvalidParameter(format!("unknown model {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub knn_k: usize,
    pub pca_components: usize,
    pub logreg: LogregParams,
    pub tree: TreeParams,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            knn_k: 5,
            pca_components: 40,
            logreg: LogregParams::default(),
            tree: TreeParams::default(),
        }
    }
}

pub fn fit_model(
    kind: ModelKind,
    params: &ModelParams,
    x: &FeatureMatrix,
    labels: &[u8],
) -> Result<Model, LearnerError> {
    let with_pca = |fit: &dyn Fn(&FeatureMatrix) -> Result<Model, LearnerError>| {
        let d = params.pca_components.min(x.rows()).min(x.cols());
        let pca = PcaModel::fit(x, d)?;
        let inner = fit(&pca.transform(x)?)?;
        Ok(Model::Pca(Box::new(pca), Box::new(inner)))
    };
    match kind {
        ModelKind::Knn => Ok(Model::Knn(KnnModel::fit(x, labels, params.knn_k)?)),
        ModelKind::Logreg => Ok(Model::Logreg(LogregModel::fit(x, labels, &params.logreg)?)),
        ModelKind::Tree => Ok(Model::Tree(TreeModel::fit(x, labels, &params.tree)?)),
        ModelKind::KnnPca => with_pca(&|z| Ok(Model::Knn(KnnModel::fit(z, labels, params.knn_k)?))),
        ModelKind::LogregPca => {
            with_pca(&|z| Ok(Model::Logreg(LogregModel::fit(z, labels, &params.logreg)?)))
        }
    }
}
