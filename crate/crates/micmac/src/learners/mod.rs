//! The three learners used by the pipeline: KNN (wrapper and classifier),
//! SVM with an RBF kernel (wrapper and classifier) and a random forest
//! (preselection importance).

mod forest;
mod knn;
mod svm;

pub use forest::ForestModel;
pub use knn::{knn_vote, KnnModel};
pub use svm::{rbf_kernel_matrix, SvmModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LearnerKind {
    Knn,
    Svm,
    Rf,
}

impl LearnerKind {
    pub fn short(&self) -> &'static str {
        match self {
            LearnerKind::Knn => "knn",
            LearnerKind::Svm => "svm",
            LearnerKind::Rf => "rf",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub knn_k: usize,
    pub svm_c: f64,
    /// RBF width; `None` uses 1 / (n_features * mean feature variance).
    pub svm_gamma: Option<f64>,
    pub svm_tol: f64,
    pub rf_trees: usize,
    pub rf_max_depth: usize,
    /// `None` uses ceil(sqrt(n_features)).
    pub rf_features_per_split: Option<usize>,
    pub seed: u64,
}

impl LearnerConfig {
    pub fn knn() -> Self {
        LearnerConfig {
            kind: LearnerKind::Knn,
            ..Self::base()
        }
    }

    pub fn svm() -> Self {
        LearnerConfig {
            kind: LearnerKind::Svm,
            ..Self::base()
        }
    }

    pub fn rf() -> Self {
        LearnerConfig {
            kind: LearnerKind::Rf,
            ..Self::base()
        }
    }

    fn base() -> Self {
        LearnerConfig {
            kind: LearnerKind::Knn,
            knn_k: 3,
            svm_c: 1.0,
            svm_gamma: None,
            svm_tol: 1e-3,
            rf_trees: 100,
            rf_max_depth: 10,
            rf_features_per_split: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.knn_k == 0 || self.knn_k % 2 == 0 {
            return Err(Error::InvalidConfig("knn_k must be odd and ≥ 1".into()));
        }
        if self.svm_c <= 0.0 {
            return Err(Error::InvalidConfig("svm_c must be > 0".into()));
        }
        if let Some(g) = self.svm_gamma {
            if g <= 0.0 {
                return Err(Error::InvalidConfig("svm_gamma must be > 0".into()));
            }
        }
        if self.rf_max_depth == 0 {
            return Err(Error::InvalidConfig("rf_max_depth must be ≥ 1".into()));
        }
        if self.rf_trees == 0 {
            return Err(Error::InvalidConfig("rf_trees must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum TrainedModel {
    Knn(KnnModel),
    Svm(SvmModel),
    Rf(ForestModel),
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Knn(m) => m.n_features(),
            TrainedModel::Svm(m) => m.n_features(),
            TrainedModel::Rf(m) => m.n_features(),
        }
    }
}

pub fn train(cfg: &LearnerConfig, x: &Matrix, y: &[u8]) -> Result<TrainedModel> {
    cfg.validate()?;
    if x.n_rows() < 2 || x.n_rows() != y.len() {
        return Err(Error::EmptyInput("training set needs ≥ 2 samples".into()));
    }
    if x.n_cols() == 0 {
        return Err(Error::NoFeatures);
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(Error::SingleClass);
    }
    Ok(match cfg.kind {
        LearnerKind::Knn => TrainedModel::Knn(KnnModel::fit(cfg, x, y)),
        LearnerKind::Svm => TrainedModel::Svm(SvmModel::fit(cfg, x, y)),
        LearnerKind::Rf => TrainedModel::Rf(ForestModel::fit(cfg, x, y)),
    })
}

pub fn predict(m: &TrainedModel, x: &Matrix) -> Result<Vec<u8>> {
    if x.n_cols() != m.n_features() {
        return Err(Error::DimensionMismatch {
            expected: m.n_features(),
            got: x.n_cols(),
        });
    }
    Ok(match m {
        TrainedModel::Knn(m) => m.predict(x),
        TrainedModel::Svm(m) => m.predict(x),
        TrainedModel::Rf(m) => m.predict(x),
    })
}

/// Fraction of correct sample-level predictions.
pub fn accuracy(m: &TrainedModel, x: &Matrix, y: &[u8]) -> Result<f64> {
    if x.n_rows() == 0 {
        return Err(Error::EmptyInput("evaluation set".into()));
    }
    let pred = predict(m, x)?;
    let correct = pred.iter().zip(y).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / y.len() as f64)
}

/// Mean impurity decrease per feature, normalized to sum to 1.
pub fn rf_importance(m: &TrainedModel) -> Result<Vec<f64>> {
    match m {
        TrainedModel::Rf(f) => Ok(f.importance().to_vec()),
        _ => Err(Error::InvalidConfig("rf_importance needs a random forest".into())),
    }
}
