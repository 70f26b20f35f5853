//! Built-in prediction models behind a uniform fit/predict interface.
//!
//! Three learners cover the simulation scenarios: ordinary least squares,
//! logistic regression via iteratively reweighted least squares, and a small
//! fully connected ReLU network. External models participate through
//! prediction-matrix ingestion instead (see [`crate::data::load_prediction_matrix`]);
//! none of the engines here care where an ensemble came from.
//!
//! An intercept column is appended internally for the linear and logistic
//! learners.

mod linear;
mod logistic;
mod mlp;

pub use mlp::MlpConfig;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::data::{TestFeatures, TrainingData};
use crate::error::{Error, Result};

/// Which model to fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PredictorSpec {
    Linear,
    Logistic,
    Mlp(MlpConfig),
}

impl PredictorSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            PredictorSpec::Linear => "linear",
            PredictorSpec::Logistic => "logistic",
            PredictorSpec::Mlp(_) => "mlp",
        }
    }
}

/// A fitted model: opaque parameters plus the expected feature dimension.
#[derive(Debug, Clone)]
pub enum FittedPredictor {
    Linear(linear::LinearModel),
    Logistic(logistic::LogisticModel),
    Mlp(mlp::MlpModel),
}

impl FittedPredictor {
    /// Expected number of feature columns.
    pub fn p(&self) -> usize {
        match self {
            FittedPredictor::Linear(m) => m.p(),
            FittedPredictor::Logistic(m) => m.p(),
            FittedPredictor::Mlp(m) => m.p(),
        }
    }

    /// True when the logistic fit detected complete or quasi-complete
    /// separation and returned the last bounded iterate.
    pub fn separation_warning(&self) -> bool {
        match self {
            FittedPredictor::Logistic(m) => m.separation_warning(),
            _ => false,
        }
    }
}

/// Fit `spec` on `data`. All randomness (network initialization, split and
/// batch order) derives from `rng_seed`; linear and logistic fits are
/// deterministic and ignore it.
pub fn fit(spec: &PredictorSpec, data: &TrainingData, rng_seed: u64) -> Result<FittedPredictor> {
    match spec {
        PredictorSpec::Linear => Ok(FittedPredictor::Linear(linear::fit(data)?)),
        PredictorSpec::Logistic => Ok(FittedPredictor::Logistic(logistic::fit(data)?)),
        PredictorSpec::Mlp(config) => Ok(FittedPredictor::Mlp(mlp::fit(config, data, rng_seed)?)),
    }
}

/// Predict on `m` test rows. Logistic models return probabilities in (0, 1);
/// the others return the fitted regression function.
pub fn predict(model: &FittedPredictor, test: &TestFeatures) -> Result<Array1<f64>> {
    if test.p() != model.p() {
        return Err(Error::dim("test feature columns", model.p(), test.p()));
    }
    let out = match model {
        FittedPredictor::Linear(m) => m.predict(test.features()),
        FittedPredictor::Logistic(m) => m.predict(test.features()),
        FittedPredictor::Mlp(m) => m.predict(test.features()),
    };
    debug_assert!(out.iter().all(|v| v.is_finite()));
    Ok(out)
}
