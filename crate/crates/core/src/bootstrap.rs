//! Nonparametric bootstrap engines.
//!
//! Both engines fit the model once on the full training data for the point
//! prediction, then fit `B` replicates on with-replacement resamples of the
//! training rows. The expected-outcome engine stores the replicate
//! predictions as is; the realized-outcome engine adds to each replicate's
//! predictions residuals drawn from that replicate's out-of-bag rows, which
//! injects the irreducible-noise component.
//!
//! Replicate `b` derives all of its randomness from a child seed of
//! `(rng_seed, b)`, so results are identical regardless of how replicates
//! are scheduled across threads.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::data::{PredictionEnsemble, TestFeatures, TrainingData, DEFAULT_SCALE_FLOOR};
use crate::error::{Error, Result};
use crate::exec::try_map_indexed;
use crate::learners::{fit, predict, FittedPredictor, PredictorSpec};
use crate::seeding::{child_seed, rng_from_seed};

/// Stream id of the full-data fit; replicate `b` uses stream `b + 1`.
const FULL_FIT_STREAM: u64 = 0;

/// Redraws allowed per replicate before an empty out-of-bag set is an error.
const MAX_OOB_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    /// Number of bootstrap replicates B.
    pub b: usize,
    pub rng_seed: u64,
    /// Lower bound applied to the column standard deviations.
    pub scale_floor: f64,
}

impl BootstrapConfig {
    pub fn new(b: usize, rng_seed: u64) -> Self {
        Self {
            b,
            rng_seed,
            scale_floor: DEFAULT_SCALE_FLOOR,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.b < 2 {
            return Err(Error::invalid(format!(
                "bootstrap count must be at least 2, found {}",
                self.b
            )));
        }
        if self.scale_floor <= 0.0 || !self.scale_floor.is_finite() {
            return Err(Error::invalid("scale floor must be positive and finite"));
        }
        Ok(())
    }
}

/// Full-data fit shared by both engines; exposed so callers can reuse the
/// fitted model (for example to report separation warnings).
pub fn full_fit(
    spec: &PredictorSpec,
    train: &TrainingData,
    cfg: &BootstrapConfig,
) -> Result<FittedPredictor> {
    fit(spec, train, child_seed(cfg.rng_seed, FULL_FIT_STREAM))
}

fn check_dims(train: &TrainingData, test: &TestFeatures) -> Result<()> {
    if train.p() != test.p() {
        return Err(Error::dim(
            "test feature columns vs training",
            train.p(),
            test.p(),
        ));
    }
    Ok(())
}

/// Bootstrap ensemble for the expected outcome `f(x)`.
pub fn bootstrap_expected(
    spec: &PredictorSpec,
    train: &TrainingData,
    test: &TestFeatures,
    cfg: &BootstrapConfig,
) -> Result<PredictionEnsemble> {
    cfg.validate()?;
    check_dims(train, test)?;
    let point = predict(&full_fit(spec, train, cfg)?, test)?;

    let rows = try_map_indexed(cfg.b, |b| {
        replicate_expected(spec, train, test, cfg.rng_seed, b).map_err(|source| Error::Replicate {
            replicate: b,
            source: Box::new(source),
        })
    })?;

    assemble(point, rows, test.m(), cfg.scale_floor)
}

/// Bootstrap ensemble for the realized outcome `f(x) + e`.
pub fn bootstrap_realized(
    spec: &PredictorSpec,
    train: &TrainingData,
    test: &TestFeatures,
    cfg: &BootstrapConfig,
) -> Result<PredictionEnsemble> {
    cfg.validate()?;
    check_dims(train, test)?;
    // The point prediction stays noise-free and matches bootstrap_expected
    // exactly for the same seed.
    let point = predict(&full_fit(spec, train, cfg)?, test)?;

    let rows = try_map_indexed(cfg.b, |b| {
        replicate_realized(spec, train, test, cfg.rng_seed, b).map_err(|source| Error::Replicate {
            replicate: b,
            source: Box::new(source),
        })
    })?;

    assemble(point, rows, test.m(), cfg.scale_floor)
}

fn assemble(
    point: Array1<f64>,
    rows: Vec<Array1<f64>>,
    m: usize,
    scale_floor: f64,
) -> Result<PredictionEnsemble> {
    let mut samples = Array2::zeros((rows.len(), m));
    for (b, row) in rows.into_iter().enumerate() {
        samples.row_mut(b).assign(&row);
    }
    PredictionEnsemble::from_samples(point, samples, scale_floor)
}

fn draw_resample_indices(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

fn replicate_expected(
    spec: &PredictorSpec,
    train: &TrainingData,
    test: &TestFeatures,
    seed: u64,
    b: usize,
) -> Result<Array1<f64>> {
    let mut rng = rng_from_seed(child_seed(seed, b as u64 + 1));
    let indices = draw_resample_indices(&mut rng, train.n());
    let fit_seed: u64 = rng.random();
    let resample = train.select_rows(&indices)?;
    let model = fit(spec, &resample, fit_seed)?;
    predict(&model, test)
}

fn replicate_realized(
    spec: &PredictorSpec,
    train: &TrainingData,
    test: &TestFeatures,
    seed: u64,
    b: usize,
) -> Result<Array1<f64>> {
    let mut rng = rng_from_seed(child_seed(seed, b as u64 + 1));
    let n = train.n();

    // Redraw the whole resample while its out-of-bag set is empty.
    let mut indices = draw_resample_indices(&mut rng, n);
    let mut oob = out_of_bag(&indices, n);
    let mut retries = 0;
    while oob.is_empty() {
        retries += 1;
        if retries > MAX_OOB_RETRIES {
            return Err(Error::EmptyOutOfBag {
                replicate: b,
                retries: MAX_OOB_RETRIES,
            });
        }
        indices = draw_resample_indices(&mut rng, n);
        oob = out_of_bag(&indices, n);
    }

    let fit_seed: u64 = rng.random();
    let resample = train.select_rows(&indices)?;
    let model = fit(spec, &resample, fit_seed)?;
    let mut predictions = predict(&model, test)?;

    // Out-of-bag residuals for this replicate.
    let mut oob_features = Array2::zeros((oob.len(), train.p()));
    for (r, &i) in oob.iter().enumerate() {
        oob_features.row_mut(r).assign(&train.features().row(i));
    }
    let oob_pred = match &model {
        FittedPredictor::Linear(m) => m.predict(&oob_features),
        FittedPredictor::Logistic(m) => m.predict(&oob_features),
        FittedPredictor::Mlp(m) => m.predict(&oob_features),
    };
    let residuals: Vec<f64> = oob
        .iter()
        .enumerate()
        .map(|(r, &i)| train.outcomes()[i] - oob_pred[r])
        .collect();

    // Draw with replacement to match the test dimension.
    for v in predictions.iter_mut() {
        *v += residuals[rng.random_range(0..residuals.len())];
    }
    Ok(predictions)
}

fn out_of_bag(indices: &[usize], n: usize) -> Vec<usize> {
    let mut selected = vec![false; n];
    for &i in indices {
        selected[i] = true;
    }
    (0..n).filter(|&i| !selected[i]).collect()
}
