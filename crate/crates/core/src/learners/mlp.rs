//! Fully connected ReLU network trained by gradient descent with early
//! stopping on a validation split.
//!
//! Inputs and targets are standardized internally from the training data and
//! predictions are mapped back, so the configured learning rate behaves the
//! same across data scales. Weights use He-normal initialization. All
//! randomness (initialization, split, batch order) comes from the fit seed.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::TrainingData;
use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub learning_rate: f64,
    pub patience_epochs: usize,
    pub validation_fraction: f64,
    pub max_epochs: usize,
    /// Rows per gradient step; `None` is full-batch.
    pub batch_size: Option<usize>,
    /// Overrides the fit seed for initialization and splitting when set.
    pub rng_seed: Option<u64>,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_layers: 2,
            hidden_width: 40,
            learning_rate: 0.01,
            patience_epochs: 100,
            validation_fraction: 0.2,
            max_epochs: 5000,
            batch_size: None,
            rng_seed: None,
        }
    }
}

impl MlpConfig {
    fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 || self.hidden_width == 0 {
            return Err(Error::invalid("mlp needs at least one hidden unit"));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::invalid("mlp learning rate must be positive"));
        }
        if self.patience_epochs == 0 || self.max_epochs == 0 {
            return Err(Error::invalid("mlp epoch limits must be positive"));
        }
        if !(0.0 < self.validation_fraction && self.validation_fraction < 1.0) {
            return Err(Error::invalid("mlp validation fraction must be in (0, 1)"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::invalid("mlp batch size must be positive"));
        }
        Ok(())
    }
}

/// Trained network plus the standardization constants baked in at fit time.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    x_mean: Array1<f64>,
    x_scale: Array1<f64>,
    y_mean: f64,
    y_scale: f64,
}

impl MlpModel {
    pub fn p(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn predict(&self, features: &Array2<f64>) -> Array1<f64> {
        let std = standardize_features(features, &self.x_mean, &self.x_scale);
        let out = forward(&self.weights, &self.biases, &std);
        out.mapv(|v| v * self.y_scale + self.y_mean)
    }
}

fn standardize_features(
    features: &Array2<f64>,
    mean: &Array1<f64>,
    scale: &Array1<f64>,
) -> Array2<f64> {
    let mut out = features.clone();
    for mut row in out.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - mean[j]) / scale[j];
        }
    }
    out
}

/// Forward pass; returns the output column as a vector.
fn forward(weights: &[Array2<f64>], biases: &[Array1<f64>], x: &Array2<f64>) -> Array1<f64> {
    let mut a = x.clone();
    let last = weights.len() - 1;
    for (l, (w, b)) in weights.iter().zip(biases).enumerate() {
        let mut z = a.dot(w);
        z += b;
        if l < last {
            z.mapv_inplace(|v| v.max(0.0));
        }
        a = z;
    }
    a.index_axis(Axis(1), 0).to_owned()
}

struct Batch<'a> {
    x: Array2<f64>,
    y: Array1<f64>,
    weights: &'a mut Vec<Array2<f64>>,
    biases: &'a mut Vec<Array1<f64>>,
}

/// One gradient step on the squared-error loss (mean over the batch).
fn gradient_step(batch: &mut Batch, lr: f64) {
    let n = batch.x.nrows() as f64;
    let last = batch.weights.len() - 1;

    // Forward, keeping activations.
    let mut activations: Vec<Array2<f64>> = vec![batch.x.clone()];
    for (l, (w, b)) in batch.weights.iter().zip(batch.biases.iter()).enumerate() {
        let mut z = activations[l].dot(w);
        z += b;
        if l < last {
            z.mapv_inplace(|v| v.max(0.0));
        }
        activations.push(z);
    }

    // Backward.
    let output = activations[last + 1].index_axis(Axis(1), 0);
    let mut delta: Array2<f64> = Array2::zeros((batch.x.nrows(), 1));
    for (r, d) in delta.column_mut(0).iter_mut().enumerate() {
        *d = 2.0 * (output[r] - batch.y[r]) / n;
    }

    for l in (0..=last).rev() {
        let grad_w = activations[l].t().dot(&delta);
        let grad_b = delta.sum_axis(Axis(0));
        let upstream = if l > 0 {
            let mut up = delta.dot(&batch.weights[l].t());
            // ReLU derivative through the stored post-activation values.
            for (u, a) in up.iter_mut().zip(activations[l].iter()) {
                if *a <= 0.0 {
                    *u = 0.0;
                }
            }
            Some(up)
        } else {
            None
        };
        batch.weights[l].scaled_add(-lr, &grad_w);
        batch.biases[l].scaled_add(-lr, &grad_b);
        if let Some(up) = upstream {
            delta = up;
        }
    }
}

fn validation_loss(
    weights: &[Array2<f64>],
    biases: &[Array1<f64>],
    x: &Array2<f64>,
    y: &Array1<f64>,
) -> f64 {
    let pred = forward(weights, biases, x);
    pred.iter()
        .zip(y.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / y.len() as f64
}

pub fn fit(config: &MlpConfig, data: &TrainingData, rng_seed: u64) -> Result<MlpModel> {
    config.validate()?;
    let mut rng = rng_from_seed(config.rng_seed.unwrap_or(rng_seed));

    let n = data.n();
    let p = data.p();

    // Standardization constants from the full training data.
    let x_mean = data.features().mean_axis(Axis(0)).expect("n >= 2");
    let mut x_scale = data.features().std_axis(Axis(0), 1.0);
    x_scale.mapv_inplace(|s| if s > 1e-12 { s } else { 1.0 });
    let y_mean = data.outcomes().mean().expect("n >= 2");
    let y_scale = {
        let s = data.outcomes().std(1.0);
        if s > 1e-12 {
            s
        } else {
            1.0
        }
    };

    let x_all = standardize_features(data.features(), &x_mean, &x_scale);
    let y_all = data.outcomes().mapv(|v| (v - y_mean) / y_scale);

    // Validation split.
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let n_val = ((n as f64 * config.validation_fraction).round() as usize).clamp(1, n - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let take = |idx: &[usize]| -> (Array2<f64>, Array1<f64>) {
        let mut x = Array2::zeros((idx.len(), p));
        let mut y = Array1::zeros(idx.len());
        for (r, &i) in idx.iter().enumerate() {
            x.row_mut(r).assign(&x_all.row(i));
            y[r] = y_all[i];
        }
        (x, y)
    };
    let (x_val, y_val) = take(val_idx);
    let (x_train, y_train) = take(train_idx);
    let n_train = train_idx.len();

    // He-normal initialization.
    let mut dims = vec![p];
    dims.extend(std::iter::repeat_n(
        config.hidden_width,
        config.hidden_layers,
    ));
    dims.push(1);
    let mut weights = Vec::with_capacity(dims.len() - 1);
    let mut biases = Vec::with_capacity(dims.len() - 1);
    for w in dims.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("finite std");
        weights.push(Array2::from_shape_fn((fan_in, fan_out), |_| {
            dist.sample(&mut rng)
        }));
        biases.push(Array1::zeros(fan_out));
    }

    let batch = config.batch_size.unwrap_or(n_train).min(n_train);
    let mut best_loss = f64::INFINITY;
    let mut best = (weights.clone(), biases.clone());
    let mut stale_epochs = 0usize;
    let mut batch_order: Vec<usize> = (0..n_train).collect();

    for _ in 0..config.max_epochs {
        if batch < n_train {
            for i in (1..n_train).rev() {
                let j = rng.random_range(0..=i);
                batch_order.swap(i, j);
            }
        }
        let mut start = 0;
        while start < n_train {
            let end = (start + batch).min(n_train);
            let (bx, by) = if batch < n_train {
                let idx = &batch_order[start..end];
                let mut x = Array2::zeros((idx.len(), p));
                let mut y = Array1::zeros(idx.len());
                for (r, &i) in idx.iter().enumerate() {
                    x.row_mut(r).assign(&x_train.row(i));
                    y[r] = y_train[i];
                }
                (x, y)
            } else {
                (x_train.clone(), y_train.clone())
            };
            let mut step = Batch {
                x: bx,
                y: by,
                weights: &mut weights,
                biases: &mut biases,
            };
            gradient_step(&mut step, config.learning_rate);
            start = end;
        }

        let loss = validation_loss(&weights, &biases, &x_val, &y_val);
        if loss < best_loss {
            best_loss = loss;
            best = (weights.clone(), biases.clone());
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.patience_epochs {
                break;
            }
        }
    }

    let (weights, biases) = best;
    if weights.iter().any(|w| w.iter().any(|v| !v.is_finite())) {
        return Err(Error::invalid(
            "mlp training diverged to non-finite weights",
        ));
    }
    Ok(MlpModel {
        weights,
        biases,
        x_mean,
        x_scale,
        y_mean,
        y_scale,
    })
}
