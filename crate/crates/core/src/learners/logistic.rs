//! Logistic regression via iteratively reweighted least squares.

use nalgebra::{Cholesky, DMatrix, DVector};
use ndarray::{Array1, Array2};

use crate::data::TrainingData;
use crate::error::{Error, Result};
use crate::learners::linear::design_matrix;
use crate::stats::expit;

const GRADIENT_TOL: f64 = 1e-8;
const MAX_ITERATIONS: usize = 100;
const RIDGE_JITTER: f64 = 1e-8;
const DIVERGENCE_NORM: f64 = 1e6;
/// Fitted probabilities this close to 0 or 1 indicate separation.
const SATURATION_EPS: f64 = 1e-8;

/// Fitted logistic model; coefficient 0 is the intercept. Predictions are
/// probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    coef: Array1<f64>,
    separation_warning: bool,
}

impl LogisticModel {
    pub fn from_coefficients(coef: Array1<f64>, separation_warning: bool) -> Self {
        Self {
            coef,
            separation_warning,
        }
    }

    pub fn p(&self) -> usize {
        self.coef.len() - 1
    }

    pub fn coefficients(&self) -> &Array1<f64> {
        &self.coef
    }

    pub fn separation_warning(&self) -> bool {
        self.separation_warning
    }

    pub fn predict(&self, features: &Array2<f64>) -> Array1<f64> {
        let mut out = Array1::zeros(features.nrows());
        for (r, row) in features.rows().into_iter().enumerate() {
            let mut eta = self.coef[0];
            for (j, v) in row.iter().enumerate() {
                eta += v * self.coef[j + 1];
            }
            // Keep probabilities strictly inside (0, 1).
            out[r] = expit(eta).clamp(1e-15, 1.0 - 1e-15);
        }
        out
    }
}

fn solve_newton_step(hessian: &DMatrix<f64>, gradient: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(chol) = Cholesky::new(hessian.clone()) {
        return Some(chol.solve(gradient));
    }
    let q = hessian.nrows();
    let jittered = hessian + DMatrix::identity(q, q) * RIDGE_JITTER;
    Cholesky::new(jittered).map(|chol| chol.solve(gradient))
}

pub fn fit(data: &TrainingData) -> Result<LogisticModel> {
    for (row, &y) in data.outcomes().iter().enumerate() {
        if y != 0.0 && y != 1.0 {
            return Err(Error::NonBinaryOutcome { row, value: y });
        }
    }

    let n = data.n();
    let q = data.p() + 1;
    let design = design_matrix(data.features());
    let y = DVector::from_iterator(n, data.outcomes().iter().cloned());

    let mut beta = DVector::zeros(q);
    let mut diverged = false;
    let mut mu = DVector::from_element(n, 0.5);

    for _ in 0..MAX_ITERATIONS {
        let eta = &design * &beta;
        mu = eta.map(expit);
        let gradient = design.transpose() * (&y - &mu);
        if gradient.amax() < GRADIENT_TOL {
            break;
        }

        let mut weighted = design.clone();
        for r in 0..n {
            let w = mu[r] * (1.0 - mu[r]);
            for c in 0..q {
                weighted[(r, c)] *= w;
            }
        }
        let hessian = design.transpose() * weighted;
        let Some(step) = solve_newton_step(&hessian, &gradient) else {
            return Err(Error::invalid("logistic IRLS system is singular"));
        };

        let candidate = &beta + &step;
        if candidate.norm() > DIVERGENCE_NORM || candidate.iter().any(|v| !v.is_finite()) {
            diverged = true;
            break;
        }
        beta = candidate;
    }

    let saturated = mu
        .iter()
        .any(|&p| p <= SATURATION_EPS || p >= 1.0 - SATURATION_EPS);

    Ok(LogisticModel {
        coef: Array1::from_iter(beta.iter().cloned()),
        separation_warning: diverged || saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn recovers_coefficients_on_clean_logit_data() {
        // Deterministic covariate grid, labels from thresholding the true
        // probability against a low-discrepancy sequence.
        let n = 4000;
        let beta = [0.3, 1.2];
        let mut feats = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        let mut u = 0.5_f64;
        for i in 0..n {
            let x = (i as f64 / n as f64) * 4.0 - 2.0;
            u = (u + 0.6180339887498949) % 1.0;
            let p = expit(beta[0] + beta[1] * x);
            feats.push(x);
            labels.push(if u < p { 1.0 } else { 0.0 });
        }
        let data = TrainingData::new(
            Array2::from_shape_vec((n, 1), feats).unwrap(),
            Array1::from_vec(labels),
        )
        .unwrap();
        let model = fit(&data).unwrap();
        assert!(!model.separation_warning());
        assert!((model.coefficients()[0] - beta[0]).abs() < 0.2);
        assert!((model.coefficients()[1] - beta[1]).abs() < 0.2);
    }

    #[test]
    fn probabilities_increase_with_linear_predictor() {
        let model = LogisticModel::from_coefficients(Array1::from_vec(vec![0.1, 2.0]), false);
        let xs = Array2::from_shape_vec((5, 1), vec![-2.0, -1.0, 0.0, 1.0, 2.0]).unwrap();
        let probs = model.predict(&xs);
        for w in probs.to_vec().windows(2) {
            assert!(w[0] < w[1]);
        }
    }
}
