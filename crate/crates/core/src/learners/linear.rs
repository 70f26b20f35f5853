//! Ordinary least squares with a minimum-norm fallback on rank deficiency.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};

use crate::data::TrainingData;
use crate::error::{Error, Result};

/// Fitted linear model; coefficient 0 is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    coef: Array1<f64>,
}

impl LinearModel {
    pub fn from_coefficients(coef: Array1<f64>) -> Self {
        Self { coef }
    }

    pub fn p(&self) -> usize {
        self.coef.len() - 1
    }

    /// Intercept-first coefficient vector of length `p + 1`.
    pub fn coefficients(&self) -> &Array1<f64> {
        &self.coef
    }

    pub fn linear_predictor(&self, features: &Array2<f64>) -> Array1<f64> {
        let mut out = Array1::from_elem(features.nrows(), self.coef[0]);
        for (r, row) in features.rows().into_iter().enumerate() {
            let mut acc = 0.0;
            for (j, v) in row.iter().enumerate() {
                acc += v * self.coef[j + 1];
            }
            out[r] += acc;
        }
        out
    }

    pub fn predict(&self, features: &Array2<f64>) -> Array1<f64> {
        self.linear_predictor(features)
    }
}

/// Design matrix with an intercept column prepended.
pub(crate) fn design_matrix(features: &Array2<f64>) -> DMatrix<f64> {
    let (n, p) = features.dim();
    DMatrix::from_fn(
        n,
        p + 1,
        |r, c| if c == 0 { 1.0 } else { features[(r, c - 1)] },
    )
}

/// Least-squares solve via SVD. Singular values below a relative tolerance
/// are dropped, which yields the minimum-norm solution on rank-deficient
/// designs.
pub(crate) fn least_squares(design: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let eps = max_sv * design.nrows().max(design.ncols()) as f64 * f64::EPSILON;
    svd.solve(rhs, eps)
        .map_err(|e| Error::invalid(format!("least-squares solve failed: {e}")))
}

pub fn fit(data: &TrainingData) -> Result<LinearModel> {
    let (n, p) = (data.n(), data.p());
    if n <= p {
        return Err(Error::Underdetermined { n, p });
    }
    let design = design_matrix(data.features());
    let rhs = DVector::from_iterator(n, data.outcomes().iter().cloned());
    let sol = least_squares(&design, &rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "linear fit produced non-finite coefficients",
        ));
    }
    Ok(LinearModel {
        coef: Array1::from_iter(sol.iter().cloned()),
    })
}
