//! Reference constructions by inverting confidence intervals.
//!
//! Two comparison arms: pointwise intervals from per-column bootstrap
//! quantiles, and simultaneous intervals from the bootstrap distribution of
//! the largest standardized residual. Inverting either band at the level `c`
//! yields inner/outer sets, which the simulation lab compares against the
//! main construction.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::data::PredictionEnsemble;
use crate::error::{Error, Result};
use crate::excursion::standardize;
use crate::stats::quantile_of;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandKind {
    Pointwise,
    Simultaneous,
}

/// Per-point interval limits.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBands {
    pub lower: Array1<f64>,
    pub upper: Array1<f64>,
    pub kind: BandKind,
}

impl IntervalBands {
    fn new(lower: Array1<f64>, upper: Array1<f64>, kind: BandKind) -> Self {
        debug_assert!(lower.iter().zip(upper.iter()).all(|(l, u)| l <= u));
        Self { lower, upper, kind }
    }
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must be in (0, 1), found {alpha}"
        )));
    }
    Ok(())
}

/// Pointwise bands: per column, the empirical `alpha/2` and `1 - alpha/2`
/// quantiles of the bootstrap predictions.
pub fn pointwise_bands(ens: &PredictionEnsemble, alpha: f64) -> Result<IntervalBands> {
    validate_alpha(alpha)?;
    let m = ens.m();
    let mut lower = Array1::zeros(m);
    let mut upper = Array1::zeros(m);
    for i in 0..m {
        let col: Vec<f64> = ens.samples().column(i).to_vec();
        lower[i] = quantile_of(&col, alpha / 2.0);
        upper[i] = quantile_of(&col, 1.0 - alpha / 2.0);
    }
    Ok(IntervalBands::new(lower, upper, BandKind::Pointwise))
}

/// Simultaneous bands: `point +- q * scale` where `q` is the empirical
/// `1 - alpha` quantile of the per-replicate maximum of `|g|`.
pub fn simultaneous_bands(ens: &PredictionEnsemble, alpha: f64) -> Result<IntervalBands> {
    validate_alpha(alpha)?;
    let g = standardize(ens);
    let sup_stats: Vec<f64> = g
        .g()
        .rows()
        .into_iter()
        .map(|row| row.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
        .collect();
    let q = quantile_of(&sup_stats, 1.0 - alpha);
    let lower = Array1::from_iter(
        ens.point()
            .iter()
            .zip(ens.scale().iter())
            .map(|(p, s)| p - q * s),
    );
    let upper = Array1::from_iter(
        ens.point()
            .iter()
            .zip(ens.scale().iter())
            .map(|(p, s)| p + q * s),
    );
    Ok(IntervalBands::new(lower, upper, BandKind::Simultaneous))
}

/// Symmetric pointwise bands built from per-column `|g|` quantiles:
/// `point +- q_i * scale` with `q_i` the `1 - alpha` quantile of `|g[:, i]|`.
/// The simultaneous band dominates these pointwise, which makes the
/// conservativeness ordering exact rather than approximate.
pub fn symmetric_pointwise_bands(ens: &PredictionEnsemble, alpha: f64) -> Result<IntervalBands> {
    validate_alpha(alpha)?;
    let g = standardize(ens);
    let m = ens.m();
    let mut lower = Array1::zeros(m);
    let mut upper = Array1::zeros(m);
    for i in 0..m {
        let abs_col: Vec<f64> = g.g().column(i).iter().map(|v| v.abs()).collect();
        let q = quantile_of(&abs_col, 1.0 - alpha);
        lower[i] = ens.point()[i] - q * ens.scale()[i];
        upper[i] = ens.point()[i] + q * ens.scale()[i];
    }
    Ok(IntervalBands::new(lower, upper, BandKind::Pointwise))
}

/// Invert bands at the level: inner keeps points whose whole interval sits
/// at or above `c`, outer keeps points whose interval reaches `c`.
pub fn invert_bands(bands: &IntervalBands, c: f64) -> (Vec<usize>, Vec<usize>) {
    let inner = (0..bands.lower.len())
        .filter(|&i| bands.lower[i] >= c)
        .collect();
    let outer = (0..bands.upper.len())
        .filter(|&i| bands.upper[i] >= c)
        .collect();
    (inner, outer)
}

/// The realized-outcome variant is the same inversion applied to an ensemble
/// produced by [`crate::bootstrap::bootstrap_realized`]; the residual
/// injection happens in the bootstrap, not here.
pub fn realized_variant(
    ens_realized: &PredictionEnsemble,
    alpha: f64,
    c: f64,
    kind: BandKind,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let bands = match kind {
        BandKind::Pointwise => pointwise_bands(ens_realized, alpha)?,
        BandKind::Simultaneous => simultaneous_bands(ens_realized, alpha)?,
    };
    Ok(invert_bands(&bands, c))
}
