//! Confidence-set construction for outcome excursions.
//!
//! The inputs are a prediction ensemble and a level of interest `c`. From
//! the ensemble we form the standardized residual field `g[b,i] =
//! (samples[b,i] - point[i]) / scale[i]` and the signed distances `d[i] =
//! (point[i] - c) / scale[i]`. Points with `|d|` inside a band `[-e2, e1]`
//! around the level form an inflated boundary; Monte-Carlo estimators over
//! the `B` ensemble rows bound the probability that the inner and outer sets
//! sandwich the true excursion set. The main construction sweeps the band
//! half-width over the sorted `|d|` values, calibrates the threshold `a` for
//! each band by bisection against the target lower bound, and keeps the band
//! with the tightest estimated bound gap.
//!
//! Two oracle-assisted variants used for validating the asymptotic theory
//! are included: [`construct_asymptotic`] (known boundary points) and
//! [`construct_corollary`] (known closest points to the boundary).

mod sweep;

use ndarray::{Array1, Array2};

use crate::data::{ConfidenceSetResult, PredictionEnsemble};
use crate::error::{Error, Result};

/// The `B x m` standardized residual matrix approximating the prediction
/// error field.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedResiduals {
    g: Array2<f64>,
}

impl StandardizedResiduals {
    pub fn g(&self) -> &Array2<f64> {
        &self.g
    }

    pub fn bootstrap_count(&self) -> usize {
        self.g.nrows()
    }

    pub fn m(&self) -> usize {
        self.g.ncols()
    }
}

/// Standardized distances from each test point's prediction to the level.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedDistances {
    d: Array1<f64>,
    level_c: f64,
}

impl SignedDistances {
    /// Wrap precomputed distances (used with oracle ground-truth values).
    pub fn from_values(d: Array1<f64>, level_c: f64) -> Result<Self> {
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("signed distances must be finite"));
        }
        Ok(Self { d, level_c })
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.d
    }

    pub fn level_c(&self) -> f64 {
        self.level_c
    }

    pub fn m(&self) -> usize {
        self.d.len()
    }
}

/// `g[b,i] = (samples[b,i] - point[i]) / scale[i]`.
pub fn standardize(ens: &PredictionEnsemble) -> StandardizedResiduals {
    let (b, m) = (ens.bootstrap_count(), ens.m());
    let mut g = Array2::zeros((b, m));
    for bi in 0..b {
        for i in 0..m {
            g[(bi, i)] = (ens.samples()[(bi, i)] - ens.point()[i]) / ens.scale()[i];
        }
    }
    StandardizedResiduals { g }
}

/// `d[i] = (point[i] - c) / scale[i]`.
pub fn signed_distances(ens: &PredictionEnsemble, c: f64) -> SignedDistances {
    let d = Array1::from_iter(
        ens.point()
            .iter()
            .zip(ens.scale().iter())
            .map(|(p, s)| (p - c) / s),
    );
    SignedDistances { d, level_c: c }
}

/// Inflated boundary around the level: the four index sets partition `0..m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub e1: f64,
    pub e2: f64,
    /// `{i : 0 <= d[i] <= e1}`
    pub upper_side: Vec<usize>,
    /// `{i : -e2 <= d[i] < 0}`
    pub lower_side: Vec<usize>,
    /// `{i : d[i] > e1}`
    pub above: Vec<usize>,
    /// `{i : d[i] < -e2}`
    pub below: Vec<usize>,
}

impl Band {
    pub fn new(d: &SignedDistances, e1: f64, e2: f64) -> Result<Self> {
        if !(e1 >= 0.0 && e1.is_finite() && e2 >= 0.0 && e2.is_finite()) {
            return Err(Error::invalid(
                "band half-widths must be nonnegative and finite",
            ));
        }
        let mut band = Band {
            e1,
            e2,
            upper_side: Vec::new(),
            lower_side: Vec::new(),
            above: Vec::new(),
            below: Vec::new(),
        };
        for (i, &di) in d.values().iter().enumerate() {
            if di >= 0.0 {
                if di <= e1 {
                    band.upper_side.push(i);
                } else {
                    band.above.push(i);
                }
            } else if di >= -e2 {
                band.lower_side.push(i);
            } else {
                band.below.push(i);
            }
        }
        Ok(band)
    }

    /// Symmetric band `e1 = e2 = e`.
    pub fn symmetric(d: &SignedDistances, e: f64) -> Result<Self> {
        Self::new(d, e, e)
    }

    pub fn band_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.upper_side
            .iter()
            .chain(self.lower_side.iter())
            .copied()
    }
}

/// Single float combination used by every lower-bound evaluation path, so
/// equal indicator counts give bit-equal estimates.
pub(crate) fn combine_lower_counts(
    band_count: usize,
    tail_pass_total: usize,
    tail_len: usize,
    b: usize,
) -> f64 {
    (band_count + tail_pass_total) as f64 / b as f64 - tail_len as f64
}

/// Monte-Carlo estimate of the finite-sample containment lower bound at
/// threshold `a`.
///
/// Over the `B` rows: the joint band term requires `max |g|` over the whole
/// band to stay below `a + min |d|` over the band; each point beyond the band
/// contributes its marginal probability minus one. Empty sets follow the
/// vacuous conventions (`max` over nothing passes, empty sums contribute 0),
/// and the result may be negative.
pub fn est_lower_bound(a: f64, g: &StandardizedResiduals, d: &SignedDistances, band: &Band) -> f64 {
    assert!(a >= 0.0, "threshold a must be nonnegative");
    let b = g.bootstrap_count();
    let dv = d.values();

    let min_absd = band
        .band_indices()
        .map(|i| dv[i].abs())
        .fold(f64::INFINITY, f64::min);
    let t1_threshold = a + min_absd;

    let mut band_count = 0usize;
    for row in g.g().rows() {
        let mut max_absg = f64::NEG_INFINITY;
        for i in band.band_indices() {
            max_absg = max_absg.max(row[i].abs());
        }
        if max_absg < t1_threshold {
            band_count += 1;
        }
    }

    let mut tail_pass_total = 0usize;
    for &i in &band.above {
        let threshold = -a - dv[i];
        tail_pass_total += g.g().column(i).iter().filter(|&&v| v >= threshold).count();
    }
    for &i in &band.below {
        let threshold = a + dv[i].abs();
        tail_pass_total += g.g().column(i).iter().filter(|&&v| v < threshold).count();
    }

    combine_lower_counts(
        band_count,
        tail_pass_total,
        band.above.len() + band.below.len(),
        b,
    )
}

/// Monte-Carlo estimate of the finite-sample containment upper bound at
/// threshold `a`.
///
/// A row passes when the signed minimum of `g` over the upper side clears
/// `-a - max d` and the maximum over the lower side stays below
/// `a + max |d|`; empty sides are vacuously true.
pub fn est_upper_bound(a: f64, g: &StandardizedResiduals, d: &SignedDistances, band: &Band) -> f64 {
    assert!(a >= 0.0, "threshold a must be nonnegative");
    let b = g.bootstrap_count();
    let dv = d.values();

    let upper_max_d = band
        .upper_side
        .iter()
        .map(|&i| dv[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let lower_max_absd = band
        .lower_side
        .iter()
        .map(|&i| dv[i].abs())
        .fold(f64::NEG_INFINITY, f64::max);

    let mut count = 0usize;
    for row in g.g().rows() {
        let upper_ok = if band.upper_side.is_empty() {
            true
        } else {
            let min_g = band
                .upper_side
                .iter()
                .map(|&i| row[i])
                .fold(f64::INFINITY, f64::min);
            min_g >= -a - upper_max_d
        };
        let lower_ok = if band.lower_side.is_empty() {
            true
        } else {
            let max_g = band
                .lower_side
                .iter()
                .map(|&i| row[i])
                .fold(f64::NEG_INFINITY, f64::max);
            max_g < a + lower_max_absd
        };
        if upper_ok && lower_ok {
            count += 1;
        }
    }
    count as f64 / b as f64
}

/// Threshold search interval; the bisection never proposes values outside
/// `[0.1, 10]`.
pub const THRESHOLD_SEARCH_LOW: f64 = 0.1;
pub const THRESHOLD_SEARCH_HIGH: f64 = 10.0;
const ELB_STOP_TOL: f64 = 1e-3;
const MAX_BISECTION_STEPS: usize = 60;

/// Calibrated threshold plus the lower-bound estimate it achieves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibratedThreshold {
    pub a: f64,
    pub elb: f64,
    /// Set when even the largest searchable threshold cannot reach the
    /// target lower bound.
    pub unattainable: bool,
}

/// Bisection on a nondecreasing step function of `a`. ELB is piecewise
/// constant, so exact convergence to the target is not guaranteed; the loop
/// stops once within 0.001 of the target or after 60 halvings.
pub(crate) fn bisect_threshold(
    tlb: f64,
    mut elb_at: impl FnMut(f64) -> f64,
) -> CalibratedThreshold {
    let elb_high = elb_at(THRESHOLD_SEARCH_HIGH);
    if elb_high < tlb {
        return CalibratedThreshold {
            a: THRESHOLD_SEARCH_HIGH,
            elb: elb_high,
            unattainable: true,
        };
    }

    let mut a_high = THRESHOLD_SEARCH_HIGH;
    let mut a_low = THRESHOLD_SEARCH_LOW;
    let mut a_mid = 0.5 * (a_high + a_low);
    let mut elb = elb_at(a_mid);
    for _ in 1..MAX_BISECTION_STEPS {
        if (elb - tlb).abs() <= ELB_STOP_TOL {
            break;
        }
        if elb > tlb {
            a_high = a_mid;
        } else {
            a_low = a_mid;
        }
        a_mid = 0.5 * (a_high + a_low);
        elb = elb_at(a_mid);
    }
    CalibratedThreshold {
        a: a_mid,
        elb,
        unattainable: false,
    }
}

/// Calibrate the threshold for a fixed band by bisecting [`est_lower_bound`]
/// against the target lower bound.
pub fn calibrate_threshold(
    g: &StandardizedResiduals,
    d: &SignedDistances,
    band: &Band,
    tlb: f64,
) -> Result<CalibratedThreshold> {
    validate_tlb(tlb)?;
    Ok(bisect_threshold(tlb, |a| est_lower_bound(a, g, d, band)))
}

fn validate_tlb(tlb: f64) -> Result<()> {
    if !(0.0 < tlb && tlb < 1.0) {
        return Err(Error::invalid(format!(
            "target lower bound must be in (0, 1), found {tlb}"
        )));
    }
    Ok(())
}

fn decision_sets(ens: &PredictionEnsemble, c: f64, a: f64) -> (Vec<usize>, Vec<usize>) {
    let mut inner = Vec::new();
    let mut outer = Vec::new();
    for i in 0..ens.m() {
        let point = ens.point()[i];
        let width = a * ens.scale()[i];
        if point - width >= c {
            inner.push(i);
        }
        if point + width >= c {
            outer.push(i);
        }
    }
    (inner, outer)
}

/// The main construction. Sweeps the symmetric band half-width `e` over the
/// ascending distinct `|d|` values, calibrates `a` for each band, and keeps
/// the candidate minimizing `EUB - ELB` (ties go to the smaller `e`).
pub fn construct(ens: &PredictionEnsemble, c: f64, tlb: f64) -> Result<ConfidenceSetResult> {
    validate_tlb(tlb)?;
    let g = standardize(ens);
    let d = signed_distances(ens, c);

    let mut abs_sorted: Vec<f64> = d.values().iter().map(|v| v.abs()).collect();
    abs_sorted.sort_by(|x, y| x.total_cmp(y));
    abs_sorted.dedup();

    let mut sweep = sweep::BandSweep::new(&g, &d);

    struct Candidate {
        e: f64,
        a: f64,
        elb: f64,
        eub: f64,
        gap: f64,
        boundary_count: usize,
        unattainable: bool,
    }
    let mut best: Option<Candidate> = None;

    for &e in &abs_sorted {
        sweep.advance_to(e);
        let cal = bisect_threshold(tlb, |a| sweep.est_lower_bound(a));
        let eub = sweep.est_upper_bound(cal.a);
        let gap = eub - cal.elb;
        let better = match &best {
            None => true,
            Some(current) => gap < current.gap,
        };
        if better {
            best = Some(Candidate {
                e,
                a: cal.a,
                elb: cal.elb,
                eub,
                gap,
                boundary_count: sweep.band_len(),
                unattainable: cal.unattainable,
            });
        }
    }

    let best = best.expect("at least one band candidate");
    let (inner, outer) = decision_sets(ens, c, best.a);
    let flags = if best.unattainable {
        vec![ConfidenceSetResult::FLAG_TLB_UNATTAINABLE.to_string()]
    } else {
        Vec::new()
    };
    Ok(ConfidenceSetResult {
        inner,
        outer,
        threshold_a: best.a,
        band_halfwidth_e: best.e,
        elb: best.elb,
        eub: best.eub,
        boundary_count: best.boundary_count,
        flags,
    })
}

const ASYMPTOTIC_STEP: f64 = 1e-3;
const ASYMPTOTIC_MAX_A: f64 = 100.0;

/// Construction that assumes the boundary points `{i : d(x_i) = 0}` are
/// known (simulation oracle knowledge). Starting from `a = 0.001` the
/// threshold grows in steps of 0.001 until the estimated containment
/// probability reaches the target; the estimate is the fraction of rows
/// whose minimum of `g` over the boundary points exceeds `-a`. The reported
/// EUB equals the ELB.
pub fn construct_asymptotic(
    ens: &PredictionEnsemble,
    c: f64,
    tlb: f64,
    boundary_indices: &[usize],
) -> Result<ConfidenceSetResult> {
    validate_tlb(tlb)?;
    if boundary_indices.is_empty() {
        return Err(Error::invalid("boundary index set must be non-empty"));
    }
    if boundary_indices.iter().any(|&i| i >= ens.m()) {
        return Err(Error::invalid("boundary index out of range"));
    }
    let g = standardize(ens);

    let mut row_mins: Vec<f64> = g
        .g()
        .rows()
        .into_iter()
        .map(|row| {
            boundary_indices
                .iter()
                .map(|&i| row[i])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    row_mins.sort_by(|x, y| x.total_cmp(y));
    let b = g.bootstrap_count();
    // Count of row minima strictly above -a.
    let elb_at = |a: f64| -> f64 {
        let not_above = row_mins.partition_point(|&v| v <= -a);
        (b - not_above) as f64 / b as f64
    };

    let mut step = 1usize;
    let (a, elb, unattainable) = loop {
        let a = step as f64 * ASYMPTOTIC_STEP;
        let elb = elb_at(a);
        if elb >= tlb {
            break (a, elb, false);
        }
        if a > ASYMPTOTIC_MAX_A {
            break (a, elb, true);
        }
        step += 1;
    };

    let (inner, outer) = decision_sets(ens, c, a);
    let flags = if unattainable {
        vec![ConfidenceSetResult::FLAG_TLB_UNATTAINABLE.to_string()]
    } else {
        Vec::new()
    };
    Ok(ConfidenceSetResult {
        inner,
        outer,
        threshold_a: a,
        band_halfwidth_e: 0.0,
        elb,
        eub: elb,
        boundary_count: boundary_indices.len(),
        flags,
    })
}

/// Construction that assumes the closest points to the boundary on each side
/// are known. The threshold is fixed at `a = 1`; only the upper bound is
/// estimated (the lower bound is not controlled, and `elb` is reported as 0).
pub fn construct_corollary(
    ens: &PredictionEnsemble,
    c: f64,
    plus_index: usize,
    minus_index: usize,
    d_true: &SignedDistances,
) -> Result<ConfidenceSetResult> {
    if d_true.m() != ens.m() {
        return Err(Error::dim("signed distance length", ens.m(), d_true.m()));
    }
    if plus_index >= ens.m() || minus_index >= ens.m() {
        return Err(Error::invalid("closest-point index out of range"));
    }
    let d_plus = d_true.values()[plus_index];
    let d_minus = d_true.values()[minus_index];
    if d_plus < 0.0 {
        return Err(Error::invalid(format!(
            "plus index must have nonnegative signed distance, found {d_plus}"
        )));
    }
    if d_minus >= 0.0 {
        return Err(Error::invalid(format!(
            "minus index must have negative signed distance, found {d_minus}"
        )));
    }

    let a = 1.0;
    let g = standardize(ens);
    let plus_threshold = -a - d_plus;
    let minus_threshold = a + d_minus.abs();
    let count = g
        .g()
        .rows()
        .into_iter()
        .filter(|row| row[plus_index] >= plus_threshold && row[minus_index] < minus_threshold)
        .count();
    let eub = count as f64 / g.bootstrap_count() as f64;

    let (inner, outer) = decision_sets(ens, c, a);
    Ok(ConfidenceSetResult {
        inner,
        outer,
        threshold_a: a,
        band_halfwidth_e: 0.0,
        elb: 0.0,
        eub,
        boundary_count: 2,
        flags: Vec::new(),
    })
}

#[cfg(test)]
mod tests;
