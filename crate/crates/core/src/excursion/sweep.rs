//! Incremental band evaluator behind [`super::construct`].
//!
//! The construction sweeps the band half-width over ascending `|d|` values,
//! so each step only adds points to the band. Maintaining the per-row band
//! statistics incrementally and presorting the residual columns drops one
//! lower-bound evaluation from `O(B m)` to `O((m - k) log B)`, which is what
//! makes the bisection-inside-sweep loop affordable at simulation scale.
//!
//! Indicator counts are computed with the same thresholds and combined with
//! the same float expression as the plain estimators in the parent module,
//! so both paths return bit-equal values; a property test enforces this.

use super::{combine_lower_counts, SignedDistances, StandardizedResiduals};

pub(crate) struct BandSweep<'a> {
    g: &'a StandardizedResiduals,
    d: &'a SignedDistances,
    b: usize,
    m: usize,
    /// Point indices sorted by `|d|` ascending.
    order: Vec<usize>,
    /// Number of leading `order` entries currently in the band.
    in_band: usize,
    band_min_absd: f64,
    band_max_absg: Vec<f64>,
    sorted_band_max: Vec<f64>,
    upper_min_g: Vec<f64>,
    lower_max_g: Vec<f64>,
    upper_max_d: f64,
    lower_max_absd: f64,
    upper_len: usize,
    lower_len: usize,
    /// Per point: that point's residual column, sorted.
    cols_sorted: Vec<Vec<f64>>,
}

impl<'a> BandSweep<'a> {
    pub(crate) fn new(g: &'a StandardizedResiduals, d: &'a SignedDistances) -> Self {
        let b = g.bootstrap_count();
        let m = g.m();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&x, &y| d.values()[x].abs().total_cmp(&d.values()[y].abs()));

        let cols_sorted = (0..m)
            .map(|i| {
                let mut col: Vec<f64> = g.g().column(i).to_vec();
                col.sort_by(|x, y| x.total_cmp(y));
                col
            })
            .collect();

        Self {
            g,
            d,
            b,
            m,
            order,
            in_band: 0,
            band_min_absd: f64::INFINITY,
            band_max_absg: vec![f64::NEG_INFINITY; b],
            sorted_band_max: vec![f64::NEG_INFINITY; b],
            upper_min_g: vec![f64::INFINITY; b],
            lower_max_g: vec![f64::NEG_INFINITY; b],
            upper_max_d: f64::NEG_INFINITY,
            lower_max_absd: f64::NEG_INFINITY,
            upper_len: 0,
            lower_len: 0,
            cols_sorted,
        }
    }

    /// Grow the band to cover every point with `|d| <= e`.
    pub(crate) fn advance_to(&mut self, e: f64) {
        let mut grew = false;
        while self.in_band < self.m {
            let i = self.order[self.in_band];
            let di = self.d.values()[i];
            if di.abs() > e {
                break;
            }
            self.band_min_absd = self.band_min_absd.min(di.abs());
            for (row, v) in self.g.g().column(i).iter().enumerate() {
                let absv = v.abs();
                if absv > self.band_max_absg[row] {
                    self.band_max_absg[row] = absv;
                }
                if di >= 0.0 {
                    if *v < self.upper_min_g[row] {
                        self.upper_min_g[row] = *v;
                    }
                } else if *v > self.lower_max_g[row] {
                    self.lower_max_g[row] = *v;
                }
            }
            if di >= 0.0 {
                self.upper_max_d = self.upper_max_d.max(di);
                self.upper_len += 1;
            } else {
                self.lower_max_absd = self.lower_max_absd.max(di.abs());
                self.lower_len += 1;
            }
            self.in_band += 1;
            grew = true;
        }
        if grew {
            self.sorted_band_max.copy_from_slice(&self.band_max_absg);
            self.sorted_band_max.sort_by(|x, y| x.total_cmp(y));
        }
    }

    pub(crate) fn band_len(&self) -> usize {
        self.in_band
    }

    pub(crate) fn est_lower_bound(&self, a: f64) -> f64 {
        let t1_threshold = a + self.band_min_absd;
        let band_count = self.sorted_band_max.partition_point(|&v| v < t1_threshold);

        let mut tail_pass_total = 0usize;
        for &i in &self.order[self.in_band..] {
            let di = self.d.values()[i];
            let col = &self.cols_sorted[i];
            if di > 0.0 {
                let threshold = -a - di;
                tail_pass_total += self.b - col.partition_point(|&v| v < threshold);
            } else {
                let threshold = a + di.abs();
                tail_pass_total += col.partition_point(|&v| v < threshold);
            }
        }
        combine_lower_counts(band_count, tail_pass_total, self.m - self.in_band, self.b)
    }

    pub(crate) fn est_upper_bound(&self, a: f64) -> f64 {
        let upper_threshold = -a - self.upper_max_d;
        let lower_threshold = a + self.lower_max_absd;
        let mut count = 0usize;
        for row in 0..self.b {
            let upper_ok = self.upper_len == 0 || self.upper_min_g[row] >= upper_threshold;
            let lower_ok = self.lower_len == 0 || self.lower_max_g[row] < lower_threshold;
            if upper_ok && lower_ok {
                count += 1;
            }
        }
        count as f64 / self.b as f64
    }
}
