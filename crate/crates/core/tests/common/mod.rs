//! Independent oracles shared by the integration and acceptance tests.
//!
//! Everything here is written against plain slices with literal loops over
//! rows and indicators, deliberately not sharing any code with the library's
//! estimators. Counts are the currency: two implementations agree when every
//! indicator count matches.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Indicator counts and value of the finite-sample lower bound, evaluated by
/// direct enumeration.
pub struct BruteLower {
    pub band_count: usize,
    pub tail_pass: usize,
    pub tail_len: usize,
    pub value: f64,
}

/// Lower bound at threshold `a` for the band `[-e2, e1]`, by brute force.
pub fn brute_lower(a: f64, g: &[Vec<f64>], d: &[f64], e1: f64, e2: f64) -> BruteLower {
    let b = g.len();
    let m = d.len();

    let in_band = |i: usize| (d[i] >= 0.0 && d[i] <= e1) || (d[i] < 0.0 && d[i] >= -e2);
    let above = |i: usize| d[i] > e1;
    let below = |i: usize| d[i] < -e2;

    // Joint band term: sup of |g| over the band stays under a + inf of |d|
    // over the band. Empty band: sup = -inf, inf = +inf, indicator true.
    let mut inf_absd = f64::INFINITY;
    for i in 0..m {
        if in_band(i) && d[i].abs() < inf_absd {
            inf_absd = d[i].abs();
        }
    }
    let mut band_count = 0usize;
    for row in g {
        let mut sup_absg = f64::NEG_INFINITY;
        for i in 0..m {
            if in_band(i) && row[i].abs() > sup_absg {
                sup_absg = row[i].abs();
            }
        }
        if sup_absg < a + inf_absd {
            band_count += 1;
        }
    }

    // Marginal tail terms.
    let mut tail_pass = 0usize;
    let mut tail_len = 0usize;
    for i in 0..m {
        if above(i) {
            tail_len += 1;
            for row in g {
                if row[i] >= -a - d[i] {
                    tail_pass += 1;
                }
            }
        } else if below(i) {
            tail_len += 1;
            for row in g {
                if row[i] < a + d[i].abs() {
                    tail_pass += 1;
                }
            }
        }
    }

    let value = (band_count + tail_pass) as f64 / b as f64 - tail_len as f64;
    BruteLower {
        band_count,
        tail_pass,
        tail_len,
        value,
    }
}

/// Row count and value of the upper bound, by brute force.
pub struct BruteUpper {
    pub row_count: usize,
    pub value: f64,
}

pub fn brute_upper(a: f64, g: &[Vec<f64>], d: &[f64], e1: f64, e2: f64) -> BruteUpper {
    let b = g.len();
    let m = d.len();
    let upper: Vec<usize> = (0..m).filter(|&i| d[i] >= 0.0 && d[i] <= e1).collect();
    let lower: Vec<usize> = (0..m).filter(|&i| d[i] < 0.0 && d[i] >= -e2).collect();

    let upper_max_d = upper
        .iter()
        .map(|&i| d[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let lower_max_absd = lower
        .iter()
        .map(|&i| d[i].abs())
        .fold(f64::NEG_INFINITY, f64::max);

    let mut row_count = 0usize;
    for row in g {
        let upper_ok = if upper.is_empty() {
            true
        } else {
            let mut min_g = f64::INFINITY;
            for &i in &upper {
                if row[i] < min_g {
                    min_g = row[i];
                }
            }
            min_g >= -a - upper_max_d
        };
        let lower_ok = if lower.is_empty() {
            true
        } else {
            let mut max_g = f64::NEG_INFINITY;
            for &i in &lower {
                if row[i] > max_g {
                    max_g = row[i];
                }
            }
            max_g < a + lower_max_absd
        };
        if upper_ok && lower_ok {
            row_count += 1;
        }
    }
    BruteUpper {
        row_count,
        value: row_count as f64 / b as f64,
    }
}

/// Output of the straight-line construction transliteration.
pub struct BookResult {
    pub inner: Vec<usize>,
    pub outer: Vec<usize>,
    pub a: f64,
    pub e: f64,
    pub elb: f64,
    pub eub: f64,
}

/// Straight-line transliteration of the construction pseudocode, running on
/// raw slices with the brute-force estimators: sort |d| ascending, for each e
/// bisect a against the target on [0.1, 10] (60-step cap), score the band by
/// EUB - ELB, keep the best, threshold the point predictions with the winner.
pub fn construct_by_the_book(
    point: &[f64],
    scale: &[f64],
    samples: &[Vec<f64>],
    c: f64,
    tlb: f64,
) -> BookResult {
    let b = samples.len();
    let m = point.len();

    let mut g = vec![vec![0.0; m]; b];
    for (bi, row) in samples.iter().enumerate() {
        for i in 0..m {
            g[bi][i] = (row[i] - point[i]) / scale[i];
        }
    }
    let d: Vec<f64> = (0..m).map(|i| (point[i] - c) / scale[i]).collect();

    let mut grid: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    grid.sort_by(|x, y| x.total_cmp(y));
    grid.dedup();

    let mut best_r = f64::INFINITY;
    let mut best = (0.0, 0.0, 0.0, 0.0); // (a, e, elb, eub)
    for &e in &grid {
        let elb_at_cap = brute_lower(10.0, &g, &d, e, e).value;
        let (a_m, elb) = if elb_at_cap < tlb {
            (10.0, elb_at_cap)
        } else {
            let mut a_h = 10.0_f64;
            let mut a_l = 0.1_f64;
            let mut a_m;
            let mut elb;
            let mut iters = 0usize;
            loop {
                a_m = (a_h + a_l) / 2.0;
                elb = brute_lower(a_m, &g, &d, e, e).value;
                iters += 1;
                if (elb - tlb).abs() <= 0.001 || iters >= 60 {
                    break;
                }
                if elb > tlb {
                    a_h = a_m;
                } else {
                    a_l = a_m;
                }
            }
            (a_m, elb)
        };
        let eub = brute_upper(a_m, &g, &d, e, e).value;
        if best_r > eub - elb {
            best_r = eub - elb;
            best = (a_m, e, elb, eub);
        }
    }

    let (a, e, elb, eub) = best;
    let inner: Vec<usize> = (0..m).filter(|&i| point[i] - a * scale[i] >= c).collect();
    let outer: Vec<usize> = (0..m).filter(|&i| point[i] + a * scale[i] >= c).collect();
    BookResult {
        inner,
        outer,
        a,
        e,
        elb,
        eub,
    }
}

/// Random estimator instance: a residual matrix, signed distances, and band
/// half-widths. Occasionally plants exact zeros and ties in `d`.
pub struct RandomInstance {
    pub g: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub e1: f64,
    pub e2: f64,
    pub a: f64,
}

pub fn random_instance(seed: u64, max_b: usize, max_m: usize) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = rng.random_range(2..=max_b);
    let m = rng.random_range(1..=max_m);
    let g: Vec<Vec<f64>> = (0..b)
        .map(|_| (0..m).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect();
    let mut d: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
    if rng.random_range(0.0..1.0) < 0.25 {
        d[0] = 0.0;
    }
    if m >= 2 && rng.random_range(0.0..1.0) < 0.25 {
        d[m - 1] = d[m / 2];
    }
    // Mix of band widths: sometimes empty sides, sometimes everything inside.
    let e1 = rng.random_range(0.0..2.5);
    let e2 = if rng.random_range(0.0..1.0) < 0.3 {
        e1
    } else {
        rng.random_range(0.0..2.5)
    };
    let a = rng.random_range(0.0..3.0);
    RandomInstance { g, d, e1, e2, a }
}
