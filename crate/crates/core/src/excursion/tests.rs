use approx::assert_relative_eq;
use ndarray::{Array1, Array2};

use super::*;

fn residuals(rows: Vec<Vec<f64>>) -> StandardizedResiduals {
    let b = rows.len();
    let m = rows[0].len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    StandardizedResiduals {
        g: Array2::from_shape_vec((b, m), flat).unwrap(),
    }
}

fn distances(values: Vec<f64>) -> SignedDistances {
    SignedDistances::from_values(Array1::from_vec(values), 0.0).unwrap()
}

fn ensemble(point: Vec<f64>, scale: Vec<f64>, samples: Vec<Vec<f64>>) -> PredictionEnsemble {
    let b = samples.len();
    let m = point.len();
    let flat: Vec<f64> = samples.into_iter().flatten().collect();
    PredictionEnsemble::from_parts(
        Array1::from_vec(point),
        Array1::from_vec(scale),
        Array2::from_shape_vec((b, m), flat).unwrap(),
    )
    .unwrap()
}

#[test]
fn standardize_row_equal_to_point_is_zero() {
    let ens = ensemble(
        vec![1.0, -2.0],
        vec![0.5, 3.0],
        vec![vec![1.0, -2.0], vec![2.0, 4.0]],
    );
    let g = standardize(&ens);
    assert_eq!(g.g()[(0, 0)], 0.0);
    assert_eq!(g.g()[(0, 1)], 0.0);
    assert_relative_eq!(g.g()[(1, 0)], 2.0);
    assert_relative_eq!(g.g()[(1, 1)], 2.0);
}

#[test]
fn standardize_matches_elementwise_formula() {
    let ens = ensemble(vec![0.0], vec![2.0], vec![vec![4.0], vec![-4.0]]);
    let g = standardize(&ens);
    assert_eq!(g.g()[(0, 0)], 2.0);
    assert_eq!(g.g()[(1, 0)], -2.0);
}

#[test]
fn signed_distance_examples() {
    let ens = ensemble(vec![2.0, 3.0], vec![1.0, 0.5], vec![vec![0.0; 2]; 2]);
    let d = signed_distances(&ens, 2.0);
    assert_eq!(d.values()[0], 0.0);
    assert_eq!(d.values()[1], 2.0);
}

#[test]
fn band_partitions_all_indices() {
    let d = distances(vec![0.0, 0.4, -0.4, 1.5, -1.5]);
    let band = Band::symmetric(&d, 0.5).unwrap();
    assert_eq!(band.upper_side, vec![0, 1]);
    assert_eq!(band.lower_side, vec![2]);
    assert_eq!(band.above, vec![3]);
    assert_eq!(band.below, vec![4]);
    let mut all: Vec<usize> = band
        .band_indices()
        .chain(band.above.iter().copied())
        .chain(band.below.iter().copied())
        .collect();
    all.sort_unstable();
    assert_eq!(all, vec![0, 1, 2, 3, 4]);
}

#[test]
fn lower_bound_is_one_for_zero_field_inside_band() {
    let g = residuals(vec![vec![0.0; 4]; 6]);
    let d = distances(vec![0.1, -0.2, 0.3, -0.4]);
    let band = Band::symmetric(&d, 0.5).unwrap();
    assert_eq!(est_lower_bound(1.0, &g, &d, &band), 1.0);
}

#[test]
fn lower_bound_vacuous_band_single_above_point() {
    // One point with d = 5 in `above`, zero residual column, empty band,
    // a = 0: the band term is vacuously 1, the tail term contributes
    // 1 - |above| = 0.
    let g = residuals(vec![vec![0.0]; 5]);
    let d = distances(vec![5.0]);
    let band = Band::symmetric(&d, 1.0).unwrap();
    assert!(band.band_indices().next().is_none());
    assert_eq!(band.above, vec![0]);
    assert_eq!(est_lower_bound(0.0, &g, &d, &band), 1.0);
}

#[test]
fn upper_bound_is_one_for_zero_field() {
    let g = residuals(vec![vec![0.0; 3]; 4]);
    let d = distances(vec![0.2, -0.1, 0.05]);
    let band = Band::symmetric(&d, 0.3).unwrap();
    assert_eq!(est_upper_bound(0.5, &g, &d, &band), 1.0);
}

#[test]
fn upper_bound_counts_rows_on_the_upper_side() {
    // Upper side is a single point with d = 0; half the rows carry g = -3
    // and fail `g >= -a - 0 = -1`, the other half carry g = 0 and pass.
    let g = residuals(vec![vec![-3.0], vec![0.0], vec![-3.0], vec![0.0]]);
    let d = distances(vec![0.0]);
    let band = Band::symmetric(&d, 0.0).unwrap();
    assert_eq!(band.upper_side, vec![0]);
    assert!(band.lower_side.is_empty());
    assert_eq!(est_upper_bound(1.0, &g, &d, &band), 0.5);
}

#[test]
fn calibrate_zero_field_reaches_full_lower_bound() {
    let g = residuals(vec![vec![0.0; 3]; 8]);
    let d = distances(vec![0.3, -0.2, 0.9]);
    let band = Band::symmetric(&d, 1.0).unwrap();
    let cal = calibrate_threshold(&g, &d, &band, 0.9).unwrap();
    assert!(!cal.unattainable);
    assert_eq!(cal.elb, 1.0);
}

#[test]
fn calibrate_converges_to_search_floor_when_bound_always_holds() {
    // ELB(0.1) is already 1 > tlb, so bisection walks down to the bottom of
    // the search interval.
    let g = residuals(vec![vec![0.0; 2]; 10]);
    let d = distances(vec![0.5, -0.5]);
    let band = Band::symmetric(&d, 0.5).unwrap();
    let cal = calibrate_threshold(&g, &d, &band, 0.9).unwrap();
    assert!(!cal.unattainable);
    assert!(cal.a < 0.1 + 1e-9, "a = {}", cal.a);
    assert_eq!(cal.elb, 1.0);
}

#[test]
fn calibrate_flags_unattainable_target() {
    // Residuals far beyond the search interval: even a = 10 cannot cover.
    let g = residuals(vec![vec![200.0], vec![-200.0], vec![200.0], vec![-200.0]]);
    let d = distances(vec![0.0]);
    let band = Band::symmetric(&d, 0.0).unwrap();
    let cal = calibrate_threshold(&g, &d, &band, 0.9).unwrap();
    assert!(cal.unattainable);
    assert_eq!(cal.a, THRESHOLD_SEARCH_HIGH);
    assert!(cal.elb < 0.9);
}

#[test]
fn construct_classifies_well_separated_points_confidently() {
    let ens = ensemble(
        vec![-5.0, 5.0],
        vec![1.0, 1.0],
        vec![
            vec![-5.9, 4.1],
            vec![-4.1, 5.9],
            vec![-5.5, 4.5],
            vec![-4.5, 5.5],
        ],
    );
    let result = construct(&ens, 0.0, 0.9).unwrap();
    assert_eq!(result.inner, vec![1]);
    assert_eq!(result.outer, vec![1]);
    assert!(result.threshold_a < 5.0);
    assert!(result.flags.is_empty());
}

#[test]
fn construct_nests_inner_within_point_set_within_outer() {
    let ens = ensemble(
        vec![0.4, -0.1, 1.2, -2.0],
        vec![0.5, 0.3, 0.8, 0.6],
        vec![
            vec![0.6, -0.4, 1.9, -1.4],
            vec![0.1, 0.2, 0.6, -2.5],
            vec![0.8, -0.2, 1.1, -1.9],
        ],
    );
    let result = construct(&ens, 0.0, 0.6).unwrap();
    let point_set: Vec<usize> = (0..4).filter(|&i| ens.point()[i] >= 0.0).collect();
    for i in &result.inner {
        assert!(point_set.contains(i));
    }
    for i in &point_set {
        assert!(result.outer.contains(i));
    }
}

#[test]
fn asymptotic_zero_boundary_column_stops_at_first_step() {
    let ens = ensemble(
        vec![0.0, 2.0],
        vec![1.0, 1.0],
        vec![
            vec![0.0, 2.5],
            vec![0.0, 1.5],
            vec![0.0, 2.2],
            vec![0.0, 1.8],
        ],
    );
    let result = construct_asymptotic(&ens, 0.0, 0.9, &[0]).unwrap();
    assert_relative_eq!(result.threshold_a, 1e-3);
    assert_eq!(result.elb, 1.0);
    assert_eq!(result.eub, result.elb);
    assert!(result.flags.is_empty());
}

#[test]
fn asymptotic_threshold_crosses_the_negative_mass() {
    // Boundary column: g = -2 in 10% of rows, 0 elsewhere. ELB(a) is 0.9 for
    // a <= 2 and 1.0 beyond, so the first step meeting tlb = 0.95 is the
    // first grid value past 2.
    let mut samples = vec![vec![0.0, 1.0]; 10];
    samples[0][0] = -2.0;
    let ens = ensemble(vec![0.0, 1.0], vec![1.0, 1.0], samples);
    let result = construct_asymptotic(&ens, 0.0, 0.95, &[0]).unwrap();
    assert_relative_eq!(result.threshold_a, 2.0 + 1e-3, epsilon = 1e-9);
    assert_eq!(result.elb, 1.0);

    // At tlb = 0.9 the very first step already satisfies ELB >= tlb because
    // 90% of the rows sit at zero.
    let result = construct_asymptotic(&ens, 0.0, 0.9, &[0]).unwrap();
    assert_relative_eq!(result.threshold_a, 1e-3);
    assert_eq!(result.elb, 0.9);
}

#[test]
fn asymptotic_uses_row_minimum_over_boundary_columns() {
    let samples = vec![
        vec![-0.5, 0.2, 9.0],
        vec![0.3, -1.1, 9.0],
        vec![0.4, 0.5, 9.0],
        vec![-2.0, 1.0, 9.0],
    ];
    let ens = ensemble(vec![0.0, 0.0, 9.0], vec![1.0, 1.0, 1.0], samples.clone());
    let boundary = [0usize, 1usize];
    let result = construct_asymptotic(&ens, 0.0, 0.6, &boundary).unwrap();
    // Direct counting oracle over the row minima.
    let b = samples.len() as f64;
    let row_mins: Vec<f64> = samples.iter().map(|r| r[0].min(r[1])).collect();
    let oracle = row_mins
        .iter()
        .filter(|&&v| v > -result.threshold_a)
        .count() as f64
        / b;
    assert_eq!(result.elb, oracle);
    assert!(result.elb >= 0.6);
}

#[test]
fn corollary_zero_field_has_unit_upper_bound() {
    let ens = ensemble(vec![0.3, -0.3], vec![1.0, 1.0], vec![vec![0.3, -0.3]; 4]);
    let d_true = distances(vec![0.3, -0.3]);
    let result = construct_corollary(&ens, 0.0, 0, 1, &d_true).unwrap();
    assert_eq!(result.eub, 1.0);
    assert_eq!(result.threshold_a, 1.0);
}

#[test]
fn corollary_counts_violating_rows() {
    // Plus column: g = -2 in 40% of rows (fails g >= -1 - 0.5), 0 otherwise;
    // minus column all zeros always passes.
    let mut samples = vec![vec![0.5, -0.4]; 10];
    for row in samples.iter_mut().take(4) {
        row[0] = 0.5 + (-2.0) * 1.0; // g = (sample - point)/scale = -2
    }
    let ens = ensemble(vec![0.5, -0.4], vec![1.0, 1.0], samples);
    let d_true = distances(vec![0.5, -0.4]);
    let result = construct_corollary(&ens, 0.0, 0, 1, &d_true).unwrap();
    assert_relative_eq!(result.eub, 0.6);
}

#[test]
fn corollary_rejects_wrong_side_indices() {
    let ens = ensemble(vec![0.3, -0.3], vec![1.0, 1.0], vec![vec![0.0, 0.0]; 3]);
    let d_true = distances(vec![0.3, -0.3]);
    assert!(construct_corollary(&ens, 0.0, 1, 0, &d_true).is_err());
}

#[test]
fn sweep_matches_plain_estimators() {
    // Deterministic pseudo-random instance; the sweep path must agree with
    // the plain estimators bit for bit at every band and threshold.
    let b = 13;
    let m = 7;
    let mut state = 0x9E3779B97F4A7C15u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0
    };
    let rows: Vec<Vec<f64>> = (0..b).map(|_| (0..m).map(|_| next()).collect()).collect();
    let dvals: Vec<f64> = (0..m).map(|_| next()).collect();
    let g = residuals(rows);
    let d = distances(dvals.clone());

    let mut abs_sorted: Vec<f64> = dvals.iter().map(|v| v.abs()).collect();
    abs_sorted.sort_by(|x, y| x.total_cmp(y));
    abs_sorted.dedup();

    let mut sw = sweep::BandSweep::new(&g, &d);
    for &e in &abs_sorted {
        sw.advance_to(e);
        let band = Band::symmetric(&d, e).unwrap();
        for &a in &[0.0, 0.05, 0.31, 1.0, 2.7, 10.0] {
            assert_eq!(sw.est_lower_bound(a), est_lower_bound(a, &g, &d, &band));
            assert_eq!(sw.est_upper_bound(a), est_upper_bound(a, &g, &d, &band));
        }
    }
}
