//! Synthetic data generators for the coverage experiments.
//!
//! Three designs: a linear model with standard-normal coefficients, a
//! logistic model with Uniform(1, 3) coefficients, and a fixed cosine curve
//! fitted by a misspecified-but-flexible network. Features are always
//! Uniform(-2, 2). Coefficients are drawn fresh per call, so every
//! replication sees its own ground truth.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{TestFeatures, TrainingData};
use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;
use crate::stats::expit;

/// One generated instance: training pairs, test features, and the oracle
/// values on the test points.
#[derive(Debug, Clone)]
pub struct SimData {
    pub train: TrainingData,
    pub test: TestFeatures,
    /// `f` on the test points (class probability for the logistic design).
    pub truth: Vec<f64>,
    /// `f + eps` with fresh test noise; `None` for the logistic design.
    pub realized: Option<Vec<f64>>,
    /// Coefficients of the generating model, when it has any.
    pub beta: Option<Vec<f64>>,
    /// Indices of planted exact-boundary test points, if any.
    pub boundary_indices: Vec<usize>,
}

fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-2.0..2.0))
}

fn dot(row: ndarray::ArrayView1<f64>, beta: &[f64]) -> f64 {
    row.iter().zip(beta).map(|(x, b)| x * b).sum()
}

/// Linear design: `y = x beta + eps`, `beta_j ~ N(0,1)`, `eps ~ N(0, sigma)`.
pub fn gen_linear(n: usize, m: usize, p: usize, sigma: f64, seed: u64) -> Result<SimData> {
    gen_linear_impl(n, m, p, sigma, seed, None)
}

/// Linear design with `count` extra test points planted exactly on the
/// boundary hyperplane `{x : x beta = c}`: the base point `c beta / |beta|^2`
/// plus random in-plane displacements. A single boundary point leaves the
/// asymptotic containment statement dominated by the near-boundary test
/// points at simulation sample sizes; a spread-out boundary set matches the
/// dense-grid premise of the theory.
pub fn gen_linear_with_boundary(
    n: usize,
    m: usize,
    p: usize,
    sigma: f64,
    c: f64,
    count: usize,
    seed: u64,
) -> Result<SimData> {
    gen_linear_impl(n, m, p, sigma, seed, Some((c, count)))
}

fn gen_linear_impl(
    n: usize,
    m: usize,
    p: usize,
    sigma: f64,
    seed: u64,
    boundary: Option<(f64, usize)>,
) -> Result<SimData> {
    if n < 2 || m < 2 || p == 0 {
        return Err(Error::invalid(
            "generator sizes must be positive (n, m >= 2)",
        ));
    }
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::invalid("sigma must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let noise = Normal::new(0.0, sigma).expect("finite sigma");

    let beta: Vec<f64> = (0..p).map(|_| std_normal.sample(&mut rng)).collect();
    let x_train = uniform_matrix(&mut rng, n, p);
    let y_train = Array1::from_iter(
        x_train
            .rows()
            .into_iter()
            .map(|r| dot(r, &beta) + noise.sample(&mut rng)),
    );

    let mut x_test = uniform_matrix(&mut rng, m, p);
    let mut truth: Vec<f64> = x_test.rows().into_iter().map(|r| dot(r, &beta)).collect();
    let mut boundary_indices = Vec::new();

    if let Some((c, count)) = boundary {
        if count == 0 {
            return Err(Error::invalid("boundary point count must be positive"));
        }
        let norm_sq: f64 = beta.iter().map(|b| b * b).sum();
        if norm_sq <= 0.0 {
            return Err(Error::invalid(
                "degenerate coefficients; cannot plant boundary points",
            ));
        }
        let base: Vec<f64> = beta.iter().map(|b| c * b / norm_sq).collect();
        let mut grown = Array2::zeros((m + count, p));
        grown.slice_mut(ndarray::s![..m, ..]).assign(&x_test);
        for k in 0..count {
            // Random displacement projected onto the plane beta . v = 0.
            let raw: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
            let along: f64 = raw.iter().zip(&beta).map(|(v, b)| v * b).sum::<f64>() / norm_sq;
            for j in 0..p {
                grown[(m + k, j)] = base[j] + raw[j] - along * beta[j];
            }
            // The planted points satisfy x beta = c by construction; store
            // the exact level rather than its rounding.
            truth.push(c);
            boundary_indices.push(m + k);
        }
        x_test = grown;
    }

    let realized: Vec<f64> = truth.iter().map(|f| f + noise.sample(&mut rng)).collect();

    Ok(SimData {
        train: TrainingData::new(x_train, y_train)?,
        test: TestFeatures::new(x_test)?,
        truth,
        realized: Some(realized),
        beta: Some(beta),
        boundary_indices,
    })
}

/// Logistic design: `logit(p) = x beta`, `beta_j ~ Uniform(1, 3)`, labels
/// Bernoulli(p). Truth is the class probability.
pub fn gen_logistic(n: usize, m: usize, p: usize, seed: u64) -> Result<SimData> {
    if n < 2 || m < 2 || p == 0 {
        return Err(Error::invalid(
            "generator sizes must be positive (n, m >= 2)",
        ));
    }
    let mut rng = rng_from_seed(seed);
    let beta: Vec<f64> = (0..p).map(|_| rng.random_range(1.0..3.0)).collect();
    let x_train = uniform_matrix(&mut rng, n, p);
    let y_train = Array1::from_iter(x_train.rows().into_iter().map(|r| {
        let prob = expit(dot(r, &beta));
        if rng.random_range(0.0..1.0) < prob {
            1.0
        } else {
            0.0
        }
    }));
    let x_test = uniform_matrix(&mut rng, m, p);
    let truth: Vec<f64> = x_test
        .rows()
        .into_iter()
        .map(|r| expit(dot(r, &beta)))
        .collect();

    Ok(SimData {
        train: TrainingData::new(x_train, y_train)?,
        test: TestFeatures::new(x_test)?,
        truth,
        realized: None,
        beta: Some(beta),
        boundary_indices: Vec::new(),
    })
}

/// Cosine coefficients of the misspecified-model design.
pub const COSINE_BETA: [f64; 3] = [1.0, 6.0, 3.0];

pub fn cosine_truth(x: f64) -> f64 {
    COSINE_BETA[0] + COSINE_BETA[1] * (COSINE_BETA[2] * x).cos()
}

/// Cosine design: `y = 1 + 6 cos(3x) + eps`, `eps ~ N(0, 1)`, scalar feature.
pub fn gen_cosine(n: usize, m: usize, seed: u64) -> Result<SimData> {
    gen_cosine_impl(n, m, seed, None)
}

/// Roots of `1 + 6 cos(3x) = c` inside `[-2, 2]`; empty when `|c - 1| > 6`.
pub fn cosine_boundary_points(c: f64) -> Vec<f64> {
    let cosine_arg = (c - COSINE_BETA[0]) / COSINE_BETA[1];
    if !(-1.0..=1.0).contains(&cosine_arg) {
        return Vec::new();
    }
    let base = cosine_arg.acos();
    let mut roots = Vec::new();
    for k in -2i32..=2 {
        for sign in [-1.0, 1.0] {
            let x = (sign * base + std::f64::consts::TAU * k as f64) / COSINE_BETA[2];
            if (-2.0..=2.0).contains(&x) && !roots.iter().any(|&r: &f64| (r - x).abs() < 1e-12) {
                roots.push(x);
            }
        }
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots
}

/// Cosine design with every root of `f(x) = c` in the domain planted as an
/// extra test point; requires `|c - 1| <= 6`.
pub fn gen_cosine_with_boundary(n: usize, m: usize, c: f64, seed: u64) -> Result<SimData> {
    gen_cosine_impl(n, m, seed, Some(c))
}

fn gen_cosine_impl(n: usize, m: usize, seed: u64, boundary_level: Option<f64>) -> Result<SimData> {
    if n < 2 || m < 2 {
        return Err(Error::invalid(
            "generator sizes must be positive (n, m >= 2)",
        ));
    }
    let mut rng = rng_from_seed(seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");

    let x_train = uniform_matrix(&mut rng, n, 1);
    let y_train = Array1::from_iter(
        x_train
            .column(0)
            .iter()
            .map(|&x| cosine_truth(x) + noise.sample(&mut rng)),
    );
    let mut x_test = uniform_matrix(&mut rng, m, 1);
    let mut truth: Vec<f64> = x_test.column(0).iter().map(|&x| cosine_truth(x)).collect();
    let mut boundary_indices = Vec::new();

    if let Some(c) = boundary_level {
        let roots = cosine_boundary_points(c);
        if roots.is_empty() {
            return Err(Error::invalid(format!(
                "level {c} is outside the cosine range; no boundary point exists"
            )));
        }
        let mut grown = Array2::zeros((m + roots.len(), 1));
        grown.slice_mut(ndarray::s![..m, ..]).assign(&x_test);
        for (k, root) in roots.iter().enumerate() {
            grown[(m + k, 0)] = *root;
            truth.push(c);
            boundary_indices.push(m + k);
        }
        x_test = grown;
    }

    let realized: Vec<f64> = truth.iter().map(|f| f + noise.sample(&mut rng)).collect();

    Ok(SimData {
        train: TrainingData::new(x_train, y_train)?,
        test: TestFeatures::new(x_test)?,
        truth,
        realized: Some(realized),
        beta: Some(COSINE_BETA.to_vec()),
        boundary_indices,
    })
}
