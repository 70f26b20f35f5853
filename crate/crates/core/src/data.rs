//! Core value types, validation, and CSV ingestion.
//!
//! CSV is the sole tabular input format: comma separated, optional single
//! header row, decimal-point reals, UTF-8. Prediction matrices are one
//! bootstrap replicate per row, no header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::sample_sd;

/// Columns with a smaller sample standard deviation are floored to this
/// value: signed distances and the residual field divide by the scale, and
/// the theory assumes it is bounded away from zero.
pub const DEFAULT_SCALE_FLOOR: f64 = 1e-8;

/// Feature matrix plus realized outcomes used to fit learners and drive the
/// bootstrap.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    features: Array2<f64>,
    outcomes: Array1<f64>,
    feature_names: Option<Vec<String>>,
    outcome_name: Option<String>,
}

impl TrainingData {
    pub fn new(features: Array2<f64>, outcomes: Array1<f64>) -> Result<Self> {
        Self::with_names(features, outcomes, None, None)
    }

    pub fn with_names(
        features: Array2<f64>,
        outcomes: Array1<f64>,
        feature_names: Option<Vec<String>>,
        outcome_name: Option<String>,
    ) -> Result<Self> {
        let (n, p) = features.dim();
        if n < 2 {
            return Err(Error::invalid(format!(
                "training data needs at least 2 rows, found {n}"
            )));
        }
        if p < 1 {
            return Err(Error::invalid("training data needs at least 1 feature"));
        }
        if outcomes.len() != n {
            return Err(Error::dim(
                "outcome length vs feature rows",
                n,
                outcomes.len(),
            ));
        }
        if features.iter().any(|v| !v.is_finite()) || outcomes.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("training data contains a non-finite entry"));
        }
        if let Some(names) = &feature_names {
            if names.len() != p {
                return Err(Error::dim("feature name count", p, names.len()));
            }
        }
        Ok(Self {
            features,
            outcomes,
            feature_names,
            outcome_name,
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn outcomes(&self) -> &Array1<f64> {
        &self.outcomes
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn outcome_name(&self) -> Option<&str> {
        self.outcome_name.as_deref()
    }

    /// Rows selected by index, with repetition allowed (bootstrap resamples).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let p = self.p();
        let mut features = Array2::zeros((rows.len(), p));
        let mut outcomes = Array1::zeros(rows.len());
        for (out, &r) in rows.iter().enumerate() {
            features.row_mut(out).assign(&self.features.row(r));
            outcomes[out] = self.outcomes[r];
        }
        Self::with_names(
            features,
            outcomes,
            self.feature_names.clone(),
            self.outcome_name.clone(),
        )
    }
}

/// Test feature matrix; outcomes are unobserved.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFeatures {
    features: Array2<f64>,
    feature_names: Option<Vec<String>>,
}

impl TestFeatures {
    pub fn new(features: Array2<f64>) -> Result<Self> {
        Self::with_names(features, None)
    }

    pub fn with_names(features: Array2<f64>, feature_names: Option<Vec<String>>) -> Result<Self> {
        let (m, p) = features.dim();
        if m < 2 {
            return Err(Error::invalid(format!(
                "test features need at least 2 rows, found {m}"
            )));
        }
        if p < 1 {
            return Err(Error::invalid("test features need at least 1 column"));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("test features contain a non-finite entry"));
        }
        if let Some(names) = &feature_names {
            if names.len() != p {
                return Err(Error::dim("feature name count", p, names.len()));
            }
        }
        Ok(Self {
            features,
            feature_names,
        })
    }

    pub fn m(&self) -> usize {
        self.features.nrows()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }
}

/// Either table shape a CSV file can hold.
#[derive(Debug, Clone)]
pub enum Table {
    Training(TrainingData),
    Test(TestFeatures),
}

/// Point predictions, per-point scale, and the `B x m` bootstrap prediction
/// matrix. This is the universal currency of the toolkit: every construction
/// consumes one.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionEnsemble {
    point: Array1<f64>,
    scale: Array1<f64>,
    samples: Array2<f64>,
}

impl PredictionEnsemble {
    /// Build from a prediction matrix, computing the scale as the column-wise
    /// sample standard deviation floored at `scale_floor`.
    pub fn from_samples(
        point: Array1<f64>,
        samples: Array2<f64>,
        scale_floor: f64,
    ) -> Result<Self> {
        if scale_floor <= 0.0 || !scale_floor.is_finite() {
            return Err(Error::invalid("scale floor must be positive and finite"));
        }
        let m = point.len();
        let scale = Array1::from_iter((0..m).map(|i| {
            let col: Vec<f64> = samples.column(i).to_vec();
            sample_sd(&col).max(scale_floor)
        }));
        Self::from_parts(point, scale, samples)
    }

    /// Build from explicit parts; validates the ensemble invariants.
    pub fn from_parts(
        point: Array1<f64>,
        scale: Array1<f64>,
        samples: Array2<f64>,
    ) -> Result<Self> {
        let m = point.len();
        if m == 0 {
            return Err(Error::invalid("prediction ensemble needs at least 1 point"));
        }
        if samples.ncols() != m {
            return Err(Error::dim(
                "sample columns vs point length",
                m,
                samples.ncols(),
            ));
        }
        if scale.len() != m {
            return Err(Error::dim("scale length vs point length", m, scale.len()));
        }
        if samples.nrows() < 2 {
            return Err(Error::invalid(format!(
                "bootstrap count must be at least 2, found {}",
                samples.nrows()
            )));
        }
        if point.iter().any(|v| !v.is_finite()) || samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "prediction ensemble contains a non-finite entry",
            ));
        }
        if scale.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::invalid("ensemble scale must be positive and finite"));
        }
        Ok(Self {
            point,
            scale,
            samples,
        })
    }

    pub fn m(&self) -> usize {
        self.point.len()
    }

    /// Number of bootstrap replicates B.
    pub fn bootstrap_count(&self) -> usize {
        self.samples.nrows()
    }

    pub fn point(&self) -> &Array1<f64> {
        &self.point
    }

    pub fn scale(&self) -> &Array1<f64> {
        &self.scale
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }
}

/// Output of a confidence-set construction: sorted index sets over `0..m`,
/// the calibrated threshold, the selected band half-width, and the estimated
/// containment bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSetResult {
    pub inner: Vec<usize>,
    pub outer: Vec<usize>,
    #[serde(rename = "a")]
    pub threshold_a: f64,
    #[serde(rename = "e")]
    pub band_halfwidth_e: f64,
    pub elb: f64,
    pub eub: f64,
    /// Number of points with `|d_hat| <= e`.
    pub boundary_count: usize,
    pub flags: Vec<String>,
}

impl ConfidenceSetResult {
    /// Flag value recorded when the target lower bound is not attainable on
    /// the threshold search interval.
    pub const FLAG_TLB_UNATTAINABLE: &'static str = "tlb_unattainable";

    pub fn is_flagged(&self) -> bool {
        !self.flags.is_empty()
    }
}

/// Load a CSV table. With `outcome_column` set, that column becomes the
/// outcome vector and the rest the features ([`TrainingData`]); otherwise all
/// columns are features ([`TestFeatures`]). Column order is preserved.
pub fn load_table(path: &Path, has_header: bool, outcome_column: Option<&str>) -> Result<Table> {
    let (header, rows) = read_raw_rows(path, has_header)?;

    if rows.is_empty() {
        return Err(Error::invalid(format!(
            "{}: file has no data rows",
            path.display()
        )));
    }
    let width = rows[0].1.len();

    let outcome_idx = match outcome_column {
        Some(name) => {
            let header = header.as_ref().ok_or_else(|| Error::invalid(
                "outcome column requires a header row; rerun with a header or drop the outcome column",
            ))?;
            let idx = header.iter().position(|h| h == name);
            match idx {
                Some(i) => Some(i),
                None => {
                    return Err(Error::OutcomeColumnMissing {
                        path: path.to_path_buf(),
                        name: name.to_string(),
                        available: header.clone(),
                    })
                }
            }
        }
        None => None,
    };

    let parse_cell = |line: usize, col: usize, raw: &str| -> Result<f64> {
        let v: f64 = raw.parse().map_err(|_| Error::BadCell {
            path: path.to_path_buf(),
            row: line,
            column: col + 1,
            value: raw.to_string(),
        })?;
        if !v.is_finite() {
            return Err(Error::BadCell {
                path: path.to_path_buf(),
                row: line,
                column: col + 1,
                value: raw.to_string(),
            });
        }
        Ok(v)
    };

    let n = rows.len();
    match outcome_idx {
        Some(oi) => {
            let p = width - 1;
            if p == 0 {
                return Err(Error::invalid(format!(
                    "{}: no feature columns besides the outcome",
                    path.display()
                )));
            }
            let mut features = Array2::zeros((n, p));
            let mut outcomes = Array1::zeros(n);
            for (r, (line, fields)) in rows.iter().enumerate() {
                let mut fc = 0;
                for (c, raw) in fields.iter().enumerate() {
                    let v = parse_cell(*line, c, raw)?;
                    if c == oi {
                        outcomes[r] = v;
                    } else {
                        features[(r, fc)] = v;
                        fc += 1;
                    }
                }
            }
            let names = header.map(|h| {
                h.iter()
                    .enumerate()
                    .filter(|(i, _)| *i != oi)
                    .map(|(_, s)| s.clone())
                    .collect::<Vec<_>>()
            });
            let data = TrainingData::with_names(
                features,
                outcomes,
                names,
                outcome_column.map(|s| s.to_string()),
            )?;
            Ok(Table::Training(data))
        }
        None => {
            let mut features = Array2::zeros((n, width));
            for (r, (line, fields)) in rows.iter().enumerate() {
                for (c, raw) in fields.iter().enumerate() {
                    features[(r, c)] = parse_cell(*line, c, raw)?;
                }
            }
            Ok(Table::Test(TestFeatures::with_names(features, header)?))
        }
    }
}

/// Data rows paired with their 1-based file line numbers.
type RawRows = Vec<(usize, Vec<String>)>;

/// Raw row reader shared by the loaders: trims fields, skips blank lines,
/// enforces rectangularity, splits off an optional header.
fn read_raw_rows(path: &Path, has_header: bool) -> Result<(Option<Vec<String>>, RawRows)> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);

    let mut rows: RawRows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let fields: Vec<String> = record.iter().map(|s| s.trim().to_string()).collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push((idx + 1, fields));
    }
    if rows.is_empty() {
        return Err(Error::invalid(format!("{}: file is empty", path.display())));
    }

    let width = rows[0].1.len();
    for (line, fields) in &rows {
        if fields.len() != width {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row: *line,
                expected: width,
                found: fields.len(),
            });
        }
    }

    if has_header {
        let (_, header) = rows.remove(0);
        Ok((Some(header), rows))
    } else {
        Ok((None, rows))
    }
}

/// Load a prediction ensemble from a point-prediction CSV (one value per
/// line, no header) and a prediction-matrix CSV (one bootstrap replicate per
/// row, no header). The scale is the column-wise sample standard deviation,
/// floored at [`DEFAULT_SCALE_FLOOR`].
pub fn load_prediction_matrix(
    point_path: &Path,
    samples_path: &Path,
) -> Result<PredictionEnsemble> {
    let (_, point_rows) = read_raw_rows(point_path, false)?;
    if point_rows[0].1.len() != 1 {
        return Err(Error::dim(
            format!("{}: point file must have one column", point_path.display()),
            1,
            point_rows[0].1.len(),
        ));
    }
    let mut point = Array1::zeros(point_rows.len());
    for (r, (line, fields)) in point_rows.iter().enumerate() {
        let raw = &fields[0];
        let v: f64 = raw.parse().map_err(|_| Error::BadCell {
            path: point_path.to_path_buf(),
            row: *line,
            column: 1,
            value: raw.clone(),
        })?;
        if !v.is_finite() {
            return Err(Error::BadCell {
                path: point_path.to_path_buf(),
                row: *line,
                column: 1,
                value: raw.clone(),
            });
        }
        point[r] = v;
    }

    let (_, sample_rows) = read_raw_rows(samples_path, false)?;
    let b = sample_rows.len();
    let m = sample_rows[0].1.len();
    if m != point.len() {
        return Err(Error::dim(
            format!("{}: sample columns vs point length", samples_path.display()),
            point.len(),
            m,
        ));
    }
    if b < 2 {
        return Err(Error::invalid(format!(
            "{}: need at least 2 bootstrap rows, found {b}",
            samples_path.display()
        )));
    }
    let mut samples = Array2::zeros((b, m));
    for (r, (line, fields)) in sample_rows.iter().enumerate() {
        for (c, raw) in fields.iter().enumerate() {
            let v: f64 = raw.parse().map_err(|_| Error::BadCell {
                path: samples_path.to_path_buf(),
                row: *line,
                column: c + 1,
                value: raw.clone(),
            })?;
            if !v.is_finite() {
                return Err(Error::BadCell {
                    path: samples_path.to_path_buf(),
                    row: *line,
                    column: c + 1,
                    value: raw.clone(),
                });
            }
            samples[(r, c)] = v;
        }
    }

    PredictionEnsemble::from_samples(point, samples, DEFAULT_SCALE_FLOOR)
}

/// Write training data back to CSV at full precision. Finite doubles printed
/// with `{}` round-trip bit-exactly through [`load_table`].
pub fn write_training_csv(data: &TrainingData, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };

    let outcome_name = data.outcome_name().unwrap_or("y").to_string();
    let feature_names: Vec<String> = match data.feature_names() {
        Some(names) => names.to_vec(),
        None => (1..=data.p()).map(|j| format!("x{j}")).collect(),
    };
    let mut header = vec![outcome_name];
    header.extend(feature_names);
    writeln!(w, "{}", header.join(",")).map_err(io_err)?;

    for r in 0..data.n() {
        let mut fields = vec![format!("{}", data.outcomes()[r])];
        for c in 0..data.p() {
            fields.push(format!("{}", data.features()[(r, c)]));
        }
        writeln!(w, "{}", fields.join(",")).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Dump a prediction matrix in the ingestion format (one replicate per row).
pub fn write_prediction_matrix(samples: &Array2<f64>, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    for row in samples.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", fields.join(",")).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Dump a point-prediction vector (one value per line).
pub fn write_point_vector(point: &Array1<f64>, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    for v in point.iter() {
        writeln!(w, "{v}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}
