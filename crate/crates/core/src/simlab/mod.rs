//! Replication runner, containment checking, and coverage aggregation.
//!
//! A scenario fixes a generator, sample sizes, level, target lower bound,
//! bootstrap count, and the set of methods to compare. Each replication
//! generates fresh data from a child seed, runs every requested method end
//! to end, and records whether the inner/outer sets sandwich the true
//! excursion set. Replications run in parallel; the output is identical for
//! any worker count because each replication derives its randomness from
//! `(master_seed, r)` alone.

pub mod generators;

pub use generators::SimData;

use serde::{Deserialize, Serialize};

use crate::baselines::{invert_bands, pointwise_bands, simultaneous_bands};
use crate::bootstrap::{bootstrap_expected, bootstrap_realized, BootstrapConfig};
use crate::data::PredictionEnsemble;
use crate::error::{Error, Result};
use crate::excursion::{construct, construct_asymptotic, construct_corollary, SignedDistances};
use crate::exec::map_indexed;
use crate::learners::{MlpConfig, PredictorSpec};
use crate::seeding::child_seed;

fn default_m() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeneratorConfig {
    Linear { p: usize, sigma: f64 },
    Logistic { p: usize },
    Cosine,
}

impl GeneratorConfig {
    pub fn p(&self) -> usize {
        match self {
            GeneratorConfig::Linear { p, .. } | GeneratorConfig::Logistic { p } => *p,
            GeneratorConfig::Cosine => 1,
        }
    }

    pub fn label(&self) -> String {
        match self {
            GeneratorConfig::Linear { p, sigma } => format!("linear(p={p},sigma={sigma})"),
            GeneratorConfig::Logistic { p } => format!("logistic(p={p})"),
            GeneratorConfig::Cosine => "cosine".to_string(),
        }
    }

    fn is_continuous(&self) -> bool {
        !matches!(self, GeneratorConfig::Logistic { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    #[default]
    Expected,
    Realized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// The main confidence-set construction.
    Cs,
    /// Inverted pointwise confidence intervals.
    Ci,
    /// Inverted simultaneous confidence intervals.
    Sci,
    /// Known-boundary-point construction (plants an exact boundary point).
    Asymptotic,
    /// Known-closest-point construction with `a = 1`.
    Corollary,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Cs => "cs",
            Method::Ci => "ci",
            Method::Sci => "sci",
            Method::Asymptotic => "asymptotic",
            Method::Corollary => "corollary",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub generator: GeneratorConfig,
    pub n: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    pub c: f64,
    pub tlb: f64,
    /// Bootstrap replicates per instance.
    pub b: usize,
    pub replications: usize,
    #[serde(default)]
    pub objective: Objective,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    /// Network settings for the cosine generator; defaults apply when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mlp: Option<MlpConfig>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.m < 2 || self.b < 2 || self.replications == 0 {
            return Err(Error::invalid(format!(
                "scenario '{}': counts must be positive (n, m, b >= 2)",
                self.name
            )));
        }
        if !(0.0 < self.tlb && self.tlb < 1.0) {
            return Err(Error::invalid(format!(
                "scenario '{}': tlb must be in (0, 1)",
                self.name
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid(format!(
                "scenario '{}': at least one method required",
                self.name
            )));
        }
        if self.objective == Objective::Realized && !self.generator.is_continuous() {
            return Err(Error::invalid(format!(
                "scenario '{}': the realized objective needs a continuous generator",
                self.name
            )));
        }
        let oracle_methods = self
            .methods
            .iter()
            .any(|m| matches!(m, Method::Asymptotic | Method::Corollary));
        if oracle_methods && self.objective == Objective::Realized {
            return Err(Error::invalid(format!(
                "scenario '{}': asymptotic/corollary methods target the expected outcome",
                self.name
            )));
        }
        if self.methods.contains(&Method::Asymptotic)
            && matches!(self.generator, GeneratorConfig::Logistic { .. })
        {
            return Err(Error::invalid(format!(
                "scenario '{}': boundary planting is defined for the linear and cosine generators",
                self.name
            )));
        }
        Ok(())
    }

    fn predictor_spec(&self) -> PredictorSpec {
        match &self.generator {
            GeneratorConfig::Linear { .. } => PredictorSpec::Linear,
            GeneratorConfig::Logistic { .. } => PredictorSpec::Logistic,
            GeneratorConfig::Cosine => PredictorSpec::Mlp(self.mlp.clone().unwrap_or_default()),
        }
    }
}

/// A full simulation run: one or more scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub scenarios: Vec<ScenarioConfig>,
}

/// Per-method outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub contained: bool,
    pub elb: Option<f64>,
    pub eub: Option<f64>,
    pub boundary_count: Option<usize>,
    pub truth_set_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationOutcome {
    pub replication: usize,
    pub methods: Vec<MethodOutcome>,
}

/// Aggregated coverage for one method within a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    /// Fraction of replications where the containment event held.
    pub coverage: f64,
    /// Binomial Monte-Carlo standard error of the coverage estimate.
    pub monte_carlo_se: f64,
    pub mean_eub: Option<f64>,
    pub mean_boundary_count: Option<f64>,
    pub mean_truth_set_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub scenario: String,
    pub generator: String,
    pub n: usize,
    pub m: usize,
    pub c: f64,
    pub tlb: f64,
    pub b: usize,
    pub objective: Objective,
    pub replications_requested: usize,
    pub replications_used: usize,
    pub failures: usize,
    pub methods: Vec<MethodReport>,
}

impl CoverageReport {
    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// True iff `inner` is a subset of the truth excursion set and that set is a
/// subset of `outer`.
pub fn check_containment(inner: &[usize], outer: &[usize], truth_values: &[f64], c: f64) -> bool {
    let m = truth_values.len();
    let mut in_outer = vec![false; m];
    for &i in outer {
        in_outer[i] = true;
    }
    for &i in inner {
        if truth_values[i] < c {
            return false;
        }
    }
    for (i, &t) in truth_values.iter().enumerate() {
        if t >= c && !in_outer[i] {
            return false;
        }
    }
    true
}

/// Boundary points planted for the known-boundary method on the linear
/// generator. A spread-out set keeps the calibrated threshold high enough
/// that the near-boundary bulk of the random test points does not dominate
/// the containment event at simulation sample sizes.
const PLANTED_BOUNDARY_POINTS: usize = 20;

fn generate(cfg: &ScenarioConfig, seed: u64) -> Result<SimData> {
    let plant = cfg.methods.contains(&Method::Asymptotic);
    match &cfg.generator {
        GeneratorConfig::Linear { p, sigma } => {
            if plant {
                generators::gen_linear_with_boundary(
                    cfg.n,
                    cfg.m,
                    *p,
                    *sigma,
                    cfg.c,
                    PLANTED_BOUNDARY_POINTS,
                    seed,
                )
            } else {
                generators::gen_linear(cfg.n, cfg.m, *p, *sigma, seed)
            }
        }
        GeneratorConfig::Logistic { p } => generators::gen_logistic(cfg.n, cfg.m, *p, seed),
        GeneratorConfig::Cosine => {
            if plant {
                generators::gen_cosine_with_boundary(cfg.n, cfg.m, cfg.c, seed)
            } else {
                generators::gen_cosine(cfg.n, cfg.m, seed)
            }
        }
    }
}

/// Closest test points to the boundary on each side, judged by the oracle
/// signed distances `(truth - c) / scale`.
fn closest_pair(d_true: &SignedDistances) -> Result<(usize, usize)> {
    let mut plus: Option<(usize, f64)> = None;
    let mut minus: Option<(usize, f64)> = None;
    for (i, &d) in d_true.values().iter().enumerate() {
        if d >= 0.0 {
            if plus.is_none_or(|(_, best)| d < best) {
                plus = Some((i, d));
            }
        } else if minus.is_none_or(|(_, best)| d.abs() < best) {
            minus = Some((i, d.abs()));
        }
    }
    match (plus, minus) {
        (Some((p, _)), Some((m, _))) => Ok((p, m)),
        _ => Err(Error::invalid(
            "no test point on one side of the level; cannot select closest pair",
        )),
    }
}

fn run_replication(cfg: &ScenarioConfig, r: usize) -> Result<ReplicationOutcome> {
    let base = child_seed(cfg.master_seed, r as u64);
    let data = generate(cfg, child_seed(base, 0))?;
    let spec = cfg.predictor_spec();
    let boot_cfg = BootstrapConfig::new(cfg.b, child_seed(base, 1));

    let needs_expected = cfg.methods.iter().any(|m| {
        matches!(m, Method::Asymptotic | Method::Corollary)
            || (cfg.objective == Objective::Expected
                && matches!(m, Method::Cs | Method::Ci | Method::Sci))
    });
    let needs_realized = cfg.objective == Objective::Realized
        && cfg
            .methods
            .iter()
            .any(|m| matches!(m, Method::Cs | Method::Ci | Method::Sci));

    let ens_expected = if needs_expected {
        Some(bootstrap_expected(
            &spec,
            &data.train,
            &data.test,
            &boot_cfg,
        )?)
    } else {
        None
    };
    let ens_realized = if needs_realized {
        Some(bootstrap_realized(
            &spec,
            &data.train,
            &data.test,
            &boot_cfg,
        )?)
    } else {
        None
    };

    let objective_ensemble = || -> &PredictionEnsemble {
        match cfg.objective {
            Objective::Expected => ens_expected.as_ref().expect("expected ensemble built"),
            Objective::Realized => ens_realized.as_ref().expect("realized ensemble built"),
        }
    };
    let objective_target: &[f64] = match cfg.objective {
        Objective::Expected => &data.truth,
        Objective::Realized => data
            .realized
            .as_ref()
            .expect("continuous generator provides realized outcomes"),
    };
    let alpha = 1.0 - cfg.tlb;

    let mut outcomes = Vec::with_capacity(cfg.methods.len());
    for method in &cfg.methods {
        let outcome = match method {
            Method::Cs => {
                let result = construct(objective_ensemble(), cfg.c, cfg.tlb)?;
                MethodOutcome {
                    method: *method,
                    contained: check_containment(
                        &result.inner,
                        &result.outer,
                        objective_target,
                        cfg.c,
                    ),
                    elb: Some(result.elb),
                    eub: Some(result.eub),
                    boundary_count: Some(result.boundary_count),
                    truth_set_size: truth_set_size(objective_target, cfg.c),
                }
            }
            Method::Ci | Method::Sci => {
                let ens = objective_ensemble();
                let bands = match method {
                    Method::Ci => pointwise_bands(ens, alpha)?,
                    _ => simultaneous_bands(ens, alpha)?,
                };
                let (inner, outer) = invert_bands(&bands, cfg.c);
                MethodOutcome {
                    method: *method,
                    contained: check_containment(&inner, &outer, objective_target, cfg.c),
                    elb: None,
                    eub: None,
                    boundary_count: None,
                    truth_set_size: truth_set_size(objective_target, cfg.c),
                }
            }
            Method::Asymptotic => {
                let ens = ens_expected.as_ref().expect("expected ensemble built");
                let result = construct_asymptotic(ens, cfg.c, cfg.tlb, &data.boundary_indices)?;
                MethodOutcome {
                    method: *method,
                    contained: check_containment(&result.inner, &result.outer, &data.truth, cfg.c),
                    elb: Some(result.elb),
                    eub: Some(result.eub),
                    boundary_count: Some(result.boundary_count),
                    truth_set_size: truth_set_size(&data.truth, cfg.c),
                }
            }
            Method::Corollary => {
                let ens = ens_expected.as_ref().expect("expected ensemble built");
                let d_true_values = ndarray::Array1::from_iter(
                    data.truth
                        .iter()
                        .zip(ens.scale().iter())
                        .map(|(t, s)| (t - cfg.c) / s),
                );
                let d_true = SignedDistances::from_values(d_true_values, cfg.c)?;
                let (plus, minus) = closest_pair(&d_true)?;
                let result = construct_corollary(ens, cfg.c, plus, minus, &d_true)?;
                MethodOutcome {
                    method: *method,
                    contained: check_containment(&result.inner, &result.outer, &data.truth, cfg.c),
                    elb: None,
                    eub: Some(result.eub),
                    boundary_count: None,
                    truth_set_size: truth_set_size(&data.truth, cfg.c),
                }
            }
        };
        outcomes.push(outcome);
    }

    Ok(ReplicationOutcome {
        replication: r,
        methods: outcomes,
    })
}

fn truth_set_size(truth_values: &[f64], c: f64) -> usize {
    truth_values.iter().filter(|&&t| t >= c).count()
}

/// Run every replication of a scenario and aggregate coverage. Individual
/// replication failures are tolerated and excluded up to 5% of the total;
/// beyond that the scenario aborts.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    let total = cfg.replications;
    let results: Vec<Result<ReplicationOutcome>> = map_indexed(total, |r| run_replication(cfg, r));

    let mut outcomes = Vec::with_capacity(total);
    let mut failures = 0usize;
    for result in results {
        match result {
            Ok(outcome) => outcomes.push(outcome),
            Err(_) => failures += 1,
        }
    }
    if failures * 20 > total {
        return Err(Error::ScenarioAborted {
            name: cfg.name.clone(),
            failed: failures,
            total,
        });
    }

    let used = outcomes.len();
    let mut methods = Vec::with_capacity(cfg.methods.len());
    for (idx, method) in cfg.methods.iter().enumerate() {
        let per: Vec<&MethodOutcome> = outcomes.iter().map(|o| &o.methods[idx]).collect();
        let covered = per.iter().filter(|o| o.contained).count();
        let coverage = covered as f64 / used as f64;
        let mean = |values: Vec<f64>| -> Option<f64> {
            if values.len() == used && used > 0 {
                Some(values.iter().sum::<f64>() / used as f64)
            } else {
                None
            }
        };
        let mean_eub = mean(per.iter().filter_map(|o| o.eub).collect());
        let mean_boundary_count = mean(
            per.iter()
                .filter_map(|o| o.boundary_count.map(|v| v as f64))
                .collect(),
        );
        let mean_truth_set_size =
            per.iter().map(|o| o.truth_set_size as f64).sum::<f64>() / used as f64;
        methods.push(MethodReport {
            method: *method,
            coverage,
            monte_carlo_se: (coverage * (1.0 - coverage) / used as f64).sqrt(),
            mean_eub,
            mean_boundary_count,
            mean_truth_set_size,
        });
    }

    Ok(CoverageReport {
        scenario: cfg.name.clone(),
        generator: cfg.generator.label(),
        n: cfg.n,
        m: cfg.m,
        c: cfg.c,
        tlb: cfg.tlb,
        b: cfg.b,
        objective: cfg.objective,
        replications_requested: total,
        replications_used: used,
        failures,
        methods,
    })
}

/// Flat CSV with one row per (scenario, method), suitable for plotting.
pub fn reports_to_csv(reports: &[CoverageReport]) -> String {
    let mut out = String::from(
        "scenario,generator,method,objective,n,m,c,tlb,b,replications_used,failures,coverage,monte_carlo_se,mean_eub,mean_boundary_count,mean_truth_set_size\n",
    );
    for report in reports {
        for m in &report.methods {
            let objective = match report.objective {
                Objective::Expected => "expected",
                Objective::Realized => "realized",
            };
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                report.scenario,
                report.generator,
                m.method.label(),
                objective,
                report.n,
                report.m,
                report.c,
                report.tlb,
                report.b,
                report.replications_used,
                report.failures,
                m.coverage,
                m.monte_carlo_se,
                opt(m.mean_eub),
                opt(m.mean_boundary_count),
                m.mean_truth_set_size,
            ));
        }
    }
    out
}
