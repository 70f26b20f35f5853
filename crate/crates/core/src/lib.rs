//! Inner and outer feature confidence sets for outcome excursions.
//!
//! Given a prediction model (built in or external), this crate identifies the
//! subset of test feature points whose expected or realized outcome exceeds a
//! level `c`, together with data-dependent inner and outer confidence sets
//! that sandwich the true subset with a target lower bound and an estimated
//! upper bound on the containment probability.
//!
//! The pipeline is model-agnostic: any source of a `B x m` bootstrap
//! prediction matrix can feed the construction through
//! [`data::PredictionEnsemble`]. Built-in learners (linear, logistic, small
//! feedforward network) plus the nonparametric bootstrap engines in
//! [`bootstrap`] cover the common cases end to end.
//!
//! Modules:
//! - [`data`]: core value types, validation, CSV ingestion.
//! - [`learners`]: built-in fit/predict models.
//! - [`bootstrap`]: bootstrap engines for expected and realized outcomes.
//! - [`excursion`]: residual field, signed distances, bound estimators, and
//!   the set construction algorithms.
//! - [`baselines`]: reference constructions by inverting pointwise and
//!   simultaneous confidence intervals.
//! - [`simlab`]: data generators and the coverage simulation harness.

pub mod baselines;
pub mod bootstrap;
pub mod data;
pub mod error;
pub mod excursion;
pub mod exec;
pub mod learners;
pub mod seeding;
pub mod simlab;
pub mod stats;

pub use error::{Error, Result};
