//! Offline Nash-equilibrium learning in congestion games.
//!
//! The crate covers the game model and its exact equilibrium oracle, offline
//! dataset synthesis at three feedback levels, reward estimators with
//! confidence bonuses, pessimistic surrogate minimization, dataset coverage
//! coefficients, the built-in hard instances, and an experiment driver.

pub mod coverage;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod format;
pub mod game;
pub mod instances;
pub mod linalg;
pub mod solver;

pub use coverage::{Coefficient, CoverageKind, CoverageReport};
pub use dataset::{Dataset, ExplorationPolicy, FeedbackLevel, FeedbackRecord, Record};
pub use error::{Error, Result};
pub use estimators::{Confidence, Estimate, EstimatorState, FacilityEstimate, FeatureMap, LinearModel, RewardModel};
pub use game::{ActionSet, CongestionGame, FacilityId, FacilityNoise, JointAction, ProductPolicy, ValueProfile};
pub use instances::{InstanceId, NamedInstance};
pub use solver::{surrogate_minimize, SurrogateCertificate};
