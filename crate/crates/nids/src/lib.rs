//! Training and evaluation toolkit for binary network-intrusion detection
//! models over tabular flow records.
//!
//! The crate covers the full workflow behind the `nids` binary:
//!
//! * [`data`] — CSV ingestion, label binarization (normal = 0, attack = 1),
//!   Z-score normalization, seeded train/test splitting;
//! * [`smote`] — synthetic minority oversampling to rebalance training sets;
//! * [`feature_selection`] — information-gain and correlation-based feature
//!   ranking plus column projection;
//! * [`classifiers`] — from-scratch KNN and random-forest learners behind one
//!   fit/predict surface;
//! * [`hyperopt`] — five hyper-parameter optimizers (random search, particle
//!   swarm, genetic, GP-based and TPE-based Bayesian search) over mixed
//!   integer/categorical spaces;
//! * [`eval`] — confusion metrics, k-fold cross-validation, learning curves
//!   with minimum-training-size detection, and 2-D PCA projections;
//! * [`pipeline`] — the config-driven orchestration layer and report emission
//!   used by the CLI.
//!
//! Everything is deterministic for a fixed master seed: stages derive
//! independent RNG streams via [`rng`], and parallel sections always reduce
//! results in a fixed order, so the thread count never changes any output.

pub mod classifiers;
pub mod data;
pub mod eval;
pub mod feature_selection;
pub mod hyperopt;
pub mod pipeline;
pub mod rng;
pub mod smote;
