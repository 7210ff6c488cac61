//! Hyper-parameter search over small mixed discrete spaces.
//!
//! A [`SearchSpace`] is a product of integer ranges and categorical
//! dimensions; a candidate is one point of that grid. Five strategies are
//! provided — random search, particle-swarm, a genetic algorithm, and two
//! Bayesian optimizers (Gaussian-process and tree-of-Parzen-estimators) —
//! all driving the same budgeted, memoized objective. The budget counts
//! *proposals*, not unique evaluations: re-proposing an already-scored
//! candidate costs budget but hits the memo instead of refitting, which
//! keeps optimizer comparisons honest under a shared budget.

mod ga;
mod gp;
mod pso;
mod random_search;
mod tpe;

pub use ga::{ga_optimize, GaConfig};
pub use gp::{bo_gp_optimize, expected_improvement, GpState};
pub use pso::{pso_optimize, pso_velocity_update, PsoConfig};
pub use random_search::random_search;
pub use tpe::{bo_tpe_optimize, tpe_split};

use std::collections::HashMap;
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::classifiers::{Criterion, HyperParams};
use crate::data::Dataset;
use crate::eval::kfold_cv;

#[derive(Debug, Error)]
pub enum HyperoptError {
    #[error("invalid search space: {0}")]
    BadSpace(String),
    #[error("search budget must be at least 1")]
    BadBudget,
    #[error("objective returned {score}, outside [0, 1]")]
    ScoreOutOfRange { score: f64 },
    #[error("objective failed: {0}")]
    Objective(String),
    #[error("invalid optimizer configuration: {0}")]
    BadConfig(String),
    #[error("kernel matrix is not positive definite even with maximum jitter")]
    KernelNotPd,
    #[error("unknown optimizer {0:?}; expected rs, pso, ga, bo-gp or bo-tpe")]
    UnknownOptimizer(String),
}

/// One grid value: an integer setting or a categorical choice (by index
/// into the dimension's value list).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamValue {
    Int(i64),
    Cat(usize),
}

/// A point in the search space, one value per dimension.
pub type Candidate = Vec<ParamValue>;

/// One dimension of the space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamSpec {
    /// Integers `lo, lo+step, …` up to `hi` inclusive.
    IntRange { name: String, lo: i64, hi: i64, step: i64 },
    /// An unordered finite set of named choices.
    Categorical { name: String, values: Vec<String> },
}

impl ParamSpec {
    pub fn name(&self) -> &str {
        match self {
            ParamSpec::IntRange { name, .. } => name,
            ParamSpec::Categorical { name, .. } => name,
        }
    }
}

/// The product grid the optimizers explore.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchSpace {
    params: Vec<ParamSpec>,
}

impl SearchSpace {
    pub fn new(params: Vec<ParamSpec>) -> Result<SearchSpace, HyperoptError> {
        if params.is_empty() {
            return Err(HyperoptError::BadSpace("no dimensions".into()));
        }
        for (i, p) in params.iter().enumerate() {
            match p {
                ParamSpec::IntRange { name, lo, hi, step } => {
                    if lo > hi {
                        return Err(HyperoptError::BadSpace(format!(
                            "range {name:?} has lo {lo} > hi {hi}"
                        )));
                    }
                    if *step < 1 {
                        return Err(HyperoptError::BadSpace(format!(
                            "range {name:?} has nonpositive step {step}"
                        )));
                    }
                }
                ParamSpec::Categorical { name, values } => {
                    if values.is_empty() {
                        return Err(HyperoptError::BadSpace(format!(
                            "categorical {name:?} has no values"
                        )));
                    }
                }
            }
            if params[..i].iter().any(|q| q.name() == p.name()) {
                return Err(HyperoptError::BadSpace(format!(
                    "duplicate dimension name {:?}",
                    p.name()
                )));
            }
        }
        Ok(SearchSpace { params })
    }

    pub fn dims(&self) -> usize {
        self.params.len()
    }

    pub fn param(&self, dim: usize) -> &ParamSpec {
        &self.params[dim]
    }

    /// Number of grid values along one dimension.
    pub fn value_count(&self, dim: usize) -> usize {
        match &self.params[dim] {
            ParamSpec::IntRange { lo, hi, step, .. } => ((hi - lo) / step) as usize + 1,
            ParamSpec::Categorical { values, .. } => values.len(),
        }
    }

    /// Total number of candidates in the grid.
    pub fn cardinality(&self) -> u128 {
        (0..self.dims()).map(|d| self.value_count(d) as u128).product()
    }

    /// The `index`-th candidate in mixed-radix order (dimension 0 varies
    /// fastest).
    pub fn candidate_at(&self, mut index: u128) -> Candidate {
        debug_assert!(index < self.cardinality());
        (0..self.dims())
            .map(|d| {
                let count = self.value_count(d) as u128;
                let k = (index % count) as usize;
                index /= count;
                self.value_at(d, k)
            })
            .collect()
    }

    pub(crate) fn value_at(&self, dim: usize, k: usize) -> ParamValue {
        match &self.params[dim] {
            ParamSpec::IntRange { lo, step, .. } => ParamValue::Int(lo + k as i64 * step),
            ParamSpec::Categorical { .. } => ParamValue::Cat(k),
        }
    }

    /// Every candidate, in mixed-radix order. Only call on small spaces.
    pub fn enumerate(&self) -> Vec<Candidate> {
        (0..self.cardinality()).map(|i| self.candidate_at(i)).collect()
    }

    pub fn random_candidate(&self, rng: &mut ChaCha8Rng) -> Candidate {
        (0..self.dims())
            .map(|d| self.value_at(d, rng.random_range(0..self.value_count(d))))
            .collect()
    }

    /// Continuous embedding: integer dimensions map to their value,
    /// categorical dimensions to their index.
    pub fn encode(&self, candidate: &Candidate) -> Vec<f64> {
        candidate
            .iter()
            .map(|v| match *v {
                ParamValue::Int(x) => x as f64,
                ParamValue::Cat(i) => i as f64,
            })
            .collect()
    }

    /// Snaps a continuous point back onto the grid: clamp into bounds, then
    /// round to the nearest step (integer ranges) or index (categoricals).
    pub fn decode(&self, point: &[f64]) -> Candidate {
        point
            .iter()
            .enumerate()
            .map(|(d, &x)| match &self.params[d] {
                ParamSpec::IntRange { lo, hi, step, .. } => {
                    let clamped = x.clamp(*lo as f64, *hi as f64);
                    let k = ((clamped - *lo as f64) / *step as f64).round() as i64;
                    ParamValue::Int((lo + k * step).min(*hi))
                }
                ParamSpec::Categorical { values, .. } => {
                    let k = x.round().clamp(0.0, (values.len() - 1) as f64) as usize;
                    ParamValue::Cat(k)
                }
            })
            .collect()
    }

    /// Continuous bounds of one dimension in the [`encode`](Self::encode)
    /// embedding.
    pub fn bounds(&self, dim: usize) -> (f64, f64) {
        match &self.params[dim] {
            ParamSpec::IntRange { lo, hi, .. } => (*lo as f64, *hi as f64),
            ParamSpec::Categorical { values, .. } => (0.0, (values.len() - 1) as f64),
        }
    }

    pub fn contains(&self, candidate: &Candidate) -> bool {
        candidate.len() == self.dims()
            && candidate.iter().enumerate().all(|(d, v)| match (&self.params[d], v) {
                (ParamSpec::IntRange { lo, hi, step, .. }, ParamValue::Int(x)) => {
                    x >= lo && x <= hi && (x - lo) % step == 0
                }
                (ParamSpec::Categorical { values, .. }, ParamValue::Cat(i)) => {
                    *i < values.len()
                }
                _ => false,
            })
    }

    /// Human/CSV form, e.g. `trees=90;criterion=entropy`.
    pub fn format_candidate(&self, candidate: &Candidate) -> String {
        candidate
            .iter()
            .enumerate()
            .map(|(d, v)| match (&self.params[d], v) {
                (ParamSpec::IntRange { name, .. }, ParamValue::Int(x)) => format!("{name}={x}"),
                (ParamSpec::Categorical { name, values, .. }, ParamValue::Cat(i)) => {
                    format!("{name}={}", values[*i])
                }
                (p, v) => format!("{}=<invalid {v:?}>", p.name()),
            })
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// The stock space for the k-NN classifier: odd `k` from 1 to 29.
pub fn knn_space() -> SearchSpace {
    SearchSpace::new(vec![ParamSpec::IntRange {
        name: "k".into(),
        lo: 1,
        hi: 29,
        step: 2,
    }])
    .expect("static space is valid")
}

/// The stock space for the random forest: tree count and split criterion.
pub fn rf_space() -> SearchSpace {
    SearchSpace::new(vec![
        ParamSpec::IntRange { name: "trees".into(), lo: 10, hi: 250, step: 1 },
        ParamSpec::Categorical {
            name: "criterion".into(),
            values: vec!["gini".into(), "entropy".into()],
        },
    ])
    .expect("static space is valid")
}

/// Interprets a candidate as classifier settings, dispatching on the
/// dimension names: a `k` dimension selects k-NN, `trees` + `criterion`
/// select the random forest.
pub fn candidate_to_hyperparams(
    space: &SearchSpace,
    candidate: &Candidate,
) -> Result<HyperParams, HyperoptError> {
    let mut k = None;
    let mut trees = None;
    let mut criterion = None;
    for (d, v) in candidate.iter().enumerate() {
        match (space.param(d).name(), v) {
            ("k", ParamValue::Int(x)) if *x >= 1 => k = Some(*x as usize),
            ("trees", ParamValue::Int(x)) if *x >= 1 => trees = Some(*x as usize),
            ("criterion", ParamValue::Cat(i)) => {
                let ParamSpec::Categorical { values, .. } = space.param(d) else {
                    return Err(HyperoptError::BadSpace("criterion must be categorical".into()));
                };
                criterion = Some(Criterion::from_str(&values[*i]).map_err(HyperoptError::BadSpace)?);
            }
            (name, v) => {
                return Err(HyperoptError::BadSpace(format!(
                    "cannot interpret dimension {name:?} with value {v:?} as a classifier setting"
                )))
            }
        }
    }
    match (k, trees, criterion) {
        (Some(k), None, None) => Ok(HyperParams::Knn { k }),
        (None, Some(trees), Some(criterion)) => {
            Ok(HyperParams::RandomForest { trees, criterion })
        }
        _ => Err(HyperoptError::BadSpace(
            "expected either a k dimension or trees + criterion dimensions".into(),
        )),
    }
}

/// The objective every optimizer maximizes: a score in [0, 1], larger is
/// better.
pub type ObjectiveFn<'a> = dyn Fn(&Candidate) -> Result<f64, HyperoptError> + Sync + 'a;

/// Cross-validated accuracy as a search objective. The CV seed is fixed per
/// run, so the objective is a pure function of the candidate and every
/// optimizer sees the same landscape.
pub fn cv_objective<'a>(
    d: &'a Dataset,
    space: &'a SearchSpace,
    folds: usize,
    seed: u64,
) -> impl Fn(&Candidate) -> Result<f64, HyperoptError> + Sync + 'a {
    move |candidate| {
        let hp = candidate_to_hyperparams(space, candidate)?;
        kfold_cv(d, hp, folds, seed).map_err(|e| HyperoptError::Objective(e.to_string()))
    }
}

/// Memoizing wrapper around the objective. Scores are validated into
/// [0, 1]; repeat proposals return the cached score without recomputing.
pub struct CachedObjective<'a> {
    inner: &'a ObjectiveFn<'a>,
    cache: Mutex<HashMap<Candidate, f64>>,
}

impl<'a> CachedObjective<'a> {
    pub fn new(inner: &'a ObjectiveFn<'a>) -> CachedObjective<'a> {
        CachedObjective { inner, cache: Mutex::new(HashMap::new()) }
    }

    pub fn eval(&self, candidate: &Candidate) -> Result<f64, HyperoptError> {
        if let Some(&hit) = self.cache.lock().expect("cache lock").get(candidate) {
            return Ok(hit);
        }
        let score = (self.inner)(candidate)?;
        if !(0.0..=1.0).contains(&score) {
            return Err(HyperoptError::ScoreOutOfRange { score });
        }
        self.cache.lock().expect("cache lock").insert(candidate.clone(), score);
        Ok(score)
    }

    /// Evaluates a batch in parallel; results come back in input order.
    pub fn eval_batch(&self, candidates: &[Candidate]) -> Result<Vec<f64>, HyperoptError> {
        candidates.par_iter().map(|c| self.eval(c)).collect()
    }

    /// Number of distinct candidates actually computed.
    pub fn unique_evaluations(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }
}

/// One scored proposal, in proposal order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub candidate: Candidate,
    pub score: f64,
    pub eval_index: usize,
    /// Seconds since the search started when this proposal was recorded.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizerId {
    RandomSearch,
    ParticleSwarm,
    Genetic,
    BayesGp,
    BayesTpe,
}

impl OptimizerId {
    pub fn id(self) -> &'static str {
        match self {
            OptimizerId::RandomSearch => "rs",
            OptimizerId::ParticleSwarm => "pso",
            OptimizerId::Genetic => "ga",
            OptimizerId::BayesGp => "bo-gp",
            OptimizerId::BayesTpe => "bo-tpe",
        }
    }

    pub const ALL: [OptimizerId; 5] = [
        OptimizerId::RandomSearch,
        OptimizerId::ParticleSwarm,
        OptimizerId::Genetic,
        OptimizerId::BayesGp,
        OptimizerId::BayesTpe,
    ];
}

impl FromStr for OptimizerId {
    type Err = HyperoptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rs" => Ok(OptimizerId::RandomSearch),
            "pso" => Ok(OptimizerId::ParticleSwarm),
            "ga" => Ok(OptimizerId::Genetic),
            "bo-gp" => Ok(OptimizerId::BayesGp),
            "bo-tpe" => Ok(OptimizerId::BayesTpe),
            other => Err(HyperoptError::UnknownOptimizer(other.to_string())),
        }
    }
}

/// Everything a finished search reports: the full proposal log, the best
/// trial (highest score, earliest on ties), and the budget spent.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    pub optimizer: OptimizerId,
    pub trials: Vec<Trial>,
    pub best: Trial,
    pub budget_used: usize,
    pub seed: u64,
}

/// Accumulates trials against a fixed proposal budget.
pub(crate) struct TraceBuilder {
    trials: Vec<Trial>,
    budget: usize,
    started: Instant,
}

impl TraceBuilder {
    pub fn new(budget: usize) -> Result<TraceBuilder, HyperoptError> {
        if budget == 0 {
            return Err(HyperoptError::BadBudget);
        }
        Ok(TraceBuilder { trials: Vec::with_capacity(budget), budget, started: Instant::now() })
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.trials.len()
    }

    pub fn is_exhausted(&self) -> bool {
        self.remaining() == 0
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    /// Scores up to `remaining()` of the given candidates (in order,
    /// dropping the overflow), records them, and returns the scores of the
    /// recorded prefix.
    pub fn run_batch(
        &mut self,
        objective: &CachedObjective,
        mut candidates: Vec<Candidate>,
    ) -> Result<Vec<f64>, HyperoptError> {
        candidates.truncate(self.remaining());
        let scores = objective.eval_batch(&candidates)?;
        let elapsed = self.started.elapsed().as_secs_f64();
        for (candidate, &score) in candidates.into_iter().zip(&scores) {
            self.trials.push(Trial {
                candidate,
                score,
                eval_index: self.trials.len(),
                wall_time: elapsed,
            });
        }
        Ok(scores)
    }

    pub fn finish(self, optimizer: OptimizerId, seed: u64) -> OptimizationTrace {
        let best = self
            .trials
            .iter()
            .max_by(|a, b| {
                a.score
                    .total_cmp(&b.score)
                    .then(b.eval_index.cmp(&a.eval_index))
            })
            .expect("TraceBuilder records at least one trial before finish")
            .clone();
        OptimizationTrace {
            optimizer,
            budget_used: self.trials.len(),
            trials: self.trials,
            best,
            seed,
        }
    }
}

/// Draws `n` distinct candidates when the space allows it (shuffled
/// enumeration for small grids, rejection sampling otherwise), falling back
/// to with-replacement draws once distinctness stops being cheap.
pub(crate) fn init_design(
    space: &SearchSpace,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Candidate> {
    const SHUFFLE_LIMIT: u128 = 4096;
    let card = space.cardinality();
    if card <= SHUFFLE_LIMIT {
        let mut all = space.enumerate();
        all.shuffle(rng);
        all.truncate(n.min(all.len()));
        // Top up with replacement if n exceeds the grid itself.
        while all.len() < n {
            all.push(space.random_candidate(rng));
        }
        all
    } else {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let mut attempts = 0;
            let candidate = loop {
                let c = space.random_candidate(rng);
                if !seen.contains(&c) || attempts >= 64 {
                    break c;
                }
                attempts += 1;
            };
            seen.insert(candidate.clone());
            out.push(candidate);
        }
        out
    }
}

/// Optional knobs from the run configuration; unset fields use each
/// optimizer's default.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OptimizerSettings {
    pub swarm_size: Option<usize>,
    pub iterations: Option<usize>,
    pub population: Option<usize>,
    pub generations: Option<usize>,
    pub stall_generations: Option<usize>,
    pub crossover_rate: Option<f64>,
    pub mutation_rate: Option<f64>,
}

/// Runs the selected optimizer against the objective under a shared
/// proposal budget.
pub fn run_search(
    id: OptimizerId,
    space: &SearchSpace,
    objective: &ObjectiveFn,
    budget: usize,
    seed: u64,
    settings: &OptimizerSettings,
) -> Result<OptimizationTrace, HyperoptError> {
    match id {
        OptimizerId::RandomSearch => random_search(space, objective, budget, seed),
        OptimizerId::ParticleSwarm => {
            let mut cfg = PsoConfig::default();
            if let Some(v) = settings.swarm_size {
                cfg.swarm_size = v;
            }
            if let Some(v) = settings.iterations {
                cfg.iterations = v;
            }
            pso_optimize(space, objective, budget, seed, &cfg)
        }
        OptimizerId::Genetic => {
            let mut cfg = GaConfig::default();
            if let Some(v) = settings.population {
                cfg.population = v;
            }
            if let Some(v) = settings.generations {
                cfg.generations = v;
            }
            if let Some(v) = settings.stall_generations {
                cfg.stall_generations = v;
            }
            if let Some(v) = settings.crossover_rate {
                cfg.crossover_rate = v;
            }
            if let Some(v) = settings.mutation_rate {
                cfg.mutation_rate = v;
            }
            ga_optimize(space, objective, budget, seed, &cfg)
        }
        OptimizerId::BayesGp => bo_gp_optimize(space, objective, budget, seed),
        OptimizerId::BayesTpe => bo_tpe_optimize(space, objective, budget, seed),
    }
}
