//! Tree-of-Parzen-estimators Bayesian optimization.
//!
//! Scored trials are split into a "good" head (top quarter by score) and a
//! "bad" tail. Each dimension gets a pair of one-dimensional densities —
//! truncated-Gaussian Parzen windows for integer ranges, add-one-smoothed
//! frequencies for categoricals — and the next proposal is the pool sample
//! maximizing the density ratio good/bad, preferring samples that have not
//! been evaluated yet. When the whole pool is old news the proposer falls
//! back to uniform fresh draws, and past that to the plain ratio argmax (a
//! duplicate then burns budget against the memo rather than stalling the
//! loop). Without the unseen preference the sharpening good density can
//! lock onto one point and re-propose it forever on small discrete spaces.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::{
    CachedObjective, Candidate, HyperoptError, ObjectiveFn, OptimizationTrace, OptimizerId,
    ParamSpec, SearchSpace, TraceBuilder, Trial,
};
use crate::rng::{sample_standard_normal, stream_rng};

/// Fraction of trials forming the "good" group.
const GAMMA: f64 = 0.25;
/// Candidates sampled from the good density per proposal round.
const POOL: usize = 24;
const INIT_EVALS: usize = 5;

/// Splits trials into (good, bad) by score — descending, with earlier
/// trials winning ties. The good group holds `round(γ·n)` trials, at least
/// one and never all of them; callers need two or more trials.
pub fn tpe_split(trials: &[Trial]) -> (Vec<&Trial>, Vec<&Trial>) {
    assert!(trials.len() >= 2, "TPE split needs at least two trials");
    let mut order: Vec<&Trial> = trials.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.eval_index.cmp(&b.eval_index)));
    let n_good = ((GAMMA * trials.len() as f64).round() as usize)
        .max(1)
        .min(trials.len() - 1);
    let bad = order.split_off(n_good);
    (order, bad)
}

/// Parzen-window density over one integer dimension, built from the
/// encoded values observed in one group.
struct IntParzen {
    /// (center, bandwidth) per observed value.
    components: Vec<(f64, f64)>,
    lo: f64,
    hi: f64,
}

impl IntParzen {
    fn build(mut values: Vec<f64>, lo: f64, hi: f64) -> IntParzen {
        values.sort_unstable_by(f64::total_cmp);
        // Bandwidth floor: a tenth of the domain (with a floor of 0.1 so a
        // degenerate single-value range still yields a proper density).
        let base = ((hi - lo) / 10.0).max(0.1);
        let components = values
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let gap_prev = if i > 0 { c - values[i - 1] } else { 0.0 };
                let gap_next = if i + 1 < values.len() { values[i + 1] - c } else { 0.0 };
                (c, base.max(gap_prev).max(gap_next))
            })
            .collect();
        IntParzen { components, lo, hi }
    }

    /// Mean truncated-Gaussian density across components.
    fn pdf(&self, x: f64) -> f64 {
        let total: f64 = self
            .components
            .iter()
            .map(|&(c, bw)| {
                let n = Normal::new(c, bw).expect("bandwidth is positive");
                let mass = n.cdf(self.hi) - n.cdf(self.lo);
                // Nearly no mass inside the domain: skip renormalization
                // rather than dividing by ~0.
                if mass > 1e-12 {
                    n.pdf(x) / mass
                } else {
                    n.pdf(x)
                }
            })
            .sum();
        total / self.components.len() as f64
    }

    fn log_pdf(&self, x: f64) -> f64 {
        self.pdf(x).max(f64::MIN_POSITIVE).ln()
    }

    /// One draw: pick a component uniformly, then rejection-sample its
    /// truncated Gaussian (clamping after 100 misses — on these narrow
    /// domains that is already vanishingly rare).
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let (c, bw) = self.components[rng.random_range(0..self.components.len())];
        for _ in 0..100 {
            let x = c + bw * sample_standard_normal(rng);
            if x >= self.lo && x <= self.hi {
                return x;
            }
        }
        c.clamp(self.lo, self.hi)
    }
}

/// Add-one-smoothed category frequencies for one categorical dimension.
struct CatDensity {
    /// Smoothed probability per category index.
    probabilities: Vec<f64>,
}

impl CatDensity {
    fn build(observed: &[usize], n_categories: usize) -> CatDensity {
        let mut counts = vec![0usize; n_categories];
        for &c in observed {
            counts[c] += 1;
        }
        let denominator = (observed.len() + n_categories) as f64;
        CatDensity {
            probabilities: counts.iter().map(|&c| (c + 1) as f64 / denominator).collect(),
        }
    }

    fn log_prob(&self, category: usize) -> f64 {
        self.probabilities[category].ln()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let ticket: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            acc += p;
            if ticket < acc {
                return i;
            }
        }
        self.probabilities.len() - 1
    }
}

/// Per-dimension density of one trial group.
enum DimDensity {
    Int(IntParzen),
    Cat(CatDensity),
}

impl DimDensity {
    fn build(space: &SearchSpace, dim: usize, group: &[&Trial]) -> DimDensity {
        match space.param(dim) {
            ParamSpec::IntRange { .. } => {
                let (lo, hi) = space.bounds(dim);
                let values: Vec<f64> = group
                    .iter()
                    .map(|t| space.encode(&t.candidate)[dim])
                    .collect();
                DimDensity::Int(IntParzen::build(values, lo, hi))
            }
            ParamSpec::Categorical { values, .. } => {
                let observed: Vec<usize> = group
                    .iter()
                    .map(|t| match t.candidate[dim] {
                        super::ParamValue::Cat(i) => i,
                        super::ParamValue::Int(_) => {
                            unreachable!("categorical dimension holds Cat values")
                        }
                    })
                    .collect();
                DimDensity::Cat(CatDensity::build(&observed, values.len()))
            }
        }
    }

    fn log_density(&self, dim: usize, candidate: &Candidate) -> f64 {
        match (self, &candidate[dim]) {
            (DimDensity::Int(parzen), super::ParamValue::Int(x)) => parzen.log_pdf(*x as f64),
            (DimDensity::Cat(cat), super::ParamValue::Cat(i)) => cat.log_prob(*i),
            _ => unreachable!("density kind matches the dimension kind"),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            DimDensity::Int(parzen) => parzen.sample(rng),
            DimDensity::Cat(cat) => cat.sample(rng) as f64,
        }
    }
}

pub fn bo_tpe_optimize(
    space: &SearchSpace,
    objective: &ObjectiveFn,
    budget: usize,
    seed: u64,
) -> Result<OptimizationTrace, HyperoptError> {
    let mut builder = TraceBuilder::new(budget)?;
    let cached = CachedObjective::new(objective);
    let mut rng = stream_rng(seed, 0);

    let design = super::init_design(space, INIT_EVALS.min(budget), &mut rng);
    builder.run_batch(&cached, design)?;

    while !builder.is_exhausted() {
        if builder.trials().len() < 2 {
            let c = space.random_candidate(&mut rng);
            builder.run_batch(&cached, vec![c])?;
            continue;
        }
        let seen: HashSet<&Candidate> =
            builder.trials().iter().map(|t| &t.candidate).collect();
        let (good, bad) = tpe_split(builder.trials());
        let good_model: Vec<DimDensity> =
            (0..space.dims()).map(|d| DimDensity::build(space, d, &good)).collect();
        let bad_model: Vec<DimDensity> =
            (0..space.dims()).map(|d| DimDensity::build(space, d, &bad)).collect();

        // Sample a pool from the good density and keep the candidate with
        // the best good-to-bad log-density ratio (first wins ties), tracked
        // separately for fresh candidates and for the pool overall.
        let mut best_fresh: Option<(f64, Candidate)> = None;
        let mut best_any: Option<(f64, Candidate)> = None;
        for _ in 0..POOL {
            let point: Vec<f64> =
                good_model.iter().map(|density| density.sample(&mut rng)).collect();
            let candidate = space.decode(&point);
            let ratio: f64 = (0..space.dims())
                .map(|d| {
                    good_model[d].log_density(d, &candidate)
                        - bad_model[d].log_density(d, &candidate)
                })
                .sum();
            if best_any.as_ref().map_or(true, |(incumbent, _)| ratio > *incumbent) {
                best_any = Some((ratio, candidate.clone()));
            }
            if !seen.contains(&candidate)
                && best_fresh.as_ref().map_or(true, |(incumbent, _)| ratio > *incumbent)
            {
                best_fresh = Some((ratio, candidate));
            }
        }
        let next = match best_fresh {
            Some((_, candidate)) => candidate,
            None => (0..4 * POOL)
                .map(|_| space.random_candidate(&mut rng))
                .find(|candidate| !seen.contains(candidate))
                .unwrap_or_else(|| best_any.expect("pool is non-empty").1),
        };
        builder.run_batch(&cached, vec![next])?;
    }
    Ok(builder.finish(OptimizerId::BayesTpe, seed))
}
