//! Bayesian optimization with a Gaussian-process surrogate and expected
//! improvement.
//!
//! The surrogate uses a squared-exponential kernel on candidates rescaled
//! to the unit cube, a median-heuristic length scale, standardized scores,
//! and a Cholesky solve with escalating jitter. Each round fits the GP to
//! all unique observations, scores an acquisition pool by expected
//! improvement, and proposes the best un-proposed pool entry (falling back
//! to the overall argmax when the pool is exhausted — a duplicate proposal
//! then burns budget against the memo rather than stalling the loop).

use std::collections::BTreeMap;

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::{
    CachedObjective, Candidate, HyperoptError, ObjectiveFn, OptimizationTrace, OptimizerId,
    SearchSpace, TraceBuilder,
};
use crate::rng::stream_rng;

/// Pool size when the space is too large to enumerate; spaces of at most
/// this many candidates are scored exhaustively instead.
const POOL_SIZE: usize = 256;
const INIT_EVALS: usize = 5;

/// A fitted Gaussian-process posterior over observed (point, score) pairs.
#[derive(Debug, Clone)]
pub struct GpState {
    points: Vec<Vec<f64>>,
    /// Lower Cholesky factor of the jittered kernel matrix.
    chol: Vec<Vec<f64>>,
    /// K⁻¹·(standardized scores), precomputed for fast posterior means.
    alpha: Vec<f64>,
    length_scale: f64,
    score_mean: f64,
    score_std: f64,
}

impl GpState {
    /// Fits the GP. `points` should be deduplicated — repeated rows force
    /// the jitter up and blur the interpolation.
    pub fn fit(points: Vec<Vec<f64>>, scores: &[f64]) -> Result<GpState, HyperoptError> {
        if points.is_empty() || points.len() != scores.len() {
            return Err(HyperoptError::BadConfig(format!(
                "GP needs matching non-empty points and scores; got {} and {}",
                points.len(),
                scores.len()
            )));
        }
        let n = points.len();
        let score_mean = scores.iter().sum::<f64>() / n as f64;
        let variance =
            scores.iter().map(|s| (s - score_mean) * (s - score_mean)).sum::<f64>() / n as f64;
        let score_std = if variance.sqrt() < 1e-12 { 1.0 } else { variance.sqrt() };
        let standardized: Vec<f64> =
            scores.iter().map(|s| (s - score_mean) / score_std).collect();

        // Median pairwise distance as the length scale; a single point (or
        // all-identical points) falls back to 1.
        let mut distances: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let d = euclidean(&points[i], &points[j]);
                if d > 0.0 {
                    distances.push(d);
                }
            }
        }
        let length_scale = if distances.is_empty() {
            1.0
        } else {
            distances.sort_unstable_by(f64::total_cmp);
            distances[distances.len() / 2]
        };

        let mut kernel = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                kernel[i][j] = se_kernel(&points[i], &points[j], length_scale);
            }
        }
        let mut chol = None;
        let mut jitter = 1e-6;
        while jitter <= 1e-2 {
            let mut jittered = kernel.clone();
            for (i, row) in jittered.iter_mut().enumerate() {
                row[i] += jitter;
            }
            if let Some(l) = cholesky(&jittered) {
                chol = Some(l);
                break;
            }
            jitter *= 10.0;
        }
        let chol = chol.ok_or(HyperoptError::KernelNotPd)?;
        let alpha = solve_with_cholesky(&chol, &standardized);
        Ok(GpState { points, chol, alpha, length_scale, score_mean, score_std })
    }

    /// Posterior mean and standard deviation at a point, on the original
    /// score scale.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let k_star: Vec<f64> = self
            .points
            .iter()
            .map(|p| se_kernel(p, x, self.length_scale))
            .collect();
        let mean_std: f64 = k_star.iter().zip(&self.alpha).map(|(k, a)| k * a).sum();
        let v = forward_substitute(&self.chol, &k_star);
        let variance = (1.0 - v.iter().map(|x| x * x).sum::<f64>()).max(0.0);
        (
            mean_std * self.score_std + self.score_mean,
            variance.sqrt() * self.score_std,
        )
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }
}

/// Expected improvement of a Gaussian belief `(mu, sigma)` over the best
/// score seen so far. Never negative; with no uncertainty it is the plain
/// surplus `max(0, mu − best)`.
pub fn expected_improvement(mu: f64, sigma: f64, best: f64) -> f64 {
    if sigma <= 0.0 {
        return (mu - best).max(0.0);
    }
    let gain = mu - best;
    let z = gain / sigma;
    let standard_normal = Normal::new(0.0, 1.0).expect("standard normal is valid");
    (gain * standard_normal.cdf(z) + sigma * standard_normal.pdf(z)).max(0.0)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn se_kernel(a: &[f64], b: &[f64], length_scale: f64) -> f64 {
    let d = euclidean(a, b);
    (-d * d / (2.0 * length_scale * length_scale)).exp()
}

/// Lower-triangular Cholesky factor, or `None` when the matrix is not
/// positive definite.
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let sum: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - sum;
                if d <= 0.0 {
                    return None;
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - sum) / l[j][j];
            }
        }
    }
    Some(l)
}

fn forward_substitute(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let sum: f64 = (0..i).map(|k| l[i][k] * x[k]).sum();
        x[i] = (b[i] - sum) / l[i][i];
    }
    x
}

/// Solves `L·Lᵀ·x = b` given the lower factor.
fn solve_with_cholesky(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let z = forward_substitute(l, b);
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let sum: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (z[i] - sum) / l[i][i];
    }
    x
}

/// Rescales a candidate into the unit cube, so the kernel treats a
/// 240-value tree count and a 2-value flag comparably.
fn unit_scaled(space: &SearchSpace, candidate: &Candidate) -> Vec<f64> {
    space
        .encode(candidate)
        .iter()
        .enumerate()
        .map(|(d, &x)| {
            let (lo, hi) = space.bounds(d);
            if hi > lo {
                (x - lo) / (hi - lo)
            } else {
                0.0
            }
        })
        .collect()
}

pub fn bo_gp_optimize(
    space: &SearchSpace,
    objective: &ObjectiveFn,
    budget: usize,
    seed: u64,
) -> Result<OptimizationTrace, HyperoptError> {
    let mut builder = TraceBuilder::new(budget)?;
    let cached = CachedObjective::new(objective);
    let mut rng = stream_rng(seed, 0);

    let init = INIT_EVALS.min(budget).min(space.cardinality().min(u128::from(u64::MAX)) as usize);
    let design = super::init_design(space, init.max(1), &mut rng);
    builder.run_batch(&cached, design)?;

    let exhaustive_pool: Option<Vec<Candidate>> = if space.cardinality() <= POOL_SIZE as u128 {
        Some(space.enumerate())
    } else {
        None
    };

    while !builder.is_exhausted() {
        // Unique observations, in a deterministic order.
        let mut observed: BTreeMap<Candidate, f64> = BTreeMap::new();
        for t in builder.trials() {
            observed.insert(t.candidate.clone(), t.score);
        }
        let points: Vec<Vec<f64>> =
            observed.keys().map(|c| unit_scaled(space, c)).collect();
        let scores: Vec<f64> = observed.values().copied().collect();
        let best_seen = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let gp = GpState::fit(points, &scores)?;

        let pool: Vec<Candidate> = match &exhaustive_pool {
            Some(all) => all.clone(),
            None => (0..POOL_SIZE).map(|_| space.random_candidate(&mut rng)).collect(),
        };
        let ranked: Vec<(usize, f64)> = {
            let mut scored: Vec<(usize, f64)> = pool
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let (mu, sigma) = gp.predict(&unit_scaled(space, c));
                    (i, expected_improvement(mu, sigma, best_seen))
                })
                .collect();
            // Highest acquisition first; equal values keep pool order.
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            scored
        };
        let next = ranked
            .iter()
            .map(|&(i, _)| &pool[i])
            .find(|c| !observed.contains_key(*c))
            .unwrap_or(&pool[ranked[0].0])
            .clone();
        builder.run_batch(&cached, vec![next])?;
    }
    Ok(builder.finish(OptimizerId::BayesGp, seed))
}
