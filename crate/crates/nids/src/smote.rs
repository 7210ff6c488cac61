//! Synthetic minority oversampling (SMOTE).
//!
//! Rebalances a training set by planting synthetic minority rows on the
//! segments between existing minority instances and their nearest minority
//! neighbors: `x_new = x_base + r · (x_neighbor − x_base)` with `r` uniform
//! in [0, 1). Base instances are cycled round-robin over the minority set so
//! no single instance dominates the synthetic mass, and each base uses its
//! own RNG stream so the output is identical regardless of thread count.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::data::Dataset;
use crate::rng::stream_rng;

#[derive(Debug, Error)]
pub enum SmoteError {
    #[error("neighbor count k must be at least 1")]
    BadK,
    #[error("training set contains a single class; nothing to rebalance")]
    SingleClass,
    #[error("minority class has a single instance; no neighbor to interpolate toward")]
    MinoritySingleton,
    #[error("target minority count {target} is below the current count {current}")]
    TargetBelowCurrent { target: usize, current: usize },
}

/// Oversampling request: neighborhood size, the minority row count to reach,
/// and the seed for all interpolation draws.
#[derive(Debug, Clone)]
pub struct SmoteConfig {
    pub k: usize,
    pub target_minority_count: usize,
    pub seed: u64,
}

impl SmoteConfig {
    /// The canonical neighborhood size.
    pub const DEFAULT_K: usize = 5;
}

/// One interpolation step: the point a fraction `r` of the way from `base`
/// toward `neighbor`.
pub fn synthesize(base: &[f64], neighbor: &[f64], r: f64) -> Vec<f64> {
    base.iter().zip(neighbor).map(|(&a, &b)| a + r * (b - a)).collect()
}

/// Appends `target_minority_count − current` synthetic minority rows to the
/// training set. Original rows come first, bit-identical and in their
/// original order. For each synthetic row, the neighbor is drawn uniformly
/// from the k nearest minority neighbors (Euclidean distance, distance ties
/// broken by lower row index) of its base instance. With k ≥ minority − 1 the
/// neighborhood degrades to "all other minority rows".
pub fn oversample(train: &Dataset, cfg: &SmoteConfig) -> Result<Dataset, SmoteError> {
    if cfg.k == 0 {
        return Err(SmoteError::BadK);
    }
    let (n0, n1) = train.class_counts();
    if n0 == 0 || n1 == 0 {
        return Err(SmoteError::SingleClass);
    }
    // The attack class wins the tie so a balanced set still has a defined
    // minority to grow.
    let minority_label: u8 = if n1 <= n0 { 1 } else { 0 };
    let current = if minority_label == 1 { n1 } else { n0 };
    if current < 2 {
        return Err(SmoteError::MinoritySingleton);
    }
    if cfg.target_minority_count < current {
        return Err(SmoteError::TargetBelowCurrent {
            target: cfg.target_minority_count,
            current,
        });
    }

    let minority: Vec<usize> =
        (0..train.len()).filter(|&i| train.labels[i] == minority_label).collect();
    let m = minority.len();
    let needed = cfg.target_minority_count - current;

    let mut out = train.clone();
    if needed == 0 {
        return Ok(out);
    }

    let k_eff = cfg.k.min(m - 1);
    let rows: Vec<&[f64]> = minority.iter().map(|&i| train.features[i].as_slice()).collect();

    // k nearest minority neighbors per minority instance (positions into
    // `minority`, which is ascending, so index ties resolve to lower row).
    let neighbors: Vec<Vec<usize>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut dist: Vec<(f64, usize)> = (0..m)
                .filter(|&j| j != i)
                .map(|j| {
                    let d2 = rows[i]
                        .iter()
                        .zip(rows[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>();
                    (d2, j)
                })
                .collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| {
                a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
            };
            if k_eff < dist.len() {
                dist.select_nth_unstable_by(k_eff - 1, cmp);
                dist.truncate(k_eff);
            }
            dist.sort_unstable_by(cmp);
            dist.into_iter().map(|(_, j)| j).collect()
        })
        .collect();

    // Base i produces the synthetic rows at global positions i, i+m, i+2m, …
    // from its own RNG stream — a round-robin layout that parallelizes
    // without coupling streams.
    let mut synthetic: Vec<(usize, Vec<f64>)> = (0..m)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = stream_rng(cfg.seed, i as u64);
            let base = rows[i];
            let hood = &neighbors[i];
            let mut made = Vec::new();
            let mut pos = i;
            while pos < needed {
                let neighbor = rows[hood[rng.random_range(0..k_eff)]];
                let r: f64 = rng.random();
                made.push((pos, synthesize(base, neighbor, r)));
                pos += m;
            }
            made
        })
        .collect();
    synthetic.sort_unstable_by_key(|&(pos, _)| pos);

    for (_, row) in synthetic {
        out.features.push(row);
        out.labels.push(minority_label);
    }
    Ok(out)
}
