//! Particle-swarm optimization over the continuous embedding of the grid.
//!
//! Particles fly through the encoded space and are snapped back onto the
//! grid for every evaluation. Velocity blends inertia with attraction
//! toward the particle's own best and the swarm's best; one `r1`/`r2` pair
//! is drawn per particle per step and applied to every dimension, so the
//! update is a classic two-coefficient rule rather than per-dimension
//! noise.

use rand::Rng;

use super::{
    CachedObjective, Candidate, HyperoptError, ObjectiveFn, OptimizationTrace, OptimizerId,
    SearchSpace, TraceBuilder,
};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct PsoConfig {
    pub swarm_size: usize,
    /// Counting the initial placement as iteration 0, so the total proposal
    /// load is `swarm_size × iterations` before the budget caps it.
    pub iterations: usize,
    /// Inertia weight on the previous velocity.
    pub inertia: f64,
    /// Cognitive coefficient — pull toward the particle's own best.
    pub c1: f64,
    /// Social coefficient — pull toward the swarm's best.
    pub c2: f64,
    /// Per-dimension speed limit; empty means half the domain width.
    pub v_max: Vec<f64>,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            swarm_size: 20,
            iterations: 30,
            inertia: 1.0,
            c1: 2.0,
            c2: 2.0,
            v_max: Vec::new(),
        }
    }
}

/// One velocity component update:
/// `v' = w·v + c1·r1·(pbest − x) + c2·r2·(gbest − x)`, clamped to
/// `±v_max`.
pub fn pso_velocity_update(
    v: f64,
    x: f64,
    pbest: f64,
    gbest: f64,
    cfg: &PsoConfig,
    r1: f64,
    r2: f64,
    v_max: f64,
) -> f64 {
    let updated = cfg.inertia * v + cfg.c1 * r1 * (pbest - x) + cfg.c2 * r2 * (gbest - x);
    updated.clamp(-v_max, v_max)
}

pub fn pso_optimize(
    space: &SearchSpace,
    objective: &ObjectiveFn,
    budget: usize,
    seed: u64,
    cfg: &PsoConfig,
) -> Result<OptimizationTrace, HyperoptError> {
    if cfg.swarm_size == 0 || cfg.iterations == 0 {
        return Err(HyperoptError::BadConfig(
            "swarm_size and iterations must be at least 1".into(),
        ));
    }
    let dims = space.dims();
    if !cfg.v_max.is_empty() && cfg.v_max.len() != dims {
        return Err(HyperoptError::BadConfig(format!(
            "v_max has {} entries for a {dims}-dimensional space",
            cfg.v_max.len()
        )));
    }
    let v_max: Vec<f64> = if cfg.v_max.is_empty() {
        (0..dims)
            .map(|d| {
                let (lo, hi) = space.bounds(d);
                ((hi - lo) / 2.0).max(0.5)
            })
            .collect()
    } else {
        cfg.v_max.clone()
    };

    let mut builder = TraceBuilder::new(budget)?;
    let cached = CachedObjective::new(objective);
    let mut rng = stream_rng(seed, 0);

    // Iteration 0: place the swarm (distinct where the grid allows) and
    // evaluate the starting positions.
    let initial = super::init_design(space, cfg.swarm_size, &mut rng);
    let mut positions: Vec<Vec<f64>> =
        initial.iter().map(|c| space.encode(c)).collect();
    let mut velocities: Vec<Vec<f64>> = vec![vec![0.0; dims]; positions.len()];
    let scores = builder.run_batch(&cached, initial)?;
    let evaluated = scores.len(); // may be < swarm_size on a tiny budget

    let mut personal_best: Vec<(Vec<f64>, f64)> = positions[..evaluated]
        .iter()
        .cloned()
        .zip(scores.iter().copied())
        .collect();
    let mut global_best = personal_best
        .iter()
        .cloned()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("swarm evaluated at least one particle");

    for _ in 1..cfg.iterations {
        if builder.is_exhausted() {
            break;
        }
        let flying = evaluated.min(builder.remaining());
        // Update particle states sequentially — the rng draw order is part
        // of the deterministic contract.
        let mut proposals: Vec<Candidate> = Vec::with_capacity(flying);
        for p in 0..flying {
            let r1: f64 = rng.random();
            let r2: f64 = rng.random();
            for d in 0..dims {
                velocities[p][d] = pso_velocity_update(
                    velocities[p][d],
                    positions[p][d],
                    personal_best[p].0[d],
                    global_best.0[d],
                    cfg,
                    r1,
                    r2,
                    v_max[d],
                );
                let (lo, hi) = space.bounds(d);
                positions[p][d] = (positions[p][d] + velocities[p][d]).clamp(lo, hi);
            }
            proposals.push(space.decode(&positions[p]));
        }
        let scores = builder.run_batch(&cached, proposals)?;
        for (p, &score) in scores.iter().enumerate() {
            // Snap the remembered position onto the grid actually scored.
            let snapped = space.encode(&space.decode(&positions[p]));
            if score > personal_best[p].1 {
                personal_best[p] = (snapped.clone(), score);
            }
            if score > global_best.1 {
                global_best = (snapped, score);
            }
        }
    }
    Ok(builder.finish(OptimizerId::ParticleSwarm, seed))
}
