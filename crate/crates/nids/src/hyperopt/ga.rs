//! Genetic algorithm over candidates in value space: rank-proportional
//! parent selection, uniform crossover, per-gene uniform-resample mutation,
//! and a small elite carried between generations without re-evaluation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    CachedObjective, Candidate, HyperoptError, ObjectiveFn, OptimizationTrace, OptimizerId,
    SearchSpace, TraceBuilder,
};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    /// Probability that an offspring mixes both parents gene-by-gene;
    /// otherwise it clones the first parent.
    pub crossover_rate: f64,
    /// Per-gene probability of resampling the gene uniformly.
    pub mutation_rate: f64,
    /// Number of best individuals copied unchanged into the next
    /// generation. Elites keep their known scores and consume no budget.
    pub elitism: usize,
    /// Stop after this many consecutive generations without improvement.
    pub stall_generations: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 20,
            generations: 30,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            elitism: 1,
            stall_generations: 10,
        }
    }
}

/// Picks a parent index by rank weighting: rank 0 (the best) gets weight
/// `population`, the worst gets weight 1.
fn select_by_rank(order: &[usize], rng: &mut ChaCha8Rng) -> usize {
    let n = order.len();
    let total = n * (n + 1) / 2;
    let mut ticket = rng.random_range(0..total);
    for (rank, &individual) in order.iter().enumerate() {
        let weight = n - rank;
        if ticket < weight {
            return individual;
        }
        ticket -= weight;
    }
    unreachable!("ticket {ticket} exceeds total rank weight {total}")
}

fn mutate_gene(space: &SearchSpace, dim: usize, rng: &mut ChaCha8Rng) -> super::ParamValue {
    let k = rng.random_range(0..space.value_count(dim));
    space.value_at(dim, k)
}

pub fn ga_optimize(
    space: &SearchSpace,
    objective: &ObjectiveFn,
    budget: usize,
    seed: u64,
    cfg: &GaConfig,
) -> Result<OptimizationTrace, HyperoptError> {
    if cfg.population < 2 || cfg.generations == 0 {
        return Err(HyperoptError::BadConfig(
            "population must be at least 2 and generations at least 1".into(),
        ));
    }
    if cfg.elitism >= cfg.population {
        return Err(HyperoptError::BadConfig(format!(
            "elitism {} must leave room for offspring in a population of {}",
            cfg.elitism, cfg.population
        )));
    }
    for (name, rate) in [("crossover_rate", cfg.crossover_rate), ("mutation_rate", cfg.mutation_rate)] {
        if !(0.0..=1.0).contains(&rate) {
            return Err(HyperoptError::BadConfig(format!("{name} {rate} outside [0, 1]")));
        }
    }

    let mut builder = TraceBuilder::new(budget)?;
    let cached = CachedObjective::new(objective);
    let mut rng = stream_rng(seed, 0);
    let dims = space.dims();

    let mut population = super::init_design(space, cfg.population, &mut rng);
    let mut scores = builder.run_batch(&cached, population.clone())?;
    population.truncate(scores.len());

    let mut best_so_far = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut stalled = 0;

    for _ in 1..cfg.generations {
        if builder.is_exhausted() || stalled >= cfg.stall_generations {
            break;
        }
        // Rank the current population: best first, ties to the earlier
        // individual.
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

        let elites: Vec<(Candidate, f64)> = order
            .iter()
            .take(cfg.elitism.min(population.len()))
            .map(|&i| (population[i].clone(), scores[i]))
            .collect();

        let n_offspring = cfg.population - elites.len();
        let mut offspring: Vec<Candidate> = Vec::with_capacity(n_offspring);
        for _ in 0..n_offspring {
            let a = &population[select_by_rank(&order, &mut rng)];
            let b = &population[select_by_rank(&order, &mut rng)];
            let mut child: Candidate = if rng.random::<f64>() < cfg.crossover_rate {
                (0..dims)
                    .map(|d| if rng.random::<f64>() < 0.5 { a[d] } else { b[d] })
                    .collect()
            } else {
                a.clone()
            };
            for d in 0..dims {
                if rng.random::<f64>() < cfg.mutation_rate {
                    child[d] = mutate_gene(space, d, &mut rng);
                }
            }
            offspring.push(child);
        }

        let offspring_scores = builder.run_batch(&cached, offspring.clone())?;
        offspring.truncate(offspring_scores.len());

        population = elites.iter().map(|(c, _)| c.clone()).collect();
        scores = elites.iter().map(|(_, s)| *s).collect();
        population.extend(offspring);
        scores.extend(offspring_scores.iter().copied());

        let generation_best =
            scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if generation_best > best_so_far {
            best_so_far = generation_best;
            stalled = 0;
        } else {
            stalled += 1;
        }
    }
    Ok(builder.finish(OptimizerId::Genetic, seed))
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::*;

    #[test]
    fn meets_the_optimizer_contract() {
        let space = toy_space();
        let cfg = GaConfig { population: 10, stall_generations: 50, ..GaConfig::default() };
        assert_optimizer_contract(
            OptimizerId::Genetic,
            |seed| ga_optimize(&space, &toy_objective, 60, seed, &cfg),
            60,
        );
    }

    #[test]
    fn elites_do_not_consume_budget() {
        // population 10, elitism 2: generation 0 costs 10, later ones 8.
        let space = toy_space();
        let cfg = GaConfig {
            population: 10,
            generations: 3,
            elitism: 2,
            stall_generations: 100,
            ..GaConfig::default()
        };
        let trace = ga_optimize(&space, &toy_objective, 1000, 9, &cfg).unwrap();
        assert_eq!(trace.trials.len(), 10 + 8 + 8);
    }

    #[test]
    fn stall_cuts_the_run_short() {
        // A constant objective can never improve on generation 0, so the
        // run stops after exactly `stall_generations` extra generations.
        let space = toy_space();
        let flat = |_: &Candidate| -> Result<f64, HyperoptError> { Ok(0.5) };
        let cfg = GaConfig {
            population: 5,
            generations: 100,
            elitism: 1,
            stall_generations: 3,
            ..GaConfig::default()
        };
        let trace = ga_optimize(&space, &flat, 1000, 1, &cfg).unwrap();
        assert_eq!(trace.trials.len(), 5 + 3 * 4);
    }

    #[test]
    fn rank_selection_prefers_the_front() {
        let order = vec![4, 2, 0, 1, 3]; // individual 4 is ranked best
        let mut rng = stream_rng(3, 0);
        let mut hits = [0usize; 5];
        for _ in 0..5000 {
            hits[select_by_rank(&order, &mut rng)] += 1;
        }
        // Weights are 5:4:3:2:1 across ranks; the best individual (4) must
        // be picked most and the worst (3) least.
        assert!(hits[4] > hits[2] && hits[2] > hits[0]);
        assert!(hits[0] > hits[1] && hits[1] > hits[3]);
        assert!(hits[3] > 0);
    }

    #[test]
    fn rejects_bad_configs() {
        let space = toy_space();
        for cfg in [
            GaConfig { population: 1, ..GaConfig::default() },
            GaConfig { generations: 0, ..GaConfig::default() },
            GaConfig { elitism: 20, population: 20, ..GaConfig::default() },
            GaConfig { crossover_rate: 1.5, ..GaConfig::default() },
            GaConfig { mutation_rate: -0.1, ..GaConfig::default() },
        ] {
            assert!(ga_optimize(&space, &toy_objective, 10, 0, &cfg).is_err(), "{cfg:?}");
        }
    }
}
