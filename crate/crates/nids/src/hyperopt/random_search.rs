//! Random search: the budget baseline every other optimizer is compared
//! against.

use rand::seq::SliceRandom;

use super::{
    CachedObjective, Candidate, HyperoptError, ObjectiveFn, OptimizationTrace, OptimizerId,
    SearchSpace, TraceBuilder,
};
use crate::rng::stream_rng;

/// Grids up to this size are enumerated and shuffled, which guarantees the
/// proposals are distinct until the grid is used up. Larger grids fall back
/// to rejection sampling against the proposal history.
const ENUMERATION_LIMIT: u128 = 65_536;

/// Uniform random proposals without replacement while the space (or
/// patience) lasts, with replacement after that. All proposals are drawn up
/// front and scored as one parallel batch — random search has no sequential
/// dependency to respect.
pub fn random_search(
    space: &SearchSpace,
    objective: &ObjectiveFn,
    budget: usize,
    seed: u64,
) -> Result<OptimizationTrace, HyperoptError> {
    let mut builder = TraceBuilder::new(budget)?;
    let cached = CachedObjective::new(objective);
    let mut rng = stream_rng(seed, 0);

    let card = space.cardinality();
    let proposals: Vec<Candidate> = if card <= ENUMERATION_LIMIT {
        let mut all = space.enumerate();
        all.shuffle(&mut rng);
        all.truncate(budget);
        while all.len() < budget {
            all.push(space.random_candidate(&mut rng));
        }
        all
    } else {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::with_capacity(budget);
        while out.len() < budget {
            let mut attempts = 0;
            let candidate = loop {
                let c = space.random_candidate(&mut rng);
                if !seen.contains(&c) || attempts >= 64 {
                    break c;
                }
                attempts += 1;
            };
            seen.insert(candidate.clone());
            out.push(candidate);
        }
        out
    };

    builder.run_batch(&cached, proposals)?;
    Ok(builder.finish(OptimizerId::RandomSearch, seed))
}
