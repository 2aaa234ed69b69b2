use rand::Rng;

use super::{Provenance, SampledSet};
use crate::error::Result;
use crate::model::{DspnModel, DspnObjective};
use crate::opt::{greedy_max, submod_min_heuristic};
use crate::setfn::{GroundSet, SetFunction};

/// Sets obtained by maximizing the current model (on all of `V` and on one
/// random class large enough for the budget) and by minimizing it.
pub fn dspn_feedback_sets<R: Rng + ?Sized>(
    model: &DspnModel,
    ground: &GroundSet,
    budget: usize,
    rng: &mut R,
) -> Result<Vec<SampledSet>> {
    let obj = DspnObjective::new(model, ground)?;
    let all: Vec<usize> = (0..ground.n()).collect();
    let budget = budget.min(ground.n());
    let mut out = vec![SampledSet::new(
        greedy_max(&obj, &all, budget, true)?.chain,
        Provenance::DspnMax,
    )];
    if let Some(labels) = ground.labels() {
        let classes: Vec<(usize, Vec<usize>)> = ground
            .class_members()?
            .into_iter()
            .enumerate()
            .filter(|(_, m)| m.len() >= budget && !m.is_empty())
            .collect();
        if !classes.is_empty() {
            let (class, members) = &classes[rng.random_range(0..classes.len())];
            debug_assert!(members.iter().all(|&v| labels[v] == *class));
            out.push(SampledSet::scoped(
                greedy_max(&obj, members, budget, true)?.chain,
                Provenance::DspnMax,
                vec![*class],
            ));
        }
    }
    out.push(SampledSet::new(
        submod_min_heuristic(&obj, &all, budget, rng)?,
        Provenance::DspnMin,
    ));
    Ok(out)
}

/// Nested prefixes of the target's greedy chain at `budget, budget/2, ...`.
pub fn target_feedback_sets(
    target: &dyn SetFunction,
    ground: &GroundSet,
    budget: usize,
) -> Result<Vec<SampledSet>> {
    let all: Vec<usize> = (0..ground.n()).collect();
    let budget = budget.min(ground.n());
    if budget == 0 {
        return Ok(Vec::new());
    }
    let chain = greedy_max(target, &all, budget, true)?.chain;
    let mut out = Vec::new();
    let mut size = budget;
    while size >= 1 {
        out.push(SampledSet::new(
            chain[..size].to_vec(),
            Provenance::TargetMax,
        ));
        size /= 2;
    }
    Ok(out)
}
