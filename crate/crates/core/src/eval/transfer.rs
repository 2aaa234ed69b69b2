use rand::Rng;

use super::report::{mean_std, ReportMeta, TransferReport, TransferRow};
use crate::error::{Error, Result};
use crate::model::{DspnModel, DspnObjective};
use crate::opt::{greedy_max, random_subset, GreedyTrace};
use crate::setfn::{GroundSet, SetFunction};

/// The target's own greedy chain, used as the normalizer `f_t(S_FL)` at
/// every budget up to its length.
pub struct FlReference {
    trace: GreedyTrace,
}

impl FlReference {
    pub fn new(target: &dyn SetFunction, max_budget: usize) -> Result<Self> {
        let all: Vec<usize> = (0..target.n()).collect();
        Ok(FlReference {
            trace: greedy_max(target, &all, max_budget.min(target.n()), true)?,
        })
    }

    pub fn selection(&self, budget: usize) -> &[usize] {
        self.trace.prefix(budget)
    }

    pub fn value(&self, budget: usize) -> Result<f64> {
        if budget == 0 || budget > self.trace.values.len() {
            return Err(Error::InvalidArgument(format!(
                "budget {budget} outside the reference chain (1..={})",
                self.trace.values.len()
            )));
        }
        Ok(self.trace.values[budget - 1])
    }

    pub fn normalized(&self, target: &dyn SetFunction, s: &[usize], budget: usize) -> Result<f64> {
        if s.len() != budget {
            return Err(Error::InvalidArgument(format!(
                "selection has {} items, budget is {budget}",
                s.len()
            )));
        }
        let denom = self.value(budget)?;
        if !(denom > 0.0) {
            return Err(Error::DegenerateDenominator);
        }
        Ok(target.eval(s) / denom)
    }
}

/// `f_t(S) / f_t(S_FL)` with `S_FL` the target's greedy set at `budget`.
pub fn normalized_fl_eval(target: &dyn SetFunction, s: &[usize], budget: usize) -> Result<f64> {
    FlReference::new(target, budget)?.normalized(target, s, budget)
}

/// Normalized FL evaluation on the held-out ground set for each model's
/// greedy summary, the target's own greedy summary and random summaries.
pub fn transfer_eval<R: Rng + ?Sized>(
    target: &dyn SetFunction,
    held_out: &GroundSet,
    models: &[(&str, &DspnModel)],
    budgets: &[usize],
    random_trials: usize,
    meta: ReportMeta,
    rng: &mut R,
) -> Result<TransferReport> {
    if target.n() != held_out.n() {
        return Err(Error::DimensionMismatch {
            expected: held_out.n(),
            actual: target.n(),
            context: "target over the held-out ground set",
        });
    }
    let max_b = budgets
        .iter()
        .copied()
        .max()
        .ok_or(Error::Empty("budgets"))?;
    if max_b > held_out.n() {
        return Err(Error::InvalidArgument(format!(
            "budget {max_b} exceeds held-out size {}",
            held_out.n()
        )));
    }
    let reference = FlReference::new(target, max_b)?;
    let all: Vec<usize> = (0..held_out.n()).collect();
    let mut chains = Vec::new();
    for (name, model) in models {
        let obj = DspnObjective::new(model, held_out)?;
        chains.push((*name, greedy_max(&obj, &all, max_b, true)?.chain));
    }
    let mut rows = Vec::new();
    for &b in budgets {
        for (name, chain) in &chains {
            rows.push(TransferRow {
                budget: b,
                method: name.to_string(),
                value: reference.normalized(target, &chain[..b], b)?,
                std: 0.0,
                trials: 1,
            });
        }
        rows.push(TransferRow {
            budget: b,
            method: "target-greedy".into(),
            value: reference.normalized(target, reference.selection(b), b)?,
            std: 0.0,
            trials: 1,
        });
        let vals = (0..random_trials)
            .map(|_| reference.normalized(target, &random_subset(&all, b, rng)?, b))
            .collect::<Result<Vec<_>>>()?;
        let (mean, std) = mean_std(&vals);
        rows.push(TransferRow {
            budget: b,
            method: "random".into(),
            value: mean,
            std,
            trials: random_trials,
        });
    }
    Ok(TransferReport { meta, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::setfn::FacilityLocation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn self_normalization_and_gap() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i % 3) as f64 * 5.0 + (i / 3) as f64 * 0.01, 0.0])
            .collect();
        let g = GroundSet::new(Matrix::from_rows(&rows).unwrap(), None).unwrap();
        let fl = FacilityLocation::rbf(&g, 1.0).unwrap();
        let r = FlReference::new(&fl, 3).unwrap();
        assert_eq!(r.normalized(&fl, r.selection(3), 3).unwrap(), 1.0);
        assert_eq!(normalized_fl_eval(&fl, r.selection(3), 3).unwrap(), 1.0);
        let clumped = normalized_fl_eval(&fl, &[0, 3, 6], 3).unwrap();
        assert!(clumped < 1.0);
        assert!(normalized_fl_eval(&fl, &[0, 3], 3).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rep = transfer_eval(&fl, &g, &[], &[1, 3], 5, ReportMeta::default(), &mut rng).unwrap();
        assert_eq!(rep.get(3, "target-greedy"), Some(1.0));
        assert!(rep.get(3, "random").unwrap() <= 1.0 + 1e-12);
    }
}
