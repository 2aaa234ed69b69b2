//! Property checks behind the `verify` command: polymatroid structure,
//! permutation invariance and gradient agreement, plus the fault injection
//! used to show the checks have teeth.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::loss::{total_loss, LossKind, PairSets, PeripteralHyper};
use crate::matrix::Matrix;
use crate::model::{Concave, DspnModel, DspnObjective};
use crate::setfn::{
    check_polymatroid_bruteforce, GroundSet, PolymatroidReport, SetFunction, MAX_BRUTEFORCE_N,
};

pub fn verify_polymatroid(
    model: &DspnModel,
    ground: &GroundSet,
    tol: f64,
) -> Result<PolymatroidReport> {
    if ground.n() > MAX_BRUTEFORCE_N {
        return Err(Error::TooLarge {
            n: ground.n(),
            max: MAX_BRUTEFORCE_N,
        });
    }
    let obj = DspnObjective::new(model, ground)?;
    check_polymatroid_bruteforce(&obj, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationCheck {
    pub trials: usize,
    /// `(set, permuted set)` pairs whose values differ bitwise.
    pub mismatches: Vec<(Vec<usize>, Vec<usize>)>,
}

/// Evaluate random sets in random orders; any bitwise difference is a failure.
pub fn verify_permutation<R: Rng + ?Sized>(
    model: &DspnModel,
    ground: &GroundSet,
    trials: usize,
    rng: &mut R,
) -> Result<PermutationCheck> {
    let mut ev = crate::model::Evaluator::new(model, ground)?;
    let mut mismatches = Vec::new();
    for _ in 0..trials {
        let size = rng.random_range(1..=ground.n());
        let mut set: Vec<usize> = rand::seq::index::sample(rng, ground.n(), size).into_vec();
        let a = ev.value(&set)?;
        let original = set.clone();
        set.shuffle(rng);
        let b = ev.value(&set)?;
        if a.to_bits() != b.to_bits() {
            mismatches.push((original, set));
        }
    }
    Ok(PermutationCheck { trials, mismatches })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub instances: usize,
    pub coordinates: usize,
    /// Largest `|analytic − numeric| / max(|analytic|, |numeric|, floor)`.
    pub max_rel_err: f64,
}

/// Central finite differences of the total loss on random pairs over
/// `ground`, compared with the analytic gradient on `coords` random
/// parameters per instance.
#[allow(clippy::too_many_arguments)]
pub fn verify_gradients<R: Rng + ?Sized>(
    model: &DspnModel,
    ground: &GroundSet,
    h: &PeripteralHyper,
    kind: LossKind,
    instances: usize,
    coords: usize,
    step: f64,
    rng: &mut R,
) -> Result<GradientCheck> {
    let n = ground.n();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "gradient check needs at least 2 items".into(),
        ));
    }
    let base = model.flat_params();
    let mut probe = model.clone();
    let mut max_rel: f64 = 0.0;
    let mut count = 0;
    for _ in 0..instances {
        let k = rng.random_range(1..=(n / 2).max(1));
        let draw = |rng: &mut R| rand::seq::index::sample(rng, n, k).into_vec();
        let (e, m, ea, ma) = (draw(rng), draw(rng), draw(rng), draw(rng));
        let sets = PairSets {
            e: &e,
            m: &m,
            e_aug: &ea,
            m_aug: &ma,
        };
        let delta = rng.random_range(-2.0..2.0);
        let analytic = total_loss(model, ground, sets, delta, h, kind, true)?
            .grads
            .expect("requested gradients")
            .flatten();
        for _ in 0..coords {
            let i = rng.random_range(0..base.len());
            let mut p = base.clone();
            p[i] = base[i] + step;
            probe.set_flat_params(&p)?;
            let up = total_loss(&probe, ground, sets, delta, h, kind, false)?.value;
            p[i] = base[i] - step;
            probe.set_flat_params(&p)?;
            let down = total_loss(&probe, ground, sets, delta, h, kind, false)?.value;
            let numeric = (up - down) / (2.0 * step);
            let scale = analytic[i].abs().max(numeric.abs()).max(1e-6);
            max_rel = max_rel.max((analytic[i] - numeric).abs() / scale);
            count += 1;
        }
    }
    Ok(GradientCheck {
        instances,
        coordinates: count,
        max_rel_err: max_rel,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Injection {
    pub layer: usize,
    pub row: usize,
    pub col: usize,
    pub old: f64,
    pub new: f64,
}

/// Replace one output-layer roof weight feeding a strictly concave channel
/// with a large negative value.
pub fn inject_negative_roof_weight<R: Rng + ?Sized>(
    model: &mut DspnModel,
    rng: &mut R,
) -> Result<Injection> {
    let layer = model.roof.depth() - 1;
    let acts = &model.roof.activations[layer];
    let concave: Vec<usize> = (0..acts.len())
        .filter(|&c| acts[c] != Concave::Identity)
        .collect();
    let col = if concave.is_empty() {
        rng.random_range(0..acts.len())
    } else {
        concave[rng.random_range(0..concave.len())]
    };
    let w: &mut Matrix = &mut model.roof.weights[layer];
    let mass: f64 = w.row(0).iter().map(|x| x.abs()).sum();
    let old = w.get(0, col);
    let new = -10.0 * (1.0 + mass);
    w.set(0, col, new);
    Ok(Injection {
        layer,
        row: 0,
        col,
        old,
        new,
    })
}

/// A model whose roof weights are drawn symmetric around zero and left
/// unprojected: a deep-set style network with no submodularity guarantee.
pub fn unconstrained_copy<R: Rng + ?Sized>(model: &DspnModel, rng: &mut R) -> DspnModel {
    let mut out = model.clone();
    for w in &mut out.roof.weights {
        let hi = 2.0 / w.cols() as f64;
        for x in w.as_mut_slice() {
            *x = rng.random_range(-hi..hi);
        }
    }
    out
}

/// Number of values `f(X)` queried by [`verify_polymatroid`] on `n` items.
pub fn bruteforce_cost(n: usize) -> usize {
    1usize << n.min(usize::BITS as usize - 1)
}

/// Convenience: `f(A)` of a model over a ground set.
pub fn model_value(model: &DspnModel, ground: &GroundSet, set: &[usize]) -> Result<f64> {
    Ok(DspnObjective::new(model, ground)?.eval(set))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ground(rng: &mut ChaCha8Rng) -> GroundSet {
        GroundSet::new(
            Matrix::from_fn(8, 3, |_, _| rng.random_range(-1.0..1.0)),
            None,
        )
        .unwrap()
    }

    #[test]
    fn clean_model_passes_and_injection_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = ground(&mut rng);
        let mut model = DspnModel::random(&ModelConfig::new(3), &mut rng).unwrap();
        assert!(verify_polymatroid(&model, &g, 1e-9)
            .unwrap()
            .is_polymatroid());
        inject_negative_roof_weight(&mut model, &mut rng).unwrap();
        let rep = verify_polymatroid(&model, &g, 1e-9).unwrap();
        assert!(rep.first_submodularity_witness().is_some());
    }

    #[test]
    fn permutation_and_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = ground(&mut rng);
        let model = DspnModel::random(&ModelConfig::new(3), &mut rng).unwrap();
        assert!(verify_permutation(&model, &g, 50, &mut rng)
            .unwrap()
            .mismatches
            .is_empty());
        let h = PeripteralHyper {
            lambda3: 0.1,
            lambda4: 0.1,
            ..Default::default()
        };
        let gc =
            verify_gradients(&model, &g, &h, LossKind::Peripteral, 5, 10, 1e-5, &mut rng).unwrap();
        assert!(gc.max_rel_err < 1e-4, "{gc:?}");
    }
}
