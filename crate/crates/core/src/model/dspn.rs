//! The full network `f_w(A) = ψ(h(A))`, with `h_j(A)` the weighted matroid
//! rank of the `j`-th pillar output over `A`.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::activation::{Concave, PillarOutput, ALL_CONCAVE};
use crate::model::pillar::{DenseLayer, PillarParams, PillarTrace};
use crate::model::roof::{project_nonneg_in_place, RoofParams};
use crate::setfn::{normalize_set, GainOracle, GroundSet, Matroid, SetFunction};

/// Architecture choices for a freshly initialized model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub d_in: usize,
    pub pillar_hidden: Vec<usize>,
    /// Pillar output / aggregation width.
    pub d: usize,
    pub roof_hidden: Vec<usize>,
    pub activations: Vec<Concave>,
    pub matroid: Matroid,
    pub pillar_output: PillarOutput,
}

impl ModelConfig {
    pub fn new(d_in: usize) -> Self {
        ModelConfig {
            d_in,
            pillar_hidden: vec![32, 32],
            d: 32,
            roof_hidden: vec![10],
            activations: ALL_CONCAVE.to_vec(),
            matroid: Matroid::Free,
            pillar_output: PillarOutput::Softplus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DspnModel {
    pub pillar: PillarParams,
    pub matroid: Matroid,
    pub roof: RoofParams,
}

/// `∂loss/∂w`, laid out like the model's trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DspnGradients {
    pub pillar: Vec<DenseLayer>,
    pub roof: Vec<Matrix>,
}

impl DspnModel {
    pub fn new(pillar: PillarParams, matroid: Matroid, roof: RoofParams) -> Result<Self> {
        pillar.validate()?;
        roof.validate()?;
        matroid.validate()?;
        if pillar.output_dim() != roof.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: pillar.output_dim(),
                actual: roof.input_dim(),
                context: "pillar output width vs roof input width",
            });
        }
        Ok(DspnModel {
            pillar,
            matroid,
            roof,
        })
    }

    pub fn random<R: Rng + ?Sized>(cfg: &ModelConfig, rng: &mut R) -> Result<Self> {
        let pillar =
            PillarParams::random(cfg.d_in, &cfg.pillar_hidden, cfg.d, cfg.pillar_output, rng)?;
        let roof = RoofParams::random(cfg.d, &cfg.roof_hidden, &cfg.activations, rng)?;
        Self::new(pillar, cfg.matroid.clone(), roof)
    }

    pub fn d(&self) -> usize {
        self.pillar.output_dim()
    }

    pub fn d_in(&self) -> usize {
        self.pillar.input_dim()
    }

    pub fn param_count(&self) -> usize {
        self.pillar.param_count() + self.roof.param_count()
    }

    /// Index range of the roof weights inside [`flat_params`](Self::flat_params).
    pub fn roof_param_range(&self) -> std::ops::Range<usize> {
        let p = self.pillar.param_count();
        p..p + self.roof.param_count()
    }

    /// All trainable parameters in declaration order: each pillar layer's
    /// weights (row-major) then bias, then each roof matrix (row-major).
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.pillar.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        for w in &self.roof.weights {
            out.extend_from_slice(w.as_slice());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                actual: flat.len(),
                context: "flat parameter vector",
            });
        }
        let mut pos = 0;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&flat[pos..pos + dst.len()]);
            pos += dst.len();
        };
        for l in &mut self.pillar.layers {
            take(l.weights.as_mut_slice());
            take(&mut l.bias);
        }
        for w in &mut self.roof.weights {
            take(w.as_mut_slice());
        }
        Ok(())
    }

    pub fn project_roof(&mut self) {
        project_nonneg_in_place(&mut self.roof);
    }

    fn check_ground(&self, ground: &GroundSet) -> Result<()> {
        if ground.dim() != self.d_in() {
            return Err(Error::DimensionMismatch {
                expected: self.d_in(),
                actual: ground.dim(),
                context: "ground-set embedding width vs pillar input",
            });
        }
        if let Some(n) = self.matroid.ground_size() {
            if n < ground.n() {
                return Err(Error::InvalidArgument(format!(
                    "partition matroid covers {n} items but the ground set has {}",
                    ground.n()
                )));
            }
        }
        Ok(())
    }

    /// Pillar outputs for every item of `ground`, one row per item.
    pub fn embed(&self, ground: &GroundSet) -> Result<Matrix> {
        self.check_ground(ground)?;
        let mut out = Matrix::zeros(ground.n(), self.d());
        for v in 0..ground.n() {
            let t = self.pillar.trace(ground.row(v));
            out.row_mut(v).copy_from_slice(&t.out);
        }
        Ok(out)
    }
}

impl DspnGradients {
    pub fn zeros_like(model: &DspnModel) -> Self {
        DspnGradients {
            pillar: model
                .pillar
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.input_dim(), l.output_dim()))
                .collect(),
            roof: model
                .roof
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
        }
    }

    /// Same order as [`DspnModel::flat_params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.pillar {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        for w in &self.roof {
            out.extend_from_slice(w.as_slice());
        }
        out
    }

    fn for_each_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for l in &mut self.pillar {
            l.weights.as_mut_slice().iter_mut().for_each(&mut f);
            l.bias.iter_mut().for_each(&mut f);
        }
        for w in &mut self.roof {
            w.as_mut_slice().iter_mut().for_each(&mut f);
        }
    }

    /// `self += alpha · other`
    pub fn add_scaled(&mut self, alpha: f64, other: &DspnGradients) {
        let flat = other.flatten();
        let mut i = 0;
        self.for_each_mut(|v| {
            *v += alpha * flat[i];
            i += 1;
        });
    }

    pub fn scale(&mut self, alpha: f64) {
        self.for_each_mut(|v| *v *= alpha);
    }

    pub fn norm(&self) -> f64 {
        self.flatten().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|v| v.is_finite())
    }
}

/// Weighted matroid rank applied coordinate-wise.
///
/// `items` are the item ids of the rows of `outputs` (any order, unique);
/// the result does not depend on row order.
pub fn aggregate(matroid: &Matroid, items: &[usize], outputs: &Matrix) -> Result<Vec<f64>> {
    if items.len() != outputs.rows() {
        return Err(Error::DimensionMismatch {
            expected: outputs.rows(),
            actual: items.len(),
            context: "aggregate item ids",
        });
    }
    if let Some((position, &value)) = outputs
        .as_slice()
        .iter()
        .enumerate()
        .find(|(_, &v)| !(v >= 0.0))
    {
        return Err(Error::NegativeWeight {
            value,
            position,
            context: "aggregate input",
        });
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by_key(|&p| items[p]);
    let sorted_items: Vec<usize> = order.iter().map(|&p| items[p]).collect();
    if sorted_items.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument(
            "aggregate items must be unique".into(),
        ));
    }
    let rows: Vec<&[f64]> = order.iter().map(|&p| outputs.row(p)).collect();
    let mut z = vec![0.0; outputs.cols()];
    aggregate_rows(matroid, &sorted_items, &rows, &mut z, None)?;
    Ok(z)
}

/// Core aggregation over `rows[p]` for `items[p]` (items sorted ascending).
/// When `masks` is given, records for each coordinate which positions were
/// selected by the rank maximizer.
fn aggregate_rows(
    matroid: &Matroid,
    items: &[usize],
    rows: &[&[f64]],
    z: &mut [f64],
    mut masks: Option<&mut Vec<Vec<bool>>>,
) -> Result<()> {
    if let Matroid::Free = matroid {
        z.iter_mut().for_each(|v| *v = 0.0);
        for row in rows {
            for (zj, &x) in z.iter_mut().zip(row.iter()) {
                *zj += x;
            }
        }
        return Ok(());
    }
    let mut col = vec![0.0; items.len()];
    let mut sel = Vec::new();
    if let Some(m) = masks.as_deref_mut() {
        m.clear();
    }
    for (j, zj) in z.iter_mut().enumerate() {
        for (c, row) in col.iter_mut().zip(rows) {
            *c = row[j];
        }
        *zj = matroid.rank_select(items, &col, &mut sel)?;
        if let Some(m) = masks.as_deref_mut() {
            m.push(sel.clone());
        }
    }
    Ok(())
}

/// Evaluation tape over one ground set: caches pillar passes per item and
/// accumulates gradients from any number of set evaluations.
pub struct Evaluator<'a> {
    model: &'a DspnModel,
    ground: &'a GroundSet,
    traces: BTreeMap<usize, PillarTrace>,
    item_grads: BTreeMap<usize, Vec<f64>>,
    roof_grads: Vec<Matrix>,
}

impl<'a> Evaluator<'a> {
    pub fn new(model: &'a DspnModel, ground: &'a GroundSet) -> Result<Self> {
        model.check_ground(ground)?;
        Ok(Evaluator {
            model,
            ground,
            traces: BTreeMap::new(),
            item_grads: BTreeMap::new(),
            roof_grads: model
                .roof
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
        })
    }

    fn prepare(&mut self, set: &[usize]) -> Result<Vec<usize>> {
        let items = normalize_set(set);
        for &v in &items {
            self.ground.check_index(v)?;
            if !self.traces.contains_key(&v) {
                let t = self.model.pillar.trace(self.ground.row(v));
                self.traces.insert(v, t);
            }
        }
        Ok(items)
    }

    fn aggregate(&self, items: &[usize], masks: Option<&mut Vec<Vec<bool>>>) -> Result<Vec<f64>> {
        let rows: Vec<&[f64]> = items
            .iter()
            .map(|v| self.traces[v].out.as_slice())
            .collect();
        let mut z = vec![0.0; self.model.d()];
        aggregate_rows(&self.model.matroid, items, &rows, &mut z, masks)?;
        Ok(z)
    }

    /// `f_w(A)`
    pub fn value(&mut self, set: &[usize]) -> Result<f64> {
        let items = self.prepare(set)?;
        if items.is_empty() {
            return Ok(0.0);
        }
        let z = self.aggregate(&items, None)?;
        Ok(self.model.roof.forward(&z))
    }

    /// Adds `upstream · ∂f_w(A)/∂w` to the tape and returns `f_w(A)`.
    pub fn accumulate(&mut self, set: &[usize], upstream: f64) -> Result<f64> {
        let items = self.prepare(set)?;
        if items.is_empty() {
            return Ok(0.0);
        }
        let mut masks = Vec::new();
        let z = self.aggregate(&items, Some(&mut masks))?;
        let trace = self.model.roof.trace(&z);
        if upstream == 0.0 {
            return Ok(trace.value);
        }
        let gz = self
            .model
            .roof
            .backward(&trace, upstream, &mut self.roof_grads);
        if gz.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("roof backward"));
        }
        let d = self.model.d();
        for (p, &v) in items.iter().enumerate() {
            let g = self.item_grads.entry(v).or_insert_with(|| vec![0.0; d]);
            if masks.is_empty() {
                for (gi, &gzj) in g.iter_mut().zip(&gz) {
                    *gi += gzj;
                }
            } else {
                for (j, gi) in g.iter_mut().enumerate() {
                    if masks[j][p] {
                        *gi += gz[j];
                    }
                }
            }
        }
        Ok(trace.value)
    }

    /// Run the pillar backward pass for every touched item (ascending id).
    pub fn into_gradients(self) -> Result<DspnGradients> {
        let mut grads = DspnGradients::zeros_like(self.model);
        grads.roof = self.roof_grads;
        for (v, g) in &self.item_grads {
            self.model
                .pillar
                .backward(&self.traces[v], g, &mut grads.pillar);
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("DSPN gradients"));
        }
        Ok(grads)
    }
}

/// `f_w(A)` for `A ⊆ V` given as indices into `ground`.
pub fn dspn_eval(model: &DspnModel, set: &[usize], ground: &GroundSet) -> Result<f64> {
    Evaluator::new(model, ground)?.value(set)
}

/// `∂(upstream · f_w(A))/∂w`.
pub fn dspn_backward(
    model: &DspnModel,
    set: &[usize],
    ground: &GroundSet,
    upstream: f64,
) -> Result<DspnGradients> {
    let mut ev = Evaluator::new(model, ground)?;
    ev.accumulate(set, upstream)?;
    ev.into_gradients()
}

/// A trained model bound to a ground set, with pillar outputs precomputed.
/// This is the form the optimizers consume.
pub struct DspnObjective<'a> {
    model: &'a DspnModel,
    outputs: Matrix,
}

impl<'a> DspnObjective<'a> {
    pub fn new(model: &'a DspnModel, ground: &GroundSet) -> Result<Self> {
        Ok(DspnObjective {
            model,
            outputs: model.embed(ground)?,
        })
    }

    pub fn pillar_outputs(&self) -> &Matrix {
        &self.outputs
    }

    fn value_of(&self, items: &[usize]) -> f64 {
        if items.is_empty() {
            return 0.0;
        }
        let rows: Vec<&[f64]> = items.iter().map(|&v| self.outputs.row(v)).collect();
        let mut z = vec![0.0; self.model.d()];
        aggregate_rows(&self.model.matroid, items, &rows, &mut z, None)
            .expect("item ids validated by the matroid at construction");
        self.model.roof.forward(&z)
    }
}

impl SetFunction for DspnObjective<'_> {
    fn n(&self) -> usize {
        self.outputs.rows()
    }

    fn eval(&self, set: &[usize]) -> f64 {
        self.value_of(&normalize_set(set))
    }

    fn oracle(&self) -> Box<dyn GainOracle + '_> {
        match self.model.matroid {
            Matroid::Free => Box::new(SumOracle {
                obj: self,
                z: vec![0.0; self.model.d()],
                members: Vec::new(),
                value: 0.0,
            }),
            _ => Box::new(RankOracle {
                obj: self,
                members: Vec::new(),
                value: 0.0,
            }),
        }
    }
}

/// Free-matroid gains: keep the running sum of pillar outputs, O(roof) per query.
struct SumOracle<'a> {
    obj: &'a DspnObjective<'a>,
    z: Vec<f64>,
    members: Vec<usize>,
    value: f64,
}

impl GainOracle for SumOracle<'_> {
    fn gain(&self, v: usize) -> f64 {
        if self.members.contains(&v) {
            return 0.0;
        }
        let z: Vec<f64> = self
            .z
            .iter()
            .zip(self.obj.outputs.row(v))
            .map(|(a, b)| a + b)
            .collect();
        self.obj.model.roof.forward(&z) - self.value
    }

    fn insert(&mut self, v: usize) {
        if self.members.contains(&v) {
            return;
        }
        for (a, b) in self.z.iter_mut().zip(self.obj.outputs.row(v)) {
            *a += b;
        }
        self.members.push(v);
        self.value = self.obj.model.roof.forward(&self.z);
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn members(&self) -> &[usize] {
        &self.members
    }
}

struct RankOracle<'a> {
    obj: &'a DspnObjective<'a>,
    members: Vec<usize>,
    value: f64,
}

impl GainOracle for RankOracle<'_> {
    fn gain(&self, v: usize) -> f64 {
        if self.members.contains(&v) {
            return 0.0;
        }
        let mut with = self.members.clone();
        with.push(v);
        self.obj.eval(&with) - self.value
    }

    fn insert(&mut self, v: usize) {
        if self.members.contains(&v) {
            return;
        }
        self.members.push(v);
        self.value = self.obj.eval(&self.members);
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn members(&self) -> &[usize] {
        &self.members
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::roof::dsf_eval;
    use crate::setfn::{check_polymatroid_bruteforce, conditional_gain};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_model(rng: &mut ChaCha8Rng, matroid: Matroid) -> DspnModel {
        let mut cfg = ModelConfig::new(3);
        cfg.pillar_hidden = vec![6, 5];
        cfg.d = 7;
        cfg.roof_hidden = vec![4];
        cfg.matroid = matroid;
        DspnModel::random(&cfg, rng).unwrap()
    }

    fn ground(rng: &mut ChaCha8Rng, n: usize) -> GroundSet {
        GroundSet::new(
            Matrix::from_fn(n, 3, |_, _| rng.random_range(-2.0..2.0)),
            None,
        )
        .unwrap()
    }

    #[test]
    fn aggregate_examples() {
        let rows = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(
            aggregate(&Matroid::Free, &[0, 1], &rows).unwrap(),
            vec![4.0, 6.0]
        );
        let single = Matroid::single_block(2, 1);
        assert_eq!(aggregate(&single, &[0, 1], &rows).unwrap(), vec![3.0, 4.0]);
        let empty = Matrix::zeros(0, 2);
        assert_eq!(
            aggregate(&Matroid::Free, &[], &empty).unwrap(),
            vec![0.0, 0.0]
        );
        let neg = Matrix::from_rows(&[vec![-1.0, 2.0]]).unwrap();
        assert!(aggregate(&Matroid::Free, &[0], &neg).is_err());
    }

    #[test]
    fn empty_set_is_zero_with_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = small_model(&mut rng, Matroid::Free);
        let g = ground(&mut rng, 5);
        assert_eq!(dspn_eval(&m, &[], &g).unwrap(), 0.0);
        let grads = dspn_backward(&m, &[], &g, 1.0).unwrap();
        assert!(grads.flatten().iter().all(|&v| v == 0.0));
        let grads = dspn_backward(&m, &[0, 2], &g, 0.0).unwrap();
        assert!(grads.flatten().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn permutation_invariance_is_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for matroid in [Matroid::Free, Matroid::Uniform { k: 2 }] {
            let m = small_model(&mut rng, matroid);
            let g = ground(&mut rng, 9);
            for _ in 0..100 {
                let mut a: Vec<usize> = (0..9).filter(|_| rng.random_bool(0.5)).collect();
                let base = dspn_eval(&m, &a, &g).unwrap();
                a.shuffle(&mut rng);
                assert_eq!(dspn_eval(&m, &a, &g).unwrap().to_bits(), base.to_bits());
            }
        }
    }

    #[test]
    fn free_matroid_matches_roof_of_column_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = small_model(&mut rng, Matroid::Free);
        let g = ground(&mut rng, 6);
        let a = [0, 3, 5];
        let mut z = vec![0.0; m.d()];
        for &v in &a {
            let p = crate::model::pillar::pillar_forward(&m.pillar, g.row(v)).unwrap();
            for (zj, pj) in z.iter_mut().zip(p) {
                *zj += pj;
            }
        }
        let direct = dsf_eval(&m.roof, &z).unwrap();
        assert!((dspn_eval(&m, &a, &g).unwrap() - direct).abs() <= 1e-12);
    }

    #[test]
    fn random_model_is_polymatroid_on_eight_items() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = small_model(&mut rng, Matroid::Free);
        let g = ground(&mut rng, 8);
        let obj = DspnObjective::new(&m, &g).unwrap();
        let r = check_polymatroid_bruteforce(&obj, 1e-9).unwrap();
        assert!(r.is_polymatroid(), "{:?}", r.witnesses.first());
    }

    #[test]
    fn gains_are_non_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = small_model(&mut rng, Matroid::Uniform { k: 3 });
        let g = ground(&mut rng, 7);
        let obj = DspnObjective::new(&m, &g).unwrap();
        for mask in 0u32..128 {
            let a: Vec<usize> = (0..7).filter(|i| mask >> i & 1 == 1).collect();
            for v in 0..7 {
                assert!(conditional_gain(&obj, v, &a).unwrap() >= -1e-9);
            }
        }
    }

    #[test]
    fn objective_agrees_with_evaluator_and_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for matroid in [Matroid::Free, Matroid::Uniform { k: 2 }] {
            let m = small_model(&mut rng, matroid);
            let g = ground(&mut rng, 10);
            let obj = DspnObjective::new(&m, &g).unwrap();
            let a = [1, 4, 7];
            assert_eq!(obj.eval(&a), dspn_eval(&m, &a, &g).unwrap());
            let mut o = obj.oracle();
            for &v in &a {
                o.insert(v);
            }
            assert!((o.value() - obj.eval(&a)).abs() < 1e-12);
            assert!((o.gain(2) - obj.gain(2, &a)).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut m = small_model(&mut rng, Matroid::Free);
        let flat = m.flat_params();
        assert_eq!(flat.len(), m.param_count());
        let doubled: Vec<f64> = flat.iter().map(|v| v * 2.0).collect();
        m.set_flat_params(&doubled).unwrap();
        assert_eq!(m.flat_params(), doubled);
        let r = m.roof_param_range();
        assert_eq!(r.end, m.param_count());
        assert!(m.set_flat_params(&flat[1..]).is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = small_model(&mut rng, Matroid::Free);
        let g = GroundSet::new(Matrix::zeros(3, 2), None).unwrap();
        assert!(dspn_eval(&m, &[0], &g).is_err());
        let g3 = ground(&mut rng, 3);
        assert!(matches!(
            dspn_eval(&m, &[5], &g3),
            Err(Error::IndexOutOfRange { .. })
        ));
    }
}
