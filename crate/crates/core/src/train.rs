//! Training loop: Adam with roof projection, triangular cyclic learning rate,
//! minibatches of pairs and periodic refresh of the active sets.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io_util::write_atomic;
use crate::loss::{total_loss, LossKind, PeripteralHyper};
use crate::model::{DspnGradients, DspnModel, ModelConfig};
use crate::sampling::{
    build_pairs, dspn_feedback_sets, sample_style1, sample_style2, target_feedback_sets,
    PairDataset, Provenance, SampledSet, SamplerConfig,
};
use crate::setfn::{median_heuristic_gamma, FacilityLocation, GroundSet, Scaled, SetFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub base_lr: f64,
    pub max_lr: f64,
    /// Steps per learning-rate cycle.
    pub cycle_length: usize,
    pub epochs: usize,
    /// Pairs per optimizer step.
    pub batch_size: usize,
    pub loss: LossKind,
    pub hyper: PeripteralHyper,
    /// Global gradient-norm clip; `None` disables clipping.
    pub grad_clip: Option<f64>,
    /// Project roof weights onto `≥ 0` after each step. Turning this off
    /// yields an unconstrained (non-submodular) deep-set style model.
    pub project_roof: bool,
    pub seed: u64,
    /// Stamped into every metrics row.
    pub config_hash: String,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            base_lr: 1e-3,
            max_lr: 1e-2,
            cycle_length: 200,
            epochs: 50,
            batch_size: 16,
            loss: LossKind::Peripteral,
            hyper: PeripteralHyper::default(),
            grad_clip: Some(10.0),
            project_roof: true,
            seed: 0,
            config_hash: String::new(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > 0.0) || !(self.max_lr >= self.base_lr) || !self.max_lr.is_finite() {
            return Err(Error::Config(format!(
                "need 0 < base-lr ≤ max-lr, got {} and {}",
                self.base_lr, self.max_lr
            )));
        }
        if self.cycle_length < 2 {
            return Err(Error::Config(format!(
                "cycle-length must be ≥ 2, got {}",
                self.cycle_length
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch-size must be ≥ 1".into()));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::Config(format!("grad-clip must be > 0, got {c}")));
            }
        }
        self.hyper.validate()
    }
}

/// Triangular wave from `base_lr` up to `max_lr` at half a cycle and back.
pub fn cyclic_lr(step: usize, cfg: &TrainConfig) -> f64 {
    let cycle = cfg.cycle_length.max(2);
    let half = cycle / 2;
    let pos = step % cycle;
    let frac = if pos <= half {
        pos as f64 / half as f64
    } else {
        (cycle - pos) as f64 / (cycle - half) as f64
    };
    cfg.base_lr * (1.0 - frac) + cfg.max_lr * frac
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl OptimState {
    pub fn new(n: usize) -> Self {
        OptimState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam update of a flat parameter vector.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut OptimState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || state.m.len() != params.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            actual: grads.len(),
            context: "Adam parameter/gradient length",
        });
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let mh = state.m[i] / c1;
        let vh = state.v[i] / c2;
        params[i] -= lr * mh / (vh.sqrt() + state.eps);
    }
    Ok(())
}

/// Adam step on a model, followed by the roof projection when `project`.
pub fn apply_adam(
    model: &mut DspnModel,
    grads: &DspnGradients,
    state: &mut OptimState,
    lr: f64,
    project: bool,
) -> Result<()> {
    let mut flat = model.flat_params();
    adam_step(&mut flat, &grads.flatten(), state, lr)?;
    model.set_flat_params(&flat)?;
    if project {
        model.project_roof();
        debug_assert!(model.roof.first_negative().is_none());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub epoch: usize,
    /// Optimizer steps taken so far.
    pub step: usize,
    pub lr: f64,
    /// Mean loss over the epoch's pairs (pre-step values).
    pub risk: f64,
    /// Mean `|δ − κΔ|`.
    pub mean_abs_delta_err: f64,
    /// Mean gate value `tanh(α/|κΔ|)`.
    pub gate_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLog {
    pub loss: LossKind,
    pub seed: u64,
    pub config_hash: String,
    pub rows: Vec<MetricsRow>,
}

pub const METRICS_HEADER: &str =
    "epoch,step,lr,risk,mean_abs_delta_err,gate_mean,loss,seed,config_hash";

impl MetricsLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(METRICS_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.epoch,
                r.step,
                r.lr,
                r.risk,
                r.mean_abs_delta_err,
                r.gate_mean,
                self.loss.name(),
                self.seed,
                self.config_hash
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: DspnModel,
    pub log: MetricsLog,
}

/// Per-epoch hook: receives the epoch's metrics and the model after it.
pub type EpochHook<'a> = dyn FnMut(&MetricsRow, &DspnModel) -> Result<()> + 'a;

struct Trainer<'c> {
    cfg: &'c TrainConfig,
    state: OptimState,
    step: usize,
    log: MetricsLog,
}

impl<'c> Trainer<'c> {
    fn new(cfg: &'c TrainConfig, model: &DspnModel) -> Self {
        Trainer {
            cfg,
            state: OptimState::new(model.param_count()),
            step: 0,
            log: MetricsLog {
                loss: cfg.loss,
                seed: cfg.seed,
                config_hash: cfg.config_hash.clone(),
                rows: Vec::new(),
            },
        }
    }

    fn epoch<R: Rng + ?Sized>(
        &mut self,
        epoch: usize,
        model: &mut DspnModel,
        data: &PairDataset,
        rng: &mut R,
    ) -> Result<MetricsRow> {
        if data.pairs.is_empty() {
            return Err(Error::Empty("pair dataset"));
        }
        let h = &self.cfg.hyper;
        let mut order: Vec<usize> = (0..data.pairs.len()).collect();
        order.shuffle(rng);
        let (mut risk, mut err, mut gate) = (0.0, 0.0, 0.0);
        let mut lr = cyclic_lr(self.step, self.cfg);
        for batch in order.chunks(self.cfg.batch_size) {
            let mut grads = DspnGradients::zeros_like(model);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let p = &data.pairs[i];
                let tl = total_loss(model, &data.pool, p.sets(), p.delta, h, self.cfg.loss, true)?;
                risk += tl.value;
                err += (tl.delta - h.kappa * p.delta).abs();
                gate += tl.gate;
                grads.add_scaled(scale, tl.grads.as_ref().expect("requested gradients"));
            }
            if !grads.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    risk: f64::NAN,
                });
            }
            if let Some(clip) = self.cfg.grad_clip {
                let norm = grads.norm();
                if norm > clip {
                    grads.scale(clip / norm);
                }
            }
            lr = cyclic_lr(self.step, self.cfg);
            apply_adam(model, &grads, &mut self.state, lr, self.cfg.project_roof)?;
            self.step += 1;
        }
        let n = data.pairs.len() as f64;
        let row = MetricsRow {
            epoch,
            step: self.step,
            lr,
            risk: risk / n,
            mean_abs_delta_err: err / n,
            gate_mean: gate / n,
        };
        if !row.risk.is_finite() {
            return Err(Error::Diverged {
                epoch,
                risk: row.risk,
            });
        }
        log::debug!(
            "epoch {epoch}: risk {:.6} |δ−κΔ| {:.6} gate {:.3} lr {:.2e}",
            row.risk,
            row.mean_abs_delta_err,
            row.gate_mean,
            lr
        );
        self.log.rows.push(row.clone());
        Ok(row)
    }
}

fn random_size<R: Rng + ?Sized>(k_max: usize, rng: &mut R) -> usize {
    rng.random_range(2..=k_max)
}

/// Passive Style-I/II sets with sizes drawn from `{2..k_max}`. Empty when the
/// ground set is unlabelled.
pub fn passive_sets<R: Rng + ?Sized>(
    ground: &GroundSet,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<Vec<SampledSet>> {
    if ground.labels().is_none() {
        log::warn!("ground set has no labels; passive sampling skipped");
        return Ok(Vec::new());
    }
    let k_max = cfg.k_max.min(ground.n()).max(2);
    let mut out = Vec::new();
    for _ in 0..cfg.style1_count {
        let (e, m) = sample_style1(ground, random_size(k_max, rng), rng)?;
        out.push(e);
        out.push(m);
    }
    let c = if cfg.style2_classes == 0 {
        ground.num_classes()
    } else {
        cfg.style2_classes
    };
    let mut drawn = 0;
    let mut attempts = 0;
    while drawn < cfg.style2_count && attempts < 20 * cfg.style2_count.max(1) {
        attempts += 1;
        let (e, m) = sample_style2(ground, random_size(k_max, rng), c, cfg.kmeans_iters, rng)?;
        let single = e.class_scope.as_ref().is_some_and(|s| s.len() == 1);
        if single && !cfg.keep_single_class_style2 && c > 1 {
            continue;
        }
        out.push(e);
        out.push(m);
        drawn += 1;
    }
    Ok(out)
}

/// Target-maximizing sets: prefixes of one greedy chain at random sizes.
pub fn target_sets<R: Rng + ?Sized>(
    target: &dyn SetFunction,
    ground: &GroundSet,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<Vec<SampledSet>> {
    if !cfg.use_target_feedback || cfg.target_count == 0 {
        return Ok(Vec::new());
    }
    let k_max = cfg.k_max.min(ground.n()).max(2);
    let chain = target_feedback_sets(target, ground, k_max)?
        .into_iter()
        .next()
        .map(|s| s.items)
        .unwrap_or_default();
    Ok((0..cfg.target_count)
        .map(|_| {
            let b = random_size(k_max, rng).min(chain.len());
            SampledSet::new(chain[..b].to_vec(), Provenance::TargetMax)
        })
        .collect())
}

/// Sets from the current model at random sizes.
pub fn model_sets<R: Rng + ?Sized>(
    model: &DspnModel,
    ground: &GroundSet,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<Vec<SampledSet>> {
    let k_max = cfg.k_max.min(ground.n()).max(2);
    let mut out = Vec::new();
    for _ in 0..cfg.dspn_count {
        let b = random_size(k_max, rng);
        out.extend(dspn_feedback_sets(model, ground, b, rng)?);
    }
    Ok(out)
}

/// Random model whose pillar inputs are standardized on `ground`.
pub fn init_model<R: Rng + ?Sized>(
    cfg: &ModelConfig,
    ground: &GroundSet,
    rng: &mut R,
) -> Result<DspnModel> {
    let mut model = DspnModel::random(cfg, rng)?;
    model.pillar.fit_standardization(ground.embeddings());
    Ok(model)
}

/// RBF facility location over `ground` divided by `|V|`, with the bandwidth
/// actually used (`None` picks the median heuristic).
pub fn fl_target(
    ground: &GroundSet,
    gamma: Option<f64>,
) -> Result<(Scaled<FacilityLocation>, f64)> {
    let gamma = match gamma {
        Some(g) => g,
        None => median_heuristic_gamma(ground.embeddings())?,
    };
    Ok((
        Scaled::per_item(FacilityLocation::rbf(ground, gamma)?),
        gamma,
    ))
}

/// Learn a DSPN from the target's graded pairwise comparisons on `ground`.
pub fn train(
    model: DspnModel,
    ground: &GroundSet,
    target: &dyn SetFunction,
    sampler: &SamplerConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with_hook(model, ground, target, sampler, cfg, &mut |_, _| Ok(()))
}

pub fn train_with_hook(
    mut model: DspnModel,
    ground: &GroundSet,
    target: &dyn SetFunction,
    sampler: &SamplerConfig,
    cfg: &TrainConfig,
    hook: &mut EpochHook<'_>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    sampler.validate()?;
    let mut trainer = Trainer::new(cfg, &model);
    if cfg.epochs == 0 {
        return Ok(TrainOutcome {
            model,
            log: trainer.log,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let passive = passive_sets(ground, sampler, &mut rng)?;
    let targets = target_sets(target, ground, sampler, &mut rng)?;
    let mut data: Option<PairDataset> = None;
    for epoch in 0..cfg.epochs {
        if epoch % sampler.refresh_period == 0 || data.is_none() {
            let mut sets = passive.clone();
            sets.extend(targets.iter().cloned());
            sets.extend(model_sets(&model, ground, sampler, &mut rng)?);
            let mut d = build_pairs(ground, &sets, target, sampler, &mut rng)?;
            d.seed = cfg.seed;
            d.config_hash = cfg.config_hash.clone();
            log::debug!("epoch {epoch}: refreshed dataset with {} pairs", d.len());
            data = Some(d);
        }
        let d = data.as_ref().expect("built above");
        let row = trainer.epoch(epoch, &mut model, d, &mut rng)?;
        hook(&row, &model)?;
    }
    Ok(TrainOutcome {
        model,
        log: trainer.log,
    })
}

/// Train on a fixed pair dataset (no refresh).
pub fn train_fixed(
    mut model: DspnModel,
    data: &PairDataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut trainer = Trainer::new(cfg, &model);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for epoch in 0..cfg.epochs {
        trainer.epoch(epoch, &mut model, data, &mut rng)?;
    }
    Ok(TrainOutcome {
        model,
        log: trainer.log,
    })
}

/// Empirical risk and its gradient over the whole dataset.
pub fn risk_and_gradient(
    model: &DspnModel,
    data: &PairDataset,
    h: &PeripteralHyper,
    kind: LossKind,
) -> Result<(f64, DspnGradients)> {
    if data.pairs.is_empty() {
        return Err(Error::Empty("pair dataset"));
    }
    let scale = 1.0 / data.pairs.len() as f64;
    let mut grads = DspnGradients::zeros_like(model);
    let mut risk = 0.0;
    for p in &data.pairs {
        let tl = total_loss(model, &data.pool, p.sets(), p.delta, h, kind, true)?;
        risk += tl.value * scale;
        grads.add_scaled(scale, tl.grads.as_ref().expect("requested gradients"));
    }
    Ok((risk, grads))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_lr_shape() {
        let cfg = TrainConfig {
            base_lr: 0.001,
            max_lr: 0.01,
            cycle_length: 10,
            ..Default::default()
        };
        assert_eq!(cyclic_lr(0, &cfg), 0.001);
        assert_eq!(cyclic_lr(5, &cfg), 0.01);
        for s in 0..30 {
            assert_eq!(cyclic_lr(s, &cfg), cyclic_lr(s + 10, &cfg));
        }
        let odd = TrainConfig {
            cycle_length: 7,
            ..cfg
        };
        assert_eq!(cyclic_lr(3, &odd), 0.01);
    }

    #[test]
    fn adam_cases() {
        let mut p = vec![1.0, -2.0, 0.5];
        let mut st = OptimState::new(3);
        adam_step(&mut p, &[0.0; 3], &mut st, 0.1).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(st.step, 1);

        let mut p = vec![0.0; 3];
        let mut st = OptimState::new(3);
        adam_step(&mut p, &[3.0, -0.2, 1e-3], &mut st, 0.01).unwrap();
        for (x, s) in p.iter().zip([-1.0, 1.0, -1.0]) {
            assert!((x - s * 0.01).abs() < 1e-6);
        }
        assert!(adam_step(&mut p, &[f64::NAN, 0.0, 0.0], &mut st, 0.01).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            base_lr: 0.1,
            max_lr: 0.01,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            cycle_length: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
